#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dualgraph::lex {

enum class Tok {
    Ident,   // bare word: SELECT, FILTER, a, str, ...
    PName,   // prefixed name: skg:galaxy_s25, rdf:type
    Var,     // ?x (text holds the name without '?')
    String,  // "..." with escapes resolved
    Number,  // 4500, 4.5, -3
    IriRef,  // <http://...> (text holds the inside)
    Punct,   // one of [ ] ( ) { } , . ; * ^^ :- = != < <= > >= && || !
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t line = 1;
    std::size_t col = 1;

    bool is(Tok k, std::string_view t) const { return kind == k && text == t; }
    bool punct(std::string_view t) const { return is(Tok::Punct, t); }
};

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(const std::string& msg, std::size_t line, std::size_t col)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line_(line),
          col_(col) {}
    std::size_t line() const { return line_; }
    std::size_t col() const { return col_; }

private:
    std::size_t line_;
    std::size_t col_;
};

// Shared tokenizer for the rule and query languages. '#' starts a comment
// running to end of line (outside strings and IRI refs).
std::vector<Token> tokenize(std::string_view src);

// Cursor over a token vector with expectation helpers.
class Cursor {
public:
    explicit Cursor(std::vector<Token> toks) : toks_(std::move(toks)) {}

    const Token& peek(std::size_t ahead = 0) const;
    const Token& next();
    bool at_end() const { return peek().kind == Tok::End; }

    bool accept_punct(std::string_view p);
    // Case-insensitive keyword match on Ident tokens.
    bool accept_keyword(std::string_view kw);
    bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const;

    const Token& expect(Tok kind, std::string_view what);
    void expect_punct(std::string_view p);
    void expect_keyword(std::string_view kw);

    [[noreturn]] void fail(const std::string& msg) const;

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace dualgraph::lex
