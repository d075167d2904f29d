#include "dualgraph/lexer.hpp"

#include <cctype>

#include "dualgraph/text.hpp"

namespace dualgraph::lex {

namespace {

bool is_word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_local_char(char c) { return is_word_char(c) || c == '-'; }

class Lexer {
public:
    explicit Lexer(std::string_view s) : s_(s) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space_and_comments();
            Token t;
            t.line = line_;
            t.col = col_;
            if (i_ >= s_.size()) {
                out.push_back(t);
                return out;
            }
            lex_one(t);
            out.push_back(std::move(t));
        }
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;

    char at(std::size_t k) const { return i_ + k < s_.size() ? s_[i_ + k] : '\0'; }

    void advance(std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i_ < s_.size(); ++k) {
            if (s_[i_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++i_;
        }
    }

    [[noreturn]] void fail(const std::string& msg, std::size_t line, std::size_t col) const {
        throw SyntaxError(msg, line, col);
    }

    void skip_space_and_comments() {
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '#') {
                while (i_ < s_.size() && s_[i_] != '\n') advance();
            } else {
                return;
            }
        }
    }

    void lex_one(Token& t) {
        char c = at(0);
        if (c == '?' || c == '$') {
            advance();
            std::string name;
            while (is_word_char(at(0))) {
                name.push_back(at(0));
                advance();
            }
            if (name.empty()) fail("empty variable name", t.line, t.col);
            t.kind = Tok::Var;
            t.text = std::move(name);
            return;
        }
        if (c == '"' || c == '\'') {
            lex_string(t, c);
            return;
        }
        if (is_digit(c) || ((c == '-' || c == '+') && is_digit(at(1)))) {
            std::string num(1, c);
            advance();
            while (is_digit(at(0))) {
                num.push_back(at(0));
                advance();
            }
            if (at(0) == '.' && is_digit(at(1))) {
                num.push_back('.');
                advance();
                while (is_digit(at(0))) {
                    num.push_back(at(0));
                    advance();
                }
            }
            t.kind = Tok::Number;
            t.text = std::move(num);
            return;
        }
        if (c == '<' && is_word_start(at(1))) {
            std::size_t k = 1;
            while (i_ + k < s_.size() && s_[i_ + k] != '>' && !std::isspace(static_cast<unsigned char>(s_[i_ + k])))
                ++k;
            if (i_ + k < s_.size() && s_[i_ + k] == '>') {
                t.kind = Tok::IriRef;
                t.text = std::string(s_.substr(i_ + 1, k - 1));
                advance(k + 1);
                return;
            }
        }
        if (is_word_start(c)) {
            std::string word;
            while (is_word_char(at(0))) {
                word.push_back(at(0));
                advance();
            }
            if (at(0) == ':' && at(1) != '-') {
                advance();
                word.push_back(':');
                while (is_local_char(at(0)) || (at(0) == '.' && is_local_char(at(1)))) {
                    word.push_back(at(0));
                    advance();
                }
                t.kind = Tok::PName;
            } else {
                t.kind = Tok::Ident;
            }
            t.text = std::move(word);
            return;
        }
        static constexpr std::string_view two[] = {":-", "!=", "<=", ">=", "&&", "||", "^^"};
        for (auto op : two) {
            if (s_.substr(i_, 2) == op) {
                t.kind = Tok::Punct;
                t.text = std::string(op);
                advance(2);
                return;
            }
        }
        static constexpr std::string_view one = "[](){},.;*=<>!";
        if (one.find(c) != std::string_view::npos) {
            t.kind = Tok::Punct;
            t.text = std::string(1, c);
            advance();
            return;
        }
        fail(std::string("unexpected character '") + c + "'", t.line, t.col);
    }

    void lex_string(Token& t, char quote) {
        advance();
        std::string out;
        while (true) {
            if (i_ >= s_.size() || at(0) == '\n') fail("unterminated string literal", t.line, t.col);
            char c = at(0);
            advance();
            if (c == quote) break;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            char e = at(0);
            advance();
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"':
                case '\'':
                case '\\': out.push_back(e); break;
                default: fail(std::string("unknown escape \\") + e, line_, col_);
            }
        }
        t.kind = Tok::String;
        t.text = std::move(out);
    }
};

}  // namespace

std::vector<Token> tokenize(std::string_view src) { return Lexer(src).run(); }

const Token& Cursor::peek(std::size_t ahead) const {
    std::size_t k = pos_ + ahead;
    return k < toks_.size() ? toks_[k] : toks_.back();
}

const Token& Cursor::next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
}

bool Cursor::accept_punct(std::string_view p) {
    if (!peek().punct(p)) return false;
    next();
    return true;
}

bool Cursor::peek_keyword(std::string_view kw, std::size_t ahead) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Ident && text::to_upper(t.text) == text::to_upper(kw);
}

bool Cursor::accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    next();
    return true;
}

const Token& Cursor::expect(Tok kind, std::string_view what) {
    if (peek().kind != kind) fail("expected " + std::string(what));
    return next();
}

void Cursor::expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("expected '" + std::string(p) + "'");
}

void Cursor::expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail("expected " + std::string(kw));
}

void Cursor::fail(const std::string& msg) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError(msg + ", got " + got, t.line, t.col);
}

}  // namespace dualgraph::lex
