#include <charconv>
#include <sstream>

#include "dualgraph/skg.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph {

std::string serialize_graph(const Graph& g) {
    std::string out;
    for (const auto& t : g.triples()) {
        out += t.subject.to_string();
        out += ' ';
        out += t.predicate.to_string();
        out += ' ';
        out += t.object.to_string();
        out += " .\n";
    }
    return out;
}

namespace {

struct LineReader {
    std::string_view s;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw SchemaError("graph file line " + std::to_string(line_no) + ": " + msg);
    }

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }

    Term term() {
        skip_ws();
        if (pos >= s.size()) fail("unexpected end of line");
        if (s[pos] == '<') {
            auto end = s.find('>', pos);
            if (end == std::string_view::npos) fail("unterminated IRI");
            Term t = Term::iri(s.substr(pos + 1, end - pos - 1));
            pos = end + 1;
            return t;
        }
        if (s[pos] != '"') fail("expected term");
        ++pos;
        std::string lex;
        while (true) {
            if (pos >= s.size()) fail("unterminated literal");
            char c = s[pos++];
            if (c == '"') break;
            if (c != '\\') {
                lex.push_back(c);
                continue;
            }
            if (pos >= s.size()) fail("dangling escape");
            char e = s[pos++];
            switch (e) {
                case 'n': lex.push_back('\n'); break;
                case 'r': lex.push_back('\r'); break;
                case 't': lex.push_back('\t'); break;
                default: lex.push_back(e);
            }
        }
        constexpr std::string_view kDecimalSuffix = "^^xsd:decimal";
        if (s.substr(pos, kDecimalSuffix.size()) == kDecimalSuffix) {
            pos += kDecimalSuffix.size();
            double v = 0;
            auto [p, ec] = std::from_chars(lex.data(), lex.data() + lex.size(), v);
            if (ec != std::errc() || p != lex.data() + lex.size()) fail("bad decimal literal: " + lex);
            return Term::decimal(v);
        }
        return Term::string(lex);
    }
};

}  // namespace

Graph parse_graph(std::string_view text_in, const Ontology& ontology) {
    Graph g(ontology);
    LineReader r;
    for (const auto& line : text::split_lines(text_in)) {
        ++r.line_no;
        auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        r.s = trimmed;
        r.pos = 0;
        Triple t{r.term(), r.term(), r.term()};
        r.skip_ws();
        if (r.pos >= r.s.size() || r.s[r.pos] != '.') r.fail("expected '.'");
        g.insert(t);
    }
    return g;
}

void save_graph(const Graph& g, const std::string& path) { text::write_file(path, serialize_graph(g)); }

Graph load_graph(const std::string& path, const Ontology& ontology) {
    return parse_graph(text::read_file(path), ontology);
}

}  // namespace dualgraph
