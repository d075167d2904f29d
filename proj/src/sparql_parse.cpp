#include <algorithm>
#include <set>

#include "dualgraph/sparql.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph::sparql {

using lex::Cursor;
using lex::Tok;

namespace {

struct BuiltinPrefix {
    std::string_view name;
    std::string_view iri;
};

constexpr BuiltinPrefix kBuiltins[] = {
    {"skg", "http://dualgraph.org/skg#"},
    {"skgt", "http://dualgraph.org/skgt#"},
    {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
    {"xsd", "http://www.w3.org/2001/XMLSchema#"},
};

// Maps a full IRI onto the prefixed form used by the graph when possible.
Term contract(const std::string& iri) {
    for (const auto& b : kBuiltins) {
        if (iri.compare(0, b.iri.size(), b.iri) == 0)
            return Term::iri(std::string(b.name) + ":" + iri.substr(b.iri.size()));
    }
    return Term::iri("<" + iri + ">");
}

bool is_builtin(std::string_view name) {
    return std::any_of(std::begin(kBuiltins), std::end(kBuiltins), [&](const auto& b) { return b.name == name; });
}

class QueryParser {
public:
    explicit QueryParser(std::string_view text) : cur_(lex::tokenize(text)) {}

    Query query() {
        Query q;
        while (cur_.accept_keyword("PREFIX")) {
            const auto& pn = cur_.expect(Tok::PName, "prefix name");
            if (pn.text.back() != ':') cur_.fail("prefix declaration must end with ':'");
            auto name = pn.text.substr(0, pn.text.size() - 1);
            const auto& iri = cur_.expect(Tok::IriRef, "IRI");
            prefixes_[name] = iri.text;
        }
        q.prefixes = prefixes_;
        cur_.expect_keyword("SELECT");
        if (cur_.accept_keyword("DISTINCT") || cur_.accept_keyword("REDUCED")) q.distinct = true;
        if (cur_.accept_punct("*")) {
            q.select_all = true;
        } else {
            while (cur_.peek().kind == Tok::Var || cur_.peek().punct("(")) q.projection.push_back(projection());
            if (q.projection.empty()) cur_.fail("expected projection");
        }
        cur_.accept_keyword("WHERE");
        cur_.expect_punct("{");
        group(q.where, q.filters, "}");
        cur_.expect_punct("}");
        modifiers(q);
        if (!cur_.at_end()) cur_.fail("unexpected trailing input");
        validate(q);
        return q;
    }

    std::vector<TriplePattern> fragment() {
        std::vector<TriplePattern> pats;
        std::vector<Expr> filters;
        group(pats, filters, "");
        if (!cur_.at_end()) cur_.fail("unexpected input in pattern fragment");
        if (!filters.empty()) throw QueryError("pattern fragment must not contain FILTER");
        return pats;
    }

private:
    Cursor cur_;
    std::map<std::string, std::string> prefixes_;

    Term resolve_pname(const std::string& pname) {
        auto colon = pname.find(':');
        auto prefix = pname.substr(0, colon);
        auto local = pname.substr(colon + 1);
        auto it = prefixes_.find(prefix);
        if (it != prefixes_.end()) return contract(it->second + local);
        if (is_builtin(prefix)) return Term::iri(pname);
        throw QueryError("unknown prefix '" + prefix + ":'");
    }

    Term constant() {
        const auto& t = cur_.peek();
        switch (t.kind) {
            case Tok::PName: return resolve_pname(cur_.next().text);
            case Tok::IriRef: return contract(cur_.next().text);
            case Tok::Number: return Term::decimal(std::stod(cur_.next().text));
            case Tok::String: {
                std::string lexical = cur_.next().text;
                if (!cur_.accept_punct("^^")) return Term::string(lexical);
                Term dt = cur_.peek().kind == Tok::IriRef ? contract(cur_.next().text)
                                                          : resolve_pname(cur_.expect(Tok::PName, "datatype").text);
                static const std::set<std::string> numeric = {"xsd:decimal", "xsd:integer", "xsd:double",
                                                              "xsd:float"};
                if (!numeric.count(dt.text)) return Term::string(lexical);
                try {
                    std::size_t used = 0;
                    double v = std::stod(lexical, &used);
                    if (used != lexical.size()) throw std::invalid_argument(lexical);
                    return Term::decimal(v);
                } catch (const std::exception&) {
                    throw QueryError("invalid numeric literal \"" + lexical + "\"");
                }
            }
            default: break;
        }
        cur_.fail("expected term");
    }

    PatternTerm pattern_term(bool verb) {
        if (cur_.peek().kind == Tok::Var) return PatternTerm::variable(cur_.next().text);
        if (verb && cur_.peek().is(Tok::Ident, "a")) {
            cur_.next();
            return PatternTerm::value(Term::iri(vocab::kType));
        }
        return PatternTerm::value(constant());
    }

    void group(std::vector<TriplePattern>& pats, std::vector<Expr>& filters, std::string_view close) {
        while (!cur_.at_end() && !(!close.empty() && cur_.peek().punct(close))) {
            if (cur_.accept_punct(".")) continue;
            if (cur_.accept_keyword("FILTER")) {
                filters.push_back(constraint());
                continue;
            }
            if (cur_.peek_keyword("OPTIONAL") || cur_.peek_keyword("UNION") || cur_.peek_keyword("MINUS") ||
                cur_.peek().punct("{"))
                cur_.fail("construct outside the supported subset");
            auto subject = pattern_term(false);
            if (!subject.is_var && subject.constant.is_literal()) cur_.fail("literal subject");
            while (true) {
                auto verb = pattern_term(true);
                if (!verb.is_var && verb.constant.is_literal()) cur_.fail("literal predicate");
                do {
                    pats.push_back(TriplePattern{subject, verb, pattern_term(false)});
                } while (cur_.accept_punct(","));
                if (!cur_.accept_punct(";")) break;
                // Trailing ';' before '.' or '}'
                if (cur_.peek().punct(".") || (!close.empty() && cur_.peek().punct(close))) break;
            }
            if (!cur_.accept_punct(".")) {
                if (cur_.at_end() || (!close.empty() && cur_.peek().punct(close)) || cur_.peek_keyword("FILTER"))
                    continue;
                cur_.fail("expected '.'");
            }
        }
    }

    Expr constraint() {
        if (cur_.peek_keyword("REGEX")) return primary();
        cur_.expect_punct("(");
        Expr e = expression();
        cur_.expect_punct(")");
        return e;
    }

    Expr expression() {
        Expr lhs = conjunction();
        if (!cur_.peek().punct("||")) return lhs;
        Expr e;
        e.kind = Expr::Kind::Or;
        e.args.push_back(std::move(lhs));
        while (cur_.accept_punct("||")) e.args.push_back(conjunction());
        return e;
    }

    Expr conjunction() {
        Expr lhs = unary();
        if (!cur_.peek().punct("&&")) return lhs;
        Expr e;
        e.kind = Expr::Kind::And;
        e.args.push_back(std::move(lhs));
        while (cur_.accept_punct("&&")) e.args.push_back(unary());
        return e;
    }

    Expr unary() {
        if (cur_.accept_punct("!")) {
            Expr e;
            e.kind = Expr::Kind::Not;
            e.args.push_back(unary());
            return e;
        }
        return relational();
    }

    Expr relational() {
        Expr lhs = primary();
        static const std::pair<std::string_view, Expr::CmpOp> ops[] = {
            {"=", Expr::CmpOp::Eq}, {"!=", Expr::CmpOp::Ne}, {"<", Expr::CmpOp::Lt},
            {"<=", Expr::CmpOp::Le}, {">", Expr::CmpOp::Gt}, {">=", Expr::CmpOp::Ge}};
        for (const auto& [tok, op] : ops) {
            if (cur_.accept_punct(tok)) {
                Expr e;
                e.kind = Expr::Kind::Cmp;
                e.cmp = op;
                e.args.push_back(std::move(lhs));
                e.args.push_back(primary());
                return e;
            }
        }
        bool negated = false;
        if (cur_.peek_keyword("NOT") && cur_.peek_keyword("IN", 1)) {
            cur_.next();
            negated = true;
        }
        if (cur_.accept_keyword("IN")) {
            Expr e;
            e.kind = Expr::Kind::In;
            e.negated = negated;
            e.args.push_back(std::move(lhs));
            cur_.expect_punct("(");
            if (!cur_.peek().punct(")")) {
                e.args.push_back(primary());
                while (cur_.accept_punct(",")) e.args.push_back(primary());
            }
            cur_.expect_punct(")");
            return e;
        }
        return lhs;
    }

    Expr primary() {
        if (cur_.accept_punct("(")) {
            Expr e = expression();
            cur_.expect_punct(")");
            return e;
        }
        Expr e;
        if (cur_.peek().kind == Tok::Var) {
            e.kind = Expr::Kind::Var;
            e.var = cur_.next().text;
            return e;
        }
        if (cur_.accept_keyword("STR")) {
            e.kind = Expr::Kind::Str;
            cur_.expect_punct("(");
            e.args.push_back(expression());
            cur_.expect_punct(")");
            return e;
        }
        if (cur_.accept_keyword("REGEX")) {
            e.kind = Expr::Kind::Regex;
            cur_.expect_punct("(");
            e.args.push_back(expression());
            cur_.expect_punct(",");
            e.pattern = cur_.expect(Tok::String, "pattern string").text;
            if (cur_.accept_punct(",")) {
                auto flags = cur_.expect(Tok::String, "regex flags").text;
                for (char c : flags) {
                    if (c != 'i') throw QueryError(std::string("unsupported regex flag '") + c + "'");
                }
                e.icase = !flags.empty();
            }
            cur_.expect_punct(")");
            auto flags = std::regex::ECMAScript;
            if (e.icase) flags |= std::regex::icase;
            try {
                e.regex = std::make_shared<const std::regex>(e.pattern, flags);
            } catch (const std::regex_error&) {
                throw QueryError("invalid regular expression: " + e.pattern);
            }
            return e;
        }
        e.kind = Expr::Kind::Const;
        e.constant = constant();
        return e;
    }

    Projection projection() {
        Projection p;
        if (cur_.peek().kind == Tok::Var) {
            p.name = cur_.next().text;
            return p;
        }
        cur_.expect_punct("(");
        const auto& fn = cur_.expect(Tok::Ident, "aggregate function");
        static const std::pair<std::string_view, Aggregate::Fn> fns[] = {{"COUNT", Aggregate::Fn::Count},
                                                                          {"MIN", Aggregate::Fn::Min},
                                                                          {"MAX", Aggregate::Fn::Max},
                                                                          {"AVG", Aggregate::Fn::Avg},
                                                                          {"SUM", Aggregate::Fn::Sum}};
        Aggregate agg;
        bool found = false;
        for (const auto& [name, f] : fns) {
            if (text::to_upper(fn.text) == name) {
                agg.fn = f;
                found = true;
            }
        }
        if (!found) throw QueryError("unsupported aggregate " + fn.text);
        cur_.expect_punct("(");
        if (cur_.accept_keyword("DISTINCT")) agg.distinct = true;
        if (cur_.accept_punct("*")) {
            if (agg.fn != Aggregate::Fn::Count) throw QueryError("only COUNT accepts '*'");
        } else {
            agg.var = cur_.expect(Tok::Var, "variable").text;
        }
        cur_.expect_punct(")");
        cur_.expect_keyword("AS");
        p.name = cur_.expect(Tok::Var, "alias variable").text;
        cur_.expect_punct(")");
        p.aggregate = agg;
        return p;
    }

    std::size_t count() {
        const auto& t = cur_.expect(Tok::Number, "count");
        if (t.text.find_first_not_of("0123456789") != std::string::npos) cur_.fail("expected nonnegative integer");
        return static_cast<std::size_t>(std::stoull(t.text));
    }

    void modifiers(Query& q) {
        if (cur_.accept_keyword("GROUP")) {
            cur_.expect_keyword("BY");
            while (cur_.peek().kind == Tok::Var) q.group_by.push_back(cur_.next().text);
            if (q.group_by.empty()) cur_.fail("expected GROUP BY variable");
        }
        if (cur_.accept_keyword("ORDER")) {
            cur_.expect_keyword("BY");
            while (true) {
                OrderKey k;
                if (cur_.peek().kind == Tok::Var) {
                    k.var = cur_.next().text;
                } else if (cur_.peek_keyword("ASC") || cur_.peek_keyword("DESC")) {
                    k.descending = cur_.peek_keyword("DESC");
                    cur_.next();
                    cur_.expect_punct("(");
                    k.var = cur_.expect(Tok::Var, "variable").text;
                    cur_.expect_punct(")");
                } else {
                    break;
                }
                q.order_by.push_back(k);
            }
            if (q.order_by.empty()) cur_.fail("expected ORDER BY key");
        }
        for (int i = 0; i < 2; ++i) {
            if (cur_.accept_keyword("LIMIT")) {
                if (q.limit) cur_.fail("duplicate LIMIT");
                q.limit = count();
            } else if (cur_.accept_keyword("OFFSET")) {
                q.offset = count();
            }
        }
    }

    void validate(Query& q) {
        auto vars = q.pattern_vars();
        auto in_pattern = [&](const std::string& v) { return std::find(vars.begin(), vars.end(), v) != vars.end(); };
        if (q.select_all) {
            if (!q.group_by.empty()) throw QueryError("SELECT * cannot be combined with GROUP BY");
            for (const auto& v : vars) q.projection.push_back(Projection{v, std::nullopt});
        }
        std::set<std::string> names;
        for (const auto& p : q.projection) {
            if (!names.insert(p.name).second) throw QueryError("duplicate projection ?" + p.name);
        }
        bool grouped = q.has_aggregates() || !q.group_by.empty();
        for (const auto& g : q.group_by)
            if (!in_pattern(g)) throw QueryError("GROUP BY variable ?" + g + " is not bound by the pattern");
        for (const auto& p : q.projection) {
            if (p.aggregate) {
                if (in_pattern(p.name)) throw QueryError("alias ?" + p.name + " clashes with a pattern variable");
                if (p.aggregate->var && !in_pattern(*p.aggregate->var))
                    throw QueryError("aggregated variable ?" + *p.aggregate->var + " is not bound by the pattern");
                continue;
            }
            if (!in_pattern(p.name)) throw QueryError("projected variable ?" + p.name + " is not bound by the pattern");
            if (grouped && std::find(q.group_by.begin(), q.group_by.end(), p.name) == q.group_by.end())
                throw QueryError("projected variable ?" + p.name + " is not grouped");
        }
        for (const auto& k : q.order_by) {
            bool ok = grouped ? (std::find(q.group_by.begin(), q.group_by.end(), k.var) != q.group_by.end() ||
                                 std::any_of(q.projection.begin(), q.projection.end(),
                                             [&](const Projection& p) { return p.aggregate && p.name == k.var; }))
                              : in_pattern(k.var);
            if (!ok) throw QueryError("ORDER BY variable ?" + k.var + " is not available");
        }
    }
};

}  // namespace

void Expr::collect_vars(std::vector<std::string>& out) const {
    if (kind == Kind::Var && std::find(out.begin(), out.end(), var) == out.end()) out.push_back(var);
    for (const auto& a : args) a.collect_vars(out);
}

bool Query::has_aggregates() const {
    return std::any_of(projection.begin(), projection.end(), [](const Projection& p) { return p.aggregate.has_value(); });
}

std::vector<std::string> Query::pattern_vars() const {
    std::vector<std::string> out;
    auto add = [&](const PatternTerm& t) {
        if (t.is_var && std::find(out.begin(), out.end(), t.var) == out.end()) out.push_back(t.var);
    };
    for (const auto& tp : where) {
        add(tp.s);
        add(tp.p);
        add(tp.o);
    }
    return out;
}

std::vector<std::string> Query::header() const {
    std::vector<std::string> out;
    for (const auto& p : projection) out.push_back(p.name);
    return out;
}

Query parse_query(std::string_view text) { return QueryParser(text).query(); }

std::vector<TriplePattern> parse_bgp_fragment(std::string_view text) { return QueryParser(text).fragment(); }

}  // namespace dualgraph::sparql
