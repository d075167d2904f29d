#include "dualgraph/datalog.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dualgraph/text.hpp"

namespace dualgraph::datalog {

using lex::Cursor;
using lex::Tok;

// ---------------------------------------------------------------------------
// Parsing

namespace {

bool known_prefix(std::string_view pname) {
    auto colon = pname.find(':');
    auto prefix = pname.substr(0, colon);
    return prefix == "skg" || prefix == "skgt" || prefix == "rdf" || prefix == "xsd";
}

class RuleParser {
public:
    explicit RuleParser(std::string_view text) : cur_(lex::tokenize(text)) {}

    std::vector<Rule> run() {
        std::vector<Rule> rules;
        while (!cur_.at_end()) {
            auto line = cur_.peek().line;
            Rule r = rule();
            try {
                check_safe(r);
            } catch (const DatalogError& e) {
                throw DatalogError("rule at line " + std::to_string(line) + ": " + e.what());
            }
            rules.push_back(std::move(r));
        }
        return rules;
    }

private:
    Cursor cur_;

    Rule rule() {
        Rule r;
        r.head.push_back(atom());
        while (cur_.accept_punct(",")) r.head.push_back(atom());
        cur_.expect_punct(":-");
        do {
            if (cur_.accept_keyword("FILTER")) {
                cur_.expect_punct("(");
                r.filters.push_back(conjunction());
                cur_.expect_punct(")");
            } else {
                r.body.push_back(atom());
            }
        } while (cur_.accept_punct(","));
        cur_.expect_punct(".");
        if (r.body.empty()) cur_.fail("rule body needs at least one atom");
        return r;
    }

    Atom atom() {
        cur_.expect_punct("[");
        Atom a;
        a.s = slot();
        cur_.expect_punct(",");
        a.p = slot();
        cur_.expect_punct(",");
        a.o = slot();
        cur_.expect_punct("]");
        return a;
    }

    Term constant() {
        const auto& t = cur_.peek();
        switch (t.kind) {
            case Tok::PName:
                if (!known_prefix(t.text)) cur_.fail("unknown prefix");
                return Term::iri(cur_.next().text);
            case Tok::String:
                return Term::string(cur_.next().text);
            case Tok::Number:
                return Term::decimal(std::stod(cur_.next().text));
            case Tok::Ident:
                if (t.text == "a") {
                    cur_.next();
                    return Term::iri(vocab::kType);
                }
                break;
            default:
                break;
        }
        cur_.fail("expected constant");
    }

    Slot slot() {
        if (cur_.peek().kind == Tok::Var) return Slot::variable(cur_.next().text);
        return Slot::value(constant());
    }

    FilterExpr conjunction() {
        std::vector<FilterExpr> parts;
        parts.push_back(primary());
        while (cur_.accept_punct("&&")) parts.push_back(primary());
        if (parts.size() == 1) return std::move(parts.front());
        FilterExpr f;
        f.op = FilterExpr::Op::And;
        f.children = std::move(parts);
        return f;
    }

    FilterExpr primary() {
        if (cur_.accept_punct("(")) {
            auto f = conjunction();
            cur_.expect_punct(")");
            return f;
        }
        FilterExpr f;
        if (cur_.accept_keyword("REGEX")) {
            f.op = FilterExpr::Op::Regex;
            cur_.expect_punct("(");
            bool wrapped = cur_.accept_keyword("str");
            if (wrapped) cur_.expect_punct("(");
            f.lhs = Slot::variable(cur_.expect(Tok::Var, "variable").text);
            if (wrapped) cur_.expect_punct(")");
            cur_.expect_punct(",");
            f.pattern = cur_.expect(Tok::String, "pattern string").text;
            cur_.expect_punct(")");
            return f;
        }
        f.lhs = slot();
        if (cur_.accept_keyword("IN")) {
            f.op = FilterExpr::Op::In;
            cur_.expect_punct("(");
            f.members.push_back(constant());
            while (cur_.accept_punct(",")) f.members.push_back(constant());
            cur_.expect_punct(")");
            return f;
        }
        if (cur_.accept_punct("=")) {
            f.op = FilterExpr::Op::Eq;
        } else if (cur_.accept_punct("!=")) {
            f.op = FilterExpr::Op::Ne;
        } else {
            cur_.fail("expected '=', '!=' or IN");
        }
        f.rhs = slot();
        return f;
    }
};

void collect_vars(const Slot& s, std::vector<std::string>& out) {
    if (s.is_var && std::find(out.begin(), out.end(), s.var) == out.end()) out.push_back(s.var);
}

void collect_filter_vars(const FilterExpr& f, std::vector<std::string>& out) {
    if (f.op == FilterExpr::Op::And) {
        for (const auto& c : f.children) collect_filter_vars(c, out);
        return;
    }
    collect_vars(f.lhs, out);
    if (f.op == FilterExpr::Op::Eq || f.op == FilterExpr::Op::Ne) collect_vars(f.rhs, out);
}

}  // namespace

std::vector<Rule> parse_rules(std::string_view text) { return RuleParser(text).run(); }

std::vector<std::string> variables_of(const Rule& rule) {
    std::vector<std::string> out;
    for (const auto& a : rule.body) {
        collect_vars(a.s, out);
        collect_vars(a.p, out);
        collect_vars(a.o, out);
    }
    return out;
}

void check_safe(const Rule& rule) {
    if (rule.head.empty()) throw DatalogError("rule has an empty head");
    if (rule.body.empty()) throw DatalogError("rule has an empty body");
    auto bound = variables_of(rule);
    std::vector<std::string> used;
    for (const auto& a : rule.head) {
        collect_vars(a.s, used);
        collect_vars(a.p, used);
        collect_vars(a.o, used);
    }
    for (const auto& f : rule.filters) collect_filter_vars(f, used);
    for (const auto& v : used) {
        if (std::find(bound.begin(), bound.end(), v) == bound.end())
            throw DatalogError("unsafe rule: variable ?" + v + " is not bound by the body");
    }
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string print_term(const Term& t) {
    switch (t.kind) {
        case TermKind::Iri: return t.text;
        case TermKind::Decimal: return t.text;
        case TermKind::String: return t.to_string();
    }
    return t.text;
}

std::string print_slot(const Slot& s) { return s.is_var ? "?" + s.var : print_term(s.constant); }

std::string print_atom(const Atom& a) {
    return "[" + print_slot(a.s) + ", " + print_slot(a.p) + ", " + print_slot(a.o) + "]";
}

std::string print_filter(const FilterExpr& f, bool top) {
    switch (f.op) {
        case FilterExpr::Op::Eq: return print_slot(f.lhs) + " = " + print_slot(f.rhs);
        case FilterExpr::Op::Ne: return print_slot(f.lhs) + " != " + print_slot(f.rhs);
        case FilterExpr::Op::Regex:
            return "REGEX(str(" + print_slot(f.lhs) + "), " + Term::string(f.pattern).to_string() + ")";
        case FilterExpr::Op::In: {
            std::vector<std::string> ms;
            for (const auto& m : f.members) ms.push_back(print_term(m));
            return print_slot(f.lhs) + " IN (" + text::join(ms, ", ") + ")";
        }
        case FilterExpr::Op::And: {
            std::vector<std::string> parts;
            for (const auto& c : f.children) parts.push_back(print_filter(c, false));
            auto body = text::join(parts, " && ");
            return top ? body : "(" + body + ")";
        }
    }
    return {};
}

}  // namespace

std::string print_rules(const std::vector<Rule>& rules) {
    std::string out;
    for (const auto& r : rules) {
        std::vector<std::string> head, body;
        for (const auto& a : r.head) head.push_back(print_atom(a));
        for (const auto& a : r.body) body.push_back(print_atom(a));
        for (const auto& f : r.filters) body.push_back("FILTER(" + print_filter(f, true) + ")");
        out += text::join(head, ", ") + " :- " + text::join(body, ", ") + " .\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

constexpr int kNoVar = -1;

struct CSlot {
    int var = kNoVar;
    TermId id = 0;
};

struct CAtom {
    CSlot s, p, o;
};

struct CFilter {
    FilterExpr::Op op;
    CSlot lhs, rhs;
    std::string pattern;  // lowercased
    std::vector<TermId> members;
    std::vector<CFilter> children;
};

struct CRule {
    std::vector<CAtom> head;
    std::vector<CAtom> body;
    std::vector<CFilter> filters;
    std::size_t n_vars = 0;
};

using Binding = std::vector<std::optional<TermId>>;

class Compiler {
public:
    explicit Compiler(Graph& g) : g_(g) {}

    CRule compile(const Rule& r) {
        check_safe(r);
        vars_.clear();
        CRule c;
        for (const auto& a : r.body) c.body.push_back(atom(a));
        for (const auto& a : r.head) {
            if (!a.s.is_var && !a.s.constant.is_iri())
                throw DatalogError("rule head has a literal subject: " + print_atom(a));
            if (!a.p.is_var && !(a.p.constant.is_iri() && g_.ontology().declares(a.p.constant.text)))
                throw DatalogError("rule head uses an undeclared predicate: " + print_atom(a));
            c.head.push_back(atom(a));
        }
        for (const auto& f : r.filters) c.filters.push_back(filter(f));
        c.n_vars = vars_.size();
        return c;
    }

private:
    Graph& g_;
    std::map<std::string, int> vars_;

    CSlot slot(const Slot& s) {
        CSlot c;
        if (s.is_var) {
            auto [it, _] = vars_.emplace(s.var, static_cast<int>(vars_.size()));
            c.var = it->second;
        } else {
            c.id = g_.intern(s.constant);
        }
        return c;
    }

    CAtom atom(const Atom& a) { return CAtom{slot(a.s), slot(a.p), slot(a.o)}; }

    CFilter filter(const FilterExpr& f) {
        CFilter c;
        c.op = f.op;
        if (f.op == FilterExpr::Op::And) {
            for (const auto& ch : f.children) c.children.push_back(filter(ch));
            return c;
        }
        c.lhs = slot(f.lhs);
        if (f.op == FilterExpr::Op::Eq || f.op == FilterExpr::Op::Ne) c.rhs = slot(f.rhs);
        c.pattern = text::to_lower(f.pattern);
        for (const auto& m : f.members) c.members.push_back(g_.intern(m));
        return c;
    }
};

TermId resolve(const CSlot& s, const Binding& b) { return s.var == kNoVar ? s.id : *b[s.var]; }

bool holds(const CFilter& f, const Binding& b, const Graph& g) {
    switch (f.op) {
        case FilterExpr::Op::Eq: return resolve(f.lhs, b) == resolve(f.rhs, b);
        case FilterExpr::Op::Ne: return resolve(f.lhs, b) != resolve(f.rhs, b);
        case FilterExpr::Op::Regex:
            return text::to_lower(g.term(resolve(f.lhs, b)).str()).find(f.pattern) != std::string::npos;
        case FilterExpr::Op::In: {
            TermId v = resolve(f.lhs, b);
            return std::find(f.members.begin(), f.members.end(), v) != f.members.end();
        }
        case FilterExpr::Op::And:
            for (const auto& c : f.children)
                if (!holds(c, b, g)) return false;
            return true;
    }
    return false;
}

// Binds the slot to v; returns false on conflict. `newly` records the
// variable so the caller can undo the binding.
bool unify(const CSlot& s, TermId v, Binding& b, std::vector<int>& newly) {
    if (s.var == kNoVar) return s.id == v;
    auto& cell = b[s.var];
    if (cell) return *cell == v;
    cell = v;
    newly.push_back(s.var);
    return true;
}

bool unify_triple(const CAtom& a, const IdTriple& t, Binding& b, std::vector<int>& newly) {
    return unify(a.s, t[0], b, newly) && unify(a.p, t[1], b, newly) && unify(a.o, t[2], b, newly);
}

std::optional<TermId> bound(const CSlot& s, const Binding& b) {
    if (s.var == kNoVar) return s.id;
    return b[s.var];
}

class Firing {
public:
    Firing(const Graph& g, const CRule& r, std::vector<IdTriple>& out) : g_(g), r_(r), out_(out) {}

    void from_delta(std::size_t j, const std::vector<IdTriple>& delta) {
        Binding b(r_.n_vars);
        order_.clear();
        for (std::size_t k = 0; k < r_.body.size(); ++k)
            if (k != j) order_.push_back(k);
        for (const auto& t : delta) {
            std::vector<int> newly;
            if (unify_triple(r_.body[j], t, b, newly)) join(0, b);
            for (int v : newly) b[v].reset();
        }
    }

private:
    const Graph& g_;
    const CRule& r_;
    std::vector<IdTriple>& out_;
    std::vector<std::size_t> order_;

    void join(std::size_t depth, Binding& b) {
        if (depth == order_.size()) {
            emit(b);
            return;
        }
        const CAtom& a = r_.body[order_[depth]];
        g_.match(bound(a.s, b), bound(a.p, b), bound(a.o, b), [&](const IdTriple& t) {
            std::vector<int> newly;
            if (unify_triple(a, t, b, newly)) join(depth + 1, b);
            for (int v : newly) b[v].reset();
        });
    }

    void emit(const Binding& b) {
        for (const auto& f : r_.filters)
            if (!holds(f, b, g_)) return;
        for (const auto& h : r_.head) {
            IdTriple t{resolve(h.s, b), resolve(h.p, b), resolve(h.o, b)};
            const Term& s = g_.term(t[0]);
            const Term& p = g_.term(t[1]);
            if (!s.is_iri() || !p.is_iri() || !g_.ontology().declares(p.text)) continue;
            out_.push_back(t);
        }
    }
};

}  // namespace

Graph apply_rules(const Graph& graph, const std::vector<Rule>& rules, const ApplyOptions& options,
                  ApplyStats* stats) {
    Graph g = graph;
    std::vector<CRule> compiled;
    Compiler compiler(g);
    for (const auto& r : rules) compiled.push_back(compiler.compile(r));

    struct Task {
        std::size_t rule;
        std::size_t atom;
    };
    std::vector<Task> tasks;
    for (std::size_t r = 0; r < compiled.size(); ++r)
        for (std::size_t j = 0; j < compiled[r].body.size(); ++j) tasks.push_back({r, j});

    std::vector<IdTriple> delta(g.spo().begin(), g.spo().end());
    ApplyStats st;
    while (!delta.empty()) {
        ++st.iterations;
        std::vector<std::vector<IdTriple>> produced(tasks.size());
        const long n_tasks = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic) if (options.parallel)
        for (long k = 0; k < n_tasks; ++k) {
            const auto& task = tasks[static_cast<std::size_t>(k)];
            Firing(g, compiled[task.rule], produced[static_cast<std::size_t>(k)]).from_delta(task.atom, delta);
        }
        std::vector<IdTriple> next;
        for (const auto& batch : produced)
            for (const auto& t : batch) g.insert_ids(t, &next);
        st.derived += next.size();
        delta = std::move(next);
    }
    if (stats) *stats = st;
    return g;
}

std::string_view default_rules_text() {
    return R"(# Every typed node outside the text graph is an SKG entity.
[?s, a, skgt:SKG_Entity] :- [?s, a, ?c], FILTER(?c != skgt:UTKG_Entity) .

# Yes-valued entries become product features.
[?p, skg:hasFeature, ?f], [?f, rdf:type, skgt:Feature] :-
[?p, skg:hasSpec, ?s], [?s, skg:inEntry, ?f], [?s, skg:hasValue, skg:yes] .

[?p, skg:hasFeature, skg:8k_recording_support],
[skg:8k_recording_support, rdf:type, skgt:Feature],
[skg:8k_recording_support, skg:hasName, "8K Recording Support"] :- [?p, skg:hasSpec, ?s],
[?s, skg:inEntry, skg:video_recording_resolution], [?s, skg:hasValue, ?f],
FILTER(REGEX(str(?f), "8k")) .

[?p, skg:hasFeature, skg:5g_support], [skg:5g_support, rdf:type, skgt:Feature],
[skg:5g_support, skg:hasName, "5G Support"] :- [?p, skg:hasSpec, ?s], [?s, skg:hasValue, ?f5g],
FILTER (?f5g IN (skg:5g_sub6_fdd, skg:5g_sub6_tdd, skg:5g_sub6_sdl ) ) .

[?p, skg:hasFeature, skg:4g_support], [skg:4g_support, rdf:type, skgt:Feature],
[skg:4g_support, skg:hasName, "4G Support"] :- [?p, skg:hasSpec, ?s], [?s, skg:hasValue, ?f4g],
FILTER (?f4g IN (skg:4g_lte_fdd, skg:4g_lte_tdd ) ) .

# Price rows are lifted to a direct product edge.
[?product, skg:hasPrice, ?price] :- [?product, skg:hasSpec, ?spec],
[?spec, skg:inEntry, ?entry], [?entry, skg:hasName, "Price"], [?spec, skg:hasValue, ?price] .

# Variants inherit the categories of their range.
[?p, skg:belongs, ?c] :- [?p, skg:variantOf, ?pr], [?pr, skg:belongs, ?c] .
)";
}

const std::vector<Rule>& default_rules() {
    static const std::vector<Rule> rules = parse_rules(default_rules_text());
    return rules;
}

}  // namespace dualgraph::datalog
