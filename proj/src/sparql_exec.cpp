#include <algorithm>
#include <set>
#include <unordered_map>

#include "dualgraph/sparql.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph::sparql {

int compare_cells(const Cell& a, const Cell& b) {
    auto rank = [](const Cell& c) { return !c ? 0 : c->is_decimal() ? 1 : 2; };
    int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    if (ra == 0) return 0;
    if (ra == 1) {
        if (a->number != b->number) return a->number < b->number ? -1 : 1;
        return 0;
    }
    if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
    int c = a->text.compare(b->text);
    return c < 0 ? -1 : c > 0 ? 1 : 0;
}

namespace {

// ---------------------------------------------------------------------------
// Expression evaluation with an error value

struct Val {
    enum class K { Err, Bool, T } k = K::Err;
    bool b = false;
    Term t;

    static Val err() { return {}; }
    static Val boolean(bool v) { return Val{K::Bool, v, {}}; }
    static Val term(Term v) { return Val{K::T, false, std::move(v)}; }
};

using Lookup = std::function<const Term*(const std::string&)>;

Val compare(const Term& a, const Term& b, Expr::CmpOp op) {
    int c = 0;
    if (a.is_decimal() && b.is_decimal()) {
        c = a.number < b.number ? -1 : a.number > b.number ? 1 : 0;
    } else if (a.is_decimal() || b.is_decimal()) {
        return Val::err();
    } else if (op == Expr::CmpOp::Eq || op == Expr::CmpOp::Ne) {
        bool eq = a == b;
        return Val::boolean(op == Expr::CmpOp::Eq ? eq : !eq);
    } else if (a.kind != b.kind) {
        return Val::err();
    } else {
        int r = a.text.compare(b.text);
        c = r < 0 ? -1 : r > 0 ? 1 : 0;
    }
    switch (op) {
        case Expr::CmpOp::Eq: return Val::boolean(c == 0);
        case Expr::CmpOp::Ne: return Val::boolean(c != 0);
        case Expr::CmpOp::Lt: return Val::boolean(c < 0);
        case Expr::CmpOp::Le: return Val::boolean(c <= 0);
        case Expr::CmpOp::Gt: return Val::boolean(c > 0);
        case Expr::CmpOp::Ge: return Val::boolean(c >= 0);
    }
    return Val::err();
}

// Effective boolean value; Err when undefined.
Val truth(const Val& v) {
    switch (v.k) {
        case Val::K::Err: return v;
        case Val::K::Bool: return v;
        case Val::K::T:
            if (v.t.is_decimal()) return Val::boolean(v.t.number != 0);
            if (v.t.kind == TermKind::String) return Val::boolean(!v.t.text.empty());
            return Val::err();
    }
    return Val::err();
}

Val eval(const Expr& e, const Lookup& lookup) {
    switch (e.kind) {
        case Expr::Kind::Var: {
            const Term* t = lookup(e.var);
            return t ? Val::term(*t) : Val::err();
        }
        case Expr::Kind::Const: return Val::term(e.constant);
        case Expr::Kind::Str: {
            Val v = eval(e.args[0], lookup);
            if (v.k == Val::K::Err) return v;
            if (v.k == Val::K::Bool) return Val::term(Term::string(v.b ? "true" : "false"));
            return Val::term(Term::string(v.t.str()));
        }
        case Expr::Kind::Cmp: {
            Val a = eval(e.args[0], lookup);
            Val b = eval(e.args[1], lookup);
            if (a.k != Val::K::T || b.k != Val::K::T) {
                if (a.k == Val::K::Bool && b.k == Val::K::Bool &&
                    (e.cmp == Expr::CmpOp::Eq || e.cmp == Expr::CmpOp::Ne))
                    return Val::boolean((a.b == b.b) == (e.cmp == Expr::CmpOp::Eq));
                return Val::err();
            }
            return compare(a.t, b.t, e.cmp);
        }
        case Expr::Kind::And: {
            bool error = false;
            for (const auto& a : e.args) {
                Val v = truth(eval(a, lookup));
                if (v.k == Val::K::Err) {
                    error = true;
                } else if (!v.b) {
                    return Val::boolean(false);
                }
            }
            return error ? Val::err() : Val::boolean(true);
        }
        case Expr::Kind::Or: {
            bool error = false;
            for (const auto& a : e.args) {
                Val v = truth(eval(a, lookup));
                if (v.k == Val::K::Err) {
                    error = true;
                } else if (v.b) {
                    return Val::boolean(true);
                }
            }
            return error ? Val::err() : Val::boolean(false);
        }
        case Expr::Kind::Not: {
            Val v = truth(eval(e.args[0], lookup));
            if (v.k == Val::K::Err) return v;
            return Val::boolean(!v.b);
        }
        case Expr::Kind::In: {
            Val probe = eval(e.args[0], lookup);
            if (probe.k != Val::K::T) return Val::err();
            bool error = false;
            for (std::size_t i = 1; i < e.args.size(); ++i) {
                Val item = eval(e.args[i], lookup);
                if (item.k != Val::K::T) {
                    error = true;
                    continue;
                }
                Val eq = compare(probe.t, item.t, Expr::CmpOp::Eq);
                if (eq.k == Val::K::Err) {
                    error = true;
                } else if (eq.b) {
                    return Val::boolean(!e.negated);
                }
            }
            return error ? Val::err() : Val::boolean(e.negated);
        }
        case Expr::Kind::Regex: {
            Val v = eval(e.args[0], lookup);
            if (v.k != Val::K::T || v.t.kind != TermKind::String) return Val::err();
            return Val::boolean(std::regex_search(v.t.text, *e.regex));
        }
    }
    return Val::err();
}

bool passes(const Expr& e, const Lookup& lookup) {
    Val v = truth(eval(e, lookup));
    return v.k == Val::K::Bool && v.b;
}

// ---------------------------------------------------------------------------
// Basic graph pattern join

constexpr int kConst = -1;

struct CTerm {
    int var = kConst;
    TermId id = 0;
};

struct CPattern {
    CTerm s, p, o;
};

using Binding = std::vector<std::optional<TermId>>;

class Evaluator {
public:
    Evaluator(const Graph& g, const Query& q, const ExecOptions& opts) : g_(g), q_(q), opts_(opts) {
        vars_ = q.pattern_vars();
        for (std::size_t i = 0; i < vars_.size(); ++i) slot_[vars_[i]] = static_cast<int>(i);
        if (opts_.timeout.count() > 0) deadline_ = std::chrono::steady_clock::now() + opts_.timeout;
    }

    std::vector<Binding> solutions() {
        std::vector<Binding> out;
        std::vector<CPattern> pats;
        for (const auto& tp : q_.where) {
            CPattern cp;
            if (!compile(tp.s, cp.s) || !compile(tp.p, cp.p) || !compile(tp.o, cp.o)) return out;
            pats.push_back(cp);
        }
        // Most selective pattern first.
        std::vector<std::pair<std::size_t, std::size_t>> sized;
        for (std::size_t i = 0; i < pats.size(); ++i) {
            auto c = [](const CTerm& t) { return t.var == kConst ? std::optional<TermId>(t.id) : std::nullopt; };
            sized.emplace_back(g_.count(c(pats[i].s), c(pats[i].p), c(pats[i].o)), i);
        }
        std::stable_sort(sized.begin(), sized.end());
        for (const auto& [n, i] : sized) order_.push_back(pats[i]);

        // Each filter runs at the shallowest depth where its pattern variables are bound.
        filters_at_.assign(order_.size() + 1, {});
        std::vector<bool> bound(vars_.size(), false);
        std::vector<bool> placed(q_.filters.size(), false);
        for (std::size_t d = 0; d <= order_.size(); ++d) {
            if (d > 0) {
                for (const CTerm* t : {&order_[d - 1].s, &order_[d - 1].p, &order_[d - 1].o})
                    if (t->var != kConst) bound[static_cast<std::size_t>(t->var)] = true;
            }
            for (std::size_t f = 0; f < q_.filters.size(); ++f) {
                if (placed[f]) continue;
                std::vector<std::string> fv;
                q_.filters[f].collect_vars(fv);
                bool all = std::all_of(fv.begin(), fv.end(), [&](const std::string& v) {
                    auto it = slot_.find(v);
                    return it != slot_.end() && bound[static_cast<std::size_t>(it->second)];
                });
                if (all || d == order_.size()) {
                    filters_at_[d].push_back(f);
                    placed[f] = true;
                }
            }
        }

        Binding b(vars_.size());
        join(0, b, out);
        return out;
    }

    const std::vector<std::string>& vars() const { return vars_; }
    int slot(const std::string& v) const {
        auto it = slot_.find(v);
        return it == slot_.end() ? -1 : it->second;
    }

private:
    const Graph& g_;
    const Query& q_;
    const ExecOptions& opts_;
    std::vector<std::string> vars_;
    std::unordered_map<std::string, int> slot_;
    std::vector<CPattern> order_;
    std::vector<std::vector<std::size_t>> filters_at_;
    std::optional<std::chrono::steady_clock::time_point> deadline_;
    std::size_t steps_ = 0;

    bool compile(const PatternTerm& t, CTerm& out) {
        if (t.is_var) {
            out.var = slot_.at(t.var);
            return true;
        }
        auto id = g_.find(t.constant);
        if (!id) return false;
        out.id = *id;
        return true;
    }

    void tick() {
        if (deadline_ && (++steps_ & 0xFFF) == 0 && std::chrono::steady_clock::now() > *deadline_) throw QueryTimeout();
    }

    bool filters_pass(std::size_t depth, const Binding& b) const {
        if (filters_at_[depth].empty()) return true;
        Lookup lookup = [&](const std::string& v) -> const Term* {
            auto it = slot_.find(v);
            if (it == slot_.end() || !b[static_cast<std::size_t>(it->second)]) return nullptr;
            return &g_.term(*b[static_cast<std::size_t>(it->second)]);
        };
        for (auto f : filters_at_[depth])
            if (!passes(q_.filters[f], lookup)) return false;
        return true;
    }

    static std::optional<TermId> value(const CTerm& t, const Binding& b) {
        return t.var == kConst ? std::optional<TermId>(t.id) : b[static_cast<std::size_t>(t.var)];
    }

    static bool bind(const CTerm& t, TermId v, Binding& b, std::vector<int>& newly) {
        if (t.var == kConst) return t.id == v;
        auto& cell = b[static_cast<std::size_t>(t.var)];
        if (cell) return *cell == v;
        cell = v;
        newly.push_back(t.var);
        return true;
    }

    void join(std::size_t depth, Binding& b, std::vector<Binding>& out) {
        tick();
        if (!filters_pass(depth, b)) return;
        if (depth == order_.size()) {
            out.push_back(b);
            return;
        }
        const auto& p = order_[depth];
        g_.match(value(p.s, b), value(p.p, b), value(p.o, b), [&](const IdTriple& t) {
            std::vector<int> newly;
            if (bind(p.s, t[0], b, newly) && bind(p.p, t[1], b, newly) && bind(p.o, t[2], b, newly))
                join(depth + 1, b, out);
            for (int v : newly) b[static_cast<std::size_t>(v)].reset();
        });
    }
};

int compare_rows(const std::vector<Cell>& a, const std::vector<Cell>& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        int c = compare_cells(a[i], b[i]);
        if (c != 0) return c;
    }
    return a.size() < b.size() ? -1 : a.size() > b.size() ? 1 : 0;
}

struct RowLess {
    bool operator()(const std::vector<Cell>& a, const std::vector<Cell>& b) const { return compare_rows(a, b) < 0; }
};

Cell aggregate(const Aggregate& agg, const std::vector<const std::vector<Cell>*>& group, int slot) {
    if (!agg.var) {
        if (!agg.distinct) return Term::decimal(static_cast<double>(group.size()));
        std::set<std::vector<Cell>, RowLess> uniq;
        for (const auto* row : group) uniq.insert(*row);
        return Term::decimal(static_cast<double>(uniq.size()));
    }
    std::vector<Cell> values;
    for (const auto* row : group) {
        const Cell& c = (*row)[static_cast<std::size_t>(slot)];
        if (c) values.push_back(c);
    }
    if (agg.distinct) {
        std::sort(values.begin(), values.end(), [](const Cell& a, const Cell& b) { return compare_cells(a, b) < 0; });
        values.erase(std::unique(values.begin(), values.end(),
                                 [](const Cell& a, const Cell& b) { return compare_cells(a, b) == 0; }),
                     values.end());
    }
    switch (agg.fn) {
        case Aggregate::Fn::Count: return Term::decimal(static_cast<double>(values.size()));
        case Aggregate::Fn::Min:
        case Aggregate::Fn::Max: {
            if (values.empty()) return std::nullopt;
            auto less = [](const Cell& a, const Cell& b) { return compare_cells(a, b) < 0; };
            return agg.fn == Aggregate::Fn::Min ? *std::min_element(values.begin(), values.end(), less)
                                                : *std::max_element(values.begin(), values.end(), less);
        }
        case Aggregate::Fn::Sum:
        case Aggregate::Fn::Avg: {
            double sum = 0;
            for (const auto& v : values) {
                if (!v->is_decimal()) return std::nullopt;
                sum += v->number;
            }
            if (agg.fn == Aggregate::Fn::Sum) return Term::decimal(sum);
            return Term::decimal(values.empty() ? 0.0 : sum / static_cast<double>(values.size()));
        }
    }
    return std::nullopt;
}

}  // namespace

ResultTable execute(const Graph& graph, const Query& query, const ExecOptions& options) {
    Evaluator ev(graph, query, options);
    auto sols = ev.solutions();
    const auto& vars = ev.vars();

    // Work on term-level rows over all pattern variables.
    std::vector<std::vector<Cell>> rows;
    rows.reserve(sols.size());
    for (const auto& b : sols) {
        std::vector<Cell> row;
        row.reserve(b.size());
        for (const auto& id : b) row.push_back(id ? Cell(graph.term(*id)) : std::nullopt);
        rows.push_back(std::move(row));
    }

    std::vector<std::string> columns = vars;
    if (query.has_aggregates() || !query.group_by.empty()) {
        std::vector<int> key_slots;
        for (const auto& g : query.group_by) key_slots.push_back(ev.slot(g));
        std::map<std::vector<Cell>, std::vector<const std::vector<Cell>*>, RowLess> groups;
        if (query.group_by.empty()) groups[{}];
        for (const auto& row : rows) {
            std::vector<Cell> key;
            for (int s : key_slots) key.push_back(row[static_cast<std::size_t>(s)]);
            groups[key].push_back(&row);
        }
        columns = query.group_by;
        for (const auto& p : query.projection)
            if (p.aggregate) columns.push_back(p.name);
        std::vector<std::vector<Cell>> grouped;
        for (const auto& [key, members] : groups) {
            std::vector<Cell> out = key;
            for (const auto& p : query.projection) {
                if (!p.aggregate) continue;
                int slot = p.aggregate->var ? ev.slot(*p.aggregate->var) : -1;
                out.push_back(aggregate(*p.aggregate, members, slot));
            }
            grouped.push_back(std::move(out));
        }
        rows = std::move(grouped);
    }

    auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(columns.begin(), columns.end(), name) - columns.begin());
    };
    std::vector<std::pair<std::size_t, bool>> keys;
    for (const auto& k : query.order_by) keys.emplace_back(col(k.var), k.descending);
    std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
        for (const auto& [c, desc] : keys) {
            int r = compare_cells(a[c], b[c]);
            if (r != 0) return desc ? r > 0 : r < 0;
        }
        return compare_rows(a, b) < 0;
    });

    ResultTable table;
    table.header = query.header();
    std::vector<std::size_t> proj;
    for (const auto& h : table.header) proj.push_back(col(h));
    std::set<std::vector<Cell>, RowLess> seen;
    std::size_t skipped = 0;
    for (const auto& row : rows) {
        std::vector<Cell> out;
        out.reserve(proj.size());
        for (auto c : proj) out.push_back(row[c]);
        if (query.distinct && !seen.insert(out).second) continue;
        if (skipped < query.offset) {
            ++skipped;
            continue;
        }
        if (query.limit && table.rows.size() >= *query.limit) break;
        table.rows.push_back(std::move(out));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Candidates

std::string_view status_name(Status s) {
    switch (s) {
        case Status::Ok: return "ok";
        case Status::Failed: return "failed";
        case Status::TooLarge: return "too_large";
        case Status::Empty: return "empty";
    }
    return "unknown";
}

CandidateOutcome run_candidate(const Graph& graph, std::string_view query_text, const ExecOptions& options,
                               std::size_t max_rows) {
    CandidateOutcome out;
    out.query_text = std::string(query_text);
    try {
        auto q = parse_query(query_text);
        auto table = execute(graph, q, options);
        if (table.rows.empty()) {
            out.status = Status::Empty;
        } else if (table.rows.size() > max_rows) {
            out.status = Status::TooLarge;
        } else {
            out.status = Status::Ok;
        }
        out.result = std::move(table);
    } catch (const std::exception& e) {
        out.status = Status::Failed;
        out.error = e.what();
    }
    return out;
}

std::vector<CandidateOutcome> run_candidates(const Graph& graph, const std::vector<std::string>& texts,
                                             const ExecOptions& options, bool parallel) {
    std::vector<CandidateOutcome> out(texts.size());
    const long n = static_cast<long>(texts.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = run_candidate(graph, texts[static_cast<std::size_t>(i)], options);
    }
    return out;
}

std::vector<CandidateOutcome> validate_candidates(const std::vector<CandidateOutcome>& outcomes,
                                                  const ValidationPolicy& policy) {
    std::vector<CandidateOutcome> kept;
    bool any_ok = std::any_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.status == Status::Ok; });
    for (const auto& o : outcomes) {
        if (o.status == Status::Ok) {
            kept.push_back(o);
        } else if (o.status == Status::Empty && !any_ok && !policy.discard_empty_unconditionally) {
            kept.push_back(o);
        }
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Markdown

std::string display(const Graph& graph, const Cell& cell) {
    if (!cell) return "";
    if (cell->is_iri()) {
        if (auto name = graph.name_of(*cell)) return *name;
        return cell->str();
    }
    return cell->text;
}

namespace {
std::string escape_cell(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n' || c == '\r') {
            out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    return out;
}
}  // namespace

std::string format_table(const Graph& graph, const ResultTable& table) {
    std::string out = "|";
    for (const auto& h : table.header) out += " " + escape_cell(h) + " |";
    out += "\n|";
    for (std::size_t i = 0; i < table.header.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& row : table.rows) {
        out += "|";
        for (const auto& c : row) {
            auto cell = escape_cell(display(graph, c));
            out += cell.empty() ? " |" : " " + cell + " |";
        }
        out += "\n";
    }
    return out;
}

std::string format_markdown(const Graph& graph, const CandidateOutcome& outcome) {
    std::string out = "```sparql\n" + text::trim(outcome.query_text) + "\n```\n\n";
    if (outcome.result && (outcome.status == Status::Ok || outcome.status == Status::Empty))
        out += format_table(graph, *outcome.result);
    switch (outcome.status) {
        case Status::Ok: break;
        case Status::Empty: out += "\n_No results._\n"; break;
        case Status::TooLarge: out += "\n_Too many results._\n"; break;
        case Status::Failed: out += "_Query failed: " + outcome.error + "_\n"; break;
    }
    return out;
}

}  // namespace dualgraph::sparql
