#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "dualgraph/lexer.hpp"
#include "dualgraph/skg.hpp"

namespace dualgraph::sparql {

class QueryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class QueryTimeout : public QueryError {
public:
    QueryTimeout() : QueryError("query evaluation timed out") {}
};

struct PatternTerm {
    bool is_var = false;
    std::string var;
    Term constant;

    static PatternTerm variable(std::string name) { return PatternTerm{true, std::move(name), {}}; }
    static PatternTerm value(Term t) { return PatternTerm{false, {}, std::move(t)}; }
};

struct TriplePattern {
    PatternTerm s, p, o;
};

struct Expr {
    enum class Kind { Var, Const, Str, Cmp, And, Or, Not, In, Regex };
    enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

    Kind kind = Kind::Const;
    std::string var;          // Var
    Term constant;            // Const
    CmpOp cmp = CmpOp::Eq;    // Cmp
    bool negated = false;     // In: NOT IN
    std::vector<Expr> args;   // operands; In: args[0] is the probe, the rest the list
    std::string pattern;      // Regex source
    bool icase = false;       // Regex "i" flag
    std::shared_ptr<const std::regex> regex;

    void collect_vars(std::vector<std::string>& out) const;
};

struct Aggregate {
    enum class Fn { Count, Min, Max, Avg, Sum };
    Fn fn = Fn::Count;
    bool distinct = false;
    std::optional<std::string> var;  // nullopt: COUNT(*)
};

struct Projection {
    std::string name;  // variable or alias
    std::optional<Aggregate> aggregate;
};

struct OrderKey {
    std::string var;
    bool descending = false;
};

struct Query {
    std::map<std::string, std::string> prefixes;  // declared name -> IRI
    bool distinct = false;
    bool select_all = false;
    std::vector<Projection> projection;
    std::vector<TriplePattern> where;
    std::vector<Expr> filters;
    std::vector<std::string> group_by;
    std::vector<OrderKey> order_by;
    std::optional<std::size_t> limit;
    std::size_t offset = 0;

    bool has_aggregates() const;
    std::vector<std::string> pattern_vars() const;  // first-appearance order
    std::vector<std::string> header() const;
};

// Throws lex::SyntaxError for grammar errors and QueryError for semantic
// ones (unbound projection, ungrouped variable, bad regex, unknown prefix).
Query parse_query(std::string_view text);

// Parses the inside of a WHERE block ("?p skg:hasSpec ?s . ..."); used to
// check that pattern snippets are well-formed.
std::vector<TriplePattern> parse_bgp_fragment(std::string_view text);

using Cell = std::optional<Term>;

struct ResultTable {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
};

struct ExecOptions {
    std::chrono::milliseconds timeout{5000};  // zero disables the check
};

// Solutions are filtered, grouped, ordered (ORDER BY keys, then every
// variable as a tie-break), projected, de-duplicated and sliced.
ResultTable execute(const Graph& graph, const Query& query, const ExecOptions& options = {});

// Total order used for ORDER BY: unbound, then decimals by value, then
// other terms by kind and text.
int compare_cells(const Cell& a, const Cell& b);

enum class Status { Ok, Failed, TooLarge, Empty };
std::string_view status_name(Status s);

struct CandidateOutcome {
    std::string query_text;
    Status status = Status::Failed;
    std::optional<ResultTable> result;
    std::string error;
};

inline constexpr std::size_t kMaxRows = 100;

CandidateOutcome run_candidate(const Graph& graph, std::string_view query_text, const ExecOptions& options = {},
                               std::size_t max_rows = kMaxRows);

// Executes candidates concurrently; outcomes keep the input order.
std::vector<CandidateOutcome> run_candidates(const Graph& graph, const std::vector<std::string>& texts,
                                             const ExecOptions& options = {}, bool parallel = true);

struct ValidationPolicy {
    // Alternative reading of the discard rule: drop empty results even when
    // nothing else survives.
    bool discard_empty_unconditionally = false;
};

// Drops failed and too-large outcomes; empty outcomes survive only when no
// candidate is ok.
std::vector<CandidateOutcome> validate_candidates(const std::vector<CandidateOutcome>& outcomes,
                                                  const ValidationPolicy& policy = {});

// Cell text: hasName display name for nodes that have one, else the local
// id; literals render their lexical form; unbound renders empty.
std::string display(const Graph& graph, const Cell& cell);

std::string format_table(const Graph& graph, const ResultTable& table);
// Fenced query block followed by the result table.
std::string format_markdown(const Graph& graph, const CandidateOutcome& outcome);

}  // namespace dualgraph::sparql
