#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dualgraph/lexer.hpp"
#include "dualgraph/skg.hpp"

namespace dualgraph::datalog {

class DatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Variable (?x) or constant term in a rule atom.
struct Slot {
    bool is_var = false;
    std::string var;
    Term constant;

    static Slot variable(std::string name) { return Slot{true, std::move(name), {}}; }
    static Slot value(Term t) { return Slot{false, {}, std::move(t)}; }
    bool operator==(const Slot&) const = default;
};

struct Atom {
    Slot s, p, o;
    bool operator==(const Atom&) const = default;
};

struct FilterExpr {
    enum class Op { Eq, Ne, Regex, In, And };
    Op op = Op::Eq;
    Slot lhs;                                 // Eq/Ne/Regex/In
    Slot rhs;                                 // Eq/Ne
    std::string pattern;                      // Regex: substring, case-insensitive
    std::vector<Term> members;                // In
    std::vector<FilterExpr> children;         // And

    bool operator==(const FilterExpr&) const = default;
};

struct Rule {
    std::vector<Atom> head;
    std::vector<Atom> body;
    std::vector<FilterExpr> filters;

    bool operator==(const Rule&) const = default;
};

// Bracketed-atom syntax:
//   [?p, skg:belongs, ?c] :- [?p, skg:variantOf, ?pr], [?pr, skg:belongs, ?c] .
// "a" abbreviates rdf:type; prefixes skg:, skgt:, rdf: and xsd: are built in.
// Syntax errors are lex::SyntaxError carrying line and column; unsafe rules
// raise DatalogError.
std::vector<Rule> parse_rules(std::string_view text);

// Canonical text form; parse_rules(print_rules(r)) == r.
std::string print_rules(const std::vector<Rule>& rules);

// Throws DatalogError when a head or filter variable is not bound by the body.
void check_safe(const Rule& rule);

// Distinct body variables in first-appearance order.
std::vector<std::string> variables_of(const Rule& rule);

struct ApplyOptions {
    bool parallel = true;  // fire (rule, delta atom) pairs concurrently
};

struct ApplyStats {
    std::size_t iterations = 0;
    std::size_t derived = 0;  // triples added, including schema-closure types
};

// Semi-naive least fixpoint. Head instantiations with a literal subject or
// an undeclared predicate are skipped. The input graph is not modified.
Graph apply_rules(const Graph& graph, const std::vector<Rule>& rules, const ApplyOptions& options = {},
                  ApplyStats* stats = nullptr);

std::string_view default_rules_text();
const std::vector<Rule>& default_rules();

}  // namespace dualgraph::datalog
