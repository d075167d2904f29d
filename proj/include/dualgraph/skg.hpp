#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualgraph/corpus.hpp"
#include "dualgraph/normalize.hpp"

namespace dualgraph {

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Prefixed names used throughout the graph.
namespace vocab {
inline constexpr std::string_view kType = "rdf:type";
inline constexpr std::string_view kHasName = "skg:hasName";
inline constexpr std::string_view kVariantOf = "skg:variantOf";
inline constexpr std::string_view kBelongs = "skg:belongs";
inline constexpr std::string_view kHasDescription = "skg:hasDescription";
inline constexpr std::string_view kHasSpec = "skg:hasSpec";
inline constexpr std::string_view kInSection = "skg:inSection";
inline constexpr std::string_view kInEntry = "skg:inEntry";
inline constexpr std::string_view kHasValue = "skg:hasValue";
inline constexpr std::string_view kHasFeature = "skg:hasFeature";
inline constexpr std::string_view kHasNumericValue = "skg:hasNumericValue";
inline constexpr std::string_view kHasDim1 = "skg:hasDim1";
inline constexpr std::string_view kHasDim2 = "skg:hasDim2";
inline constexpr std::string_view kHasDim3 = "skg:hasDim3";
inline constexpr std::string_view kHasUnit = "skg:hasUnit";
inline constexpr std::string_view kHasPrice = "skg:hasPrice";

inline constexpr std::string_view kCategory = "skgt:Category";
inline constexpr std::string_view kProductRange = "skgt:ProductRange";
inline constexpr std::string_view kProduct = "skgt:Product";
inline constexpr std::string_view kSpec = "skgt:Spec";
inline constexpr std::string_view kSection = "skgt:Section";
inline constexpr std::string_view kEntry = "skgt:Entry";
inline constexpr std::string_view kValue = "skgt:Value";
inline constexpr std::string_view kFeature = "skgt:Feature";
inline constexpr std::string_view kUtkgEntity = "skgt:UTKG_Entity";
inline constexpr std::string_view kSkgEntity = "skgt:SKG_Entity";

// "skg:" + id
std::string node(std::string_view canonical);
// Local part after the prefix colon ("skg:yes" -> "yes").
std::string_view local_name(std::string_view iri);
}  // namespace vocab

enum class TermKind : std::uint8_t { Iri, String, Decimal };

struct Term {
    TermKind kind = TermKind::Iri;
    std::string text;  // prefixed IRI, string lexical form, or canonical decimal form
    double number = 0;

    static Term iri(std::string_view s);
    static Term string(std::string_view s);
    static Term decimal(double v);

    bool is_iri() const { return kind == TermKind::Iri; }
    bool is_literal() const { return kind != TermKind::Iri; }
    bool is_decimal() const { return kind == TermKind::Decimal; }

    // String form used by str() in filters: local name for IRIs, lexical
    // form for literals.
    std::string str() const;
    // N-Triples-like rendering.
    std::string to_string() const;

    bool operator==(const Term& o) const { return kind == o.kind && text == o.text; }
    bool operator<(const Term& o) const {
        return kind != o.kind ? kind < o.kind : text < o.text;
    }
};

struct Triple {
    Term subject;
    Term predicate;
    Term object;

    bool operator==(const Triple&) const = default;
    bool operator<(const Triple& o) const {
        if (!(subject == o.subject)) return subject < o.subject;
        if (!(predicate == o.predicate)) return predicate < o.predicate;
        return object < o.object;
    }
};

using TermId = std::uint32_t;
using IdTriple = std::array<TermId, 3>;

// Declared predicates plus the endpoint classes used for schema closure.
class Ontology {
public:
    struct PredicateDecl {
        std::optional<std::string> domain;  // auto-typed subject class
        std::optional<std::string> range;   // auto-typed object class
    };

    static const Ontology& standard();

    bool declares(std::string_view predicate) const;
    const PredicateDecl* find(std::string_view predicate) const;
    const std::map<std::string, PredicateDecl, std::less<>>& predicates() const { return predicates_; }
    const std::vector<std::string>& classes() const { return classes_; }

    void declare(std::string predicate, PredicateDecl decl = {});
    void declare_class(std::string cls);

private:
    std::map<std::string, PredicateDecl, std::less<>> predicates_;
    std::vector<std::string> classes_;
};

class Graph {
public:
    Graph();
    explicit Graph(const Ontology& ontology);

    const Ontology& ontology() const { return *ontology_; }

    TermId intern(const Term& t);
    std::optional<TermId> find(const Term& t) const;
    const Term& term(TermId id) const { return terms_[id]; }
    std::size_t term_count() const { return terms_.size(); }

    // Inserts the triple and its schema-closure type triples. Returns the
    // number of triples that were new. Throws SchemaError for undeclared
    // predicates or literal subjects/predicates.
    std::size_t insert(const Triple& t);
    std::size_t insert(const Term& s, std::string_view p, const Term& o);
    // Id-level insert; appends new triples (including closure) to `added`.
    std::size_t insert_ids(const IdTriple& t, std::vector<IdTriple>* added = nullptr);

    bool contains(const IdTriple& t) const { return spo_.count(t) > 0; }
    bool contains(const Triple& t) const;
    std::size_t size() const { return spo_.size(); }

    // Visits every triple unifying with the pattern; the index is chosen from
    // the bound positions.
    void match(std::optional<TermId> s, std::optional<TermId> p, std::optional<TermId> o,
               const std::function<void(const IdTriple&)>& visit) const;
    std::vector<IdTriple> match(std::optional<TermId> s, std::optional<TermId> p,
                                std::optional<TermId> o) const;
    std::size_t count(std::optional<TermId> s, std::optional<TermId> p, std::optional<TermId> o) const;

    // Term-level convenience lookups.
    std::vector<Triple> match_terms(const std::optional<Term>& s, const std::optional<Term>& p,
                                    const std::optional<Term>& o) const;
    std::vector<Term> objects(const Term& s, std::string_view p) const;
    std::vector<Term> subjects(std::string_view p, const Term& o) const;
    std::set<std::string> classes_of(const Term& node) const;
    bool has_class(const Term& node, std::string_view cls) const;
    std::optional<std::string> name_of(const Term& node) const;

    const std::set<IdTriple>& spo() const { return spo_; }
    Triple resolve(const IdTriple& t) const;
    std::vector<Triple> triples() const;  // sorted term-level view

    bool same_triples(const Graph& other) const;

private:
    const Ontology* ontology_;
    std::vector<Term> terms_;
    std::unordered_map<std::string, TermId> term_ids_;
    std::set<IdTriple> spo_;
    std::set<IdTriple> pos_;  // (p, o, s)
    std::set<IdTriple> osp_;  // (o, s, p)
    std::optional<TermId> type_id_;

    std::size_t insert_one(const IdTriple& t, std::vector<IdTriple>* added);
    void validate(const IdTriple& t) const;
};

struct GraphStats {
    std::map<std::string, std::size_t> per_class;      // distinct typed subjects
    std::map<std::string, std::size_t> per_predicate;  // triple counts
    std::size_t triples = 0;
    std::size_t nodes = 0;
};

GraphStats stats(const Graph& g);

struct BuildDiagnostics {
    std::vector<std::string> messages;
};

// Populates the SKG from every structured component of the corpus.
Graph build_skg(const Corpus& corpus, const Ontology& ontology = Ontology::standard(),
                BuildDiagnostics* diagnostics = nullptr, const UnitTable* units = nullptr);

// Splits a raw value on commas that are not between two digits.
std::vector<std::string> split_value_fragments(std::string_view raw);

// Line-oriented "<s> <p> <o> ." serialization, sorted.
std::string serialize_graph(const Graph& g);
Graph parse_graph(std::string_view text, const Ontology& ontology = Ontology::standard());
void save_graph(const Graph& g, const std::string& path);
Graph load_graph(const std::string& path, const Ontology& ontology = Ontology::standard());

}  // namespace dualgraph
