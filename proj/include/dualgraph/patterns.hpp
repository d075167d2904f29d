#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualgraph/llm.hpp"
#include "dualgraph/skg.hpp"
#include "dualgraph/vecindex.hpp"

namespace dualgraph {

class PatternError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PatternKind { Spec, Feature, Category, SingularNode };

inline constexpr std::array<PatternKind, 4> kPatternKinds = {PatternKind::Spec, PatternKind::Feature,
                                                             PatternKind::Category, PatternKind::SingularNode};

std::string_view kind_name(PatternKind k);
std::optional<PatternKind> parse_kind(std::string_view s);

struct PatternInstance {
    PatternKind kind = PatternKind::Spec;
    // Spec: section, entry, value. Feature: feature. Category: range,
    // category. SingularNode: node. All prefixed IRIs.
    std::vector<std::string> nodes;
    std::string linearization;
    std::string snippet;

    // "<Kind>:<node>|<node>..."; unique per (kind, nodes).
    std::string id() const;
    bool operator==(const PatternInstance&) const = default;
};

// Sorted by id; deduplicated by (kind, nodes).
std::vector<PatternInstance> extract_patterns(const Graph& graph);

std::string linearize(const Graph& graph, PatternKind kind, const std::vector<std::string>& nodes);
std::string to_snippet(const Graph& graph, PatternKind kind, const std::vector<std::string>& nodes);

llm::PatternSnippet to_prompt_snippet(const PatternInstance& p);

// One exact index per kind, keyed by pattern id.
class PatternIndex {
public:
    void add(const PatternInstance& p, const Vector& vec);

    std::size_t size() const { return patterns_.size(); }
    std::size_t count(PatternKind k) const;
    const PatternInstance& get(const std::string& id) const;
    const std::vector<PatternInstance>& patterns() const { return patterns_; }
    const EmbeddingIndex* index(PatternKind k) const;

    // Top-k per kind by cosine with the question vector; kinds in
    // declaration order.
    std::vector<PatternInstance> retrieve(const Vector& question, std::size_t k_per_type = 5) const;

    // JSON lines: kind, nodes, linearization, snippet, vector.
    void save(const std::string& path) const;
    static PatternIndex load(const std::string& path);

private:
    std::vector<PatternInstance> patterns_;
    std::map<std::string, std::size_t> by_id_;
    std::map<PatternKind, EmbeddingIndex> indexes_;
};

struct PatternIndexOptions {
    // 0 disables the cap; otherwise the first N patterns of each kind by id.
    std::size_t max_per_kind = 0;
    std::size_t embed_batch = 64;
};

// Embeds every pattern once. Patterns whose (kind, linearization) repeats
// an earlier one are dropped.
PatternIndex index_patterns(const std::vector<PatternInstance>& patterns, llm::LlmClient& client,
                            llm::Trace* trace = nullptr, const PatternIndexOptions& options = {});

std::vector<PatternInstance> retrieve_patterns(const PatternIndex& index, llm::LlmClient& client,
                                               std::string_view question, std::size_t k_per_type = 5,
                                               llm::Trace* trace = nullptr);

}  // namespace dualgraph
