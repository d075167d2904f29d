#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualgraph/corpus.hpp"
#include "dualgraph/datalog.hpp"
#include "dualgraph/llm.hpp"
#include "dualgraph/orchestrator.hpp"
#include "dualgraph/patterns.hpp"
#include "dualgraph/skg.hpp"
#include "dualgraph/tkg.hpp"

namespace dualgraph {

// Fixed artifact file names inside the artifacts directory.
namespace artifact {
inline constexpr const char* kGraph = "skg.nt";
inline constexpr const char* kEntities = "entities.jsonl";
inline constexpr const char* kEntityVectors = "entities.vec";
inline constexpr const char* kPatterns = "patterns.jsonl";
}  // namespace artifact

struct BuildTargets {
    bool skg = true;
    bool tkg = true;
    bool patterns = true;
};

struct BuildOptions {
    std::optional<std::string> rules_path;  // default rules when unset
    std::optional<std::string> units_path;  // default unit table when unset
    ChunkOptions chunking;
    PatternIndexOptions patterns;
    bool parallel_rules = true;
};

struct BuildSummary {
    std::size_t documents = 0;
    std::size_t chunks = 0;
    std::size_t entities = 0;
    std::size_t base_triples = 0;
    std::size_t derived_triples = 0;
    std::size_t aligned_nodes = 0;
    std::size_t patterns = 0;
    std::vector<std::string> diagnostics;
    std::vector<std::string> written;
};

// Builds the requested artifacts. The entity graph is built first so that
// the SKG can be aligned with it (also when it already exists on disk);
// patterns come from the enriched SKG.
BuildSummary build_artifacts(const std::filesystem::path& corpus_root, const std::filesystem::path& artifacts,
                             const BuildTargets& targets, llm::LlmClient& client, llm::Trace* trace = nullptr,
                             const BuildOptions& options = {});

// In-memory pipeline for callers that do not need files.
struct BuiltIndexes {
    Graph skg;
    PatternIndex patterns;
    EntityGraph tkg;
    BuildSummary summary;

    Indexes view() const { return {&skg, &patterns, &tkg}; }
};

BuiltIndexes build_in_memory(const Corpus& corpus, llm::LlmClient& client, llm::Trace* trace = nullptr,
                             const BuildOptions& options = {});

// Loads whatever artifacts exist.
struct LoadedIndexes {
    std::optional<Graph> skg;
    std::optional<PatternIndex> patterns;
    std::optional<EntityGraph> tkg;

    Indexes view() const;
};

LoadedIndexes load_artifacts(const std::filesystem::path& artifacts);

std::vector<datalog::Rule> load_rules(const std::optional<std::string>& path);

}  // namespace dualgraph
