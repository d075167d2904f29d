#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dualgraph/corpus.hpp"
#include "dualgraph/llm.hpp"
#include "dualgraph/skg.hpp"
#include "dualgraph/vecindex.hpp"

namespace dualgraph {

class TkgError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Entity {
    std::string id;  // canonical id of the name
    std::string name;
    std::string description;
    std::vector<std::string> chunk_ids;  // sorted, unique

    bool operator==(const Entity&) const = default;
};

struct ChunkMentions {
    std::string chunk_id;
    std::vector<llm::Mention> mentions;
};

// Unparseable responses are retried once (tag index 1); a second failure
// yields no mentions and a diagnostic.
std::vector<llm::Mention> extract_entities(const Chunk& chunk, llm::LlmClient& client, llm::Trace* trace = nullptr,
                                           std::vector<std::string>* diagnostics = nullptr);

// Per-chunk extraction with calls issued concurrently; results in chunk order.
std::vector<ChunkMentions> extract_all(const std::vector<Chunk>& chunks, llm::LlmClient& client,
                                       llm::Trace* trace = nullptr, std::vector<std::string>* diagnostics = nullptr);

// Groups by canonical id of the name. The first mention names the entity;
// distinct descriptions are joined with newlines in chunk order.
std::vector<Entity> merge_entities(const std::vector<ChunkMentions>& mentions);

enum class VoteWeighting { InverseRank, Linear };

struct ChunkScore {
    std::string chunk_id;
    double score = 0;
};

class EntityGraph {
public:
    EntityGraph() = default;

    const std::vector<Entity>& entities() const { return entities_; }
    const Entity* find(const std::string& id) const;
    const Chunk* chunk(const std::string& id) const;
    const std::map<std::string, Chunk>& chunks() const { return chunks_; }
    const EmbeddingIndex& index() const { return index_; }
    bool empty() const { return entities_.empty(); }

    // Entities must reference chunks in `chunks`; vectors align with entities.
    static EntityGraph assemble(std::vector<Entity> entities, const std::vector<Chunk>& chunks,
                                const std::vector<Vector>& vectors);

    // entities.jsonl holds entity and chunk records; the vector index is a
    // separate binary file.
    void save(const std::string& jsonl_path, const std::string& vec_path) const;
    static EntityGraph load(const std::string& jsonl_path, const std::string& vec_path);

private:
    std::vector<Entity> entities_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::string, Chunk> chunks_;
    EmbeddingIndex index_;
};

// Embeds every entity description (indexing phase).
EntityGraph build_entity_graph(std::vector<Entity> entities, const std::vector<Chunk>& chunks,
                               llm::LlmClient& client, llm::Trace* trace = nullptr);

// Each ranked entity (1-based rank r) adds 1/r, or k_entities - r + 1
// under Linear (k_entities 0 means the ranking length), to each of its chunks. Sorted by score, then chunk id.
std::vector<ChunkScore> vote_chunks(const EntityGraph& graph, const std::vector<SearchHit>& ranked_entities,
                                    VoteWeighting weighting = VoteWeighting::InverseRank, std::size_t k_entities = 0);

std::vector<ChunkScore> score_chunks(const EntityGraph& graph, const Vector& question, std::size_t k_entities = 20,
                                     std::size_t k_chunks = 5, VoteWeighting weighting = VoteWeighting::InverseRank);

std::vector<Chunk> retrieve_chunks(const EntityGraph& graph, llm::LlmClient& client, std::string_view question,
                                   std::size_t k_entities = 20, std::size_t k_chunks = 5,
                                   VoteWeighting weighting = VoteWeighting::InverseRank, llm::Trace* trace = nullptr);

// Nodes (other than Spec nodes) whose id equals an entity id gain the
// UTKG_Entity type and the entity description. Returns the number of
// aligned nodes.
std::size_t align(const EntityGraph& entities, Graph& skg);

}  // namespace dualgraph
