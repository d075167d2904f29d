#include "dualgraph/tkg.hpp"

#include <algorithm>
#include <set>

#include "dualgraph/normalize.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph {

namespace {
llm::PromptTag entity_tag(const Chunk& c, int attempt) { return {"entities", c.id, attempt}; }
}  // namespace

std::vector<llm::Mention> extract_entities(const Chunk& chunk, llm::LlmClient& client, llm::Trace* trace,
                                           std::vector<std::string>* diagnostics) {
    if (text::trim(chunk.text).empty()) return {};
    const auto prompt = llm::build_entity_prompt(chunk.text);
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto r = client.chat(entity_tag(chunk, attempt), prompt, {}, llm::Phase::Indexing, trace);
        if (auto m = llm::parse_mentions(r.text)) return *m;
    }
    if (diagnostics) diagnostics->push_back(chunk.id + ": unparseable entity response after retry");
    return {};
}

std::vector<ChunkMentions> extract_all(const std::vector<Chunk>& chunks, llm::LlmClient& client, llm::Trace* trace,
                                       std::vector<std::string>* diagnostics) {
    std::vector<ChunkMentions> out(chunks.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        out[i].chunk_id = chunks[i].id;
        if (!text::trim(chunks[i].text).empty()) pending.push_back(i);
    }
    for (int attempt = 0; attempt < 2 && !pending.empty(); ++attempt) {
        std::vector<std::pair<llm::PromptTag, std::string>> requests;
        for (auto i : pending) requests.emplace_back(entity_tag(chunks[i], attempt), llm::build_entity_prompt(chunks[i].text));
        auto results = client.chat_many(requests, {}, llm::Phase::Indexing, trace);
        std::vector<std::size_t> failed;
        for (std::size_t j = 0; j < pending.size(); ++j) {
            if (auto m = llm::parse_mentions(results[j].text)) {
                out[pending[j]].mentions = std::move(*m);
            } else {
                failed.push_back(pending[j]);
            }
        }
        pending = std::move(failed);
    }
    if (diagnostics)
        for (auto i : pending) diagnostics->push_back(chunks[i].id + ": unparseable entity response after retry");
    return out;
}

std::vector<Entity> merge_entities(const std::vector<ChunkMentions>& mentions) {
    std::vector<Entity> out;
    std::map<std::string, std::size_t> pos;
    std::vector<std::vector<std::string>> descriptions;
    for (const auto& cm : mentions) {
        for (const auto& m : cm.mentions) {
            auto id = try_canonical_id(m.name);
            if (!id) continue;
            auto [it, fresh] = pos.emplace(id->str(), out.size());
            if (fresh) {
                Entity e;
                e.id = id->str();
                e.name = text::trim(m.name);
                out.push_back(std::move(e));
                descriptions.emplace_back();
            }
            auto& e = out[it->second];
            auto& descs = descriptions[it->second];
            auto d = text::trim(m.description);
            if (!d.empty() && std::find(descs.begin(), descs.end(), d) == descs.end()) descs.push_back(d);
            if (std::find(e.chunk_ids.begin(), e.chunk_ids.end(), cm.chunk_id) == e.chunk_ids.end())
                e.chunk_ids.push_back(cm.chunk_id);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].description = descriptions[i].empty() ? out[i].name : text::join(descriptions[i], "\n");
        std::sort(out[i].chunk_ids.begin(), out[i].chunk_ids.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Entity graph

const Entity* EntityGraph::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &entities_[it->second];
}

const Chunk* EntityGraph::chunk(const std::string& id) const {
    auto it = chunks_.find(id);
    return it == chunks_.end() ? nullptr : &it->second;
}

EntityGraph EntityGraph::assemble(std::vector<Entity> entities, const std::vector<Chunk>& chunks,
                                  const std::vector<Vector>& vectors) {
    if (entities.size() != vectors.size()) throw TkgError("entity and vector counts differ");
    EntityGraph g;
    for (const auto& c : chunks) g.chunks_.emplace(c.id, c);
    for (std::size_t i = 0; i < entities.size(); ++i) {
        auto& e = entities[i];
        if (e.chunk_ids.empty()) throw TkgError("entity without chunks: " + e.id);
        for (const auto& c : e.chunk_ids)
            if (!g.chunks_.count(c)) throw TkgError("entity " + e.id + " references unknown chunk " + c);
        if (!g.by_id_.emplace(e.id, g.entities_.size()).second) throw TkgError("duplicate entity: " + e.id);
        g.index_.upsert(e.id, vectors[i]);
        g.entities_.push_back(std::move(e));
    }
    return g;
}

void EntityGraph::save(const std::string& jsonl_path, const std::string& vec_path) const {
    std::string out;
    for (const auto& e : entities_) {
        nlohmann::json j = {{"record", "entity"},     {"id", e.id},        {"name", e.name},
                            {"description", e.description}, {"chunks", e.chunk_ids}};
        out += j.dump() + "\n";
    }
    for (const auto& [id, c] : chunks_) {
        nlohmann::json j = {{"record", "chunk"}, {"id", c.id}, {"doc_id", c.doc_id}, {"text", c.text}};
        out += j.dump() + "\n";
    }
    text::write_file(jsonl_path, out);
    index_.save(vec_path);
}

EntityGraph EntityGraph::load(const std::string& jsonl_path, const std::string& vec_path) {
    std::vector<Entity> entities;
    std::vector<Chunk> chunks;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(text::read_file(jsonl_path))) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            auto kind = j.at("record").get<std::string>();
            if (kind == "entity") {
                Entity e;
                e.id = j.at("id").get<std::string>();
                e.name = j.at("name").get<std::string>();
                e.description = j.at("description").get<std::string>();
                e.chunk_ids = j.at("chunks").get<std::vector<std::string>>();
                entities.push_back(std::move(e));
            } else if (kind == "chunk") {
                Chunk c;
                c.id = j.at("id").get<std::string>();
                c.doc_id = j.at("doc_id").get<std::string>();
                c.text = j.at("text").get<std::string>();
                c.token_estimate = text::word_count(c.text);
                chunks.push_back(std::move(c));
            } else {
                throw TkgError("unknown record type " + kind);
            }
        } catch (const std::exception& e) {
            throw TkgError(jsonl_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    auto index = EmbeddingIndex::load(vec_path);
    std::vector<Vector> vectors;
    vectors.reserve(entities.size());
    for (const auto& e : entities) {
        if (!index.contains(e.id)) throw TkgError("vector index has no entry for " + e.id);
        vectors.push_back(index.vector(index.index_of(e.id)));
    }
    return assemble(std::move(entities), chunks, vectors);
}

EntityGraph build_entity_graph(std::vector<Entity> entities, const std::vector<Chunk>& chunks,
                               llm::LlmClient& client, llm::Trace* trace) {
    std::vector<std::string> texts;
    texts.reserve(entities.size());
    for (const auto& e : entities) texts.push_back(e.description);
    auto vectors = client.embed_all(texts, 64, llm::Phase::Indexing, trace);
    return EntityGraph::assemble(std::move(entities), chunks, vectors);
}

// ---------------------------------------------------------------------------
// Retrieval

std::vector<ChunkScore> vote_chunks(const EntityGraph& graph, const std::vector<SearchHit>& ranked,
                                    VoteWeighting weighting, std::size_t k_entities) {
    std::map<std::string, double> scores;
    const double k = static_cast<double>(k_entities ? k_entities : ranked.size());
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto* e = graph.find(ranked[r].key);
        if (!e) continue;
        double w = weighting == VoteWeighting::InverseRank ? 1.0 / static_cast<double>(r + 1)
                                                           : k - static_cast<double>(r);
        for (const auto& c : e->chunk_ids) scores[c] += w;
    }
    std::vector<ChunkScore> out;
    out.reserve(scores.size());
    for (const auto& [id, s] : scores) out.push_back({id, s});
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    return out;
}

std::vector<ChunkScore> score_chunks(const EntityGraph& graph, const Vector& question, std::size_t k_entities,
                                     std::size_t k_chunks, VoteWeighting weighting) {
    if (graph.empty()) return {};
    auto ranked = graph.index().search(question, k_entities);
    auto votes = vote_chunks(graph, ranked, weighting, k_entities);
    if (votes.size() > k_chunks) votes.resize(k_chunks);
    return votes;
}

std::vector<Chunk> retrieve_chunks(const EntityGraph& graph, llm::LlmClient& client, std::string_view question,
                                   std::size_t k_entities, std::size_t k_chunks, VoteWeighting weighting,
                                   llm::Trace* trace) {
    if (graph.empty()) return {};
    auto q = client.embed({std::string(question)}, llm::Phase::Querying, trace);
    std::vector<Chunk> out;
    for (const auto& s : score_chunks(graph, q.vectors.at(0), k_entities, k_chunks, weighting))
        out.push_back(*graph.chunk(s.chunk_id));
    return out;
}

std::size_t align(const EntityGraph& entities, Graph& skg) {
    std::size_t aligned = 0;
    for (const auto& e : entities.entities()) {
        auto node = Term::iri(vocab::node(e.id));
        auto id = skg.find(node);
        if (!id || skg.count(*id, std::nullopt, std::nullopt) == 0) continue;
        if (skg.has_class(node, vocab::kSpec)) continue;
        skg.insert(node, vocab::kType, Term::iri(vocab::kUtkgEntity));
        skg.insert(node, vocab::kHasDescription, Term::string(e.description));
        ++aligned;
    }
    return aligned;
}

}  // namespace dualgraph
