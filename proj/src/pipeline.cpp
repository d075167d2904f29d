#include "dualgraph/pipeline.hpp"

#include "dualgraph/text.hpp"

namespace dualgraph {

namespace fs = std::filesystem;

std::vector<datalog::Rule> load_rules(const std::optional<std::string>& path) {
    if (!path) return datalog::default_rules();
    auto rules = datalog::parse_rules(text::read_file(*path));
    for (const auto& r : rules) datalog::check_safe(r);
    return rules;
}

namespace {

struct SkgBuild {
    Graph graph;
    std::size_t base = 0;
    std::size_t derived = 0;
};

SkgBuild build_enriched_skg(const Corpus& corpus, const BuildOptions& options, std::vector<std::string>& diagnostics) {
    std::optional<UnitTable> units;
    if (options.units_path) units = UnitTable::load(*options.units_path);
    BuildDiagnostics diag;
    auto base = build_skg(corpus, Ontology::standard(), &diag, units ? &*units : nullptr);
    diagnostics.insert(diagnostics.end(), diag.messages.begin(), diag.messages.end());
    datalog::ApplyOptions apply;
    apply.parallel = options.parallel_rules;
    datalog::ApplyStats stats;
    SkgBuild out{datalog::apply_rules(base, load_rules(options.rules_path), apply, &stats), base.size(), 0};
    out.derived = stats.derived;
    return out;
}

EntityGraph build_tkg(const Corpus& corpus, llm::LlmClient& client, llm::Trace* trace, const BuildOptions& options,
                      BuildSummary& summary) {
    auto chunks = chunk_corpus(corpus, options.chunking);
    summary.chunks = chunks.size();
    auto mentions = extract_all(chunks, client, trace, &summary.diagnostics);
    auto entities = merge_entities(mentions);
    summary.entities = entities.size();
    return build_entity_graph(std::move(entities), chunks, client, trace);
}

}  // namespace

BuiltIndexes build_in_memory(const Corpus& corpus, llm::LlmClient& client, llm::Trace* trace,
                             const BuildOptions& options) {
    BuiltIndexes out;
    out.summary.documents = corpus.size();
    out.tkg = build_tkg(corpus, client, trace, options, out.summary);
    auto skg = build_enriched_skg(corpus, options, out.summary.diagnostics);
    out.skg = std::move(skg.graph);
    out.summary.base_triples = skg.base;
    out.summary.derived_triples = skg.derived;
    out.summary.aligned_nodes = align(out.tkg, out.skg);
    out.patterns = index_patterns(extract_patterns(out.skg), client, trace, options.patterns);
    out.summary.patterns = out.patterns.size();
    return out;
}

BuildSummary build_artifacts(const fs::path& corpus_root, const fs::path& artifacts, const BuildTargets& targets,
                             llm::LlmClient& client, llm::Trace* trace, const BuildOptions& options) {
    BuildSummary summary;
    auto loaded = load_corpus(corpus_root);
    summary.diagnostics = loaded.diagnostics;
    summary.documents = loaded.corpus.size();
    fs::create_directories(artifacts);
    const auto entities_path = (artifacts / artifact::kEntities).string();
    const auto vectors_path = (artifacts / artifact::kEntityVectors).string();

    std::optional<EntityGraph> tkg;
    if (targets.tkg) {
        tkg = build_tkg(loaded.corpus, client, trace, options, summary);
        tkg->save(entities_path, vectors_path);
        summary.written.push_back(entities_path);
        summary.written.push_back(vectors_path);
    } else if (fs::exists(entities_path) && fs::exists(vectors_path)) {
        tkg = EntityGraph::load(entities_path, vectors_path);
    }

    if (targets.skg || targets.patterns) {
        auto skg = build_enriched_skg(loaded.corpus, options, summary.diagnostics);
        summary.base_triples = skg.base;
        summary.derived_triples = skg.derived;
        if (tkg) summary.aligned_nodes = align(*tkg, skg.graph);
        if (targets.skg) {
            auto path = (artifacts / artifact::kGraph).string();
            save_graph(skg.graph, path);
            summary.written.push_back(path);
        }
        if (targets.patterns) {
            auto index = index_patterns(extract_patterns(skg.graph), client, trace, options.patterns);
            summary.patterns = index.size();
            auto path = (artifacts / artifact::kPatterns).string();
            index.save(path);
            summary.written.push_back(path);
        }
    }
    return summary;
}

Indexes LoadedIndexes::view() const {
    return {skg ? &*skg : nullptr, patterns ? &*patterns : nullptr, tkg ? &*tkg : nullptr};
}

LoadedIndexes load_artifacts(const fs::path& artifacts) {
    LoadedIndexes out;
    auto graph = artifacts / artifact::kGraph;
    auto patterns = artifacts / artifact::kPatterns;
    auto entities = artifacts / artifact::kEntities;
    auto vectors = artifacts / artifact::kEntityVectors;
    if (fs::exists(graph)) out.skg = load_graph(graph.string());
    if (fs::exists(patterns)) out.patterns = PatternIndex::load(patterns.string());
    if (fs::exists(entities) && fs::exists(vectors)) out.tkg = EntityGraph::load(entities.string(), vectors.string());
    return out;
}

}  // namespace dualgraph
