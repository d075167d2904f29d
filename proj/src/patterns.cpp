#include "dualgraph/patterns.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "dualgraph/text.hpp"

namespace dualgraph {

std::string_view kind_name(PatternKind k) {
    switch (k) {
        case PatternKind::Spec: return "Spec";
        case PatternKind::Feature: return "Feature";
        case PatternKind::Category: return "Category";
        case PatternKind::SingularNode: return "SingularNode";
    }
    return "?";
}

std::optional<PatternKind> parse_kind(std::string_view s) {
    for (auto k : kPatternKinds)
        if (kind_name(k) == s) return k;
    return std::nullopt;
}

std::string PatternInstance::id() const { return std::string(kind_name(kind)) + ":" + text::join(nodes, "|"); }

namespace {

std::string display_name(const Graph& g, const std::string& node) {
    if (auto n = g.name_of(Term::iri(node))) return text::normalize_whitespace(*n);
    return std::string(vocab::local_name(node));
}

std::vector<Term> subjects_of_class(const Graph& g, std::string_view cls) {
    return g.subjects(vocab::kType, Term::iri(cls));
}

}  // namespace

std::string linearize(const Graph& g, PatternKind kind, const std::vector<std::string>& nodes) {
    auto need = [&](std::size_t n) {
        if (nodes.size() != n) throw PatternError(std::string(kind_name(kind)) + " pattern needs " + std::to_string(n) + " nodes");
    };
    switch (kind) {
        case PatternKind::Spec:
            need(3);
            return "In the product specification, the " + display_name(g, nodes[1]) + " entry in the " +
                   display_name(g, nodes[0]) + " section has the value " + display_name(g, nodes[2]);
        case PatternKind::Feature:
            need(1);
            return "The product has " + display_name(g, nodes[0]) + " feature";
        case PatternKind::Category:
            need(2);
            return "The product range " + display_name(g, nodes[0]) + " belongs to the " + display_name(g, nodes[1]) +
                   " category.";
        case PatternKind::SingularNode:
            need(1);
            return display_name(g, nodes[0]);
    }
    return {};
}

std::string to_snippet(const Graph& g, PatternKind kind, const std::vector<std::string>& nodes) {
    switch (kind) {
        case PatternKind::Spec:
            return "?p skg:hasSpec ?s . ?s skg:inSection " + nodes.at(0) + " . ?s skg:inEntry " + nodes.at(1) +
                   " . ?s skg:hasValue " + nodes.at(2) + " .";
        case PatternKind::Feature:
            return "?p skg:hasFeature " + nodes.at(0) + " .";
        case PatternKind::Category:
            return "?p skg:variantOf " + nodes.at(0) + " . " + nodes.at(0) + " skg:belongs " + nodes.at(1) + " .";
        case PatternKind::SingularNode:
            return nodes.at(0) + " skg:hasName ?name .  # " + display_name(g, nodes.at(0));
    }
    return {};
}

llm::PatternSnippet to_prompt_snippet(const PatternInstance& p) {
    return {std::string(kind_name(p.kind)), p.linearization, p.snippet};
}

std::vector<PatternInstance> extract_patterns(const Graph& g) {
    std::set<std::pair<PatternKind, std::vector<std::string>>> keys;

    for (const auto& spec : subjects_of_class(g, vocab::kSpec)) {
        auto sections = g.objects(spec, vocab::kInSection);
        auto entries = g.objects(spec, vocab::kInEntry);
        auto values = g.objects(spec, vocab::kHasValue);
        for (const auto& s : sections)
            for (const auto& e : entries)
                for (const auto& v : values)
                    if (s.is_iri() && e.is_iri() && v.is_iri())
                        keys.insert({PatternKind::Spec, {s.text, e.text, v.text}});
    }
    for (const auto& t : g.match_terms(std::nullopt, Term::iri(vocab::kHasFeature), std::nullopt))
        if (t.object.is_iri()) keys.insert({PatternKind::Feature, {t.object.text}});
    for (const auto& t : g.match_terms(std::nullopt, Term::iri(vocab::kBelongs), std::nullopt))
        if (t.object.is_iri() && g.has_class(t.subject, vocab::kProductRange))
            keys.insert({PatternKind::Category, {t.subject.text, t.object.text}});
    for (const auto& t : g.match_terms(std::nullopt, Term::iri(vocab::kHasName), std::nullopt))
        keys.insert({PatternKind::SingularNode, {t.subject.text}});

    std::vector<PatternInstance> out;
    out.reserve(keys.size());
    for (const auto& [kind, nodes] : keys) {
        PatternInstance p;
        p.kind = kind;
        p.nodes = nodes;
        p.linearization = linearize(g, kind, nodes);
        p.snippet = to_snippet(g, kind, nodes);
        out.push_back(std::move(p));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id() < b.id(); });
    return out;
}

// ---------------------------------------------------------------------------
// Index

void PatternIndex::add(const PatternInstance& p, const Vector& vec) {
    auto id = p.id();
    auto it = by_id_.find(id);
    if (it != by_id_.end()) {
        patterns_[it->second] = p;
    } else {
        by_id_.emplace(id, patterns_.size());
        patterns_.push_back(p);
    }
    indexes_[p.kind].upsert(id, vec);
}

std::size_t PatternIndex::count(PatternKind k) const {
    auto it = indexes_.find(k);
    return it == indexes_.end() ? 0 : it->second.size();
}

const PatternInstance& PatternIndex::get(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw PatternError("unknown pattern: " + id);
    return patterns_[it->second];
}

const EmbeddingIndex* PatternIndex::index(PatternKind k) const {
    auto it = indexes_.find(k);
    return it == indexes_.end() ? nullptr : &it->second;
}

std::vector<PatternInstance> PatternIndex::retrieve(const Vector& question, std::size_t k_per_type) const {
    std::vector<PatternInstance> out;
    for (auto kind : kPatternKinds) {
        const auto* idx = index(kind);
        if (!idx || idx->size() == 0) continue;
        for (const auto& hit : idx->search(question, k_per_type)) out.push_back(get(hit.key));
    }
    return out;
}

void PatternIndex::save(const std::string& path) const {
    std::string out;
    for (const auto& p : patterns_) {
        const auto& idx = indexes_.at(p.kind);
        nlohmann::json j = {
            {"kind", kind_name(p.kind)},
            {"nodes", p.nodes},
            {"linearization", p.linearization},
            {"snippet", p.snippet},
            {"vector", idx.vector(idx.index_of(p.id()))},
        };
        out += j.dump();
        out += '\n';
    }
    text::write_file(path, out);
}

PatternIndex PatternIndex::load(const std::string& path) {
    PatternIndex index;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(text::read_file(path))) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            PatternInstance p;
            auto kind = parse_kind(j.at("kind").get<std::string>());
            if (!kind) throw PatternError("unknown pattern kind");
            p.kind = *kind;
            p.nodes = j.at("nodes").get<std::vector<std::string>>();
            p.linearization = j.at("linearization").get<std::string>();
            p.snippet = j.at("snippet").get<std::string>();
            index.add(p, j.at("vector").get<Vector>());
        } catch (const std::exception& e) {
            throw PatternError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return index;
}

PatternIndex index_patterns(const std::vector<PatternInstance>& patterns, llm::LlmClient& client,
                            llm::Trace* trace, const PatternIndexOptions& options) {
    std::vector<const PatternInstance*> kept;
    std::set<std::pair<PatternKind, std::string>> seen_text;
    std::set<std::string> seen_id;
    std::map<PatternKind, std::size_t> per_kind;
    auto sorted = patterns;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.id() < b.id(); });
    for (const auto& p : sorted) {
        if (!seen_id.insert(p.id()).second) continue;
        if (!seen_text.insert({p.kind, p.linearization}).second) continue;
        if (options.max_per_kind && per_kind[p.kind] >= options.max_per_kind) continue;
        ++per_kind[p.kind];
        kept.push_back(&p);
    }
    std::vector<std::string> texts;
    texts.reserve(kept.size());
    for (const auto* p : kept) texts.push_back(p->linearization);
    auto vectors = client.embed_all(texts, options.embed_batch, llm::Phase::Indexing, trace);
    PatternIndex index;
    for (std::size_t i = 0; i < kept.size(); ++i) index.add(*kept[i], vectors[i]);
    return index;
}

std::vector<PatternInstance> retrieve_patterns(const PatternIndex& index, llm::LlmClient& client,
                                               std::string_view question, std::size_t k_per_type,
                                               llm::Trace* trace) {
    auto r = client.embed({std::string(question)}, llm::Phase::Querying, trace);
    return index.retrieve(r.vectors.at(0), k_per_type);
}

}  // namespace dualgraph
