#include <map>

#include "dualgraph/skg.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph {

std::vector<std::string> split_value_fragments(std::string_view raw) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto digit = [](char c) { return c >= '0' && c <= '9'; };
    for (std::size_t i = 0; i <= raw.size(); ++i) {
        bool cut = i == raw.size();
        if (!cut && raw[i] == ',') {
            bool between_digits = i > 0 && i + 1 < raw.size() && digit(raw[i - 1]) && digit(raw[i + 1]);
            cut = !between_digits;
        }
        if (!cut) continue;
        auto frag = text::trim(raw.substr(start, i - start));
        if (!frag.empty()) out.push_back(std::move(frag));
        start = i + 1;
    }
    return out;
}

namespace {

class SkgBuilder {
public:
    SkgBuilder(Graph& g, BuildDiagnostics* diag, const UnitTable& units) : g_(g), diag_(diag), units_(units) {}

    void add(const StructuredComponent& c, const std::string& doc_id) {
        auto pid = try_canonical_id(c.product_name);
        if (!pid) {
            note(doc_id + ": product name has no identifier characters: " + c.product_name);
            return;
        }
        Term product = Term::iri(vocab::node(pid->str()));
        g_.insert(product, vocab::kType, Term::iri(vocab::kProduct));
        g_.insert(product, vocab::kHasName, Term::string(c.product_name));

        auto rid = c.range_name.empty() ? std::nullopt : try_canonical_id(c.range_name);
        Term range = product;
        if (rid && rid->str() != pid->str()) {
            range = Term::iri(vocab::node(rid->str()));
            g_.insert(range, vocab::kHasName, Term::string(c.range_name));
        }
        // A product without variants is its own range.
        g_.insert(range, vocab::kType, Term::iri(vocab::kProductRange));
        g_.insert(product, vocab::kVariantOf, range);

        for (const auto& cat : c.categories) {
            auto cid = try_canonical_id(cat);
            if (!cid) {
                note(doc_id + ": category has no identifier characters: " + cat);
                continue;
            }
            Term category = Term::iri(vocab::node(cid->str()));
            g_.insert(category, vocab::kType, Term::iri(vocab::kCategory));
            g_.insert(category, vocab::kHasName, Term::string(text::trim(cat)));
            g_.insert(range, vocab::kBelongs, category);
        }

        for (const auto& row : c.rows) add_row(product, pid->str(), row, doc_id);
    }

private:
    Graph& g_;
    BuildDiagnostics* diag_;
    const UnitTable& units_;
    std::map<std::string, std::size_t> spec_counter_;

    void note(std::string msg) {
        if (diag_) diag_->messages.push_back(std::move(msg));
    }

    std::optional<Term> named_node(std::string_view name) {
        auto id = try_canonical_id(name);
        if (!id) return std::nullopt;
        Term t = Term::iri(vocab::node(id->str()));
        return t;
    }

    void add_row(const Term& product, const std::string& pid, const SpecRow& row, const std::string& doc_id) {
        auto section = named_node(row.section);
        auto entry = named_node(row.entry);
        if (!section || !entry) {
            note(doc_id + ": row skipped, unusable section/entry: " + row.section + ", " + row.entry);
            return;
        }
        std::vector<std::pair<Term, std::string>> values;
        for (auto& frag : split_value_fragments(row.raw_value)) {
            if (auto v = named_node(frag)) values.emplace_back(*v, frag);
        }
        if (values.empty()) {
            note(doc_id + ": row skipped, no usable value: " + row.entry + " = " + row.raw_value);
            return;
        }

        std::size_t k = spec_counter_[pid]++;
        Term spec = Term::iri(vocab::node(pid + "__spec" + std::to_string(k)));
        g_.insert(product, vocab::kHasSpec, spec);
        g_.insert(spec, vocab::kInSection, *section);
        g_.insert(*section, vocab::kHasName, Term::string(text::trim(row.section)));
        g_.insert(spec, vocab::kInEntry, *entry);
        g_.insert(*entry, vocab::kHasName, Term::string(text::trim(row.entry)));
        for (const auto& [node, frag] : values) {
            g_.insert(spec, vocab::kHasValue, node);
            g_.insert(node, vocab::kHasName, Term::string(frag));
        }

        for (const auto& [node, frag] : values) {
            auto q = parse_quantity(frag, units_);
            if (!q) continue;
            if (q->value) g_.insert(spec, vocab::kHasNumericValue, Term::decimal(*q->value));
            static constexpr std::string_view dim_preds[] = {vocab::kHasDim1, vocab::kHasDim2, vocab::kHasDim3};
            for (std::size_t i = 0; i < q->dims.size() && i < 3; ++i)
                g_.insert(spec, dim_preds[i], Term::decimal(q->dims[i]));
            if (q->unit) g_.insert(spec, vocab::kHasUnit, Term::string(*q->unit));
            break;
        }
    }
};

}  // namespace

Graph build_skg(const Corpus& corpus, const Ontology& ontology, BuildDiagnostics* diagnostics,
                const UnitTable* units) {
    Graph g(ontology);
    SkgBuilder builder(g, diagnostics, units ? *units : UnitTable::defaults());
    for (const auto& doc : corpus) {
        if (!doc.structured) continue;
        for (const auto& c : *doc.structured) builder.add(c, doc.id);
    }
    return g;
}

}  // namespace dualgraph
