#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace dualgraph {

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SpecRow {
    std::string section = "Specifications";
    std::string entry;
    std::string raw_value;

    bool operator==(const SpecRow&) const = default;
};

struct StructuredComponent {
    std::string product_name;
    std::string range_name;
    std::vector<std::string> categories;
    std::vector<SpecRow> rows;
    std::optional<double> price;  // GBP

    bool operator==(const StructuredComponent&) const = default;
};

struct Document {
    std::string id;
    std::filesystem::path source_path;
    std::optional<std::string> text;
    std::optional<std::vector<StructuredComponent>> structured;
    std::map<std::string, std::string> metadata;
};

struct Chunk {
    std::string id;
    std::string doc_id;
    std::string text;
    std::size_t token_estimate = 0;

    bool operator==(const Chunk&) const = default;
};

using Corpus = std::vector<Document>;

struct LoadReport {
    Corpus corpus;
    std::vector<std::string> diagnostics;
};

// One Document per subdirectory of `root`, in sorted order. Per-document
// problems are collected in diagnostics; an empty result throws.
LoadReport load_corpus(const std::filesystem::path& root);

// Accepts "Section, Entry" and "Section.Entry" keys (comma wins); keys
// without a separator land in the "Specifications" section. A nested
// "specifications"/"specs" object contributes rows the same way.
// Throws CorpusError when the record has no name.
StructuredComponent parse_structured(const nlohmann::json& record);

struct ChunkOptions {
    std::size_t max_tokens = 400;
    // Drops sections headed "Specifications" (the plain-text table dump).
    bool exclude_spec_appendix = false;
};

std::vector<Chunk> chunk_text(const Document& doc, const ChunkOptions& options = {});
std::vector<Chunk> chunk_corpus(const Corpus& corpus, const ChunkOptions& options = {});

std::size_t count_components(const Corpus& corpus);

// Deterministic synthetic snapshot: one page directory per product plus
// benchmark.json and mock_script.json at the root.
void gen_fixture_corpus(int n_products, std::uint64_t seed, const std::filesystem::path& out);

}  // namespace dualgraph
