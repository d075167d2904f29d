#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "dualgraph/corpus.hpp"
#include "dualgraph/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dualgraph;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("dualgraph_corpus_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& body) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << body;
}

}  // namespace

TEST(ParseStructured, KeyForms) {
    json rec = {{"name", " Galaxy S25 "},
                {"range", "Galaxy S"},
                {"categories", {"Smartphones", "Phones"}},
                {"Display, Size", "6.2\""},
                {"Camera.Resolution", "50 MP"},
                {"Wi-Fi 802.11", "Yes"},
                {"Weight", 162}};
    auto c = parse_structured(rec);
    EXPECT_EQ(c.product_name, "Galaxy S25");
    EXPECT_EQ(c.range_name, "Galaxy S");
    ASSERT_EQ(c.categories.size(), 2u);
    EXPECT_EQ(c.categories[1], "Phones");

    auto has = [&](const SpecRow& r) { return std::find(c.rows.begin(), c.rows.end(), r) != c.rows.end(); };
    EXPECT_TRUE(has({"Display", "Size", "6.2\""}));
    EXPECT_TRUE(has({"Camera", "Resolution", "50 MP"}));
    EXPECT_TRUE(has({"Specifications", "Wi-Fi 802.11", "Yes"}));
    EXPECT_TRUE(has({"Specifications", "Weight", "162"}));
    EXPECT_EQ(c.rows.size(), 4u);
    EXPECT_FALSE(c.price);
}

TEST(ParseStructured, CommaWinsOverDot) {
    auto c = parse_structured(json{{"name", "X"}, {"Net.work, Speed", "5G"}});
    ASSERT_EQ(c.rows.size(), 1u);
    EXPECT_EQ(c.rows[0].section, "Net.work");
    EXPECT_EQ(c.rows[0].entry, "Speed");
}

TEST(ParseStructured, NestedSpecsAndScalars) {
    json rec = {{"name", "Tab"},
                {"specs", {{"Battery, Capacity", 8000}, {"Bands", {"LTE", "5G"}}}},
                {"specifications", {{"Waterproof", true}}}};
    auto c = parse_structured(rec);
    auto has = [&](const SpecRow& r) { return std::find(c.rows.begin(), c.rows.end(), r) != c.rows.end(); };
    EXPECT_TRUE(has({"Battery", "Capacity", "8000"}));
    EXPECT_TRUE(has({"Specifications", "Bands", "LTE, 5G"}));
    EXPECT_TRUE(has({"Specifications", "Waterproof", "Yes"}));
}

TEST(ParseStructured, PriceBecomesRow) {
    auto c = parse_structured(json{{"name", "P"}, {"price", "\xC2\xA3" "1,299.50"}});
    ASSERT_TRUE(c.price);
    EXPECT_DOUBLE_EQ(*c.price, 1299.5);
    ASSERT_EQ(c.rows.size(), 1u);
    EXPECT_EQ(c.rows[0].entry, "Price");

    auto n = parse_structured(json{{"name", "P"}, {"price", 99}});
    ASSERT_TRUE(n.price);
    EXPECT_DOUBLE_EQ(*n.price, 99.0);

    auto none = parse_structured(json{{"name", "P"}, {"price", "call us"}});
    EXPECT_FALSE(none.price);
    EXPECT_TRUE(none.rows.empty());
}

TEST(ParseStructured, Rejections) {
    EXPECT_THROW(parse_structured(json::array()), CorpusError);
    EXPECT_THROW(parse_structured(json{{"range", "R"}}), CorpusError);
    EXPECT_THROW(parse_structured(json{{"name", "   "}}), CorpusError);
    EXPECT_THROW(parse_structured(json{{"name", 3}}), CorpusError);
}

TEST(LoadCorpus, DiagnosticsAndOrder) {
    auto root = scratch("load");
    write(root / "b-page" / "file-b.json", R"({"content": "page.md", "title": "B"})");
    write(root / "b-page" / "page.md", "# B\nbody text");
    write(root / "a-page" / "file-a.json", R"({"prescience": "data.json"})");
    write(root / "a-page" / "data.json", R"([{"name": "Alpha", "Size": "3 cm"}, {"name": ""}])");
    write(root / "c-empty" / "notes.txt", "nothing");
    write(root / "d-bare" / "file-d.json", R"({"title": "no payload"})");
    write(root / "e-broken" / "file-e.json", "{not json");

    auto rep = load_corpus(root);
    ASSERT_EQ(rep.corpus.size(), 2u);
    EXPECT_EQ(rep.corpus[0].id, "a-page");
    EXPECT_EQ(rep.corpus[1].id, "b-page");
    ASSERT_TRUE(rep.corpus[0].structured);
    EXPECT_EQ(rep.corpus[0].structured->size(), 1u);
    EXPECT_FALSE(rep.corpus[0].text);
    ASSERT_TRUE(rep.corpus[1].text);
    EXPECT_EQ(rep.corpus[1].metadata.at("title"), "B");
    EXPECT_EQ(count_components(rep.corpus), 1u);

    auto mentions = [&](const std::string& id) {
        return std::count_if(rep.diagnostics.begin(), rep.diagnostics.end(),
                             [&](const std::string& d) { return d.rfind(id + ":", 0) == 0; });
    };
    EXPECT_EQ(mentions("a-page"), 1);
    EXPECT_EQ(mentions("c-empty"), 1);
    EXPECT_EQ(mentions("d-bare"), 1);
    EXPECT_EQ(mentions("e-broken"), 1);
    EXPECT_EQ(mentions("b-page"), 0);
}

TEST(LoadCorpus, EmptyOrMissingThrows) {
    auto root = scratch("empty");
    EXPECT_THROW(load_corpus(root), CorpusError);
    EXPECT_THROW(load_corpus(root / "missing"), CorpusError);
}

TEST(Chunking, SectionsAndIds) {
    Document d;
    d.id = "doc";
    d.text = "intro words here\n# Overview\nalpha beta\n\n## Specifications\nSize: 3\n# Tail\nend";
    auto chunks = chunk_text(d);
    ASSERT_EQ(chunks.size(), 4u);
    EXPECT_EQ(chunks[0].id, "doc#0000");
    EXPECT_EQ(chunks[3].id, "doc#0003");
    EXPECT_EQ(chunks[0].text, "intro words here");
    EXPECT_EQ(chunks[1].text, "# Overview\nalpha beta");
    EXPECT_EQ(chunks[1].token_estimate, 4u);
    for (const auto& c : chunks) EXPECT_EQ(c.doc_id, "doc");

    ChunkOptions opt;
    opt.exclude_spec_appendix = true;
    auto kept = chunk_text(d, opt);
    ASSERT_EQ(kept.size(), 3u);
    for (const auto& c : kept) EXPECT_EQ(c.text.find("Size: 3"), std::string::npos);
}

TEST(Chunking, OversizedSectionsRespectLimit) {
    Document d;
    d.id = "big";
    std::string body = "# Long\n";
    for (int para = 0; para < 5; ++para) {
        for (int w = 0; w < 30; ++w) body += "w" + std::to_string(para * 100 + w) + " ";
        body += "\n\n";
    }
    d.text = body;
    ChunkOptions opt;
    opt.max_tokens = 20;
    auto chunks = chunk_text(d, opt);
    ASSERT_GT(chunks.size(), 5u);
    std::size_t words = 0;
    for (const auto& c : chunks) {
        EXPECT_LE(c.token_estimate, 20u);
        words += c.token_estimate;
    }
    // Nothing is dropped: 150 body words plus "#" and "Long".
    EXPECT_EQ(words, 152u);
}

TEST(Chunking, NoTextNoChunks) {
    Document d;
    d.id = "x";
    EXPECT_TRUE(chunk_text(d).empty());
}

TEST(Fixture, DeterministicAndLoadable) {
    auto a = scratch("fx_a");
    auto b = scratch("fx_b");
    gen_fixture_corpus(4, 11, a);
    gen_fixture_corpus(4, 11, b);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
    ASSERT_FALSE(files.empty());
    for (const auto& f : files) {
        ASSERT_TRUE(fs::exists(b / f)) << f;
        EXPECT_EQ(text::read_file((a / f).string()), text::read_file((b / f).string())) << f;
    }
    EXPECT_TRUE(fs::exists(a / "benchmark.json"));
    EXPECT_TRUE(fs::exists(a / "mock_script.json"));

    auto rep = load_corpus(a);
    EXPECT_EQ(rep.corpus.size(), 4u);
    EXPECT_EQ(count_components(rep.corpus), 4u);
    EXPECT_TRUE(rep.diagnostics.empty());
}
