#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "dualgraph/corpus.hpp"
#include "dualgraph/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dualgraph {

namespace {

struct ProductSeed {
    const char* name;
    const char* range;  // empty: the product has no variants
    const char* category;
    bool phone;
};

constexpr ProductSeed kPool[] = {
    {"Galaxy S25", "Galaxy S", "Smartphones", true},
    {"Galaxy S25 FE", "Galaxy S", "Smartphones", true},
    {"Galaxy S25 Ultra", "Galaxy S", "Smartphones", true},
    {"Galaxy Z Fold7", "Galaxy Z", "Smartphones", true},
    {"Galaxy Z Flip7", "Galaxy Z", "Smartphones", true},
    {"Galaxy A56", "Galaxy A", "Smartphones", true},
    {"Galaxy A26", "Galaxy A", "Smartphones", true},
    {"Galaxy Tab S10", "Galaxy Tab S", "Tablets", false},
    {"Galaxy Tab S10 FE", "Galaxy Tab S", "Tablets", false},
    {"Galaxy XCover7", "", "Smartphones", true},
    {"Galaxy A16", "Galaxy A", "Smartphones", true},
    {"Galaxy Tab A9", "Galaxy Tab A", "Tablets", false},
};
constexpr std::size_t kPoolSize = sizeof(kPool) / sizeof(kPool[0]);

struct GenProduct {
    std::string name;
    std::string range;
    std::string category;
    bool phone = true;
    int battery = 0;
    bool g5 = false;
    bool s_pen = false;
    bool dex = false;
    bool video8k = false;
    int price = 0;
    int weight = 0;
    int storage = 0;
    double height = 0, width = 0, depth = 0;
    int res_w = 0, res_h = 0;
};

// Uniform pick using plain modulo so that output is identical across
// standard library implementations.
template <typename T, std::size_t N>
T pick(std::mt19937_64& rng, const T (&items)[N]) {
    return items[rng() % N];
}

GenProduct make_product(std::size_t i, std::mt19937_64& rng) {
    const auto& seed = kPool[i % kPoolSize];
    GenProduct p;
    p.name = seed.name;
    if (i >= kPoolSize) p.name += " Edition " + std::to_string(i / kPoolSize + 1);
    p.range = seed.range;
    p.category = seed.category;
    p.phone = seed.phone;

    static constexpr int batteries[] = {3900, 4000, 4300, 4500, 4700, 4900, 5000};
    static constexpr int tablet_batteries[] = {7040, 8000, 8400};
    static constexpr int prices[] = {199, 279, 349, 399, 449, 599, 799, 999, 1249};
    static constexpr int storages[] = {128, 256, 512};
    p.battery = p.phone ? pick(rng, batteries) : pick(rng, tablet_batteries);
    p.g5 = rng() % 3 != 0;
    p.s_pen = rng() % 2 == 0;
    p.dex = rng() % 2 == 0;
    p.video8k = rng() % 3 == 0;
    p.price = pick(rng, prices);
    p.storage = pick(rng, storages);
    p.weight = static_cast<int>(p.phone ? 160 + rng() % 100 : 420 + rng() % 200);
    p.height = p.phone ? 146.0 + static_cast<double>(rng() % 200) / 10.0 : 250.0 + static_cast<double>(rng() % 300) / 10.0;
    p.width = p.phone ? 70.0 + static_cast<double>(rng() % 60) / 10.0 : 160.0 + static_cast<double>(rng() % 200) / 10.0;
    p.depth = 6.0 + static_cast<double>(rng() % 30) / 10.0;
    p.res_w = p.phone ? 2340 : 2560;
    p.res_h = p.phone ? 1080 : 1600;
    return p;
}

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string network_value(const GenProduct& p) {
    if (p.g5) return "5G Sub6 FDD, 5G Sub6 TDD, 4G LTE FDD, 4G LTE TDD";
    return "4G LTE FDD, 4G LTE TDD";
}

std::string video_value(const GenProduct& p) {
    return p.video8k ? "UHD 8K (7680 x 4320) @30fps" : "UHD 4K (3840 x 2160) @60fps";
}

json product_record(const GenProduct& p) {
    json r;
    r["name"] = p.name;
    if (!p.range.empty()) r["range"] = p.range;
    r["categories"] = json::array({p.category});
    r["price"] = p.price;
    r["Display, Resolution (Main Display)"] =
        std::to_string(p.res_w) + "x" + std::to_string(p.res_h) + (p.phone ? " (FHD+)" : " (WQXGA)");
    r["Battery, Battery Capacity"] = std::to_string(p.battery) + " mAh";
    r["Network, Network Type"] = network_value(p);
    r["Camera.Video Recording Resolution"] = video_value(p);
    r["Memory.Storage"] = std::to_string(p.storage) + " GB";
    r["Connectivity, Wireless Connectivity"] = "Bluetooth, Wi-Fi, NFC";
    r["Physical specification, Weight"] = std::to_string(p.weight) + " g";
    r["Physical specification, Dimension (HxWxD, mm)"] =
        fmt1(p.height) + " x " + fmt1(p.width) + " x " + fmt1(p.depth);
    r["S Pen Support"] = p.s_pen ? "Yes" : "No";
    r["Samsung Dex Support"] = p.dex ? "Yes" : "No";
    return r;
}

std::string product_markdown(const GenProduct& p) {
    std::ostringstream md;
    md << "# " << p.name << "\n\n";
    md << "The **" << p.name << "** ";
    if (p.range.empty()) {
        md << "is a standalone device";
    } else {
        md << "belongs to the **" << p.range << "** range";
    }
    md << " in the " << p.category << " category. It is priced at \xC2\xA3" << p.price << ".\n\n";
    md << "## Highlights\n\n";
    md << "A " << p.battery << " mAh battery keeps the " << p.name << " running through the day.";
    if (p.g5) md << " It connects to **5G** networks for fast downloads.";
    if (p.s_pen) md << " The **S Pen** makes handwritten notes and sketches easy.";
    if (p.dex) md << " With **Samsung DeX** it turns into a desktop workstation.";
    if (p.video8k) md << " It records **8K video** for cinematic footage.";
    md << "\n\n";
    md << "## Specifications\n\n";
    auto rec = product_record(p);
    for (const auto& [k, v] : rec.items()) {
        if (k == "name" || k == "range" || k == "categories") continue;
        md << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    }
    return md.str();
}

std::string list_query(const std::string& where) {
    return "```sparql\nSELECT DISTINCT ?p WHERE {\n" + where + "\n}\n```";
}

}  // namespace

void gen_fixture_corpus(int n_products, std::uint64_t seed, const fs::path& out) {
    if (n_products < 1) throw CorpusError("n_products must be at least 1");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw CorpusError("cannot create fixture directory: " + out.string());

    std::mt19937_64 rng(seed);
    std::vector<GenProduct> products;
    for (int i = 0; i < n_products; ++i) products.push_back(make_product(static_cast<std::size_t>(i), rng));

    // Every list question must have a nonempty gold answer.
    const auto n = products.size();
    if (std::none_of(products.begin(), products.end(), [](const auto& p) { return p.g5; })) products[0].g5 = true;
    auto big_spen = [](const GenProduct& p) { return p.battery > 4500 && p.s_pen; };
    if (std::none_of(products.begin(), products.end(), big_spen)) {
        auto& p = products[1 % n];
        p.battery = p.phone ? 5000 : 8000;
        p.s_pen = true;
    }
    if (std::none_of(products.begin(), products.end(), [](const auto& p) { return p.price < 400; }))
        products[2 % n].price = 349;

    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "product-%03zu", i + 1);
        const std::string page = id;
        auto dir = out / page;
        fs::create_directories(dir);
        json meta;
        meta["content"] = page + ".md";
        meta["prescience"] = page + ".json";
        meta["url"] = "https://shop.example.com/" + page;
        text::write_file((dir / ("file-" + page + ".json")).string(), meta.dump(2) + "\n");
        text::write_file((dir / (page + ".md")).string(), product_markdown(products[i]));
        text::write_file((dir / (page + ".json")).string(),
                         json::array({product_record(products[i])}).dump(2) + "\n");
    }

    // Benchmark items and the matching mock script.
    auto names_where = [&](auto pred) {
        json arr = json::array();
        for (const auto& p : products)
            if (pred(p)) arr.push_back(p.name);
        return arr;
    };
    json bench = json::array();
    json sparql_script = json::object();

    auto g5 = names_where([](const GenProduct& p) { return p.g5; });
    bench.push_back({{"id", "q1"},
                     {"question", "Which devices support 5G?"},
                     {"answer_list", g5},
                     {"objective", true},
                     {"category", "inverse"}});
    sparql_script["q1"] = list_query("  ?p skg:hasFeature skg:5g_support .");

    auto spen = names_where(big_spen);
    bench.push_back({{"id", "q2"},
                     {"question", "Which devices have a battery capacity above 4500 mAh and S Pen support?"},
                     {"answer_list", spen},
                     {"objective", true},
                     {"category", "multi_condition"}});
    sparql_script["q2"] = list_query(
        "  ?p skg:hasSpec ?s .\n  ?s skg:inEntry skg:battery_capacity .\n  ?s skg:hasNumericValue ?n .\n"
        "  ?p skg:hasFeature skg:s_pen_support .\n  FILTER(?n > 4500)");

    auto cheap = names_where([](const GenProduct& p) { return p.price < 400; });
    bench.push_back({{"id", "q3"},
                     {"question", "Which devices cost less than \xC2\xA3" "400?"},
                     {"answer_list", cheap},
                     {"objective", true},
                     {"category", "multi_condition"}});
    sparql_script["q3"] = list_query(
        "  ?p skg:hasSpec ?s .\n  ?s skg:inEntry skg:price .\n  ?s skg:hasNumericValue ?price .\n"
        "  FILTER(?price < 400)");

    // Group comparison answered from text; every scripted candidate is invalid.
    std::map<std::string, std::pair<double, int>> by_range;
    for (const auto& p : products) {
        auto& acc = by_range[p.range.empty() ? p.name : p.range];
        acc.first += p.battery;
        acc.second += 1;
    }
    std::string best;
    double best_avg = -1;
    for (const auto& [r, acc] : by_range) {
        double avg = acc.first / acc.second;
        if (avg > best_avg) {
            best_avg = avg;
            best = r;
        }
    }
    bench.push_back({{"id", "q4"},
                     {"question", "Which product range has the highest average battery capacity?"},
                     {"answer_text", "The " + best + " range has the highest average battery capacity, at " +
                                         text::format_decimal(best_avg) + " mAh."},
                     {"objective", true},
                     {"category", "group_comparison"}});
    sparql_script["q4"] = json::array(
        {"```sparql\nSELECT ?r (AVG(?n) AS ?avg) WHERE { ?p skg:variantOf ?r . ?p skg:hasSpec ?s . "
         "?s skg:hasNumericValue ?n } GROUP BY\n```",
         "The average battery capacity per range can be computed by grouping products by range.",
         "```sparql\nSELECT ?r WHERE { ?p skg:variantOf ?r . ?p skg:hasSpec ?s \n```"});

    auto pen_names = names_where([](const GenProduct& p) { return p.s_pen; });
    std::vector<std::string> pen_list;
    for (const auto& v : pen_names) pen_list.push_back(v.get<std::string>());
    bench.push_back({{"id", "q5"},
                     {"question", "Which device would suit someone who takes handwritten notes?"},
                     {"answer_text", "Devices with S Pen support suit handwritten notes, such as " +
                                         text::join(pen_list, ", ") + "."},
                     {"objective", false},
                     {"category", "reasoning"}});
    sparql_script["q5"] = list_query("  ?p skg:hasFeature skg:s_pen_support .");

    text::write_file((out / "benchmark.json").string(), bench.dump(2) + "\n");
    json script;
    script["sparql"] = sparql_script;
    text::write_file((out / "mock_script.json").string(), script.dump(2) + "\n");
}

}  // namespace dualgraph
