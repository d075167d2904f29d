#include "dualgraph/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "dualgraph/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dualgraph {

namespace {

std::string scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return text::format_decimal(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "Yes" : "No";
    if (v.is_array()) {
        std::vector<std::string> parts;
        for (const auto& e : v) parts.push_back(scalar_to_string(e));
        return text::join(parts, ", ");
    }
    return v.dump();
}

SpecRow split_key(const std::string& key, std::string value) {
    SpecRow row;
    row.raw_value = std::move(value);
    auto comma = key.find(',');
    // "Section.Entry"; a dot between digits ("802.11") is not a separator.
    auto dot = std::string::npos;
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (key[i] != '.') continue;
        bool digit_before = i > 0 && std::isdigit(static_cast<unsigned char>(key[i - 1]));
        bool digit_after = i + 1 < key.size() && std::isdigit(static_cast<unsigned char>(key[i + 1]));
        if (!(digit_before && digit_after)) {
            dot = i;
            break;
        }
    }
    auto sep = comma != std::string::npos ? comma : dot;
    if (sep != std::string::npos) {
        auto section = text::trim(key.substr(0, sep));
        auto entry = text::trim(key.substr(sep + 1));
        if (!section.empty() && !entry.empty()) {
            row.section = section;
            row.entry = entry;
            return row;
        }
    }
    row.entry = text::trim(key);
    return row;
}

std::optional<double> parse_price(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        std::string digits;
        for (char c : v.get<std::string>()) {
            if ((c >= '0' && c <= '9') || c == '.') digits.push_back(c);
        }
        if (!digits.empty()) return std::stod(digits);
    }
    return std::nullopt;
}

bool is_reserved(const std::string& key) {
    static const std::vector<std::string> reserved = {
        "name", "range", "range_name", "categories", "price", "url", "specifications", "specs"};
    return std::find(reserved.begin(), reserved.end(), key) != reserved.end();
}

}  // namespace

StructuredComponent parse_structured(const json& record) {
    if (!record.is_object()) throw CorpusError("structured record is not an object");
    auto name_it = record.find("name");
    if (name_it == record.end() || !name_it->is_string() ||
        text::trim(name_it->get<std::string>()).empty()) {
        throw CorpusError("structured record rejected: missing name");
    }
    StructuredComponent c;
    c.product_name = text::trim(name_it->get<std::string>());
    for (const char* key : {"range", "range_name"}) {
        if (auto it = record.find(key); it != record.end() && it->is_string()) {
            c.range_name = text::trim(it->get<std::string>());
        }
    }
    if (auto it = record.find("categories"); it != record.end()) {
        if (it->is_array()) {
            for (const auto& cat : *it)
                if (cat.is_string()) c.categories.push_back(cat.get<std::string>());
        } else if (it->is_string()) {
            c.categories.push_back(it->get<std::string>());
        }
    }

    auto add_row = [&](const std::string& key, const json& value) {
        if (text::trim(key).empty()) return;
        auto row = split_key(key, scalar_to_string(value));
        if (row.entry.empty()) return;
        c.rows.push_back(std::move(row));
    };
    for (const char* nested : {"specifications", "specs"}) {
        if (auto it = record.find(nested); it != record.end() && it->is_object()) {
            for (const auto& [k, v] : it->items()) add_row(k, v);
        }
    }
    for (const auto& [k, v] : record.items()) {
        if (!is_reserved(k)) add_row(k, v);
    }
    if (auto it = record.find("price"); it != record.end()) {
        c.price = parse_price(*it);
        if (c.price) {
            c.rows.push_back(SpecRow{"Specifications", "Price",
                                     "\xC2\xA3" + text::format_decimal(*c.price)});
        }
    }
    return c;
}

LoadReport load_corpus(const fs::path& root) {
    if (!fs::is_directory(root)) throw CorpusError("corpus root is not a directory: " + root.string());
    std::vector<fs::path> pages;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) pages.push_back(entry.path());
    }
    std::sort(pages.begin(), pages.end());

    LoadReport report;
    for (const auto& page : pages) {
        const auto page_id = page.filename().string();
        try {
            std::vector<fs::path> meta_files;
            for (const auto& f : fs::directory_iterator(page)) {
                auto name = f.path().filename().string();
                if (f.is_regular_file() && name.rfind("file-", 0) == 0 &&
                    f.path().extension() == ".json")
                    meta_files.push_back(f.path());
            }
            if (meta_files.empty()) {
                report.diagnostics.push_back(page_id + ": no metadata file");
                continue;
            }
            std::sort(meta_files.begin(), meta_files.end());
            auto meta = json::parse(text::read_file(meta_files.front().string()));
            if (!meta.is_object()) throw CorpusError("metadata is not an object");

            Document doc;
            doc.id = page_id;
            doc.source_path = page;
            for (const auto& [k, v] : meta.items()) {
                if (v.is_string()) doc.metadata[k] = v.get<std::string>();
            }
            if (auto it = meta.find("content"); it != meta.end() && it->is_string()) {
                doc.text = text::read_file((page / it->get<std::string>()).string());
            }
            if (auto it = meta.find("prescience"); it != meta.end() && it->is_string()) {
                auto data = json::parse(text::read_file((page / it->get<std::string>()).string()));
                std::vector<StructuredComponent> comps;
                auto take = [&](const json& rec) {
                    try {
                        comps.push_back(parse_structured(rec));
                    } catch (const CorpusError& e) {
                        report.diagnostics.push_back(page_id + ": " + e.what());
                    }
                };
                if (data.is_array()) {
                    for (const auto& rec : data) take(rec);
                } else {
                    take(data);
                }
                doc.structured = std::move(comps);
            }
            if (!doc.text && !doc.structured) {
                report.diagnostics.push_back(page_id + ": neither content nor prescience present");
                continue;
            }
            report.corpus.push_back(std::move(doc));
        } catch (const std::exception& e) {
            report.diagnostics.push_back(page_id + ": " + e.what());
        }
    }
    if (report.corpus.empty()) throw CorpusError("empty corpus: " + root.string());
    return report;
}

std::size_t count_components(const Corpus& corpus) {
    std::size_t n = 0;
    for (const auto& d : corpus)
        if (d.structured) n += d.structured->size();
    return n;
}

// ---------------------------------------------------------------------------
// Chunking

namespace {

struct Span {
    std::size_t begin;
    std::size_t end;
};

bool is_heading_line(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && line[i] == '#') ++i;
    return i > 0 && i <= 6 && (i == line.size() || line[i] == ' ');
}

std::string heading_title(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && line[i] == '#') ++i;
    return text::trim(line.substr(i));
}

std::size_t words_in(std::string_view s, Span sp) { return text::word_count(s.substr(sp.begin, sp.end - sp.begin)); }

// Splits [sp) into pieces at blank-line paragraph breaks, then word
// boundaries, so that each piece has at most max_tokens words.
void split_oversized(std::string_view s, Span sp, std::size_t max_tokens, std::vector<Span>& out) {
    std::vector<Span> paras;
    std::size_t start = sp.begin;
    std::size_t i = sp.begin;
    while (i < sp.end) {
        auto nl = s.find('\n', i);
        if (nl == std::string_view::npos || nl >= sp.end) break;
        std::size_t j = nl + 1;
        while (j < sp.end && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
        if (j < sp.end && s[j] == '\n') {
            paras.push_back({start, nl + 1});
            start = nl + 1;
        }
        i = nl + 1;
    }
    paras.push_back({start, sp.end});

    std::optional<Span> cur;
    auto flush = [&] {
        if (cur) out.push_back(*cur);
        cur.reset();
    };
    for (auto p : paras) {
        std::size_t w = words_in(s, p);
        if (w > max_tokens) {
            flush();
            // Word-level split.
            std::size_t pos = p.begin;
            while (pos < p.end) {
                std::size_t count = 0;
                std::size_t k = pos;
                bool in_word = false;
                std::size_t cut = p.end;
                while (k < p.end) {
                    bool sp_char = std::isspace(static_cast<unsigned char>(s[k])) != 0;
                    if (!sp_char && !in_word) {
                        if (count == max_tokens) {
                            cut = k;
                            break;
                        }
                        ++count;
                        in_word = true;
                    } else if (sp_char) {
                        in_word = false;
                    }
                    ++k;
                }
                out.push_back({pos, cut});
                pos = cut;
            }
            continue;
        }
        if (cur && words_in(s, {cur->begin, p.end}) <= max_tokens) {
            cur->end = p.end;
        } else {
            flush();
            cur = p;
        }
    }
    flush();
}

}  // namespace

std::vector<Chunk> chunk_text(const Document& doc, const ChunkOptions& options) {
    std::vector<Chunk> chunks;
    if (!doc.text || doc.text->empty()) return chunks;
    const std::string& s = *doc.text;
    const std::size_t max_tokens = std::max<std::size_t>(1, options.max_tokens);

    // Sections start at heading lines.
    std::vector<Span> sections;
    std::vector<std::string> titles;
    std::size_t sec_start = 0;
    std::string sec_title;
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto nl = s.find('\n', pos);
        std::size_t line_end = nl == std::string::npos ? s.size() : nl;
        std::string_view line(s.data() + pos, line_end - pos);
        if (is_heading_line(line) && pos > sec_start) {
            sections.push_back({sec_start, pos});
            titles.push_back(sec_title);
            sec_start = pos;
        }
        if (is_heading_line(line)) sec_title = heading_title(line);
        pos = nl == std::string::npos ? s.size() : nl + 1;
    }
    sections.push_back({sec_start, s.size()});
    titles.push_back(sec_title);

    std::vector<Span> pieces;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (options.exclude_spec_appendix && text::to_lower(titles[i]) == "specifications") continue;
        auto sp = sections[i];
        if (words_in(s, sp) <= max_tokens) {
            pieces.push_back(sp);
        } else {
            split_oversized(s, sp, max_tokens, pieces);
        }
    }

    for (auto sp : pieces) {
        auto body = text::trim(std::string_view(s).substr(sp.begin, sp.end - sp.begin));
        if (body.empty()) continue;
        Chunk c;
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04zu", chunks.size());
        c.id = doc.id + "#" + buf;
        c.doc_id = doc.id;
        c.token_estimate = text::word_count(body);
        c.text = std::move(body);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::vector<Chunk> chunk_corpus(const Corpus& corpus, const ChunkOptions& options) {
    std::vector<Chunk> all;
    for (const auto& d : corpus) {
        auto cs = chunk_text(d, options);
        all.insert(all.end(), std::make_move_iterator(cs.begin()), std::make_move_iterator(cs.end()));
    }
    return all;
}

}  // namespace dualgraph
