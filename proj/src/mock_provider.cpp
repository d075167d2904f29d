#include <set>

#include "dualgraph/llm.hpp"
#include "dualgraph/normalize.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph::llm {

namespace {

std::string strip_bold(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '*' && i + 1 < s.size() && s[i + 1] == '*') {
            ++i;
            continue;
        }
        out.push_back(s[i]);
    }
    return out;
}

// Sentence containing byte offset `at`, bounded by ". ", "! ", "? " or line breaks.
std::string sentence_around(std::string_view s, std::size_t at) {
    std::size_t b = at;
    while (b > 0) {
        char c = s[b - 1];
        if (c == '\n') break;
        if (c == ' ' && b >= 2 && (s[b - 2] == '.' || s[b - 2] == '!' || s[b - 2] == '?')) break;
        --b;
    }
    std::size_t e = at;
    while (e < s.size() && s[e] != '\n') {
        if ((s[e] == '.' || s[e] == '!' || s[e] == '?') && (e + 1 == s.size() || s[e + 1] == ' ' || s[e + 1] == '\n')) {
            ++e;
            break;
        }
        ++e;
    }
    return text::trim(strip_bold(s.substr(b, e - b)));
}

std::string respond_entities(std::string_view chunk) {
    std::vector<std::pair<std::string, std::string>> found;
    std::set<std::string> seen;
    auto add = [&](std::string name, std::string desc) {
        name = text::trim(name);
        auto id = try_canonical_id(name);
        if (!id || desc.empty() || !seen.insert(id->str()).second) return;
        found.emplace_back(std::move(name), std::move(desc));
    };

    auto lines = text::split_lines(chunk);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.rfind("# ", 0) != 0) continue;
        std::string desc;
        for (std::size_t j = i + 1; j < lines.size() && desc.empty(); ++j) {
            auto t = text::trim(lines[j]);
            if (!t.empty() && t[0] != '#') desc = sentence_around(t, 0);
        }
        if (desc.empty()) desc = "Subject of a product page.";
        add(line.substr(2), desc);
    }
    std::size_t pos = 0;
    while ((pos = chunk.find("**", pos)) != std::string_view::npos) {
        auto end = chunk.find("**", pos + 2);
        if (end == std::string_view::npos) break;
        add(std::string(chunk.substr(pos + 2, end - pos - 2)), sentence_around(chunk, pos));
        pos = end + 2;
    }
    if (found.empty()) return "NONE";
    std::string out;
    for (const auto& [name, desc] : found) out += name + " :: " + desc + "\n";
    return out;
}

struct FencedSnippet {
    std::string kind;
    std::string body;
};

std::vector<FencedSnippet> pattern_snippets(std::string_view patterns) {
    std::vector<FencedSnippet> out;
    std::string kind;
    auto lines = text::split_lines(patterns);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.rfind("Pattern (", 0) == 0) {
            auto close = line.find(')');
            kind = line.substr(9, close == std::string::npos ? 0 : close - 9);
        } else if (line.rfind("```", 0) == 0) {
            std::string body;
            std::size_t j = i + 1;
            for (; j < lines.size() && lines[j].rfind("```", 0) != 0; ++j) body += lines[j] + "\n";
            out.push_back({kind, text::trim(body)});
            i = j;
        }
    }
    return out;
}

std::string respond_sparql(std::string_view prompt, int index) {
    auto snippets = pattern_snippets(prompt_section(prompt, "patterns"));
    std::vector<std::string> pool;
    for (const auto& s : snippets)
        if (s.kind == "Spec" || s.kind == "Feature") pool.push_back(s.body);
    if (pool.empty())
        for (const auto& s : snippets)
            if (s.body.find("?p ") != std::string::npos) pool.push_back(s.body);
    if (pool.empty()) return "I cannot write a query for this question.";
    const auto& snippet = pool[static_cast<std::size_t>(index) % pool.size()];
    return wrap_fenced("SELECT DISTINCT ?p WHERE {\n" + snippet + "\n}");
}

std::string respond_route(std::string_view prompt) {
    auto q = text::to_lower(prompt_section(prompt, "question"));
    static constexpr std::string_view kCues[] = {"which", "list", "how many", "price", "cost", "more than",
                                                 "less than", "under", "over", "above", "below", "support"};
    for (auto cue : kCues)
        if (q.find(cue) != std::string::npos) return "SYMBOLIC";
    return "SEMANTIC";
}

// First cells of markdown table data rows, de-duplicated.
std::vector<std::string> table_names(std::string_view context) {
    std::vector<std::string> names;
    std::set<std::string> seen;
    bool in_table = false;
    bool header_done = false;
    for (const auto& raw : text::split_lines(context)) {
        auto line = text::trim(raw);
        if (line.empty() || line[0] != '|') {
            in_table = false;
            continue;
        }
        if (!in_table) {
            in_table = true;
            header_done = false;
            continue;  // header row
        }
        if (!header_done) {
            header_done = true;
            if (line.find("---") != std::string::npos) continue;
        }
        std::string cell;
        for (std::size_t i = 1; i < line.size(); ++i) {
            if (line[i] == '\\' && i + 1 < line.size()) {
                cell.push_back(line[++i]);
            } else if (line[i] == '|') {
                break;
            } else {
                cell.push_back(line[i]);
            }
        }
        cell = text::trim(cell);
        if (!cell.empty() && seen.insert(cell).second) names.push_back(cell);
    }
    return names;
}

std::string answer_from_context(std::string_view context) {
    if (text::trim(context).empty() || text::trim(context) == kNoEvidence)
        return "I could not find evidence to answer the question.";
    auto names = table_names(context);
    if (!names.empty()) {
        std::string out = "The matching products are:\n";
        for (const auto& n : names) out += "- " + n + "\n";
        out.pop_back();
        return out;
    }
    std::vector<std::string> lines;
    bool in_fence = false;
    for (const auto& raw : text::split_lines(context)) {
        auto line = text::trim(raw);
        if (line.rfind("```", 0) == 0) {
            in_fence = !in_fence;
            continue;
        }
        if (in_fence || line.empty() || line[0] == '#' || line[0] == '_' || line[0] == '|') continue;
        lines.push_back(sentence_around(line, 0));
        if (lines.size() == 2) break;
    }
    if (lines.empty()) return "The retrieved context does not answer the question.";
    return "Based on the retrieved passages: " + text::join(lines, " ");
}

std::string respond_symbolic(std::string_view prompt) {
    std::string out;
    for (const auto& raw : text::split_lines(prompt_section(prompt, "answer"))) {
        auto line = text::trim(raw);
        if (line.rfind("- ", 0) == 0) out += text::trim(line.substr(2)) + "\n";
    }
    return out.empty() ? "NONE" : out;
}

std::string respond_agent(std::string_view prompt, int step) {
    auto question = text::normalize_whitespace(prompt_section(prompt, "question"));
    if (step == 0) return "RETRIEVE_SYMBOLIC: " + question;
    if (step == 1) return "RETRIEVE_SEMANTIC: " + question;
    return "ANSWER: " + answer_from_context(prompt_section(prompt, "context"));
}

std::vector<std::string> claims_of(std::string_view body) {
    std::vector<std::string> claims;
    for (const auto& raw : text::split_lines(body)) {
        auto line = text::trim(raw);
        if (line.rfind("- ", 0) == 0) line = text::trim(line.substr(2));
        if (!line.empty() && line.back() == ':') continue;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            bool end = i == line.size() ||
                       ((line[i] == '.' || line[i] == '!' || line[i] == '?') && (i + 1 == line.size() || line[i + 1] == ' '));
            if (!end) continue;
            auto piece = text::trim(std::string_view(line).substr(start, i - start));
            if (!text::alnum_tokens(piece).empty()) claims.push_back(piece);
            start = i + 1;
        }
    }
    return claims;
}

std::string respond_decompose(std::string_view prompt) {
    auto claims = claims_of(prompt_section(prompt, "text"));
    if (claims.empty()) return "NONE";
    std::string out;
    for (const auto& c : claims) out += "- " + c + "\n";
    return out;
}

std::set<std::string> content_tokens(std::string_view s) {
    std::set<std::string> out;
    for (const auto& t : text::alnum_tokens(s))
        if (!is_stop_word(t)) out.insert(light_stem(t));
    return out;
}

std::string respond_verify(std::string_view prompt) {
    auto reference = content_tokens(prompt_section(prompt, "reference"));
    std::string out;
    for (const auto& raw : text::split_lines(prompt_section(prompt, "claims"))) {
        auto dot = raw.find(". ");
        if (dot == std::string::npos) continue;
        auto claim = content_tokens(raw.substr(dot + 2));
        std::size_t hit = 0;
        for (const auto& t : claim) hit += reference.count(t);
        bool supported = !claim.empty() && 2 * hit >= claim.size();
        out += raw.substr(0, dot) + (supported ? ": SUPPORTED\n" : ": UNSUPPORTED\n");
    }
    return out;
}

}  // namespace

MockProvider MockProvider::from_file(const std::string& path) {
    try {
        return MockProvider(nlohmann::json::parse(text::read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw LlmError("cannot parse mock script " + path + ": " + e.what());
    }
}

std::optional<std::string> MockProvider::scripted(const PromptTag& tag) const {
    if (!script_.is_object()) return std::nullopt;
    auto kind = script_.find(tag.kind);
    if (kind == script_.end() || !kind->is_object()) return std::nullopt;
    auto entry = kind->find(tag.qid);
    if (entry == kind->end()) entry = kind->find("*");
    if (entry == kind->end()) return std::nullopt;
    if (entry->is_string()) return entry->get<std::string>();
    if (entry->is_array() && !entry->empty()) {
        auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(tag.index, 0)), entry->size() - 1);
        if ((*entry)[i].is_string()) return (*entry)[i].get<std::string>();
    }
    throw LlmError("mock script entry for " + tag.kind + "/" + tag.qid + " must be a string or a list of strings");
}

std::string MockProvider::respond(const std::string& prompt) const {
    auto tag = parse_tag(prompt);
    if (!tag) return "UNTAGGED PROMPT";
    if (auto s = scripted(*tag)) return *s;
    const auto& k = tag->kind;
    if (k == "entities") return respond_entities(prompt_section(prompt, "text"));
    if (k == "sparql") return respond_sparql(prompt, tag->index);
    if (k == "route") return respond_route(prompt);
    if (k == "answer") return answer_from_context(prompt_section(prompt, "context"));
    if (k == "symbolic") return respond_symbolic(prompt);
    if (k == "agent") return respond_agent(prompt, tag->index);
    if (k == "reflect") return "ACCEPT";
    if (k == "decompose") return respond_decompose(prompt);
    if (k == "verify") return respond_verify(prompt);
    if (k == "judge") return "A";
    return "UNKNOWN PROMPT KIND";
}

ChatResult MockProvider::chat(const std::string& prompt, const Sampling&) {
    ChatResult r;
    r.text = respond(prompt);
    r.usage.prompt_tokens = text::word_count(prompt);
    r.usage.completion_tokens = text::word_count(r.text);
    return r;
}

EmbedResult MockProvider::embed(const std::vector<std::string>& texts) {
    EmbedResult r;
    r.vectors.reserve(texts.size());
    for (const auto& t : texts) {
        r.vectors.push_back(hash_embed(t));
        r.usage.prompt_tokens += text::word_count(t);
    }
    return r;
}

}  // namespace dualgraph::llm
