#include "dualgraph/llm.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <sstream>

#include <httplib.h>

#include "dualgraph/normalize.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph::llm {

// ---------------------------------------------------------------------------
// Tags and sections

namespace {
constexpr std::string_view kTagOpen = "@@dg ";
constexpr std::string_view kTagClose = "@@";
}  // namespace

std::string tag_line(const PromptTag& tag) {
    return std::string(kTagOpen) + "kind=" + tag.kind + " qid=" + tag.qid + " index=" + std::to_string(tag.index) +
           std::string(kTagClose);
}

std::string with_tag(const PromptTag& tag, std::string_view body) {
    std::string out = tag_line(tag);
    out += '\n';
    out += body;
    return out;
}

std::optional<PromptTag> parse_tag(std::string_view prompt) {
    auto nl = prompt.find('\n');
    auto line = prompt.substr(0, nl);
    if (line.substr(0, kTagOpen.size()) != kTagOpen) return std::nullopt;
    line.remove_prefix(kTagOpen.size());
    if (line.size() < kTagClose.size() || line.substr(line.size() - kTagClose.size()) != kTagClose)
        return std::nullopt;
    line.remove_suffix(kTagClose.size());
    PromptTag tag;
    bool has_kind = false;
    for (const auto& field : text::split(line, ' ')) {
        auto eq = field.find('=');
        if (eq == std::string::npos) return std::nullopt;
        auto key = field.substr(0, eq);
        auto value = field.substr(eq + 1);
        if (key == "kind") {
            tag.kind = value;
            has_kind = !value.empty();
        } else if (key == "qid") {
            tag.qid = value;
        } else if (key == "index") {
            try {
                tag.index = std::stoi(value);
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
    }
    if (!has_kind) return std::nullopt;
    return tag;
}

std::string prompt_section(std::string_view prompt, std::string_view name) {
    std::string open = "<" + std::string(name) + ">\n";
    std::string close = "\n</" + std::string(name) + ">";
    auto b = prompt.find(open);
    if (b == std::string_view::npos) return {};
    b += open.size();
    auto e = prompt.find(close, b);
    if (e == std::string_view::npos) return {};
    return std::string(prompt.substr(b, e - b));
}

// ---------------------------------------------------------------------------
// Hash embedder

namespace {
bool embed_stop_word(std::string_view t) {
    static constexpr std::string_view kWords[] = {"a",   "an",   "the", "of",   "for",  "with", "in",   "on",
                                                  "and", "or",   "to",  "is",   "are",  "does", "do",   "has",
                                                  "have", "which", "what", "that", "this", "it",  "by",   "be",
                                                  "as",  "at",   "its", "can",  "from", "their"};
    for (auto w : kWords)
        if (w == t) return true;
    return false;
}
}  // namespace

Vector hash_embed(std::string_view text, std::size_t dim) {
    Vector v(dim, 0.0f);
    if (dim == 0) return v;
    for (const auto& tok : text::alnum_tokens(text)) {
        if (embed_stop_word(tok)) continue;
        auto h = text::fnv1a(light_stem(tok));
        float sign = (h >> 63) ? -1.0f : 1.0f;
        v[h % dim] += sign;
    }
    return v;
}

// ---------------------------------------------------------------------------
// HTTP provider

namespace {
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw LlmError("endpoint must include a scheme: " + endpoint);
    auto path = endpoint.find('/', scheme + 3);
    if (path == std::string::npos) return {endpoint, ""};
    std::string base = endpoint.substr(path);
    while (!base.empty() && base.back() == '/') base.pop_back();
    return {endpoint.substr(0, path), base};
}
}  // namespace

HttpProvider::HttpProvider(HttpConfig config) : config_(std::move(config)) {
    std::tie(scheme_host_, base_path_) = split_endpoint(config_.endpoint);
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

nlohmann::json HttpProvider::post(const std::string& path, const nlohmann::json& body) {
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const std::string payload = body.dump();

    httplib::Result res = client.Post(base_path_ + path, headers, payload, "application/json");
    if (!res) res = client.Post(base_path_ + path, headers, payload, "application/json");
    if (!res) throw LlmError("transport failure: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw LlmError("HTTP " + std::to_string(res->status) + " from " + path + ": " + res->body.substr(0, 200));
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(std::string("malformed response body: ") + e.what());
    }
}

namespace {
TokenUsage usage_from(const nlohmann::json& j) {
    TokenUsage u;
    if (auto it = j.find("usage"); it != j.end() && it->is_object()) {
        u.prompt_tokens = it->value("prompt_tokens", std::size_t{0});
        u.completion_tokens = it->value("completion_tokens", std::size_t{0});
    }
    return u;
}
}  // namespace

ChatResult HttpProvider::chat(const std::string& prompt, const Sampling& sampling) {
    nlohmann::json body = {
        {"model", config_.chat_model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", sampling.temperature},
        {"seed", sampling.seed},
    };
    auto j = post("/chat/completions", body);
    try {
        ChatResult r;
        r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        r.usage = usage_from(j);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(std::string("unexpected chat response: ") + e.what());
    }
}

EmbedResult HttpProvider::embed(const std::vector<std::string>& texts) {
    EmbedResult r;
    if (texts.empty()) return r;
    auto j = post("/embeddings", {{"model", config_.embedding_model}, {"input", texts}});
    try {
        const auto& data = j.at("data");
        r.vectors.resize(texts.size());
        for (const auto& item : data) {
            auto idx = item.value("index", std::size_t{0});
            if (idx >= texts.size()) throw LlmError("embedding index out of range");
            r.vectors[idx] = item.at("embedding").get<Vector>();
        }
        r.usage = usage_from(j);
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(std::string("unexpected embedding response: ") + e.what());
    }
    return r;
}

LlmConfig load_llm_config(const std::string& path) {
    LlmConfig cfg;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw LlmError("cannot parse config " + path + ": " + e.what());
    }
    cfg.http.endpoint = j.value("endpoint", cfg.http.endpoint);
    cfg.http.chat_model = j.value("chat_model", cfg.http.chat_model);
    cfg.http.embedding_model = j.value("embedding_model", cfg.http.embedding_model);
    cfg.http.api_key_env = j.value("api_key_env", cfg.http.api_key_env);
    cfg.http.timeout_seconds = j.value("timeout_seconds", cfg.http.timeout_seconds);
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
    if (cfg.max_in_flight == 0) throw LlmError("max_in_flight must be positive");
    if (auto it = j.find("sampling"); it != j.end()) {
        cfg.candidate_sampling.clear();
        for (const auto& s : *it)
            cfg.candidate_sampling.push_back({s.value("temperature", 0.0), s.value("seed", std::uint64_t{0})});
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Usage and traces

std::string_view phase_name(Phase p) {
    switch (p) {
        case Phase::Indexing: return "indexing";
        case Phase::Querying: return "querying";
        case Phase::Evaluation: return "evaluation";
    }
    return "unknown";
}

void UsageAccumulator::record(Phase phase, const TokenUsage& usage) {
    std::lock_guard lock(mu_);
    totals_[phase] += usage;
    ++calls_[phase];
}

TokenUsage UsageAccumulator::total(Phase phase) const {
    std::lock_guard lock(mu_);
    auto it = totals_.find(phase);
    return it == totals_.end() ? TokenUsage{} : it->second;
}

TokenUsage UsageAccumulator::total() const {
    std::lock_guard lock(mu_);
    TokenUsage t;
    for (const auto& [_, u] : totals_) t += u;
    return t;
}

std::size_t UsageAccumulator::calls(Phase phase) const {
    std::lock_guard lock(mu_);
    auto it = calls_.find(phase);
    return it == calls_.end() ? 0 : it->second;
}

UsageReport usage_report(const UsageAccumulator& acc) {
    return {acc.total(Phase::Indexing), acc.total(Phase::Querying), acc.total(Phase::Evaluation)};
}

void Trace::add(std::string kind, std::string detail, std::string_view payload, Phase phase,
                const TokenUsage& usage) {
    std::lock_guard lock(mu_);
    TraceEvent e;
    e.seq = events_.size();
    e.kind = std::move(kind);
    e.detail = std::move(detail);
    e.digest = text::hex_digest(payload);
    e.phase = phase;
    e.usage = usage;
    events_.push_back(std::move(e));
}

std::vector<TraceEvent> Trace::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

std::size_t Trace::count(std::string_view kind) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& e : events_)
        if (e.kind == kind) ++n;
    return n;
}

TokenUsage Trace::usage(Phase phase) const {
    std::lock_guard lock(mu_);
    TokenUsage t;
    for (const auto& e : events_)
        if (e.phase == phase) t += e.usage;
    return t;
}

TokenUsage Trace::usage() const {
    std::lock_guard lock(mu_);
    TokenUsage t;
    for (const auto& e : events_) t += e.usage;
    return t;
}

std::string Trace::to_jsonl() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& e : events_) {
        nlohmann::json j = {
            {"seq", e.seq},
            {"kind", e.kind},
            {"phase", phase_name(e.phase)},
            {"digest", e.digest},
            {"detail", e.detail},
            {"prompt_tokens", e.usage.prompt_tokens},
            {"completion_tokens", e.usage.completion_tokens},
        };
        out += j.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Client

LlmClient::LlmClient(Provider& provider, UsageAccumulator& usage, std::size_t max_in_flight)
    : provider_(provider), usage_(usage), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {}

void LlmClient::acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
}

void LlmClient::release() {
    {
        std::lock_guard lock(mu_);
        --in_flight_;
    }
    cv_.notify_one();
}

void LlmClient::record(std::string kind, std::string detail, std::string_view payload, Phase phase,
                       const TokenUsage& usage, Trace* trace) {
    usage_.record(phase, usage);
    if (trace) trace->add(std::move(kind), std::move(detail), payload, phase, usage);
}

ChatResult LlmClient::chat(const PromptTag& tag, std::string_view body, const Sampling& sampling, Phase phase,
                           Trace* trace) {
    const std::string prompt = with_tag(tag, body);
    acquire();
    ChatResult r;
    try {
        r = provider_.chat(prompt, sampling);
    } catch (const LlmError& e) {
        release();
        if (trace) trace->add("error:" + tag.kind, e.what(), prompt, phase);
        throw;
    }
    release();
    record("chat:" + tag.kind, tag_line(tag), prompt + "\n" + r.text, phase, r.usage, trace);
    return r;
}

EmbedResult LlmClient::embed(const std::vector<std::string>& texts, Phase phase, Trace* trace) {
    acquire();
    EmbedResult r;
    try {
        r = provider_.embed(texts);
    } catch (const LlmError& e) {
        release();
        if (trace) trace->add("error:embed", e.what(), text::join(texts, "\n"), phase);
        throw;
    }
    release();
    if (r.vectors.size() != texts.size()) throw LlmError("provider returned a wrong number of embeddings");
    record("embed", std::to_string(texts.size()) + " texts", text::join(texts, "\n"), phase, r.usage, trace);
    return r;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads; the first failure
// (by index) is rethrown after all workers finish.
template <typename Fn>
void run_indexed(std::size_t n, std::size_t workers, Fn fn, std::vector<std::exception_ptr>& errors) {
    errors.assign(n, nullptr);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::min(workers, n);
    if (workers <= 1) {
        work();
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

}  // namespace

std::vector<ChatResult> LlmClient::chat_many(const std::vector<std::pair<PromptTag, std::string>>& requests,
                                             const Sampling& sampling, Phase phase, Trace* trace) {
    std::vector<std::string> prompts;
    prompts.reserve(requests.size());
    for (const auto& [tag, body] : requests) prompts.push_back(with_tag(tag, body));
    std::vector<ChatResult> results(requests.size());
    std::vector<std::exception_ptr> errors;
    run_indexed(requests.size(), max_in_flight_, [&](std::size_t i) { results[i] = guarded([&] { return provider_.chat(prompts[i], sampling); }); },
                errors);
    std::exception_ptr first;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const auto& tag = requests[i].first;
        if (errors[i]) {
            std::string what = "provider failure";
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            if (trace) trace->add("error:" + tag.kind, what, prompts[i], phase);
            if (!first) first = errors[i];
            continue;
        }
        record("chat:" + tag.kind, tag_line(tag), prompts[i] + "\n" + results[i].text, phase, results[i].usage, trace);
    }
    if (first) std::rethrow_exception(first);
    return results;
}

std::vector<Vector> LlmClient::embed_all(const std::vector<std::string>& texts, std::size_t batch, Phase phase,
                                         Trace* trace) {
    batch = std::max<std::size_t>(1, batch);
    const std::size_t n_batches = (texts.size() + batch - 1) / batch;
    std::vector<std::vector<std::string>> inputs(n_batches);
    for (std::size_t i = 0; i < texts.size(); ++i) inputs[i / batch].push_back(texts[i]);
    std::vector<EmbedResult> results(n_batches);
    std::vector<std::exception_ptr> errors;
    run_indexed(n_batches, max_in_flight_, [&](std::size_t b) { results[b] = guarded([&] { return provider_.embed(inputs[b]); }); }, errors);
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t b = 0; b < n_batches; ++b) {
        if (errors[b]) {
            if (trace) trace->add("error:embed", "batch " + std::to_string(b), text::join(inputs[b], "\n"), phase);
            std::rethrow_exception(errors[b]);
        }
        if (results[b].vectors.size() != inputs[b].size())
            throw LlmError("provider returned a wrong number of embeddings");
        record("embed", std::to_string(inputs[b].size()) + " texts", text::join(inputs[b], "\n"), phase,
               results[b].usage, trace);
        for (auto& v : results[b].vectors) out.push_back(std::move(v));
    }
    return out;
}

}  // namespace dualgraph::llm
