#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dualgraph/vecindex.hpp"

namespace dualgraph::llm {

class LlmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;

    std::size_t total() const { return prompt_tokens + completion_tokens; }
    TokenUsage& operator+=(const TokenUsage& o) {
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        return *this;
    }
    bool operator==(const TokenUsage&) const = default;
};

struct Sampling {
    double temperature = 0.0;
    std::uint64_t seed = 0;
};

struct ChatResult {
    std::string text;
    TokenUsage usage;
};

struct EmbedResult {
    std::vector<Vector> vectors;
    TokenUsage usage;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual ChatResult chat(const std::string& prompt, const Sampling& sampling) = 0;
    virtual EmbedResult embed(const std::vector<std::string>& texts) = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Prompt tags: the first line of every assembled prompt identifies its kind
// and question so the scripted provider can respond deterministically.

struct PromptTag {
    std::string kind;
    std::string qid = "-";
    int index = 0;
};

std::string tag_line(const PromptTag& tag);
std::string with_tag(const PromptTag& tag, std::string_view body);
std::optional<PromptTag> parse_tag(std::string_view prompt);

// Text between "<name>\n" and "\n</name>"; empty when absent.
std::string prompt_section(std::string_view prompt, std::string_view name);

// ---------------------------------------------------------------------------
// Providers

// Feature-hashing bag-of-words embedder: stemmed alphanumeric tokens with
// stop words removed, hashed into `dim` signed buckets.
Vector hash_embed(std::string_view text, std::size_t dim = 256);

// Offline provider. Responses come from the script when it has an entry
// for (kind, qid) or (kind, "*"); otherwise from built-in responders that
// read the prompt sections. Usage counts whitespace-delimited words.
class MockProvider : public Provider {
public:
    MockProvider() = default;
    explicit MockProvider(nlohmann::json script) : script_(std::move(script)) {}
    static MockProvider from_file(const std::string& path);

    ChatResult chat(const std::string& prompt, const Sampling& sampling) override;
    EmbedResult embed(const std::vector<std::string>& texts) override;
    std::string name() const override { return "mock"; }

    std::string respond(const std::string& prompt) const;

private:
    nlohmann::json script_ = nlohmann::json::object();
    std::optional<std::string> scripted(const PromptTag& tag) const;
};

struct HttpConfig {
    std::string endpoint = "http://localhost:8000/v1";
    std::string chat_model = "gpt-oss-120b";
    std::string embedding_model = "qwen3-embedding-4b";
    std::string api_key_env = "DUALGRAPH_API_KEY";
    int timeout_seconds = 120;
};

// OpenAI-compatible chat/completions and embeddings client. Transport
// failures are retried once; HTTP errors are not retried.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpConfig config);

    ChatResult chat(const std::string& prompt, const Sampling& sampling) override;
    EmbedResult embed(const std::vector<std::string>& texts) override;
    std::string name() const override { return "http"; }

private:
    HttpConfig config_;
    std::string scheme_host_;
    std::string base_path_;
    std::string api_key_;

    nlohmann::json post(const std::string& path, const nlohmann::json& body);
};

// Provider-independent settings read from the --config file.
struct LlmConfig {
    HttpConfig http;
    std::size_t max_in_flight = 4;
    std::vector<Sampling> candidate_sampling = {{0.2, 11}, {0.7, 23}, {1.0, 37}};
};

LlmConfig load_llm_config(const std::string& path);

// ---------------------------------------------------------------------------
// Usage accounting and traces

enum class Phase { Indexing, Querying, Evaluation };
std::string_view phase_name(Phase p);

class UsageAccumulator {
public:
    void record(Phase phase, const TokenUsage& usage);
    TokenUsage total(Phase phase) const;
    TokenUsage total() const;
    std::size_t calls(Phase phase) const;

private:
    mutable std::mutex mu_;
    std::map<Phase, TokenUsage> totals_;
    std::map<Phase, std::size_t> calls_;
};

struct UsageReport {
    TokenUsage indexing;
    TokenUsage querying;
    TokenUsage evaluation;

    TokenUsage total() const {
        TokenUsage t = indexing;
        t += querying;
        t += evaluation;
        return t;
    }
};

UsageReport usage_report(const UsageAccumulator& acc);

struct TraceEvent {
    std::uint64_t seq = 0;  // logical timestamp
    std::string kind;       // chat:<prompt kind>, embed, retrieve_symbolic, fallback, ...
    std::string detail;
    std::string digest;     // hex digest of the payload
    Phase phase = Phase::Querying;
    TokenUsage usage;
};

class Trace {
public:
    void add(std::string kind, std::string detail, std::string_view payload, Phase phase,
             const TokenUsage& usage = {});
    std::vector<TraceEvent> events() const;
    std::size_t count(std::string_view kind) const;
    TokenUsage usage(Phase phase) const;
    TokenUsage usage() const;
    std::string to_jsonl() const;

private:
    mutable std::mutex mu_;
    std::vector<TraceEvent> events_;
};

// Provider wrapper that caps in-flight calls and records every exchange in
// the usage accumulator and, when given, the trace.
class LlmClient {
public:
    LlmClient(Provider& provider, UsageAccumulator& usage, std::size_t max_in_flight = 4);

    ChatResult chat(const PromptTag& tag, std::string_view body, const Sampling& sampling, Phase phase,
                    Trace* trace);
    EmbedResult embed(const std::vector<std::string>& texts, Phase phase, Trace* trace);

    // Independent chat requests issued on up to max_in_flight threads.
    // Usage and trace events are recorded in request order.
    std::vector<ChatResult> chat_many(const std::vector<std::pair<PromptTag, std::string>>& requests,
                                      const Sampling& sampling, Phase phase, Trace* trace);
    // Embeds in batches of `batch` texts, batches issued concurrently.
    std::vector<Vector> embed_all(const std::vector<std::string>& texts, std::size_t batch, Phase phase,
                                  Trace* trace);

    std::size_t max_in_flight() const { return max_in_flight_; }
    Provider& provider() { return provider_; }
    UsageAccumulator& usage() { return usage_; }

private:
    Provider& provider_;
    UsageAccumulator& usage_;
    std::size_t max_in_flight_;
    std::size_t in_flight_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;

    void acquire();
    void release();
    template <typename Fn>
    auto guarded(Fn fn) {
        acquire();
        try {
            auto r = fn();
            release();
            return r;
        } catch (...) {
            release();
            throw;
        }
    }
    void record(std::string kind, std::string detail, std::string_view payload, Phase phase,
                const TokenUsage& usage, Trace* trace);
};

// ---------------------------------------------------------------------------
// Prompts and response parsing

std::string wrap_fenced(std::string_view query, std::string_view lang = "sparql");
// Content of the first fenced block, byte-exact; nullopt when there is no
// complete fence.
std::optional<std::string> extract_fenced_block(std::string_view text);

struct PatternSnippet {
    std::string kind;           // Spec, Feature, Category, SingularNode
    std::string linearization;
    std::string snippet;
};

std::string schema_text();

std::string build_sparql_prompt(std::string_view question, const std::vector<PatternSnippet>& patterns,
                                std::string_view schema = schema_text());

std::vector<std::string> generate_sparql_candidates(LlmClient& client, std::string_view qid,
                                                    std::string_view prompt,
                                                    const std::vector<Sampling>& sampling, Phase phase,
                                                    Trace* trace);

enum class Route { Symbolic, Semantic };
std::string build_route_prompt(std::string_view question);
Route parse_route(std::string_view response);
Route route(LlmClient& client, std::string_view qid, std::string_view question, Phase phase, Trace* trace);

inline constexpr std::string_view kNoEvidence = "No evidence was retrieved for this question.";

std::string build_answer_prompt(std::string_view question, std::string_view context);
ChatResult generate_answer(LlmClient& client, std::string_view qid, std::string_view question,
                           std::string_view context, Phase phase, Trace* trace);

std::string build_symbolic_prompt(std::string_view question, std::string_view answer);
// Names one per line ("- " bullets allowed); canonicalized, de-duplicated.
std::vector<std::string> parse_symbolic_answer(std::string_view response);
std::vector<std::string> extract_symbolic_answer(LlmClient& client, std::string_view qid,
                                                 std::string_view question, std::string_view answer,
                                                 Phase phase, Trace* trace);

struct Mention {
    std::string name;
    std::string description;
};

std::string build_entity_prompt(std::string_view chunk_text);
// "name :: description" lines; nullopt when nothing parses. An empty
// response or "NONE" is a valid empty list.
std::optional<std::vector<Mention>> parse_mentions(std::string_view response);

std::string build_agent_prompt(std::string_view question, std::string_view context, std::string_view history,
                               std::size_t step, std::size_t max_steps);
std::string build_reflect_prompt(std::string_view question, std::string_view context, std::string_view answer);

std::string build_decompose_prompt(std::string_view text);
std::string build_verify_prompt(const std::vector<std::string>& claims, std::string_view reference);
std::string build_judge_prompt(std::string_view question, std::string_view answer_a, std::string_view answer_b);

}  // namespace dualgraph::llm
