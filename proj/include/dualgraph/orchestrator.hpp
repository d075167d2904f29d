#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dualgraph/llm.hpp"
#include "dualgraph/patterns.hpp"
#include "dualgraph/skg.hpp"
#include "dualgraph/sparql.hpp"
#include "dualgraph/tkg.hpp"

namespace dualgraph {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Strategy { TkgOnly, SkgOnly, Concat, SkgTkgFallback, Router, RouterTkgFallback, Agentic };

std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);
const std::vector<Strategy>& all_strategies();
std::string strategy_names();  // comma-separated, for error messages

enum class Source { Symbolic, Semantic };
std::string_view source_name(Source s);

struct ContextBlock {
    Source source = Source::Symbolic;
    std::string label;
    std::string text;
};

struct RetrievalContext {
    std::vector<ContextBlock> blocks;

    bool empty() const { return blocks.empty(); }
    bool has(Source s) const;
    void append(const RetrievalContext& other);
    // Headed blocks in order; empty string when there are none.
    std::string render() const;
};

struct OrchestratorConfig {
    std::size_t k_patterns = 5;
    std::size_t k_entities = 20;
    std::size_t k_chunks = 5;
    VoteWeighting weighting = VoteWeighting::InverseRank;
    sparql::ExecOptions exec;
    sparql::ValidationPolicy validation;
    std::vector<llm::Sampling> sampling = {{0.2, 11}, {0.7, 23}, {1.0, 37}};
    bool parallel_candidates = true;
    std::size_t max_steps = 6;
};

// Read-only views of the built indexes; any may be missing.
struct Indexes {
    const Graph* skg = nullptr;
    const PatternIndex* patterns = nullptr;
    const EntityGraph* tkg = nullptr;
};

struct AnswerRecord {
    std::string qid;
    std::string question;
    Strategy strategy = Strategy::SkgOnly;
    RetrievalContext context;
    std::string answer;
    std::optional<std::vector<std::string>> symbolic_answer;
    bool fallback_used = false;
    std::optional<llm::Route> route;
    std::size_t agent_steps = 0;
    std::shared_ptr<llm::Trace> trace;

    llm::UsageReport usage() const;
    nlohmann::json to_json() const;
};

struct AgenticResult {
    RetrievalContext context;
    std::string answer;
    std::size_t steps = 0;
    bool answered = false;
};

inline constexpr std::string_view kNoAnswer = "No answer could be produced within the step limit.";

class Orchestrator {
public:
    Orchestrator(Indexes indexes, llm::LlmClient& client, OrchestratorConfig config = {});

    // Throws ConfigError when an index the strategy needs is missing.
    void check_ready(Strategy s) const;

    RetrievalContext symbolic_retrieve(std::string_view qid, std::string_view question, llm::Trace& trace);
    RetrievalContext semantic_retrieve(std::string_view qid, std::string_view question, llm::Trace& trace);
    AgenticResult agentic_loop(std::string_view qid, std::string_view question, llm::Trace& trace);

    AnswerRecord answer(std::string_view qid, std::string_view question, Strategy strategy,
                        bool want_symbolic = false);

    const OrchestratorConfig& config() const { return config_; }

private:
    Indexes indexes_;
    llm::LlmClient& client_;
    OrchestratorConfig config_;
};

}  // namespace dualgraph
