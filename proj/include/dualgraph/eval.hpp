#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dualgraph/llm.hpp"
#include "dualgraph/orchestrator.hpp"

namespace dualgraph {

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class QuestionCategory { Inverse, MultiCondition, GroupComparison, Reasoning };
std::string_view category_name(QuestionCategory c);
std::optional<QuestionCategory> parse_category(std::string_view s);

struct QAItem {
    std::string id;
    std::string question;
    std::optional<std::string> answer_text;
    std::optional<std::vector<std::string>> answer_list;  // canonical ids
    bool objective = true;
    QuestionCategory category = QuestionCategory::Inverse;
};

// JSON array of records with snake_case keys; list answers are
// canonicalized on load.
std::vector<QAItem> parse_benchmark(const nlohmann::json& j);
std::vector<QAItem> load_benchmark(const std::string& path);

struct PRF {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

PRF make_prf(double precision, double recall);

// Set semantics over the given names.
PRF list_match(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

// Predicted products are replaced by their ranges wherever the gold list
// names that range.
std::vector<std::string> collapse_to_ranges(const std::vector<std::string>& predicted,
                                            const std::vector<std::string>& gold, const Graph& skg);

struct FactualResult {
    std::optional<PRF> scores;  // nullopt when the item is skipped
    std::string diagnostic;
    std::size_t answer_claims = 0;
    std::size_t gold_claims = 0;
    std::size_t answer_supported = 0;
    std::size_t gold_supported = 0;
};

// "- " claim lines; "NONE" is an empty list; nullopt when unparseable.
std::optional<std::vector<std::string>> parse_claims(std::string_view response);
// "<n>: SUPPORTED" lines; nullopt when no verdict parses. Missing
// verdicts count as unsupported.
std::optional<std::vector<bool>> parse_verdicts(std::string_view response, std::size_t n_claims);

FactualResult factual_correctness(llm::LlmClient& client, std::string_view qid, std::string_view answer,
                                  std::string_view gold, llm::Trace* trace = nullptr);

struct JudgeResult {
    std::size_t wins_a = 0;
    std::size_t wins_b = 0;
    std::size_t no_contest = 0;

    std::size_t decided() const { return wins_a + wins_b; }
    double win_rate_a() const { return decided() ? static_cast<double>(wins_a) / static_cast<double>(decided()) : 0; }
    double win_rate_b() const { return decided() ? static_cast<double>(wins_b) / static_cast<double>(decided()) : 0; }
};

// 'A', 'B', or nullopt.
std::optional<char> parse_judge_verdict(std::string_view response);

// Two calls with the answers in both positions.
JudgeResult pairwise_judge(llm::LlmClient& client, std::string_view qid, std::string_view question,
                           std::string_view answer_a, std::string_view answer_b, llm::Trace* trace = nullptr);

struct BenchmarkOptions {
    std::vector<Strategy> strategies = {Strategy::SkgTkgFallback};
    std::size_t repeats = 1;
    bool judge = true;
    bool collapse_ranges = false;
    std::size_t workers = 1;
};

struct ItemRun {
    std::string qid;
    Strategy strategy = Strategy::SkgOnly;
    std::size_t repeat = 0;
    AnswerRecord record;
    std::optional<PRF> lm;
    FactualResult fc;
    std::string error;
};

struct StrategySummary {
    Strategy strategy = Strategy::SkgOnly;
    std::optional<double> fc_f1;
    std::optional<double> lm_f1;
    std::optional<double> laaj;
    std::optional<double> obj_lm_f1;
    std::map<std::string, double> lm_f1_by_category;
    std::size_t fallbacks = 0;
    llm::TokenUsage querying;
    llm::TokenUsage evaluation;
};

struct MetricReport {
    std::vector<ItemRun> runs;
    std::vector<StrategySummary> summary;
    std::map<Strategy, JudgeResult> judge;
    llm::TokenUsage indexing;
    std::size_t repeats = 1;

    const StrategySummary* find(Strategy s) const;
    nlohmann::json to_json() const;
    std::string to_markdown() const;
};

MetricReport run_benchmark(const std::vector<QAItem>& items, Orchestrator& orchestrator, llm::LlmClient& client,
                           const BenchmarkOptions& options = {}, const Graph* skg = nullptr,
                           llm::Trace* eval_trace = nullptr);

}  // namespace dualgraph
