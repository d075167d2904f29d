#include "dualgraph/orchestrator.hpp"

#include "dualgraph/text.hpp"

namespace dualgraph {

namespace {
const std::vector<std::pair<Strategy, std::string_view>>& strategy_table() {
    static const std::vector<std::pair<Strategy, std::string_view>> t = {
        {Strategy::TkgOnly, "tkg_only"},
        {Strategy::SkgOnly, "skg_only"},
        {Strategy::Concat, "concat"},
        {Strategy::SkgTkgFallback, "skg_tkg_fallback"},
        {Strategy::Router, "router"},
        {Strategy::RouterTkgFallback, "router_tkg_fallback"},
        {Strategy::Agentic, "agentic"},
    };
    return t;
}
}  // namespace

std::string_view strategy_name(Strategy s) {
    for (const auto& [k, v] : strategy_table())
        if (k == s) return v;
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
    for (const auto& [k, v] : strategy_table())
        if (v == name) return k;
    return std::nullopt;
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all = [] {
        std::vector<Strategy> v;
        for (const auto& [k, _] : strategy_table()) v.push_back(k);
        return v;
    }();
    return all;
}

std::string strategy_names() {
    std::vector<std::string> names;
    for (const auto& [_, v] : strategy_table()) names.emplace_back(v);
    return text::join(names, ", ");
}

std::string_view source_name(Source s) { return s == Source::Symbolic ? "symbolic" : "semantic"; }

bool RetrievalContext::has(Source s) const {
    for (const auto& b : blocks)
        if (b.source == s) return true;
    return false;
}

void RetrievalContext::append(const RetrievalContext& other) {
    blocks.insert(blocks.end(), other.blocks.begin(), other.blocks.end());
}

std::string RetrievalContext::render() const {
    std::string out;
    for (const auto& b : blocks) {
        if (!out.empty()) out += "\n";
        out += "### " + b.label + "\n\n" + b.text;
        if (out.back() != '\n') out += '\n';
    }
    return out;
}

llm::UsageReport AnswerRecord::usage() const {
    if (!trace) return {};
    return {trace->usage(llm::Phase::Indexing), trace->usage(llm::Phase::Querying),
            trace->usage(llm::Phase::Evaluation)};
}

nlohmann::json AnswerRecord::to_json() const {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : context.blocks)
        blocks.push_back({{"source", source_name(b.source)}, {"label", b.label}, {"text", b.text}});
    auto u = usage();
    auto usage_json = [](const llm::TokenUsage& t) {
        return nlohmann::json{{"prompt_tokens", t.prompt_tokens},
                              {"completion_tokens", t.completion_tokens},
                              {"total_tokens", t.total()}};
    };
    nlohmann::json j = {
        {"qid", qid},
        {"question", question},
        {"strategy", strategy_name(strategy)},
        {"answer", answer},
        {"fallback_used", fallback_used},
        {"context", blocks},
        {"usage", {{"querying", usage_json(u.querying)}, {"evaluation", usage_json(u.evaluation)}}},
    };
    j["symbolic_answer"] = symbolic_answer ? nlohmann::json(*symbolic_answer) : nlohmann::json(nullptr);
    if (route) j["route"] = *route == llm::Route::Symbolic ? "symbolic" : "semantic";
    if (strategy == Strategy::Agentic) j["agent_steps"] = agent_steps;
    return j;
}

// ---------------------------------------------------------------------------

Orchestrator::Orchestrator(Indexes indexes, llm::LlmClient& client, OrchestratorConfig config)
    : indexes_(indexes), client_(client), config_(std::move(config)) {}

void Orchestrator::check_ready(Strategy s) const {
    const bool need_skg = s != Strategy::TkgOnly;
    const bool need_tkg = s != Strategy::SkgOnly;
    if (need_skg && (!indexes_.skg || !indexes_.patterns))
        throw ConfigError(std::string(strategy_name(s)) + " needs the symbolic graph and pattern index");
    if (need_tkg && !indexes_.tkg)
        throw ConfigError(std::string(strategy_name(s)) + " needs the entity graph");
}

RetrievalContext Orchestrator::symbolic_retrieve(std::string_view qid, std::string_view question,
                                                 llm::Trace& trace) {
    RetrievalContext ctx;
    try {
        auto patterns = retrieve_patterns(*indexes_.patterns, client_, question, config_.k_patterns, &trace);
        std::vector<llm::PatternSnippet> snippets;
        for (const auto& p : patterns) snippets.push_back(to_prompt_snippet(p));
        auto prompt = llm::build_sparql_prompt(question, snippets);
        auto candidates =
            llm::generate_sparql_candidates(client_, qid, prompt, config_.sampling, llm::Phase::Querying, &trace);
        auto outcomes = sparql::run_candidates(*indexes_.skg, candidates, config_.exec, config_.parallel_candidates);
        for (std::size_t i = 0; i < outcomes.size(); ++i)
            trace.add("sparql_exec", "candidate " + std::to_string(i) + ": " +
                                         std::string(sparql::status_name(outcomes[i].status)),
                      outcomes[i].query_text, llm::Phase::Querying);
        auto kept = sparql::validate_candidates(outcomes, config_.validation);
        for (std::size_t i = 0; i < kept.size(); ++i)
            ctx.blocks.push_back({Source::Symbolic, "Query result " + std::to_string(i + 1),
                                  sparql::format_markdown(*indexes_.skg, kept[i])});
        trace.add("retrieve_symbolic",
                  std::to_string(candidates.size()) + " candidates, " + std::to_string(kept.size()) + " kept",
                  question, llm::Phase::Querying);
    } catch (const llm::LlmError& e) {
        trace.add("retrieve_symbolic", std::string("provider failure: ") + e.what(), question, llm::Phase::Querying);
        ctx.blocks.clear();
    }
    return ctx;
}

RetrievalContext Orchestrator::semantic_retrieve(std::string_view, std::string_view question, llm::Trace& trace) {
    RetrievalContext ctx;
    try {
        auto chunks = retrieve_chunks(*indexes_.tkg, client_, question, config_.k_entities, config_.k_chunks,
                                      config_.weighting, &trace);
        for (const auto& c : chunks) ctx.blocks.push_back({Source::Semantic, "Passage " + c.id, c.text});
        trace.add("retrieve_semantic", std::to_string(chunks.size()) + " chunks", question, llm::Phase::Querying);
    } catch (const llm::LlmError& e) {
        trace.add("retrieve_semantic", std::string("provider failure: ") + e.what(), question, llm::Phase::Querying);
        ctx.blocks.clear();
    }
    return ctx;
}

namespace {

struct Action {
    enum Kind { RetrieveSymbolic, RetrieveSemantic, Answer, Revise, Stop, Invalid } kind = Invalid;
    std::string arg;
};

Action parse_action(std::string_view response) {
    for (const auto& raw : text::split_lines(response)) {
        auto line = text::trim(raw);
        if (line.empty()) continue;
        auto colon = line.find(':');
        auto head = text::to_upper(text::trim(line.substr(0, colon)));
        auto arg = colon == std::string::npos ? std::string() : text::trim(std::string_view(line).substr(colon + 1));
        // ANSWER and REVISE keep any continuation lines.
        auto rest = [&] {
            auto pos = response.find(raw);
            auto tail = response.substr(pos + raw.size());
            return text::trim(arg + std::string(tail));
        };
        if (head == "RETRIEVE_SYMBOLIC") return {Action::RetrieveSymbolic, arg};
        if (head == "RETRIEVE_SEMANTIC") return {Action::RetrieveSemantic, arg};
        if (head == "ANSWER" && colon != std::string::npos) return {Action::Answer, rest()};
        if (head == "REVISE" && colon != std::string::npos) return {Action::Revise, rest()};
        if (head == "STOP") return {Action::Stop, {}};
        return {};
    }
    return {};
}

bool accepted(std::string_view verdict) {
    auto words = text::alnum_tokens(verdict);
    return !words.empty() && words[0] == "accept";
}

}  // namespace

AgenticResult Orchestrator::agentic_loop(std::string_view qid, std::string_view question, llm::Trace& trace) {
    AgenticResult res;
    std::string history;
    for (std::size_t step = 0; step < config_.max_steps; ++step) {
        res.steps = step + 1;
        auto prompt = llm::build_agent_prompt(question, res.context.render(), history, step, config_.max_steps);
        llm::ChatResult reply;
        try {
            reply = client_.chat({"agent", std::string(qid), static_cast<int>(step)}, prompt, {}, llm::Phase::Querying,
                                 &trace);
        } catch (const llm::LlmError&) {
            break;
        }
        auto action = parse_action(reply.text);
        auto step_label = "step " + std::to_string(step + 1) + ": ";
        switch (action.kind) {
            case Action::RetrieveSymbolic:
            case Action::RetrieveSemantic: {
                // Reformulations change the retrieval question only.
                auto q = action.arg.empty() ? std::string(question) : action.arg;
                bool symbolic = action.kind == Action::RetrieveSymbolic;
                auto found = symbolic ? symbolic_retrieve(qid, q, trace) : semantic_retrieve(qid, q, trace);
                res.context.append(found);
                history += step_label + (symbolic ? "RETRIEVE_SYMBOLIC" : "RETRIEVE_SEMANTIC") + " \"" + q +
                           "\" -> " + std::to_string(found.blocks.size()) + " blocks\n";
                break;
            }
            case Action::Answer:
            case Action::Revise: {
                res.answer = action.arg;
                res.answered = true;
                bool ok = false;
                try {
                    auto verdict = client_.chat({"reflect", std::string(qid), static_cast<int>(step)},
                                                llm::build_reflect_prompt(question, res.context.render(), res.answer),
                                                {}, llm::Phase::Querying, &trace);
                    ok = accepted(verdict.text);
                } catch (const llm::LlmError&) {
                }
                history += step_label + (action.kind == Action::Answer ? "ANSWER" : "REVISE") +
                           (ok ? " accepted\n" : " rejected\n");
                if (ok) return res;
                break;
            }
            case Action::Stop:
                trace.add("agent_stop", step_label, reply.text, llm::Phase::Querying);
                return res;
            case Action::Invalid:
                trace.add("agent_invalid_action", step_label, reply.text, llm::Phase::Querying);
                history += step_label + "unparseable action\n";
                break;
        }
    }
    return res;
}

AnswerRecord Orchestrator::answer(std::string_view qid, std::string_view question, Strategy strategy,
                                  bool want_symbolic) {
    check_ready(strategy);
    AnswerRecord rec;
    rec.qid = qid;
    rec.question = question;
    rec.strategy = strategy;
    rec.trace = std::make_shared<llm::Trace>();
    auto& trace = *rec.trace;

    auto symbolic_then_fallback = [&](bool fallback) {
        rec.context = symbolic_retrieve(qid, question, trace);
        if (fallback && rec.context.empty()) {
            trace.add("fallback", "symbolic context empty", question, llm::Phase::Querying);
            rec.fallback_used = true;
            rec.context = semantic_retrieve(qid, question, trace);
        }
    };

    bool answered = false;
    switch (strategy) {
        case Strategy::TkgOnly: rec.context = semantic_retrieve(qid, question, trace); break;
        case Strategy::SkgOnly: rec.context = symbolic_retrieve(qid, question, trace); break;
        case Strategy::Concat:
            rec.context = symbolic_retrieve(qid, question, trace);
            rec.context.append(semantic_retrieve(qid, question, trace));
            break;
        case Strategy::SkgTkgFallback: symbolic_then_fallback(true); break;
        case Strategy::Router:
        case Strategy::RouterTkgFallback: {
            rec.route = llm::route(client_, qid, question, llm::Phase::Querying, &trace);
            if (*rec.route == llm::Route::Symbolic) {
                symbolic_then_fallback(strategy == Strategy::RouterTkgFallback);
            } else {
                rec.context = semantic_retrieve(qid, question, trace);
            }
            break;
        }
        case Strategy::Agentic: {
            auto res = agentic_loop(qid, question, trace);
            rec.context = std::move(res.context);
            rec.agent_steps = res.steps;
            rec.answer = res.answered ? res.answer : std::string(kNoAnswer);
            answered = true;
            break;
        }
    }

    if (!answered) {
        try {
            rec.answer = llm::generate_answer(client_, qid, question, rec.context.render(), llm::Phase::Querying,
                                              &trace)
                             .text;
        } catch (const llm::LlmError& e) {
            rec.answer.clear();
            trace.add("answer_failed", e.what(), question, llm::Phase::Querying);
        }
    }
    if (want_symbolic) {
        try {
            rec.symbolic_answer =
                llm::extract_symbolic_answer(client_, qid, question, rec.answer, llm::Phase::Evaluation, &trace);
        } catch (const llm::LlmError& e) {
            rec.symbolic_answer = std::vector<std::string>{};
            trace.add("symbolic_failed", e.what(), rec.answer, llm::Phase::Evaluation);
        }
    }
    return rec;
}

}  // namespace dualgraph
