#include "dualgraph/eval.hpp"

#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

#include "dualgraph/normalize.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph {

namespace {
const std::vector<std::pair<QuestionCategory, std::string_view>>& category_table() {
    static const std::vector<std::pair<QuestionCategory, std::string_view>> t = {
        {QuestionCategory::Inverse, "inverse"},
        {QuestionCategory::MultiCondition, "multi_condition"},
        {QuestionCategory::GroupComparison, "group_comparison"},
        {QuestionCategory::Reasoning, "reasoning"},
    };
    return t;
}
}  // namespace

std::string_view category_name(QuestionCategory c) {
    for (const auto& [k, v] : category_table())
        if (k == c) return v;
    return "?";
}

std::optional<QuestionCategory> parse_category(std::string_view s) {
    for (const auto& [k, v] : category_table())
        if (v == s) return k;
    return std::nullopt;
}

std::vector<QAItem> parse_benchmark(const nlohmann::json& j) {
    if (!j.is_array()) throw EvalError("benchmark must be a JSON array");
    std::vector<QAItem> items;
    std::set<std::string> ids;
    for (const auto& r : j) {
        QAItem it;
        try {
            it.id = r.at("id").get<std::string>();
            it.question = r.at("question").get<std::string>();
            if (auto a = r.find("answer_text"); a != r.end() && !a->is_null()) it.answer_text = a->get<std::string>();
            if (auto a = r.find("answer_list"); a != r.end() && !a->is_null()) {
                std::vector<std::string> names;
                std::set<std::string> seen;
                for (const auto& n : *a) {
                    auto id = canonical_id(n.get<std::string>()).str();
                    if (seen.insert(id).second) names.push_back(id);
                }
                it.answer_list = std::move(names);
            }
            it.objective = r.value("objective", true);
            auto cat = parse_category(r.at("category").get<std::string>());
            if (!cat) throw EvalError("unknown category " + r.at("category").get<std::string>());
            it.category = *cat;
        } catch (const nlohmann::json::exception& e) {
            throw EvalError("bad benchmark record: " + std::string(e.what()));
        } catch (const NormalizeError& e) {
            throw EvalError("bad answer name in " + it.id + ": " + e.what());
        }
        if (!it.answer_text && !it.answer_list) throw EvalError(it.id + ": no gold answer");
        if (!ids.insert(it.id).second) throw EvalError("duplicate item id " + it.id);
        items.push_back(std::move(it));
    }
    return items;
}

std::vector<QAItem> load_benchmark(const std::string& path) {
    try {
        return parse_benchmark(nlohmann::json::parse(text::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw EvalError("cannot parse " + path + ": " + e.what());
    }
}

PRF make_prf(double p, double r) { return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0}; }

PRF list_match(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
    std::set<std::string> pred(predicted.begin(), predicted.end());
    std::set<std::string> ref(gold.begin(), gold.end());
    std::size_t hit = 0;
    for (const auto& p : pred) hit += ref.count(p);
    double p = pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
    double r = ref.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(ref.size());
    return make_prf(p, r);
}

std::vector<std::string> collapse_to_ranges(const std::vector<std::string>& predicted,
                                            const std::vector<std::string>& gold, const Graph& skg) {
    std::set<std::string> ref(gold.begin(), gold.end());
    std::vector<std::string> out;
    for (const auto& p : predicted) {
        std::string mapped = p;
        for (const auto& r : skg.objects(Term::iri(vocab::node(p)), vocab::kVariantOf)) {
            std::string id(vocab::local_name(r.text));
            if (ref.count(id)) {
                mapped = id;
                break;
            }
        }
        out.push_back(mapped);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Factual correctness

std::optional<std::vector<std::string>> parse_claims(std::string_view response) {
    auto trimmed = text::trim(response);
    if (text::to_upper(trimmed) == "NONE") return std::vector<std::string>{};
    std::vector<std::string> claims;
    for (const auto& raw : text::split_lines(response)) {
        auto line = text::trim(raw);
        if (line.rfind("- ", 0) != 0) continue;
        auto c = text::trim(line.substr(2));
        if (!c.empty()) claims.push_back(c);
    }
    if (claims.empty()) return std::nullopt;
    return claims;
}

std::optional<std::vector<bool>> parse_verdicts(std::string_view response, std::size_t n_claims) {
    std::vector<bool> out(n_claims, false);
    bool any = false;
    for (const auto& raw : text::split_lines(response)) {
        auto line = text::trim(raw);
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::size_t n = 0;
        try {
            n = std::stoul(line.substr(0, colon));
        } catch (const std::exception&) {
            continue;
        }
        auto verdict = text::to_upper(text::trim(std::string_view(line).substr(colon + 1)));
        if (n == 0 || n > n_claims) continue;
        if (verdict == "SUPPORTED") {
            out[n - 1] = true;
            any = true;
        } else if (verdict == "UNSUPPORTED") {
            any = true;
        }
    }
    if (!any) return std::nullopt;
    return out;
}

FactualResult factual_correctness(llm::LlmClient& client, std::string_view qid, std::string_view answer,
                                  std::string_view gold, llm::Trace* trace) {
    FactualResult res;
    if (text::trim(answer).empty()) {
        res.scores = PRF{};
        return res;
    }
    const std::string id(qid);
    auto decompose = [&](std::string_view body, int index) {
        auto r = client.chat({"decompose", id, index}, llm::build_decompose_prompt(body), {}, llm::Phase::Evaluation,
                             trace);
        return parse_claims(r.text);
    };
    auto a_claims = decompose(answer, 0);
    auto g_claims = decompose(gold, 1);
    if (!a_claims || !g_claims) {
        res.diagnostic = id + ": unparseable claim decomposition";
        return res;
    }
    res.answer_claims = a_claims->size();
    res.gold_claims = g_claims->size();

    auto verify = [&](const std::vector<std::string>& claims, std::string_view reference,
                      int index) -> std::optional<std::size_t> {
        if (claims.empty()) return 0;
        auto r = client.chat({"verify", id, index}, llm::build_verify_prompt(claims, reference), {},
                             llm::Phase::Evaluation, trace);
        auto v = parse_verdicts(r.text, claims.size());
        if (!v) return std::nullopt;
        std::size_t n = 0;
        for (bool b : *v) n += b;
        return n;
    };
    auto sa = verify(*a_claims, gold, 0);
    auto sg = verify(*g_claims, answer, 1);
    if (!sa || !sg) {
        res.diagnostic = id + ": unparseable verification";
        return res;
    }
    res.answer_supported = *sa;
    res.gold_supported = *sg;
    double p = res.answer_claims ? static_cast<double>(*sa) / static_cast<double>(res.answer_claims) : 0.0;
    double r = res.gold_claims ? static_cast<double>(*sg) / static_cast<double>(res.gold_claims) : 0.0;
    res.scores = make_prf(p, r);
    return res;
}

// ---------------------------------------------------------------------------
// Judge

std::optional<char> parse_judge_verdict(std::string_view response) {
    auto words = text::alnum_tokens(response);
    if (words.size() != 1) return std::nullopt;
    if (words[0] == "a") return 'A';
    if (words[0] == "b") return 'B';
    return std::nullopt;
}

JudgeResult pairwise_judge(llm::LlmClient& client, std::string_view qid, std::string_view question,
                           std::string_view answer_a, std::string_view answer_b, llm::Trace* trace) {
    JudgeResult res;
    for (int order = 0; order < 2; ++order) {
        auto first = order == 0 ? answer_a : answer_b;
        auto second = order == 0 ? answer_b : answer_a;
        auto r = client.chat({"judge", std::string(qid), order}, llm::build_judge_prompt(question, first, second), {},
                             llm::Phase::Evaluation, trace);
        auto v = parse_judge_verdict(r.text);
        if (!v) {
            ++res.no_contest;
            continue;
        }
        bool first_wins = *v == 'A';
        bool a_wins = order == 0 ? first_wins : !first_wins;
        ++(a_wins ? res.wins_a : res.wins_b);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Benchmark

const StrategySummary* MetricReport::find(Strategy s) const {
    for (const auto& x : summary)
        if (x.strategy == s) return &x;
    return nullptr;
}

namespace {

std::optional<double> mean(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json prf_json(const std::optional<PRF>& p) {
    if (!p) return nullptr;
    return {{"precision", p->precision}, {"recall", p->recall}, {"f1", p->f1}};
}

nlohmann::json usage_json(const llm::TokenUsage& u) {
    return {{"prompt_tokens", u.prompt_tokens}, {"completion_tokens", u.completion_tokens}, {"total_tokens", u.total()}};
}

std::string fmt(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return buf;
}

}  // namespace

MetricReport run_benchmark(const std::vector<QAItem>& items, Orchestrator& orchestrator, llm::LlmClient& client,
                           const BenchmarkOptions& options, const Graph* skg, llm::Trace* eval_trace) {
    if (items.empty()) throw EvalError("empty benchmark");
    if (options.strategies.empty()) throw EvalError("no strategies selected");
    if (options.repeats == 0) throw EvalError("repeats must be positive");
    for (auto s : options.strategies) orchestrator.check_ready(s);

    MetricReport report;
    report.repeats = options.repeats;
    struct Unit {
        std::size_t item;
        Strategy strategy;
        std::size_t repeat;
    };
    std::vector<Unit> units;
    for (auto s : options.strategies)
        for (std::size_t i = 0; i < items.size(); ++i)
            for (std::size_t r = 0; r < options.repeats; ++r) units.push_back({i, s, r});
    report.runs.resize(units.size());

    auto run_unit = [&](std::size_t u) {
        const auto& unit = units[u];
        const auto& item = items[unit.item];
        auto& run = report.runs[u];
        run.qid = item.id;
        run.strategy = unit.strategy;
        run.repeat = unit.repeat;
        try {
            run.record = orchestrator.answer(item.id, item.question, unit.strategy, item.answer_list.has_value());
            if (item.answer_list) {
                auto pred = run.record.symbolic_answer.value_or(std::vector<std::string>{});
                if (options.collapse_ranges && skg) pred = collapse_to_ranges(pred, *item.answer_list, *skg);
                run.lm = list_match(pred, *item.answer_list);
            }
            if (item.answer_text) {
                run.fc = factual_correctness(client, item.id, run.record.answer, *item.answer_text,
                                             run.record.trace.get());
            }
        } catch (const std::exception& e) {
            run.error = e.what();
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, units.size()));
    if (workers == 1) {
        for (std::size_t u = 0; u < units.size(); ++u) run_unit(u);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t u = next++; u < units.size(); u = next++) run_unit(u);
            });
        for (auto& t : pool) t.join();
    }

    // Pairwise judging between every pair of strategies, per item and repeat.
    auto find_run = [&](Strategy s, std::size_t item, std::size_t repeat) -> const ItemRun& {
        std::size_t si = 0;
        while (options.strategies[si] != s) ++si;
        return report.runs[(si * items.size() + item) * options.repeats + repeat];
    };
    if (options.judge && options.strategies.size() > 1) {
        for (auto s : options.strategies) report.judge[s] = {};
        for (std::size_t a = 0; a < options.strategies.size(); ++a)
            for (std::size_t b = a + 1; b < options.strategies.size(); ++b)
                for (std::size_t i = 0; i < items.size(); ++i)
                    for (std::size_t r = 0; r < options.repeats; ++r) {
                        const auto& ra = find_run(options.strategies[a], i, r);
                        const auto& rb = find_run(options.strategies[b], i, r);
                        if (!ra.error.empty() || !rb.error.empty()) continue;
                        auto j = pairwise_judge(client, items[i].id, items[i].question, ra.record.answer,
                                                rb.record.answer, eval_trace);
                        auto& ja = report.judge[options.strategies[a]];
                        auto& jb = report.judge[options.strategies[b]];
                        ja.wins_a += j.wins_a;
                        ja.wins_b += j.wins_b;
                        ja.no_contest += j.no_contest;
                        jb.wins_a += j.wins_b;
                        jb.wins_b += j.wins_a;
                        jb.no_contest += j.no_contest;
                    }
    }

    for (auto s : options.strategies) {
        StrategySummary sum;
        sum.strategy = s;
        std::vector<double> fc, lm, obj_lm;
        std::map<std::string, std::vector<double>> by_cat;
        for (std::size_t i = 0; i < items.size(); ++i) {
            std::vector<double> item_lm, item_fc;
            for (std::size_t r = 0; r < options.repeats; ++r) {
                const auto& run = find_run(s, i, r);
                if (run.lm) item_lm.push_back(run.lm->f1);
                if (run.fc.scores) item_fc.push_back(run.fc.scores->f1);
                if (run.record.fallback_used) ++sum.fallbacks;
                auto u = run.record.usage();
                sum.querying += u.querying;
                sum.evaluation += u.evaluation;
            }
            if (auto m = mean(item_lm)) {
                lm.push_back(*m);
                if (items[i].objective) obj_lm.push_back(*m);
                by_cat[std::string(category_name(items[i].category))].push_back(*m);
            }
            if (auto m = mean(item_fc)) fc.push_back(*m);
        }
        sum.fc_f1 = mean(fc);
        sum.lm_f1 = mean(lm);
        sum.obj_lm_f1 = mean(obj_lm);
        for (const auto& [c, v] : by_cat) sum.lm_f1_by_category[c] = *mean(v);
        if (auto it = report.judge.find(s); it != report.judge.end() && it->second.decided())
            sum.laaj = it->second.win_rate_a();
        report.summary.push_back(std::move(sum));
    }
    return report;
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["repeats"] = repeats;
    j["indexing_usage"] = usage_json(indexing);
    nlohmann::json strategies = nlohmann::json::array();
    for (const auto& s : summary) {
        nlohmann::json cats = nlohmann::json::object();
        for (const auto& [c, v] : s.lm_f1_by_category) cats[c] = v;
        strategies.push_back({{"strategy", strategy_name(s.strategy)},
                              {"fc_f1", opt(s.fc_f1)},
                              {"lm_f1", opt(s.lm_f1)},
                              {"laaj", opt(s.laaj)},
                              {"obj_lm_f1", opt(s.obj_lm_f1)},
                              {"lm_f1_by_category", cats},
                              {"fallbacks", s.fallbacks},
                              {"querying_usage", usage_json(s.querying)},
                              {"evaluation_usage", usage_json(s.evaluation)}});
    }
    j["strategies"] = strategies;
    // Per-item score arrays, one entry per repeat.
    std::map<std::pair<std::string, std::string>, nlohmann::json> per_item;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& r : runs) {
        auto key = std::make_pair(std::string(strategy_name(r.strategy)), r.qid);
        auto [it, fresh] = per_item.emplace(key, nlohmann::json{{"strategy", key.first},
                                                                {"qid", key.second},
                                                                {"lm", nlohmann::json::array()},
                                                                {"fc", nlohmann::json::array()},
                                                                {"answers", nlohmann::json::array()},
                                                                {"fallback_used", nlohmann::json::array()},
                                                                {"errors", nlohmann::json::array()}});
        if (fresh) order.push_back(key);
        auto& e = it->second;
        e["lm"].push_back(prf_json(r.lm));
        e["fc"].push_back(prf_json(r.fc.scores));
        e["answers"].push_back(r.record.answer);
        e["fallback_used"].push_back(r.record.fallback_used);
        if (!r.error.empty()) e["errors"].push_back(r.error);
        if (!r.fc.diagnostic.empty()) e["errors"].push_back(r.fc.diagnostic);
    }
    nlohmann::json items = nlohmann::json::array();
    for (const auto& k : order) items.push_back(per_item[k]);
    j["items"] = items;
    return j;
}

std::string MetricReport::to_markdown() const {
    std::string out = "| Strategy | FC (F1) | LM (F1) | LaaJ | Obj. LM (F1) | Fallbacks | Query tokens |\n";
    out += "| --- | --- | --- | --- | --- | --- | --- |\n";
    for (const auto& s : summary) {
        out += "| " + std::string(strategy_name(s.strategy)) + " | " + fmt(s.fc_f1) + " | " + fmt(s.lm_f1) + " | " +
               fmt(s.laaj) + " | " + fmt(s.obj_lm_f1) + " | " + std::to_string(s.fallbacks) + " | " +
               std::to_string(s.querying.total()) + " |\n";
    }
    std::set<std::string> cats;
    for (const auto& s : summary)
        for (const auto& [c, _] : s.lm_f1_by_category) cats.insert(c);
    if (!cats.empty()) {
        out += "\n| Strategy |";
        for (const auto& c : cats) out += " " + c + " |";
        out += "\n| --- |";
        for (std::size_t i = 0; i < cats.size(); ++i) out += " --- |";
        out += "\n";
        for (const auto& s : summary) {
            out += "| " + std::string(strategy_name(s.strategy)) + " |";
            for (const auto& c : cats) {
                auto it = s.lm_f1_by_category.find(c);
                out += " " + fmt(it == s.lm_f1_by_category.end() ? std::nullopt : std::optional<double>(it->second)) +
                       " |";
            }
            out += "\n";
        }
    }
    out += "\nIndexing tokens: " + std::to_string(indexing.total()) + "\n";
    return out;
}

}  // namespace dualgraph
