#include "dualgraph/cli.hpp"

#include <filesystem>
#include <memory>
#include <ostream>

#include <CLI11.hpp>

#include "dualgraph/eval.hpp"
#include "dualgraph/pipeline.hpp"
#include "dualgraph/sparql.hpp"
#include "dualgraph/text.hpp"

namespace dualgraph {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
    std::string provider = "mock";
    std::string config_path;
    std::string mock_script;
    std::string artifacts = "artifacts";
};

struct ProviderBundle {
    std::unique_ptr<llm::Provider> provider;
    llm::LlmConfig config;
    llm::UsageAccumulator usage;
    std::unique_ptr<llm::LlmClient> client;
};

std::unique_ptr<ProviderBundle> make_provider(const GlobalOptions& g) {
    auto b = std::make_unique<ProviderBundle>();
    if (!g.config_path.empty()) b->config = llm::load_llm_config(g.config_path);
    if (g.provider == "mock") {
        b->provider = g.mock_script.empty() ? std::make_unique<llm::MockProvider>()
                                            : std::make_unique<llm::MockProvider>(llm::MockProvider::from_file(g.mock_script));
    } else {
        b->provider = std::make_unique<llm::HttpProvider>(b->config.http);
    }
    b->client = std::make_unique<llm::LlmClient>(*b->provider, b->usage, b->config.max_in_flight);
    return b;
}

std::string usage_line(const llm::TokenUsage& u) {
    return std::to_string(u.prompt_tokens) + " prompt + " + std::to_string(u.completion_tokens) +
           " completion = " + std::to_string(u.total());
}

Strategy strategy_or_throw(const std::string& name) {
    auto s = parse_strategy(name);
    if (!s) throw ConfigError("unknown strategy '" + name + "'; valid strategies: " + strategy_names());
    return *s;
}

struct QueryOptions {
    std::string question;
    std::string qid = "cli";
    std::string strategy = "skg_tkg_fallback";
    bool symbolic = false;
    bool json = false;
    std::string trace_out;
};

struct TuningOptions {
    std::size_t k_patterns = 5;
    std::size_t k_entities = 20;
    std::size_t k_chunks = 5;
    std::size_t max_steps = 6;
    bool linear_votes = false;
    bool discard_empty = false;
};

OrchestratorConfig orchestrator_config(const TuningOptions& t, const llm::LlmConfig& cfg) {
    OrchestratorConfig oc;
    oc.k_patterns = t.k_patterns;
    oc.k_entities = t.k_entities;
    oc.k_chunks = t.k_chunks;
    oc.max_steps = t.max_steps;
    oc.weighting = t.linear_votes ? VoteWeighting::Linear : VoteWeighting::InverseRank;
    oc.validation.discard_empty_unconditionally = t.discard_empty;
    oc.sampling = cfg.candidate_sampling;
    return oc;
}

void add_tuning(CLI::App* cmd, TuningOptions& t) {
    cmd->add_option("--k-patterns", t.k_patterns, "Patterns retrieved per kind")->capture_default_str();
    cmd->add_option("--k-entities", t.k_entities, "Entities voting for chunks")->capture_default_str();
    cmd->add_option("--k-chunks", t.k_chunks, "Chunks returned by semantic retrieval")->capture_default_str();
    cmd->add_option("--max-steps", t.max_steps, "Agentic step bound")->capture_default_str();
    cmd->add_flag("--linear-votes", t.linear_votes, "Linear rank decay instead of 1/rank");
    cmd->add_flag("--discard-empty", t.discard_empty, "Drop empty query results even when nothing else survives");
}

int cmd_fixture(int n, std::uint64_t seed, const std::string& out, std::ostream& os) {
    gen_fixture_corpus(n, seed, out);
    os << "wrote " << n << " product pages to " << out << "\n";
    return 0;
}

int cmd_build(const GlobalOptions& g, const std::string& corpus, BuildTargets targets, const BuildOptions& options,
              std::ostream& os, std::ostream& es) {
    if (!fs::is_directory(corpus)) {
        es << "error: corpus directory not found: " << corpus << "\n";
        return 2;
    }
    auto p = make_provider(g);
    llm::Trace trace;
    auto summary = build_artifacts(corpus, g.artifacts, targets, *p->client, &trace, options);
    for (const auto& d : summary.diagnostics) es << "warning: " << d << "\n";
    os << "documents: " << summary.documents << "\n";
    if (targets.tkg) os << "chunks: " << summary.chunks << "\nentities: " << summary.entities << "\n";
    if (targets.skg || targets.patterns)
        os << "triples: " << summary.base_triples << " base, " << summary.derived_triples << " derived\n"
           << "aligned nodes: " << summary.aligned_nodes << "\n";
    if (targets.patterns) os << "patterns: " << summary.patterns << "\n";
    for (const auto& w : summary.written) os << "wrote " << w << "\n";
    os << "indexing tokens: " << usage_line(p->usage.total(llm::Phase::Indexing)) << "\n";
    return 0;
}

int cmd_query(const GlobalOptions& g, const QueryOptions& q, const TuningOptions& t, std::ostream& os) {
    auto strategy = strategy_or_throw(q.strategy);
    auto loaded = load_artifacts(g.artifacts);
    auto p = make_provider(g);
    Orchestrator orch(loaded.view(), *p->client, orchestrator_config(t, p->config));
    auto rec = orch.answer(q.qid, q.question, strategy, q.symbolic);
    if (!q.trace_out.empty()) text::write_file(q.trace_out, rec.trace->to_jsonl());
    if (q.json) {
        os << rec.to_json().dump(2) << "\n";
        return 0;
    }
    os << rec.answer << "\n";
    if (rec.symbolic_answer) os << "\nsymbolic answer: " << text::join(*rec.symbolic_answer, ", ") << "\n";
    if (rec.fallback_used) os << "\n(semantic fallback used)\n";
    auto u = rec.usage();
    os << "\nquerying tokens: " << usage_line(u.querying) << "\n";
    if (q.symbolic) os << "evaluation tokens: " << usage_line(u.evaluation) << "\n";
    return 0;
}

struct EvalOptions {
    std::string dataset;
    std::string strategies = "skg_tkg_fallback";
    std::size_t repeats = 1;
    std::string out_dir;
    bool collapse_ranges = false;
    bool no_judge = false;
};

int cmd_eval(const GlobalOptions& g, const EvalOptions& e, const TuningOptions& t, std::ostream& os,
             std::ostream& es) {
    auto items = load_benchmark(e.dataset);
    if (items.empty()) {
        es << "error: dataset has no items\n";
        return 2;
    }
    BenchmarkOptions bo;
    bo.strategies.clear();
    for (const auto& name : text::split(e.strategies, ',')) bo.strategies.push_back(strategy_or_throw(text::trim(name)));
    bo.repeats = e.repeats;
    bo.collapse_ranges = e.collapse_ranges;
    bo.judge = !e.no_judge;
    auto loaded = load_artifacts(g.artifacts);
    auto p = make_provider(g);
    bo.workers = p->config.max_in_flight;
    Orchestrator orch(loaded.view(), *p->client, orchestrator_config(t, p->config));
    llm::Trace judge_trace;
    auto report = run_benchmark(items, orch, *p->client, bo, loaded.skg ? &*loaded.skg : nullptr, &judge_trace);

    fs::path out = e.out_dir.empty() ? fs::path(g.artifacts) : fs::path(e.out_dir);
    fs::create_directories(out);
    text::write_file((out / "report.json").string(), report.to_json().dump(2) + "\n");
    text::write_file((out / "report.md").string(), report.to_markdown());
    std::string traces;
    for (const auto& run : report.runs) {
        for (const auto& line : text::split_lines(run.record.trace ? run.record.trace->to_jsonl() : "")) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            j["qid"] = run.qid;
            j["strategy"] = strategy_name(run.strategy);
            j["repeat"] = run.repeat;
            traces += j.dump() + "\n";
        }
    }
    traces += judge_trace.to_jsonl();
    text::write_file((out / "traces.jsonl").string(), traces);
    for (const auto& run : report.runs)
        if (!run.error.empty()) es << "warning: " << run.qid << " (" << strategy_name(run.strategy) << "): " << run.error << "\n";
    os << report.to_markdown();
    os << "wrote " << (out / "report.json").string() << " and " << (out / "report.md").string() << "\n";
    return 0;
}

int cmd_inspect_stats(const GlobalOptions& g, std::ostream& os) {
    auto graph = load_graph((fs::path(g.artifacts) / artifact::kGraph).string());
    auto s = stats(graph);
    os << "triples: " << s.triples << "\nnodes: " << s.nodes << "\n\nclasses:\n";
    for (const auto& [c, n] : s.per_class) os << "  " << c << " " << n << "\n";
    os << "\npredicates:\n";
    for (const auto& [p, n] : s.per_predicate) os << "  " << p << " " << n << "\n";
    return 0;
}

int cmd_inspect_sparql(const GlobalOptions& g, const std::string& file, std::ostream& os) {
    auto graph = load_graph((fs::path(g.artifacts) / artifact::kGraph).string());
    auto query = sparql::parse_query(text::read_file(file));
    os << sparql::format_table(graph, sparql::execute(graph, query));
    return 0;
}

int cmd_inspect_rules(const GlobalOptions& g, const std::string& rules_path, const std::string& corpus,
                      std::ostream& os, std::ostream& es) {
    auto rules = load_rules(rules_path.empty() ? std::nullopt : std::optional<std::string>(rules_path));
    Graph base;
    if (!corpus.empty()) {
        auto loaded = load_corpus(corpus);
        for (const auto& d : loaded.diagnostics) es << "warning: " << d << "\n";
        base = build_skg(loaded.corpus);
    } else {
        base = load_graph((fs::path(g.artifacts) / artifact::kGraph).string());
    }
    datalog::ApplyStats st;
    auto enriched = datalog::apply_rules(base, rules, {}, &st);
    os << "rules: " << rules.size() << "\n" << datalog::print_rules(rules);
    os << "base triples: " << base.size() << "\nderived triples: " << st.derived << "\niterations: " << st.iterations
       << "\n";
    return 0;
}

int cmd_inspect_patterns(const GlobalOptions& g, const std::string& question, std::size_t k, std::ostream& os) {
    auto index = PatternIndex::load((fs::path(g.artifacts) / artifact::kPatterns).string());
    std::vector<PatternInstance> shown;
    if (question.empty()) {
        shown = index.patterns();
        for (auto kind : kPatternKinds) os << kind_name(kind) << ": " << index.count(kind) << "\n";
        os << "\n";
    } else {
        auto p = make_provider(g);
        shown = retrieve_patterns(index, *p->client, question, k);
    }
    for (const auto& pat : shown) os << "[" << kind_name(pat.kind) << "] " << pat.linearization << "\n    " << pat.snippet << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dual-graph retrieval over product specifications"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--provider", g.provider, "LLM provider")->check(CLI::IsMember({"mock", "real"}))->capture_default_str();
    app.add_option("--config", g.config_path, "Provider configuration (JSON)");
    app.add_option("--mock-script", g.mock_script, "Scripted responses for the mock provider (JSON)");
    app.add_option("--artifacts", g.artifacts, "Artifact directory")->capture_default_str();

    int n_products = 10;
    std::uint64_t seed = 7;
    std::string fixture_out;
    auto* fixture = app.add_subcommand("fixture", "Generate a synthetic corpus");
    fixture->add_option("--n", n_products, "Number of products")->capture_default_str();
    fixture->add_option("--seed", seed, "Random seed")->capture_default_str();
    fixture->add_option("--out", fixture_out, "Output directory")->required();

    std::string corpus;
    bool only_skg = false, only_tkg = false, only_patterns = false;
    std::string rules_path, units_path;
    BuildOptions build_options;
    auto* build = app.add_subcommand("build", "Build graph, entity and pattern artifacts");
    build->add_option("--corpus", corpus, "Corpus root")->required();
    build->add_flag("--skg", only_skg, "Build the symbolic graph");
    build->add_flag("--tkg", only_tkg, "Build the entity graph");
    build->add_flag("--patterns", only_patterns, "Build the pattern index");
    build->add_option("--rules", rules_path, "Datalog rules file");
    build->add_option("--units", units_path, "Unit alias table");
    build->add_option("--max-patterns-per-kind", build_options.patterns.max_per_kind, "Pattern cap per kind (0: none)")
        ->capture_default_str();
    build->add_option("--max-chunk-tokens", build_options.chunking.max_tokens, "Chunk size in words")->capture_default_str();
    build->add_flag("--exclude-spec-appendix", build_options.chunking.exclude_spec_appendix,
                    "Leave the plain-text specification sections out of the entity graph");

    QueryOptions qo;
    TuningOptions query_tuning;
    auto* query = app.add_subcommand("query", "Answer one question");
    query->add_option("question", qo.question, "Question text")->required();
    query->add_option("--strategy", qo.strategy, "One of: " + strategy_names())->capture_default_str();
    query->add_option("--qid", qo.qid, "Question id used in prompt tags")->capture_default_str();
    query->add_flag("--symbolic", qo.symbolic, "Also extract the symbolic answer list");
    query->add_flag("--json", qo.json, "Print the answer record as JSON");
    query->add_option("--trace-out", qo.trace_out, "Write the trace as JSON lines");
    add_tuning(query, query_tuning);

    EvalOptions eo;
    TuningOptions eval_tuning;
    auto* eval = app.add_subcommand("eval", "Run a benchmark file");
    eval->add_option("--dataset", eo.dataset, "Benchmark JSON")->required();
    eval->add_option("--strategies", eo.strategies, "Comma-separated strategies")->capture_default_str();
    eval->add_option("--repeats", eo.repeats, "Runs per item")->capture_default_str()->check(CLI::PositiveNumber);
    eval->add_option("--out", eo.out_dir, "Report directory (default: artifacts)");
    eval->add_flag("--collapse-ranges", eo.collapse_ranges, "Match products at range level where gold names ranges");
    eval->add_flag("--no-judge", eo.no_judge, "Skip pairwise judging");
    add_tuning(eval, eval_tuning);

    auto* inspect = app.add_subcommand("inspect", "Print diagnostics");
    inspect->require_subcommand(1);
    auto* i_stats = inspect->add_subcommand("stats", "Class and predicate counts");
    std::string sparql_file;
    auto* i_sparql = inspect->add_subcommand("sparql", "Execute a query file");
    i_sparql->add_option("file", sparql_file, "Query file")->required();
    std::string inspect_rules, inspect_corpus;
    auto* i_rules = inspect->add_subcommand("rules", "Dry-run the rules and count derived triples");
    i_rules->add_option("--rules", inspect_rules, "Rules file (default: built-in)");
    i_rules->add_option("--corpus", inspect_corpus, "Build the base graph from this corpus");
    std::string pattern_question;
    std::size_t pattern_k = 5;
    auto* i_patterns = inspect->add_subcommand("patterns", "List or retrieve patterns");
    i_patterns->add_option("--question", pattern_question, "Retrieve for this question");
    i_patterns->add_option("--k", pattern_k, "Patterns per kind")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*fixture) return cmd_fixture(n_products, seed, fixture_out, out);
        if (*build) {
            BuildTargets targets;
            if (only_skg || only_tkg || only_patterns) targets = {only_skg, only_tkg, only_patterns};
            if (!rules_path.empty()) build_options.rules_path = rules_path;
            if (!units_path.empty()) build_options.units_path = units_path;
            return cmd_build(g, corpus, targets, build_options, out, err);
        }
        if (*query) return cmd_query(g, qo, query_tuning, out);
        if (*eval) return cmd_eval(g, eo, eval_tuning, out, err);
        if (*i_stats) return cmd_inspect_stats(g, out);
        if (*i_sparql) return cmd_inspect_sparql(g, sparql_file, out);
        if (*i_rules) return cmd_inspect_rules(g, inspect_rules, inspect_corpus, out, err);
        if (*i_patterns) return cmd_inspect_patterns(g, pattern_question, pattern_k, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace dualgraph
