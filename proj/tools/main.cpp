#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include "semtree/benchmark.hpp"
#include "semtree/build_bottom_up.hpp"
#include "semtree/build_top_down.hpp"
#include "semtree/clustering.hpp"
#include "semtree/ingest.hpp"
#include "semtree/llm_client.hpp"
#include "semtree/synthetic.hpp"
#include "semtree/traversal.hpp"
#include "semtree/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace semtree;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;
constexpr int kExitData = 4;

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// The snapshot captures everything needed to reproduce a run; where the
// outputs land is not part of that, so the flag is dropped.
std::string reproducible_snapshot(const std::string& config_text) {
    std::istringstream in(config_text);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.rfind("out-dir", 0) == 0) continue;
        out += line;
        out += '\n';
    }
    return out;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const json& inputs,
                    const std::vector<std::string>& outputs) {
    json manifest;
    manifest["command"] = command;
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

LlmEndpointConfig load_llm_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open llm config: " + path);
    json j;
    in >> j;
    LlmEndpointConfig config;
    config.base_url = j.at("base_url").get<std::string>();
    config.model_name = j.value("model_name", "default");
    config.api_key_env_var = j.value("api_key_env_var", "");
    config.thinking_budget = j.value("thinking_budget", -1);
    config.max_retries = j.value("max_retries", 2);
    config.timeout_seconds = j.value("timeout_seconds", 60.0);
    config.temperature = j.value("temperature", 0.0);
    config.retry_backoff_ms = j.value("retry_backoff_ms", 500);
    config.max_in_flight = j.value("max_in_flight", 4);
    return config;
}

// Shared search knobs for the online commands, defaults per the standard
// operating point (B=2, N=20, alpha=0.5, l=10).
struct SearchFlags {
    SearchConfig config;
    std::string calibration = "full";

    void attach(CLI::App* cmd) {
        cmd->add_option("-B,--beam", config.beam_size, "beam width per iteration")
            ->capture_default_str();
        cmd->add_option("-N,--iterations", config.iterations, "search iterations")
            ->capture_default_str();
        cmd->add_option("--alpha", config.ema_alpha, "path relevance momentum in [0,1]")
            ->capture_default_str();
        cmd->add_option("--ell", config.leaf_aug_count, "cross-branch leaves per leaf slate")
            ->capture_default_str();
        cmd->add_option("-K,--top-k", config.top_k, "ranked list size")
            ->capture_default_str();
        cmd->add_option("--seed", config.seed, "root random seed")->capture_default_str();
        cmd->add_option("--relevance-definition", config.relevance_definition,
                        "definition text injected into scoring prompts");
        cmd->add_option("--calibration", calibration, "score calibration: full|mean|last")
            ->check(CLI::IsMember({"full", "mean", "last"}))
            ->capture_default_str();
        cmd->add_option("--solver-steps", config.calibration.steps,
                        "calibration solver steps per re-solve")
            ->capture_default_str();
        cmd->add_option("--solver-lr", config.calibration.learning_rate,
                        "calibration solver learning rate")
            ->capture_default_str();
    }

    SearchConfig resolve() const {
        SearchConfig out = config;
        if (calibration == "mean") out.calibration.mode = CalibrationMode::MeanOnly;
        else if (calibration == "last") out.calibration.mode = CalibrationMode::LastScore;
        else out.calibration.mode = CalibrationMode::Full;
        return out;
    }
};

json search_config_json(const SearchConfig& config) {
    json j;
    j["beam_size"] = config.beam_size;
    j["iterations"] = config.iterations;
    j["ema_alpha"] = config.ema_alpha;
    j["leaf_aug_count"] = config.leaf_aug_count;
    j["top_k"] = config.top_k;
    j["seed"] = config.seed;
    j["scorer_call_budget"] = config.scorer_call_budget;
    j["calibration_mode"] = config.calibration.mode == CalibrationMode::Full ? "full"
                            : config.calibration.mode == CalibrationMode::MeanOnly ? "mean"
                                                                                   : "last";
    return j;
}

std::string ranked_jsonl(const SearchResult& result) {
    std::string out;
    int rank = 1;
    for (const auto& [doc, rel] : result.ranked) {
        json row;
        row["rank"] = rank++;
        row["doc_id"] = doc;
        row["path_relevance"] = format_fixed(rel, 6);
        out += row.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// build-tree

struct BuildTreeArgs {
    std::string corpus_path;
    std::string strategy = "bottom-up";
    std::string out_dir;
    std::string summarizer = "extractive";
    std::string backend = "heuristic";
    std::string llm_config_path;
    std::string prompt_dir;
    std::string field_map_path;
    bool metadata_clusters = false;
    int max_branching = 16;
    int embedding_dim = 64;
    std::size_t max_cluster_tokens = 6000;
    std::uint64_t seed = 0;
};

int run_build_tree(const BuildTreeArgs& args, const std::string& config_snapshot) {
    fs::create_directories(args.out_dir);
    FieldMap fields;
    if (!args.field_map_path.empty()) fields = FieldMap::load(args.field_map_path);
    LoadReport load_report;
    Corpus corpus = load_corpus(args.corpus_path, fields, &load_report);
    std::cerr << "loaded " << corpus.size() << " documents ("
              << load_report.with_source_metadata << " with source metadata)\n";

    PromptSet prompts;
    if (!args.prompt_dir.empty()) prompts.load_overrides(args.prompt_dir);

    BuildResult result;
    if (args.strategy == "bottom-up") {
        std::optional<Partition> initial;
        if (args.metadata_clusters) {
            initial = metadata_initial_clusters(corpus, args.max_branching);
        }
        Summarizer summarize;
        std::shared_ptr<LlmNodeSummarizer> llm_summarizer;
        if (args.summarizer == "llm") {
            auto endpoint = load_llm_config(args.llm_config_path);
            auto transport = std::make_shared<HttpChatTransport>(endpoint);
            llm_summarizer =
                std::make_shared<LlmNodeSummarizer>(transport, endpoint, prompts);
            summarize = [llm_summarizer](const std::vector<std::string>& texts) {
                return llm_summarizer->summarize(texts);
            };
        } else {
            summarize = make_extractive_summarizer();
        }
        result = build_bottom_up(corpus, make_hash_embedding(args.embedding_dim),
                                 make_default_clustering(args.seed), summarize,
                                 args.max_branching, initial);
    } else {
        TopDownOptions options;
        options.max_cluster_tokens = args.max_cluster_tokens;
        std::unique_ptr<MultiLevelSummarizer> summarizer;
        std::unique_ptr<TopicClusterer> clusterer;
        if (args.backend == "llm") {
            auto endpoint = load_llm_config(args.llm_config_path);
            auto transport = std::make_shared<HttpChatTransport>(endpoint);
            summarizer = std::make_unique<LlmMultiLevelSummarizer>(transport, endpoint, prompts);
            clusterer = std::make_unique<LlmTopicClusterer>(transport, endpoint, prompts);
        } else {
            summarizer = std::make_unique<HeuristicMultiLevelSummarizer>();
            clusterer = std::make_unique<HeuristicTopicClusterer>();
        }
        result = build_top_down(corpus, *summarizer, *clusterer, args.max_branching, options);
    }

    const auto violations = validate_tree(result.tree, corpus.doc_ids());
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << "tree violation: " << v << '\n';
        throw std::runtime_error("built tree failed validation");
    }

    const fs::path out_dir(args.out_dir);
    save_tree(result.tree, (out_dir / "tree.jsonl").string());
    write_text(out_dir / "build_manifest.json", result.manifest.to_json().dump(2) + "\n");
    write_text(out_dir / "run_config.ini", config_snapshot);

    json inputs;
    inputs["corpus"] = args.corpus_path;
    inputs["strategy"] = args.strategy;
    inputs["max_branching"] = args.max_branching;
    inputs["seed"] = args.seed;
    inputs["documents"] = corpus.size();
    write_manifest(out_dir, "build-tree", inputs,
                   {"tree.jsonl", "build_manifest.json", "run_config.ini"});
    std::cerr << "tree written: " << (out_dir / "tree.jsonl").string() << " ("
              << result.tree.nodes.size() << " nodes, depth " << tree_depth(result.tree)
              << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// search

struct SearchArgs {
    std::string tree_path;
    std::string query;
    std::string query_id;
    std::string out_dir;
    std::string backend = "oracle";
    std::string llm_config_path;
    std::string prompt_dir;
    std::string exclude_path;
    std::string queries_path;
    std::string qrels_path;
    std::string replay_trace_path;
    std::vector<std::string> gold;  // doc=rel pairs
    double oracle_bias = 0.0;
    double oracle_sigma = 0.0;
    bool write_trace = false;
    SearchFlags flags;
};

int run_search(const SearchArgs& args, const std::string& config_snapshot) {
    fs::create_directories(args.out_dir);
    SemanticTree tree = load_tree(args.tree_path);
    SearchConfig config = args.flags.resolve();

    std::set<std::string> excluded;
    if (!args.exclude_path.empty() && !args.query_id.empty()) {
        // exclusion files are keyed by query id
        std::ifstream in(args.exclude_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) continue;
            if (j.value("query_id", "") != args.query_id) continue;
            for (const auto& d : j.value("excluded_doc_ids", json::array())) {
                excluded.insert(d.get<std::string>());
            }
        }
    }

    std::string query_text = args.query;
    if (query_text.empty() && !args.queries_path.empty() && !args.query_id.empty()) {
        auto bundle = load_eval_bundle(args.queries_path, args.qrels_path);
        for (const auto& q : bundle.queries) {
            if (q.query_id == args.query_id) query_text = q.text;
        }
        if (query_text.empty()) {
            throw std::runtime_error("query id '" + args.query_id + "' not found in " +
                                     args.queries_path);
        }
    }
    if (query_text.empty()) throw std::runtime_error("no query given (use --query)");

    SearchResult result;
    if (!args.replay_trace_path.empty()) {
        std::ifstream in(args.replay_trace_path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open trace: " + args.replay_trace_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        result = replay_search(query_text, tree, deserialize_trace(buf.str()), config, excluded);
    } else if (args.backend == "oracle") {
        OracleConfig oracle;
        oracle.seed = derive_seed(config.seed, "oracle");
        oracle.slate_bias_min = -args.oracle_bias;
        oracle.slate_bias_max = args.oracle_bias;
        oracle.score_noise_sigma = args.oracle_sigma;
        for (const auto& pair : args.gold) {
            const auto eq = pair.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("--gold expects doc=relevance, got '" + pair + "'");
            }
            oracle.gold_relevance[pair.substr(0, eq)] = std::stod(pair.substr(eq + 1));
        }
        if (oracle.gold_relevance.empty() && !args.qrels_path.empty() &&
            !args.query_id.empty()) {
            auto bundle = load_eval_bundle(args.queries_path, args.qrels_path);
            oracle.gold_relevance = gold_relevance_for(bundle.qrels.for_query(args.query_id));
        }
        OracleScorer scorer(tree, oracle);
        result = search(query_text, tree, scorer, config, excluded);
    } else {
        auto endpoint = load_llm_config(args.llm_config_path);
        auto transport = std::make_shared<HttpChatTransport>(endpoint);
        PromptSet prompts;
        if (!args.prompt_dir.empty()) prompts.load_overrides(args.prompt_dir);
        LlmScorer scorer(transport, endpoint, prompts);
        result = search(query_text, tree, scorer, config, excluded);
    }

    const fs::path out_dir(args.out_dir);
    write_text(out_dir / "ranked.jsonl", ranked_jsonl(result));
    std::vector<std::string> outputs = {"ranked.jsonl", "run_config.ini"};
    if (args.write_trace) {
        write_text(out_dir / "trace.jsonl", serialize_trace(result.trace));
        outputs.push_back("trace.jsonl");
    }
    write_text(out_dir / "run_config.ini", config_snapshot);

    json inputs;
    inputs["tree"] = args.tree_path;
    inputs["backend"] = args.backend;
    inputs["config"] = search_config_json(config);
    inputs["excluded"] = excluded.size();
    write_manifest(out_dir, "search", inputs, outputs);

    for (const auto& [doc, rel] : result.ranked) {
        std::cout << doc << '\t' << format_fixed(rel, 6) << '\n';
    }
    std::cerr << "scorer calls: " << result.cost.scorer_calls
              << ", input tokens: " << result.cost.input_tokens << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string tree_path;
    std::string queries_path;
    std::string qrels_path;
    std::string exclusions_path;
    std::string out_dir;
    std::string backend = "oracle";
    std::string llm_config_path;
    std::string prompt_dir;
    std::string field_map_path;
    std::string sweep;
    double oracle_bias = 0.0;
    double oracle_sigma = 0.0;
    bool emit_cost_curve = false;
    int parallelism = 0;
    SearchFlags flags;
};

std::vector<GridPoint> parse_sweep(const std::string& sweep, const SearchConfig& base) {
    std::vector<GridPoint> grid;
    if (sweep.empty()) {
        grid.push_back({"base", base});
        return grid;
    }
    const auto eq = sweep.find('=');
    if (eq == std::string::npos) {
        throw std::runtime_error("--sweep expects name=v1,v2,... got '" + sweep + "'");
    }
    const std::string name = sweep.substr(0, eq);
    std::vector<std::string> values;
    {
        std::string rest = sweep.substr(eq + 1);
        std::size_t pos = 0;
        while (pos != std::string::npos) {
            const auto comma = rest.find(',', pos);
            values.push_back(rest.substr(pos, comma == std::string::npos ? std::string::npos
                                                                         : comma - pos));
            pos = comma == std::string::npos ? std::string::npos : comma + 1;
        }
    }
    for (const auto& value : values) {
        SearchConfig config = base;
        if (name == "alpha") {
            config.ema_alpha = std::stod(value);
        } else if (name == "ell") {
            config.leaf_aug_count = std::stoi(value);
        } else if (name == "calibration") {
            if (value == "full") config.calibration.mode = CalibrationMode::Full;
            else if (value == "mean") config.calibration.mode = CalibrationMode::MeanOnly;
            else if (value == "last") config.calibration.mode = CalibrationMode::LastScore;
            else throw std::runtime_error("unknown calibration '" + value + "'");
        } else if (name == "budget") {
            // BxN pairs at a fixed total call budget
            const auto x = value.find('x');
            if (x == std::string::npos) {
                throw std::runtime_error("budget sweep expects BxN, got '" + value + "'");
            }
            config.beam_size = std::stoi(value.substr(0, x));
            config.iterations = std::stoi(value.substr(x + 1));
            config.scorer_call_budget = config.beam_size * config.iterations;
        } else {
            throw std::runtime_error("unknown sweep parameter '" + name + "'");
        }
        grid.push_back({name + "=" + value, config});
    }
    return grid;
}

ScorerProvider make_provider(const std::string& backend, const SemanticTree& tree,
                             const EvalBundle& bundle, double bias, double sigma,
                             std::uint64_t seed, const std::string& llm_config_path,
                             const std::string& prompt_dir,
                             std::shared_ptr<ListwiseScorer>& shared_holder) {
    if (backend == "oracle") {
        return [&tree, &bundle, bias, sigma, seed](const QueryRecord& query) {
            OracleConfig config;
            config.gold_relevance = gold_relevance_for(bundle.qrels.for_query(query.query_id));
            config.slate_bias_min = -bias;
            config.slate_bias_max = bias;
            config.score_noise_sigma = sigma;
            config.seed = derive_seed(seed, "oracle", fnv1a64(query.query_id));
            return std::make_shared<OracleScorer>(tree, config);
        };
    }
    auto endpoint = load_llm_config(llm_config_path);
    auto transport = std::make_shared<HttpChatTransport>(endpoint);
    PromptSet prompts;
    if (!prompt_dir.empty()) prompts.load_overrides(prompt_dir);
    shared_holder = std::make_shared<LlmScorer>(transport, endpoint, prompts);
    return [shared_holder](const QueryRecord&) { return shared_holder; };
}

std::string grid_summary_tsv(const std::vector<BenchmarkRun>& runs) {
    std::string out =
        "label\tmean_ndcg_at_10\tmean_recall_at_100\tmean_scorer_calls\tmean_input_tokens\n";
    for (const auto& run : runs) {
        out += run.report.label + "\t" + format_fixed(run.report.mean_ndcg_at_10) + "\t" +
               format_fixed(run.report.mean_recall_at_100) + "\t" +
               format_fixed(run.report.mean_scorer_calls, 2) + "\t" +
               format_fixed(run.report.mean_input_tokens, 2) + "\n";
    }
    return out;
}

int run_eval(const EvalArgs& args, const std::string& config_snapshot) {
    fs::create_directories(args.out_dir);
    SemanticTree tree = load_tree(args.tree_path);
    FieldMap fields;
    if (!args.field_map_path.empty()) fields = FieldMap::load(args.field_map_path);

    std::vector<std::string> tree_docs;
    for (const auto& [id, node] : tree.nodes) {
        if (node.is_leaf()) tree_docs.push_back(*node.doc_id);
    }
    LoadReport load_report;
    auto bundle = load_eval_bundle(args.queries_path, args.qrels_path,
                                   args.exclusions_path.empty()
                                       ? std::nullopt
                                       : std::make_optional(args.exclusions_path),
                                   tree_docs, fields, &load_report);
    for (const auto& warning : load_report.warnings) std::cerr << "warning: " << warning << '\n';

    SearchConfig base = args.flags.resolve();
    auto grid = parse_sweep(args.sweep, base);

    std::shared_ptr<ListwiseScorer> shared;
    auto provider = make_provider(args.backend, tree, bundle, args.oracle_bias,
                                  args.oracle_sigma, base.seed, args.llm_config_path,
                                  args.prompt_dir, shared);

    BenchmarkOptions options;
    options.parallelism = args.parallelism;
    options.keep_traces = args.emit_cost_curve;
    auto runs = run_benchmark_grid(tree, bundle, provider, grid, options);

    const fs::path out_dir(args.out_dir);
    std::vector<std::string> outputs = {"summary.tsv", "run_config.ini"};
    for (const auto& run : runs) {
        const std::string tag = run.report.label == "base" ? "" : "_" + run.report.label;
        write_text(out_dir / ("report" + tag + ".json"), run.report.to_json().dump(2) + "\n");
        write_text(out_dir / ("per_query" + tag + ".tsv"), run.report.to_tsv());
        outputs.push_back("report" + tag + ".json");
        outputs.push_back("per_query" + tag + ".tsv");
        if (args.emit_cost_curve) {
            std::vector<std::vector<CostPoint>> curves;
            for (const auto& [qid, trace] : run.traces) {
                curves.push_back(cost_curve(trace, bundle.qrels.for_query(qid),
                                            bundle.exclusions_for(qid)));
            }
            write_text(out_dir / ("cost_curve" + tag + ".tsv"),
                       cost_curve_tsv(mean_cost_curve(curves)));
            outputs.push_back("cost_curve" + tag + ".tsv");
        }
    }
    write_text(out_dir / "summary.tsv", grid_summary_tsv(runs));
    write_text(out_dir / "run_config.ini", config_snapshot);

    json inputs;
    inputs["tree"] = args.tree_path;
    inputs["queries"] = args.queries_path;
    inputs["qrels"] = args.qrels_path;
    inputs["backend"] = args.backend;
    inputs["grid_points"] = grid.size();
    inputs["config"] = search_config_json(base);
    write_manifest(out_dir, "eval", inputs, outputs);

    std::cout << grid_summary_tsv(runs);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string out_dir;
    std::string grid = "ablations";
    int topics = 16;
    int docs_per_topic = 16;
    int queries = 50;
    int max_branching = 16;
    double bias = 0.15;
    double sigma = 0.02;
    int parallelism = 0;
    SearchFlags flags;
};

int run_simulate(const SimulateArgs& args, const std::string& config_snapshot) {
    fs::create_directories(args.out_dir);
    const fs::path out_dir(args.out_dir);
    SearchConfig base = args.flags.resolve();

    SyntheticSpec spec;
    spec.topics = args.topics;
    spec.docs_per_topic = args.docs_per_topic;
    spec.queries = args.queries;
    spec.seed = base.seed;
    auto data = make_synthetic(spec);

    write_corpus(data.corpus, (out_dir / "corpus.jsonl").string());
    {
        std::string queries_out, qrels_out;
        for (const auto& q : data.bundle.queries) {
            queries_out += json{{"query_id", q.query_id}, {"text", q.text}}.dump() + "\n";
            for (const auto& [doc, gain] : std::map<std::string, int>(
                     data.bundle.qrels.for_query(q.query_id).begin(),
                     data.bundle.qrels.for_query(q.query_id).end())) {
                qrels_out +=
                    json{{"query_id", q.query_id}, {"doc_id", doc}, {"gain", gain}}.dump() +
                    "\n";
            }
        }
        write_text(out_dir / "queries.jsonl", queries_out);
        write_text(out_dir / "qrels.jsonl", qrels_out);
    }

    auto build = build_bottom_up(data.corpus, make_hash_embedding(64),
                                 make_default_clustering(base.seed),
                                 make_extractive_summarizer(), args.max_branching);
    save_tree(build.tree, (out_dir / "tree.jsonl").string());
    std::cerr << "synthetic tree: " << build.tree.nodes.size() << " nodes, depth "
              << tree_depth(build.tree) << "\n";

    std::vector<GridPoint> grid;
    auto push = [&](const std::string& label, SearchConfig config) {
        grid.push_back({label, config});
    };
    if (args.grid == "ablations" || args.grid == "all") {
        push("calibrated", base);
        SearchConfig uncal = base;
        uncal.calibration.mode = CalibrationMode::LastScore;
        push("uncalibrated", uncal);
        SearchConfig alpha0 = base;
        alpha0.ema_alpha = 0.0;
        push("alpha0", alpha0);
    }
    if (args.grid == "ell" || args.grid == "all") {
        for (int ell : {0, 1, 5, 10}) {
            SearchConfig config = base;
            config.leaf_aug_count = ell;
            push("ell" + std::to_string(ell), config);
        }
    }
    if (args.grid == "budget" || args.grid == "all") {
        const int total = base.beam_size * base.iterations;
        for (int beam : {1, 2, 4}) {
            SearchConfig config = base;
            config.beam_size = beam;
            config.iterations = std::max(1, total / beam);
            config.scorer_call_budget = total;
            push("B" + std::to_string(beam), config);
        }
    }
    if (grid.empty()) throw std::runtime_error("unknown grid '" + args.grid + "'");

    ScorerProvider provider = [&](const QueryRecord& query) {
        OracleConfig config;
        config.gold_relevance = gold_relevance_for(data.bundle.qrels.for_query(query.query_id));
        config.slate_bias_min = -args.bias;
        config.slate_bias_max = args.bias;
        config.score_noise_sigma = args.sigma;
        config.seed = derive_seed(base.seed, "oracle", fnv1a64(query.query_id));
        return std::make_shared<OracleScorer>(build.tree, config);
    };

    BenchmarkOptions options;
    options.parallelism = args.parallelism;
    auto runs = run_benchmark_grid(build.tree, data.bundle, provider, grid, options);

    std::vector<std::string> outputs = {"corpus.jsonl", "queries.jsonl", "qrels.jsonl",
                                        "tree.jsonl",   "report.tsv",    "run_config.ini"};
    for (const auto& run : runs) {
        write_text(out_dir / ("report_" + run.report.label + ".json"),
                   run.report.to_json().dump(2) + "\n");
        outputs.push_back("report_" + run.report.label + ".json");
    }
    write_text(out_dir / "report.tsv", grid_summary_tsv(runs));
    write_text(out_dir / "run_config.ini", config_snapshot);

    json inputs;
    inputs["topics"] = args.topics;
    inputs["docs_per_topic"] = args.docs_per_topic;
    inputs["queries"] = args.queries;
    inputs["bias"] = args.bias;
    inputs["sigma"] = args.sigma;
    inputs["grid"] = args.grid;
    inputs["config"] = search_config_json(base);
    write_manifest(out_dir, "simulate", inputs, outputs);

    std::cout << grid_summary_tsv(runs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical semantic-tree retrieval engine"};
    app.require_subcommand(1);
    app.set_config("--config", "", "load options from an INI config file");

    BuildTreeArgs build_args;
    auto* build_cmd = app.add_subcommand("build-tree", "construct a semantic tree from a corpus");
    build_cmd->set_config("--config");
    build_cmd->add_option("--corpus", build_args.corpus_path, "corpus JSONL path")->required();
    build_cmd->add_option("--strategy", build_args.strategy, "bottom-up|top-down")
        ->check(CLI::IsMember({"bottom-up", "top-down"}))
        ->capture_default_str();
    build_cmd->add_option("--out-dir", build_args.out_dir, "output directory")->required();
    build_cmd->add_option("--max-branching", build_args.max_branching, "branching cap M")
        ->capture_default_str();
    build_cmd->add_option("--seed", build_args.seed, "root random seed")->capture_default_str();
    build_cmd->add_flag("--metadata-clusters", build_args.metadata_clusters,
                        "bottom-up: form the first layer from source metadata");
    build_cmd->add_option("--summarizer", build_args.summarizer,
                          "bottom-up summary backend: extractive|llm")
        ->check(CLI::IsMember({"extractive", "llm"}))
        ->capture_default_str();
    build_cmd->add_option("--backend", build_args.backend,
                          "top-down clustering backend: heuristic|llm")
        ->check(CLI::IsMember({"heuristic", "llm"}))
        ->capture_default_str();
    build_cmd->add_option("--llm-config", build_args.llm_config_path,
                          "endpoint config JSON (for llm backends)");
    build_cmd->add_option("--prompt-dir", build_args.prompt_dir,
                          "directory overriding built-in prompt templates");
    build_cmd->add_option("--field-map", build_args.field_map_path,
                          "field-name mapping JSON for input files");
    build_cmd->add_option("--embedding-dim", build_args.embedding_dim,
                          "hash embedding dimension")
        ->capture_default_str();
    build_cmd->add_option("--max-cluster-tokens", build_args.max_cluster_tokens,
                          "top-down: token budget for clustering prompts")
        ->capture_default_str();

    SearchArgs search_args;
    auto* search_cmd = app.add_subcommand("search", "run one query against a tree");
    search_cmd->set_config("--config");
    search_cmd->add_option("--tree", search_args.tree_path, "tree file")->required();
    search_cmd->add_option("--query", search_args.query, "query text");
    search_cmd->add_option("--query-id", search_args.query_id,
                           "query id (with --queries/--qrels or --exclude-file)");
    search_cmd->add_option("--queries", search_args.queries_path, "queries JSONL");
    search_cmd->add_option("--qrels", search_args.qrels_path, "qrels JSONL (oracle gold)");
    search_cmd->add_option("--out-dir", search_args.out_dir, "output directory")->required();
    search_cmd->add_option("--backend", search_args.backend, "oracle|llm")
        ->check(CLI::IsMember({"oracle", "llm"}))
        ->capture_default_str();
    search_cmd->add_option("--llm-config", search_args.llm_config_path, "endpoint config JSON");
    search_cmd->add_option("--prompt-dir", search_args.prompt_dir, "prompt override directory");
    search_cmd->add_option("--exclude-file", search_args.exclude_path,
                           "per-query exclusion JSONL");
    search_cmd->add_option("--gold", search_args.gold,
                           "oracle gold relevance entries doc=rel (repeatable)");
    search_cmd->add_option("--oracle-bias", search_args.oracle_bias,
                           "oracle per-slate bias range half-width")
        ->capture_default_str();
    search_cmd->add_option("--oracle-sigma", search_args.oracle_sigma,
                           "oracle Gaussian score noise")
        ->capture_default_str();
    search_cmd->add_flag("--trace", search_args.write_trace, "write trace.jsonl");
    search_cmd->add_option("--replay-trace", search_args.replay_trace_path,
                           "replay a previous trace instead of calling a scorer");
    search_args.flags.attach(search_cmd);

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "run a query set and report ranking metrics");
    eval_cmd->set_config("--config");
    eval_cmd->add_option("--tree", eval_args.tree_path, "tree file")->required();
    eval_cmd->add_option("--queries", eval_args.queries_path, "queries JSONL")->required();
    eval_cmd->add_option("--qrels", eval_args.qrels_path, "qrels JSONL")->required();
    eval_cmd->add_option("--exclusions", eval_args.exclusions_path, "exclusions JSONL");
    eval_cmd->add_option("--out-dir", eval_args.out_dir, "output directory")->required();
    eval_cmd->add_option("--backend", eval_args.backend, "oracle|llm")
        ->check(CLI::IsMember({"oracle", "llm"}))
        ->capture_default_str();
    eval_cmd->add_option("--llm-config", eval_args.llm_config_path, "endpoint config JSON");
    eval_cmd->add_option("--prompt-dir", eval_args.prompt_dir, "prompt override directory");
    eval_cmd->add_option("--field-map", eval_args.field_map_path, "field-name mapping JSON");
    eval_cmd->add_option("--sweep", eval_args.sweep,
                         "grid sweep, e.g. alpha=0,0.5 | ell=0,1,5,10 | budget=1x40,2x20");
    eval_cmd->add_option("--oracle-bias", eval_args.oracle_bias, "oracle bias half-width")
        ->capture_default_str();
    eval_cmd->add_option("--oracle-sigma", eval_args.oracle_sigma, "oracle score noise")
        ->capture_default_str();
    eval_cmd->add_flag("--cost-curve", eval_args.emit_cost_curve,
                       "emit per-iteration cost/quality checkpoints");
    eval_cmd->add_option("--parallelism", eval_args.parallelism,
                         "worker threads (0 = all cores)")
        ->capture_default_str();
    eval_args.flags.attach(eval_cmd);

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand(
        "simulate", "synthetic corpus + oracle noise study (calibration and sweep grids)");
    sim_cmd->set_config("--config");
    sim_cmd->add_option("--out-dir", sim_args.out_dir, "output directory")->required();
    sim_cmd->add_option("--grid", sim_args.grid, "ablations|ell|budget|all")
        ->check(CLI::IsMember({"ablations", "ell", "budget", "all"}))
        ->capture_default_str();
    sim_cmd->add_option("--topics", sim_args.topics, "synthetic topics")->capture_default_str();
    sim_cmd->add_option("--docs-per-topic", sim_args.docs_per_topic, "documents per topic")
        ->capture_default_str();
    sim_cmd->add_option("--queries", sim_args.queries, "synthetic queries")
        ->capture_default_str();
    sim_cmd->add_option("--max-branching", sim_args.max_branching, "tree branching cap")
        ->capture_default_str();
    sim_cmd->add_option("--bias", sim_args.bias, "oracle per-slate bias half-width")
        ->capture_default_str();
    sim_cmd->add_option("--sigma", sim_args.sigma, "oracle score noise sigma")
        ->capture_default_str();
    sim_cmd->add_option("--parallelism", sim_args.parallelism, "worker threads (0 = all cores)")
        ->capture_default_str();
    sim_args.flags.attach(sim_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (build_cmd->parsed()) {
            return run_build_tree(build_args, reproducible_snapshot(build_cmd->config_to_str(true, true)));
        }
        if (search_cmd->parsed()) {
            return run_search(search_args, reproducible_snapshot(search_cmd->config_to_str(true, true)));
        }
        if (eval_cmd->parsed()) {
            return run_eval(eval_args, reproducible_snapshot(eval_cmd->config_to_str(true, true)));
        }
        if (sim_cmd->parsed()) {
            return run_simulate(sim_args, reproducible_snapshot(sim_cmd->config_to_str(true, true)));
        }
    } catch (const SearchAborted& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const ResponseParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
