#include "orderby/app.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "orderby/algorithms.hpp"
#include "orderby/cache.hpp"
#include "orderby/caching_oracle.hpp"
#include "orderby/core.hpp"
#include "orderby/data.hpp"
#include "orderby/eval.hpp"
#include "orderby/live_oracle.hpp"
#include "orderby/sim_oracle.hpp"

namespace orderby {
namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- options

struct OracleOptions {
    std::string kind = "sim";
    std::uint64_t seed = 0;
    NoiseModel noise;
    TokenCostModel cost;
    std::size_t max_window = 0;
    // live
    std::string base_url = "https://api.openai.com";
    std::string model = "gpt-4o-mini";
    std::string api_key_env = "ORDERBY_API_KEY";
    double temperature = 0.0;
    int max_tokens = 0;
    bool verbose = false;
};

struct DataOptions {
    std::string data_path;
    std::string format = "auto";
    std::size_t synthetic_n = 0;
    std::string distribution = "distinct";
    double tie_rate = 0.2;
    std::uint64_t data_seed = 0;
    std::string direction = "ascending";
    std::string criterion;
    std::string query;
    std::string run_path;
    std::string queries_path;
    std::string qrels_path;
    int depth = 100;
};

struct CacheOptions {
    std::string path;  // empty: in-memory only
};

void add_oracle_flags(CLI::App* cmd, OracleOptions& o) {
    cmd->add_option("--oracle", o.kind, "Oracle backend")
        ->check(CLI::IsMember({"sim", "live"}))
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "Seed for simulated noise and algorithm sampling")
        ->capture_default_str();
    cmd->add_option("--flip-prob", o.noise.flip_prob, "Sim: pairwise flip probability");
    cmd->add_option("--value-sigma", o.noise.value_sigma, "Sim: stddev of value noise");
    cmd->add_option("--invalid-prob", o.noise.invalid_prob, "Sim: malformed-response probability");
    cmd->add_option("--perm-swap-rate", o.noise.perm_swap_rate,
                    "Sim: adjacent transposition rate in listwise output");
    cmd->add_option("--tok-overhead", o.cost.prompt_overhead, "Sim: prompt tokens per call");
    cmd->add_option("--tok-prompt-per-key", o.cost.prompt_tokens_per_key,
                    "Sim: prompt tokens per key");
    cmd->add_option("--tok-completion-per-key", o.cost.completion_tokens_per_key,
                    "Sim: completion tokens per key");
    cmd->add_option("--max-window", o.max_window, "Largest listwise request allowed (0 = off)");
    cmd->add_option("--base-url", o.base_url, "Live: endpoint base URL")->capture_default_str();
    cmd->add_option("--model", o.model, "Live: model name")->capture_default_str();
    cmd->add_option("--api-key-env", o.api_key_env, "Live: environment variable holding the key")
        ->capture_default_str();
    cmd->add_option("--temperature", o.temperature, "Live: sampling temperature");
    cmd->add_option("--max-tokens", o.max_tokens, "Live: completion token cap (0 = none)");
    cmd->add_flag("--verbose", o.verbose, "Live: log request/response bodies (key redacted)");
}

void add_data_flags(CLI::App* cmd, DataOptions& d) {
    cmd->add_option("--data", d.data_path, "Keys file (JSONL or CSV)");
    cmd->add_option("--format", d.format, "Keys file format")
        ->check(CLI::IsMember({"auto", "jsonl", "csv"}));
    cmd->add_option("--synthetic", d.synthetic_n, "Generate n synthetic keys instead of loading");
    cmd->add_option("--distribution", d.distribution, "Synthetic latent distribution")
        ->check(CLI::IsMember({"distinct", "ties", "clustered"}));
    cmd->add_option("--tie-rate", d.tie_rate, "Synthetic ties: adjacent tie probability");
    cmd->add_option("--data-seed", d.data_seed, "Synthetic generator seed");
    cmd->add_option("--direction", d.direction, "Task direction")
        ->check(CLI::IsMember({"ascending", "asc", "descending", "desc"}));
    cmd->add_option("--criterion", d.criterion, "Task criterion text");
    cmd->add_option("--query", d.query, "Task query context (single-list data)");
    cmd->add_option("--run", d.run_path, "TREC run file of pre-retrieved candidates");
    cmd->add_option("--queries", d.queries_path, "TSV of query id and query text");
    cmd->add_option("--qrels", d.qrels_path, "TREC qrels file");
    cmd->add_option("--depth", d.depth, "Candidates kept per query")->capture_default_str();
}

void add_cache_flags(CLI::App* cmd, CacheOptions& c) {
    cmd->add_option("--cache", c.path, "Response cache file (also: ORDERBY_CACHE)")
        ->envname("ORDERBY_CACHE");
}

// ---------------------------------------------------------------- loading

struct QueryCase {
    std::string query_id;
    std::vector<Key> keys;
    RankTask task;
    std::unordered_map<std::string, double> truth;  // empty when unknown
};

struct Experiment {
    std::vector<QueryCase> cases;
    std::vector<QrelEntry> qrels;
    json source;  // config echo for result documents
};

KeyFileFormat resolve_format(const DataOptions& d) {
    if (d.format == "jsonl") return KeyFileFormat::jsonl;
    if (d.format == "csv") return KeyFileFormat::csv;
    auto dot = d.data_path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : d.data_path.substr(dot + 1);
    return ext == "csv" ? KeyFileFormat::csv : KeyFileFormat::jsonl;
}

std::unordered_map<std::string, std::string> load_query_texts(const std::string& path) {
    std::unordered_map<std::string, std::string> texts;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected qid<TAB>text");
        texts[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return texts;
}

double oriented_rank(double value, Direction dir) {
    return dir == Direction::descending ? -value : value;
}

Experiment build_experiment(const DataOptions& d, bool simulated) {
    Experiment exp;
    Direction dir = direction_from_string(d.direction);

    if (d.synthetic_n > 0 && !d.data_path.empty())
        throw UsageError("--synthetic and --data are mutually exclusive");

    if (!d.qrels_path.empty()) exp.qrels = load_qrels(d.qrels_path);

    if (d.synthetic_n > 0) {
        SyntheticSpec spec;
        spec.n = d.synthetic_n;
        spec.distribution = distribution_from_string(d.distribution);
        spec.tie_rate = d.tie_rate;
        spec.seed = d.data_seed;
        spec.direction = dir;
        Dataset ds = generate_synthetic(spec);
        QueryCase qc;
        qc.query_id = "";
        qc.keys = std::move(ds.keys);
        qc.task = ds.task;
        if (!d.criterion.empty()) qc.task.criterion = d.criterion;
        if (!d.query.empty()) qc.task.query = d.query;
        qc.truth = truth_ranks(ds);
        exp.cases.push_back(std::move(qc));
        exp.source = {{"synthetic",
                       {{"n", d.synthetic_n},
                        {"distribution", d.distribution},
                        {"tie_rate", d.tie_rate},
                        {"seed", d.data_seed}}}};
    } else {
        if (d.data_path.empty()) throw UsageError("either --data or --synthetic is required");
        std::vector<Key> keys = load_keys(d.data_path, resolve_format(d));
        exp.source = {{"path", d.data_path}};

        RankTask base_task;
        base_task.criterion =
            d.criterion.empty() ? "order the items by the ranking criterion" : d.criterion;
        base_task.direction = dir;

        if (d.run_path.empty()) {
            QueryCase qc;
            qc.query_id = "";
            qc.keys = std::move(keys);
            qc.task = base_task;
            if (!d.query.empty()) qc.task.query = d.query;
            for (const Key& k : qc.keys) {
                if (k.latent) qc.truth.emplace(k.id, oriented_rank(*k.latent, dir));
            }
            if (qc.truth.size() != qc.keys.size()) qc.truth.clear();  // partial latents: no truth
            exp.cases.push_back(std::move(qc));
        } else {
            TrecRun run = load_trec_run(d.run_path, d.depth);
            exp.source["run"] = d.run_path;
            exp.source["depth"] = d.depth;
            std::unordered_map<std::string, std::string> query_texts;
            if (!d.queries_path.empty()) query_texts = load_query_texts(d.queries_path);
            KeyIndex index = build_key_index(keys);

            for (auto& [qid, candidate_ids] : run.queries) {
                QueryCase qc;
                qc.query_id = qid;
                qc.task = base_task;
                auto qt = query_texts.find(qid);
                qc.task.query = qt != query_texts.end() ? qt->second : qid;
                auto grades = qrels_for_query(exp.qrels, qid);
                for (const auto& id : candidate_ids) {
                    auto it = index.find(id);
                    if (it == index.end())
                        throw std::runtime_error("run references unknown key '" + id + "'");
                    Key k = *it->second;
                    if (simulated && !k.latent && !grades.empty()) {
                        // grades stand in as latents; unjudged candidates rate 0
                        auto g = grades.find(id);
                        k.latent = g != grades.end() ? double(g->second) : 0.0;
                    }
                    auto g = grades.find(id);
                    if (g != grades.end())
                        qc.truth.emplace(id, oriented_rank(double(g->second), dir));
                    else if (!grades.empty())
                        qc.truth.emplace(id, oriented_rank(0.0, dir));
                    qc.keys.push_back(std::move(k));
                }
                exp.cases.push_back(std::move(qc));
            }
        }
    }

    if (simulated) {
        for (const auto& qc : exp.cases) {
            for (const Key& k : qc.keys) {
                if (!k.latent)
                    throw std::runtime_error(
                        "the simulated oracle needs a latent value for every key; '" + k.id +
                        "' has none (provide latents or qrels)");
            }
        }
    }
    return exp;
}

// ---------------------------------------------------------------- oracles

struct OracleBundle {
    std::unique_ptr<Oracle> backend;
    std::unique_ptr<ResponseCache> cache;
    std::unique_ptr<CachingOracle> cached;

    Oracle& oracle() { return *cached; }
};

OracleBundle make_oracle(const OracleOptions& o, const CacheOptions& c, std::ostream& err) {
    OracleBundle b;
    if (o.kind == "sim") {
        SimOracleConfig cfg;
        cfg.noise = o.noise;
        cfg.noise.seed = o.seed;
        cfg.cost = o.cost;
        cfg.max_window = o.max_window;
        b.backend = std::make_unique<SimulatedOracle>(cfg);
    } else {
        LiveOracleConfig cfg;
        cfg.base_url = o.base_url;
        cfg.model = o.model;
        cfg.decoding.temperature = o.temperature;
        if (o.max_tokens > 0) cfg.decoding.max_tokens = o.max_tokens;
        cfg.verbose = o.verbose;
        const char* key = std::getenv(o.api_key_env.c_str());
        if (!key || !*key)
            throw std::runtime_error("live oracle: set the API key in $" + o.api_key_env);
        cfg.api_key = key;
        b.backend = std::make_unique<LiveOracle>(cfg);
    }
    if (!c.path.empty()) {
        try {
            b.cache = std::make_unique<ResponseCache>(c.path);
        } catch (const CacheUnavailable& e) {
            err << "warning: " << e.what() << "; continuing without a persistent cache\n";
        }
    }
    if (!b.cache) b.cache = std::make_unique<ResponseCache>();
    b.cached = std::make_unique<CachingOracle>(*b.backend, *b.cache);
    return b;
}

json oracle_echo(const OracleOptions& o) {
    json j;
    j["kind"] = o.kind;
    j["seed"] = o.seed;
    if (o.kind == "sim") {
        j["noise"] = {{"flip_prob", o.noise.flip_prob},
                      {"value_sigma", o.noise.value_sigma},
                      {"invalid_prob", o.noise.invalid_prob},
                      {"perm_swap_rate", o.noise.perm_swap_rate}};
        j["token_cost"] = {{"prompt_overhead", o.cost.prompt_overhead},
                           {"prompt_tokens_per_key", o.cost.prompt_tokens_per_key},
                           {"completion_tokens_per_key", o.cost.completion_tokens_per_key}};
    } else {
        j["base_url"] = o.base_url;
        j["model"] = o.model;
        j["temperature"] = o.temperature;
    }
    return j;
}

json usage_echo(const UsageTotals& u) {
    return {{"calls", u.calls},
            {"prompt_tokens", u.prompt_tokens},
            {"completion_tokens", u.completion_tokens}};
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        if (text.empty() || text.back() != '\n') out << "\n";
        return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
    if (text.empty() || text.back() != '\n') f << "\n";
}

// ---------------------------------------------------------------- sort

struct SortOptions {
    std::string algo;
    AlgoSpec spec;
    bool rng_seed_set = false;
    std::string out_path;
};

json run_cases(const AlgoSpec& spec, Experiment& exp, Oracle& oracle, UsageTotals& grand) {
    json cases = json::array();
    for (auto& qc : exp.cases) {
        UsageMeter meter;
        AlgoReport report;
        auto t0 = std::chrono::steady_clock::now();
        Ranking ranking = run_algorithm(spec, qc.keys, qc.task, oracle, meter, &report);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        json jc;
        jc["query_id"] = qc.query_id;
        jc["ranking"] = ranking.ordered_ids;
        UsageTotals u = meter.totals();
        jc["usage"] = usage_echo(u);
        jc["wall_time_s"] = secs;
        if (!report.phases.empty()) {
            json phases = json::array();
            for (const auto& p : report.phases)
                phases.push_back({{"name", p.name},
                                  {"calls", p.usage.calls},
                                  {"prompt_tokens", p.usage.prompt_tokens},
                                  {"completion_tokens", p.usage.completion_tokens}});
            jc["phases"] = phases;
        }
        if (!report.counters.empty()) jc["counters"] = report.counters;
        if (!report.batch_size_rounds.empty()) {
            json rounds = json::array();
            for (const auto& r : report.batch_size_rounds) {
                json jr{{"m", r.m}, {"invalid", r.invalid}};
                if (!r.invalid) jr["alpha"] = r.alpha;
                rounds.push_back(jr);
            }
            jc["batch_size_rounds"] = rounds;
        }
        grand.calls += u.calls;
        grand.prompt_tokens += u.prompt_tokens;
        grand.completion_tokens += u.completion_tokens;
        cases.push_back(std::move(jc));
    }
    return cases;
}

json spec_echo(const AlgoSpec& spec) {
    return {{"name", spec.name},       {"m", spec.m},
            {"votes", spec.votes},     {"theta", spec.theta},
            {"max_size", spec.max_size}, {"initial", spec.initial},
            {"max_passes", spec.max_passes}, {"rng_seed", spec.rng_seed},
            {"parallelism", spec.parallelism}};
}

int cmd_sort(const SortOptions& so, const DataOptions& d, const OracleOptions& o,
             const CacheOptions& c, std::ostream& out, std::ostream& err) {
    Experiment exp = build_experiment(d, o.kind == "sim");
    OracleBundle bundle = make_oracle(o, c, err);

    AlgoSpec spec = so.spec;
    spec.name = so.algo;
    if (!so.rng_seed_set) spec.rng_seed = o.seed;

    auto t0 = std::chrono::steady_clock::now();
    UsageTotals grand{};
    json cases = run_cases(spec, exp, bundle.oracle(), grand);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json doc;
    doc["tool"] = {{"name", "orderby"}, {"version", kVersion}};
    doc["command"] = "sort";
    doc["algorithm"] = spec.name;
    doc["params"] = spec_echo(spec);
    doc["oracle"] = oracle_echo(o);
    doc["data"] = exp.source;
    doc["cache"] = {{"path", bundle.cache->path()},
                    {"persistent", bundle.cache->persistent()},
                    {"entries", bundle.cache->size()}};
    doc["cases"] = std::move(cases);
    doc["usage"] = usage_echo(grand);
    doc["wall_time_s"] = secs;
    write_text(so.out_path, doc.dump(2), out);
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
    std::string result_path;
    std::string metric = "tau";
    int k = 10;
    std::string out_path;
};

int cmd_eval(const EvalOptions& eo, const DataOptions& d, std::ostream& out, std::ostream& err) {
    (void)err;
    std::ifstream in(eo.result_path);
    if (!in) throw std::runtime_error("cannot open " + eo.result_path);
    json doc = json::parse(in);

    Experiment exp = build_experiment(d, /*simulated=*/false);
    std::unordered_map<std::string, const QueryCase*> by_query;
    for (const auto& qc : exp.cases) by_query[qc.query_id] = &qc;

    json results = json::array();
    double sum = 0;
    std::size_t count = 0;
    for (const auto& jc : doc.at("cases")) {
        std::string qid = jc.value("query_id", "");
        auto it = by_query.find(qid);
        if (it == by_query.end())
            throw std::runtime_error("result query '" + qid + "' not present in the dataset");
        const QueryCase& qc = *it->second;
        Ranking ranking{jc.at("ranking").get<std::vector<std::string>>()};

        std::vector<std::string> expected;
        for (const Key& k : qc.keys) expected.push_back(k.id);
        if (!is_permutation_of(ranking.ordered_ids, expected))
            throw std::runtime_error("result ranking for query '" + qid +
                                     "' does not match the dataset's key ids");

        double value = 0;
        if (eo.metric == "tau") {
            if (qc.truth.empty())
                throw std::runtime_error("tau needs ground truth (latents or qrels)");
            value = kendall_tau_b(ranking, qc.truth);
        } else {
            auto grades = qrels_for_query(exp.qrels, qid);
            if (grades.empty() && !exp.qrels.empty() && qid.empty()) {
                // single-list result evaluated against single-query qrels
                std::string only_qid = exp.qrels.front().query_id;
                for (const auto& q : exp.qrels) {
                    if (q.query_id != only_qid)
                        throw std::runtime_error("qrels cover several queries; result has none");
                }
                grades = qrels_for_query(exp.qrels, only_qid);
            }
            if (grades.empty()) throw std::runtime_error("nDCG needs qrels for query '" + qid + "'");
            value = ndcg_at_k(ranking, grades, eo.k);
        }
        results.push_back({{"query_id", qid}, {"value", value}});
        out << (qid.empty() ? std::string("(single)") : qid) << " " << eo.metric << " " << value
            << "\n";
        if (std::isfinite(value)) {
            sum += value;
            ++count;
        }
    }
    double mean = count ? sum / double(count) : std::numeric_limits<double>::quiet_NaN();
    out << "mean " << eo.metric << " " << mean << "\n";

    if (!eo.out_path.empty()) {
        json report{{"metric", eo.metric},
                    {"k", eo.k},
                    {"per_query", results},
                    {"mean", mean}};
        std::ofstream f(eo.out_path);
        if (!f) throw std::runtime_error("cannot write " + eo.out_path);
        f << report.dump(2) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
    std::string grid;
    std::string metric = "tau";
    int k = 10;
    std::string out_path;
    std::string plot_path;
    std::string exclude;  // comma-separated label prefixes excluded from the fit
    int repeats = 1;
    unsigned jobs = 1;
};

AlgoSpec parse_grid_entry(const std::string& entry, const OracleOptions& o) {
    AlgoSpec spec;
    spec.rng_seed = o.seed;
    auto colon = entry.find(':');
    spec.name = entry.substr(0, colon);
    if (!is_algorithm(spec.name)) throw UsageError("unknown algorithm in grid: " + spec.name);
    if (colon == std::string::npos) return spec;

    std::stringstream rest(entry.substr(colon + 1));
    std::string kv;
    while (std::getline(rest, kv, ',')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("grid parameter needs key=value: " + kv);
        std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        try {
            if (key == "m") spec.m = std::stoi(value);
            else if (key == "votes" || key == "v") spec.votes = std::stoi(value);
            else if (key == "theta") spec.theta = std::stod(value);
            else if (key == "max_size") spec.max_size = std::stoi(value);
            else if (key == "initial") spec.initial = std::stoi(value);
            else if (key == "max_passes") spec.max_passes = std::stoi(value);
            else if (key == "rng_seed") spec.rng_seed = std::stoull(value);
            else throw UsageError("unknown grid parameter: " + key);
        } catch (const std::logic_error&) {
            throw UsageError("bad grid value for " + key + ": " + value);
        }
    }
    return spec;
}

struct SweepRow {
    std::string label;
    double tokens = 0;
    std::int64_t calls = 0;
    double quality = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

std::string plot_svg(const std::vector<SweepRow>& rows, const std::optional<LogLinearFit>& fit);

int cmd_sweep(const SweepOptions& so, const DataOptions& d, const OracleOptions& o,
              const CacheOptions& c, std::ostream& out, std::ostream& err) {
    std::vector<std::string> entries;
    {
        std::stringstream ss(so.grid);
        std::string e;
        while (std::getline(ss, e, ';')) {
            if (!e.empty()) entries.push_back(e);
        }
    }
    if (entries.empty()) throw UsageError("--grid is empty");
    std::vector<AlgoSpec> specs;
    std::vector<std::string> labels;
    for (const auto& e : entries) {
        specs.push_back(parse_grid_entry(e, o));
        labels.push_back(e);
    }

    Experiment exp = build_experiment(d, o.kind == "sim");
    OracleBundle bundle = make_oracle(o, c, err);

    auto run_row = [&](std::size_t idx) {
        SweepRow row;
        row.label = labels[idx];
        try {
            double quality_sum = 0;
            std::size_t quality_n = 0;
            UsageTotals total{};
            for (int rep = 0; rep < std::max(1, so.repeats); ++rep) {
                // Repeats perturb the noise seed so means smooth single-run variance.
                Oracle* oracle = nullptr;
                std::unique_ptr<SimulatedOracle> rep_sim;
                if (so.repeats > 1 && o.kind == "sim") {
                    SimOracleConfig cfg;
                    cfg.noise = o.noise;
                    cfg.noise.seed = o.seed + std::uint64_t(rep);
                    cfg.cost = o.cost;
                    cfg.max_window = o.max_window;
                    rep_sim = std::make_unique<SimulatedOracle>(cfg);
                    oracle = rep_sim.get();
                } else {
                    oracle = &bundle.oracle();
                }
                AlgoSpec spec = specs[idx];
                spec.rng_seed += std::uint64_t(rep);
                for (auto& qc : exp.cases) {
                    UsageMeter meter;
                    Ranking ranking = run_algorithm(spec, qc.keys, qc.task, *oracle, meter);
                    UsageTotals u = meter.totals();
                    total.calls += u.calls;
                    total.prompt_tokens += u.prompt_tokens;
                    total.completion_tokens += u.completion_tokens;
                    double value;
                    if (so.metric == "tau") {
                        if (qc.truth.empty())
                            throw std::runtime_error("tau needs ground truth");
                        value = kendall_tau_b(ranking, qc.truth);
                    } else {
                        auto grades = qrels_for_query(exp.qrels, qc.query_id);
                        if (grades.empty())
                            throw std::runtime_error("nDCG needs qrels for query '" +
                                                     qc.query_id + "'");
                        value = ndcg_at_k(ranking, grades, so.k);
                    }
                    if (std::isfinite(value)) {
                        quality_sum += value;
                        ++quality_n;
                    }
                }
            }
            int reps = std::max(1, so.repeats);
            row.tokens = double(total.total_tokens()) / reps;
            row.calls = total.calls / reps;
            if (quality_n) row.quality = quality_sum / double(quality_n);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    };

    std::vector<SweepRow> rows(specs.size());
    if (so.jobs <= 1) {
        for (std::size_t i = 0; i < specs.size(); ++i) rows[i] = run_row(i);
    } else {
        std::atomic<std::size_t> cursor{0};
        auto worker = [&] {
            for (std::size_t i = cursor.fetch_add(1); i < specs.size(); i = cursor.fetch_add(1))
                rows[i] = run_row(i);
        };
        std::vector<std::future<void>> pool;
        std::size_t n_workers = std::min<std::size_t>(so.jobs, specs.size());
        for (std::size_t t = 0; t < n_workers; ++t)
            pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();
    }

    std::ostringstream csv;
    csv << "label,tokens,calls,quality\n";
    for (const auto& r : rows) {
        csv << r.label << "," << r.tokens << "," << r.calls << ",";
        if (std::isfinite(r.quality)) csv << r.quality;
        else csv << "nan";
        csv << "\n";
        if (!r.error.empty()) err << "sweep row '" << r.label << "' failed: " << r.error << "\n";
    }
    write_text(so.out_path, csv.str(), out);

    // Fit, optionally excluding labels by prefix (whole algorithm names).
    std::vector<std::string> excluded;
    {
        std::stringstream ss(so.exclude);
        std::string e;
        while (std::getline(ss, e, ',')) {
            if (!e.empty()) excluded.push_back(e);
        }
    }
    auto is_excluded = [&](const std::string& label) {
        for (const auto& e : excluded) {
            if (label == e || label.rfind(e + ":", 0) == 0) return true;
        }
        return false;
    };
    std::vector<SweepPoint> points;
    for (const auto& r : rows) {
        if (!is_excluded(r.label) && std::isfinite(r.quality) && r.tokens > 0)
            points.push_back({r.tokens, r.quality, r.label});
    }
    std::optional<LogLinearFit> fit;
    try {
        fit = fit_log_linear(points);
        out << "fit: quality = " << fit->intercept << " + " << fit->slope
            << " * ln(tokens), r2 = " << fit->r_squared << " over " << points.size()
            << " points\n";
    } catch (const InsufficientData& e) {
        out << "fit: skipped (" << e.what() << ")\n";
    }

    if (!so.plot_path.empty()) {
        std::ofstream f(so.plot_path);
        if (!f) throw std::runtime_error("cannot write " + so.plot_path);
        f << plot_svg(rows, fit);
    }
    return 0;
}

std::string plot_svg(const std::vector<SweepRow>& rows, const std::optional<LogLinearFit>& fit) {
    const double W = 640, H = 420, L = 70, R = 20, T = 20, B = 50;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& r : rows) {
        if (!(r.tokens > 0) || !std::isfinite(r.quality)) continue;
        double x = std::log(r.tokens);
        if (first) {
            xmin = xmax = x;
            ymin = ymax = r.quality;
            first = false;
        } else {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, r.quality);
            ymax = std::max(ymax, r.quality);
        }
    }
    if (xmax - xmin < 1e-9) xmax = xmin + 1;
    if (ymax - ymin < 1e-9) ymax = ymin + 1;
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R << "' y2='" << H - B
        << "' stroke='black'/>\n";
    svg << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='" << H - B
        << "' stroke='black'/>\n";
    svg << "<text x='" << (L + W - R) / 2 << "' y='" << H - 12
        << "' text-anchor='middle' font-size='13'>tokens (log scale)</text>\n";
    svg << "<text x='16' y='" << (T + H - B) / 2
        << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
        << (T + H - B) / 2 << ")'>quality</text>\n";
    if (fit) {
        svg << "<polyline fill='none' stroke='#888' stroke-dasharray='5,4' points='";
        for (int s = 0; s <= 40; ++s) {
            double x = xmin + (xmax - xmin) * s / 40.0;
            double y = fit->intercept + fit->slope * x;
            svg << px(x) << "," << py(std::min(ymax, std::max(ymin, y))) << " ";
        }
        svg << "'/>\n";
    }
    for (const auto& r : rows) {
        if (!(r.tokens > 0) || !std::isfinite(r.quality)) continue;
        double x = px(std::log(r.tokens)), y = py(r.quality);
        svg << "<circle cx='" << x << "' cy='" << y << "' r='4' fill='#1f77b4'/>\n";
        svg << "<text x='" << x + 6 << "' y='" << y - 6 << "' font-size='11'>" << r.label
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// ---------------------------------------------------------------- batch-size

struct BatchSizeOptions {
    double theta = 0.6;
    int max_size = 64;
    int initial = 2;
};

int cmd_batch_size(const BatchSizeOptions& bo, const DataOptions& d, const OracleOptions& o,
                   const CacheOptions& c, std::ostream& out, std::ostream& err) {
    Experiment exp = build_experiment(d, o.kind == "sim");
    if (exp.cases.size() != 1)
        throw std::runtime_error("batch-size expects a single-list dataset");
    const QueryCase& qc = exp.cases.front();
    if (qc.keys.size() < 2) throw std::runtime_error("dataset too small: need at least 2 keys");

    OracleBundle bundle = make_oracle(o, c, err);
    UsageMeter meter;
    BatchSizeSearchConfig cfg{bo.theta, bo.max_size, bo.initial, 1e-9};
    BatchSizeResult res = determine_batch_size(qc.keys, qc.task, bundle.oracle(), cfg, meter);

    out << "theta " << bo.theta << ", max size " << bo.max_size << "\n";
    for (const auto& r : res.rounds) {
        if (r.invalid) out << "round m=" << r.m << ": invalid output, stopping\n";
        else out << "round m=" << r.m << ": alpha=" << r.alpha << "\n";
    }
    out << "chosen m = " << res.batch_size << "\n";
    out << "uncached oracle calls = " << meter.totals().calls << "\n";
    return 0;
}

// ---------------------------------------------------------------- cache

int cmd_cache(const CacheOptions& c, bool clear, std::ostream& out) {
    if (c.path.empty()) throw UsageError("--cache (or ORDERBY_CACHE) is required");
    ResponseCache cache(c.path);
    if (clear) {
        std::size_t before = cache.size();
        cache.clear();
        out << "cleared " << before << " entries from " << c.path << "\n";
    } else {
        out << "cache " << c.path << ": " << cache.size() << " entries\n";
    }
    return 0;
}

}  // namespace

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"LLM ORDER BY access paths: sort, evaluate, sweep, probe batch size"};
    app.require_subcommand(1);

    OracleOptions oracle_opts;
    DataOptions data_opts;
    CacheOptions cache_opts;

    auto* sort_cmd = app.add_subcommand("sort", "Sort one dataset with a chosen access path");
    SortOptions sort_opts;
    sort_cmd->add_option("--algo", sort_opts.algo, "Access path")
        ->required()
        ->check(CLI::IsMember(algorithm_names()));
    sort_cmd->add_option("--m", sort_opts.spec.m,
                         "Batch/window size (0: search for external-pointwise, defaults otherwise)");
    sort_cmd->add_option("--votes", sort_opts.spec.votes, "Quicksort: votes per item");
    sort_cmd->add_option("--theta", sort_opts.spec.theta, "Batch-size search: agreement threshold")
        ->capture_default_str();
    sort_cmd->add_option("--max-size", sort_opts.spec.max_size, "Batch-size search: cap M")
        ->capture_default_str();
    sort_cmd->add_option("--initial", sort_opts.spec.initial, "Batch-size search: starting size")
        ->capture_default_str();
    sort_cmd->add_option("--max-passes", sort_opts.spec.max_passes,
                         "Bubble: pass cap (0 = ceil(2N/m))");
    auto* rng_opt =
        sort_cmd->add_option("--rng-seed", sort_opts.spec.rng_seed,
                             "Sampling seed (defaults to --seed)");
    sort_cmd->add_option("--parallelism", sort_opts.spec.parallelism,
                         "Merge run generation threads");
    sort_cmd->add_option("--out", sort_opts.out_path, "Result document path (default: stdout)");
    add_data_flags(sort_cmd, data_opts);
    add_oracle_flags(sort_cmd, oracle_opts);
    add_cache_flags(sort_cmd, cache_opts);

    auto* eval_cmd = app.add_subcommand("eval", "Score a result document against ground truth");
    EvalOptions eval_opts;
    eval_cmd->add_option("--result", eval_opts.result_path, "Result document from sort")
        ->required();
    eval_cmd->add_option("--metric", eval_opts.metric, "Quality metric")
        ->check(CLI::IsMember({"tau", "ndcg"}))
        ->capture_default_str();
    eval_cmd->add_option("--k", eval_opts.k, "nDCG cutoff")->capture_default_str();
    eval_cmd->add_option("--out", eval_opts.out_path, "Metric report path (JSON)");
    add_data_flags(eval_cmd, data_opts);

    auto* sweep_cmd =
        app.add_subcommand("sweep", "Run a grid of configurations and fit the cost-quality curve");
    SweepOptions sweep_opts;
    sweep_cmd
        ->add_option("--grid", sweep_opts.grid,
                     "Semicolon-separated configs, e.g. 'pointwise;external-merge:m=8'")
        ->required();
    sweep_cmd->add_option("--metric", sweep_opts.metric, "Quality metric")
        ->check(CLI::IsMember({"tau", "ndcg"}))
        ->capture_default_str();
    sweep_cmd->add_option("--k", sweep_opts.k, "nDCG cutoff")->capture_default_str();
    sweep_cmd->add_option("--out", sweep_opts.out_path, "CSV path (default: stdout)");
    sweep_cmd->add_option("--plot", sweep_opts.plot_path, "Also render an SVG chart");
    sweep_cmd->add_option("--exclude", sweep_opts.exclude,
                          "Comma-separated label prefixes excluded from the fit");
    sweep_cmd->add_option("--repeats", sweep_opts.repeats, "Noise-seed repeats per row")
        ->capture_default_str();
    sweep_cmd->add_option("--jobs", sweep_opts.jobs, "Rows run concurrently")
        ->capture_default_str();
    add_data_flags(sweep_cmd, data_opts);
    add_oracle_flags(sweep_cmd, oracle_opts);
    add_cache_flags(sweep_cmd, cache_opts);

    auto* bs_cmd = app.add_subcommand("batch-size", "Agreement-based batch-size probe");
    BatchSizeOptions bs_opts;
    bs_cmd->add_option("--theta", bs_opts.theta, "Agreement threshold")->capture_default_str();
    bs_cmd->add_option("--max-size", bs_opts.max_size, "Cap M")->capture_default_str();
    bs_cmd->add_option("--initial", bs_opts.initial, "Starting size")->capture_default_str();
    add_data_flags(bs_cmd, data_opts);
    add_oracle_flags(bs_cmd, oracle_opts);
    add_cache_flags(bs_cmd, cache_opts);

    auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear the response cache");
    bool cache_clear = false;
    cache_cmd->add_flag("--clear", cache_clear, "Remove all entries");
    add_cache_flags(cache_cmd, cache_opts);

    std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 wants reversed args
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return 2;
    }

    try {
        sort_opts.rng_seed_set = rng_opt->count() > 0;
        if (sort_cmd->parsed())
            return cmd_sort(sort_opts, data_opts, oracle_opts, cache_opts, out, err);
        if (eval_cmd->parsed()) return cmd_eval(eval_opts, data_opts, out, err);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_opts, data_opts, oracle_opts, cache_opts, out, err);
        if (bs_cmd->parsed())
            return cmd_batch_size(bs_opts, data_opts, oracle_opts, cache_opts, out, err);
        if (cache_cmd->parsed()) return cmd_cache(cache_opts, cache_clear, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace orderby
