#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "orderby/app.hpp"
#include "orderby/core.hpp"
#include "test_util.hpp"

using namespace orderby;
using nlohmann::json;

namespace {

struct Sandbox {
    std::filesystem::path dir;
    Sandbox() {
        static std::uint64_t counter = 0;
        dir = std::filesystem::temp_directory_path() /
              ("orderby-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(dir);
    }
    ~Sandbox() { std::filesystem::remove_all(dir); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
    std::string write(const std::string& name, const std::string& content) const {
        std::string p = file(name);
        std::ofstream(p) << content;
        return p;
    }
};

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = run_app(args, out, err);
    return {code, out.str(), err.str()};
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    return json::parse(in);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("sort writes a self-describing result document") {
    Sandbox sb;
    std::string out_path = sb.file("result.json");
    auto r = run({"sort", "--algo", "external-merge", "--m", "8", "--oracle", "sim", "--seed",
                  "1", "--synthetic", "30", "--data-seed", "7", "--out", out_path});
    CHECK(r.code == 0);
    json doc = load_json(out_path);
    CHECK(doc["algorithm"] == "external-merge");
    CHECK(doc["params"]["m"] == 8);
    CHECK(doc["oracle"]["kind"] == "sim");
    CHECK(doc["oracle"]["seed"] == 1);
    CHECK(doc["data"]["synthetic"]["n"] == 30);
    CHECK(doc["tool"]["version"] == std::string(kVersion));
    REQUIRE(doc["cases"].size() == 1);
    auto ranking = doc["cases"][0]["ranking"].get<std::vector<std::string>>();
    std::vector<std::string> expected_ids;
    for (int i = 1; i <= 30; ++i) expected_ids.push_back("k" + std::to_string(i));
    CHECK(is_permutation_of(ranking, expected_ids));
    CHECK(doc["usage"]["calls"].get<int>() > 0);
}

TEST_CASE("unknown algorithms and bad flags are usage errors") {
    CHECK(run({"sort", "--algo", "foo", "--synthetic", "5"}).code == 2);
    CHECK(run({"sort", "--synthetic", "5"}).code == 2);          // --algo required
    CHECK(run({"nonsense"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"sweep", "--synthetic", "5"}).code == 2);         // --grid required
    auto bad_grid = run({"sweep", "--grid", "bogosort", "--synthetic", "5"});
    CHECK(bad_grid.code == 2);
}

TEST_CASE("missing input files are runtime errors") {
    auto r = run({"sort", "--algo", "pointwise", "--data", "/nonexistent/keys.jsonl"});
    CHECK(r.code == 1);
    CHECK(!r.err.empty());
}

TEST_CASE("a cached rerun issues zero uncached calls and identical output") {
    Sandbox sb;
    std::string cache = sb.file("cache.jsonl");
    std::vector<std::string> args{"sort",        "--algo", "external-merge", "--m",
                                  "4",           "--oracle", "sim",          "--seed",
                                  "3",           "--synthetic", "25",        "--data-seed",
                                  "11",          "--perm-swap-rate", "0.2",  "--cache",
                                  cache,         "--out", ""};
    std::string first_path = sb.file("first.json");
    std::string second_path = sb.file("second.json");
    args.back() = first_path;
    CHECK(run(args).code == 0);
    args.back() = second_path;
    CHECK(run(args).code == 0);

    json first = load_json(first_path);
    json second = load_json(second_path);
    CHECK(first["cases"][0]["ranking"] == second["cases"][0]["ranking"]);
    CHECK(first["usage"]["calls"].get<int>() > 0);
    CHECK(second["usage"]["calls"].get<int>() == 0);
    CHECK(second["usage"]["prompt_tokens"].get<int>() == 0);
}

TEST_CASE("eval reports tau 1.0 for a zero noise sort") {
    Sandbox sb;
    std::string out_path = sb.file("result.json");
    CHECK(run({"sort", "--algo", "quicksort", "--oracle", "sim", "--synthetic", "20",
               "--data-seed", "5", "--out", out_path})
              .code == 0);
    auto r = run({"eval", "--result", out_path, "--metric", "tau", "--synthetic", "20",
                  "--data-seed", "5"});
    CHECK(r.code == 0);
    CHECK(r.out.find("mean tau 1") != std::string::npos);
}

TEST_CASE("eval detects dataset mismatches") {
    Sandbox sb;
    std::string out_path = sb.file("result.json");
    CHECK(run({"sort", "--algo", "pointwise", "--oracle", "sim", "--synthetic", "10",
               "--data-seed", "5", "--out", out_path})
              .code == 0);
    auto r = run({"eval", "--result", out_path, "--metric", "tau", "--synthetic", "12",
                  "--data-seed", "5"});
    CHECK(r.code == 1);
}

TEST_CASE("multi-query rerank flows through run, qrels, and ndcg eval") {
    Sandbox sb;
    std::string keys = sb.write("keys.jsonl",
                                R"({"id":"d1","text":"passage one"}
{"id":"d2","text":"passage two"}
{"id":"d3","text":"passage three"}
{"id":"d4","text":"passage four"}
{"id":"d5","text":"passage five"}
{"id":"d6","text":"passage six"}
)");
    std::string runfile = sb.write("run.txt",
                                   "q1 Q0 d1 1 5.0 bm25\n"
                                   "q1 Q0 d2 2 4.0 bm25\n"
                                   "q1 Q0 d3 3 3.0 bm25\n"
                                   "q2 Q0 d4 1 5.0 bm25\n"
                                   "q2 Q0 d5 2 4.0 bm25\n"
                                   "q2 Q0 d6 3 3.0 bm25\n");
    std::string qrels = sb.write("qrels.txt",
                                 "q1 0 d1 0\n"
                                 "q1 0 d2 3\n"
                                 "q1 0 d3 1\n"
                                 "q2 0 d4 2\n"
                                 "q2 0 d5 0\n"
                                 "q2 0 d6 1\n");
    std::string queries = sb.write("queries.tsv", "q1\tfirst query\nq2\tsecond query\n");

    std::string out_path = sb.file("result.json");
    auto sort_run = run({"sort", "--algo", "external-merge", "--m", "2", "--oracle", "sim",
                         "--data", keys, "--run", runfile, "--qrels", qrels, "--queries", queries,
                         "--direction", "descending", "--out", out_path});
    CHECK(sort_run.code == 0);

    json doc = load_json(out_path);
    REQUIRE(doc["cases"].size() == 2);
    CHECK(doc["cases"][0]["query_id"] == "q1");
    // zero-noise rerank puts the graded passages in grade order
    CHECK(doc["cases"][0]["ranking"] == json::array({"d2", "d3", "d1"}));
    CHECK(doc["cases"][1]["ranking"] == json::array({"d4", "d6", "d5"}));

    auto eval_run = run({"eval", "--result", out_path, "--metric", "ndcg", "--k", "3", "--data",
                         keys, "--run", runfile, "--qrels", qrels, "--direction", "descending"});
    CHECK(eval_run.code == 0);
    CHECK(eval_run.out.find("q1 ndcg 1") != std::string::npos);
    CHECK(eval_run.out.find("q2 ndcg 1") != std::string::npos);
    CHECK(eval_run.out.find("mean ndcg 1") != std::string::npos);

    // tau against qrels-derived truth also works per query
    auto tau_run = run({"eval", "--result", out_path, "--metric", "tau", "--data", keys, "--run",
                        runfile, "--qrels", qrels, "--direction", "descending"});
    CHECK(tau_run.code == 0);
    CHECK(tau_run.out.find("mean tau 1") != std::string::npos);
}

TEST_CASE("eval mean is the arithmetic mean of per-query values") {
    Sandbox sb;
    std::string keys = sb.write("keys.jsonl",
                                R"({"id":"d1","text":"a"}
{"id":"d2","text":"b"}
{"id":"d3","text":"c"}
{"id":"d4","text":"d"}
)");
    std::string runfile = sb.write("run.txt",
                                   "q1 Q0 d1 1 2.0 t\n"
                                   "q1 Q0 d2 2 1.0 t\n"
                                   "q2 Q0 d3 1 2.0 t\n"
                                   "q2 Q0 d4 2 1.0 t\n");
    std::string qrels = sb.write("qrels.txt",
                                 "q1 0 d1 0\n"
                                 "q1 0 d2 3\n"
                                 "q2 0 d3 2\n"
                                 "q2 0 d4 0\n");
    // deliberately NOT resorted: evaluate the run order itself via pointwise on grades
    std::string out_path = sb.file("result.json");
    CHECK(run({"sort", "--algo", "pointwise", "--oracle", "sim", "--data", keys, "--run", runfile,
               "--qrels", qrels, "--direction", "ascending", "--out", out_path})
              .code == 0);
    auto r = run({"eval", "--result", out_path, "--metric", "ndcg", "--k", "2", "--data", keys,
                  "--run", runfile, "--qrels", qrels, "--direction", "ascending"});
    CHECK(r.code == 0);

    // parse the three printed values and check the mean relationship
    std::istringstream lines(r.out);
    std::string label, metric;
    double v1, v2, mean;
    lines >> label >> metric >> v1;
    lines >> label >> metric >> v2;
    lines >> label >> metric >> mean;
    CHECK(mean == doctest::Approx((v1 + v2) / 2).epsilon(1e-12));
}

TEST_CASE("sweep emits csv rows and a flat fit under zero noise") {
    Sandbox sb;
    std::string csv_path = sb.file("sweep.csv");
    auto r = run({"sweep", "--grid",
                  "pointwise;external-pointwise:m=4;external-merge:m=4;quicksort:votes=1",
                  "--oracle", "sim", "--synthetic", "24", "--data-seed", "2", "--out", csv_path});
    CHECK(r.code == 0);

    std::ifstream csv(csv_path);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "label,tokens,calls,quality");
    int rows = 0;
    std::string line;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        ++rows;
        CHECK(line.find(",1") != std::string::npos);  // quality column is exactly 1
    }
    CHECK(rows == 4);

    // all-equal quality fits a flat line
    auto fit_at = r.out.find("fit: quality = ");
    REQUIRE(fit_at != std::string::npos);
    std::istringstream fit_line(r.out.substr(fit_at));
    std::string w;
    double intercept, slope;
    fit_line >> w >> w >> w >> intercept >> w >> slope;
    CHECK(slope == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(intercept == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sweep exclusions drop rows from the fit but not the csv") {
    Sandbox sb;
    std::string csv_path = sb.file("sweep.csv");
    auto r = run({"sweep", "--grid", "pointwise;external-pointwise:m=4;external-merge:m=4",
                  "--oracle", "sim", "--synthetic", "16", "--exclude",
                  "pointwise,external-pointwise", "--out", csv_path});
    CHECK(r.code == 0);
    std::ifstream csv(csv_path);
    int lines = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 4);  // header + all three rows survive
    // only one point is left for the fit, so it is skipped
    CHECK(r.out.find("fit: skipped") != std::string::npos);
}

TEST_CASE("sweep rows run concurrently with ordered output") {
    Sandbox sb;
    std::string csv_path = sb.file("sweep.csv");
    auto r = run({"sweep", "--grid", "pointwise;external-merge:m=4;external-bubble:m=4",
                  "--oracle", "sim", "--synthetic", "20", "--jobs", "3", "--out", csv_path});
    CHECK(r.code == 0);
    std::ifstream csv(csv_path);
    std::string line;
    std::getline(csv, line);
    std::getline(csv, line);
    CHECK(line.rfind("pointwise,", 0) == 0);
    std::getline(csv, line);
    CHECK(line.rfind("external-merge:m=4,", 0) == 0);
    std::getline(csv, line);
    CHECK(line.rfind("external-bubble:m=4,", 0) == 0);
}

TEST_CASE("sweep renders an svg chart when asked") {
    Sandbox sb;
    std::string svg_path = sb.file("plot.svg");
    auto r = run({"sweep", "--grid", "pointwise;external-merge:m=4", "--oracle", "sim",
                  "--synthetic", "12", "--out", sb.file("s.csv"), "--plot", svg_path});
    CHECK(r.code == 0);
    std::ifstream svg(svg_path);
    std::string content((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
    CHECK(content.find("<svg") != std::string::npos);
    CHECK(content.find("circle") != std::string::npos);
}

TEST_CASE("batch-size probe prints the trace and uncached call count") {
    Sandbox sb;
    auto r = run({"batch-size", "--oracle", "sim", "--synthetic", "100", "--data-seed", "4",
                  "--max-size", "64", "--cache", sb.file("cache.jsonl")});
    CHECK(r.code == 0);
    CHECK(r.out.find("theta 0.6") != std::string::npos);  // default threshold echoed
    CHECK(r.out.find("round m=2: alpha=1") != std::string::npos);
    CHECK(r.out.find("round m=32: alpha=1") != std::string::npos);
    CHECK(r.out.find("chosen m = 64") != std::string::npos);
    CHECK(r.out.find("uncached oracle calls = 11") != std::string::npos);
}

TEST_CASE("batch-size probe collapses to the initial size under strict theta") {
    auto r = run({"batch-size", "--oracle", "sim", "--synthetic", "64", "--data-seed", "4",
                  "--theta", "1.0", "--value-sigma", "0.05", "--seed", "8"});
    CHECK(r.code == 0);
    CHECK(r.out.find("chosen m = 2") != std::string::npos);
    CHECK(r.out.find("alpha=1") == std::string::npos);  // first round already disagrees

    auto tiny = run({"batch-size", "--oracle", "sim", "--synthetic", "1"});
    CHECK(tiny.code == 1);  // dataset too small
}

TEST_CASE("cache subcommand reports and clears entries") {
    Sandbox sb;
    std::string cache = sb.file("cache.jsonl");
    CHECK(run({"sort", "--algo", "pointwise", "--oracle", "sim", "--synthetic", "6", "--cache",
               cache, "--out", sb.file("r.json")})
              .code == 0);
    auto stats = run({"cache", "--cache", cache});
    CHECK(stats.code == 0);
    CHECK(stats.out.find("6 entries") != std::string::npos);

    auto cleared = run({"cache", "--cache", cache, "--clear"});
    CHECK(cleared.code == 0);
    auto after = run({"cache", "--cache", cache});
    CHECK(after.out.find("0 entries") != std::string::npos);

    CHECK(run({"cache"}).code == 2);  // no path configured
}

TEST_CASE("unjudged candidates rate zero in simulated reranks") {
    Sandbox sb;
    std::string keys = sb.write("keys.jsonl",
                                R"({"id":"d1","text":"a"}
{"id":"d2","text":"b"}
{"id":"d3","text":"c"}
)");
    // d3 appears in the run but carries no judgment
    std::string runfile = sb.write("run.txt",
                                   "q1 Q0 d3 1 3.0 t\n"
                                   "q1 Q0 d1 2 2.0 t\n"
                                   "q1 Q0 d2 3 1.0 t\n");
    std::string qrels = sb.write("qrels.txt", "q1 0 d1 2\nq1 0 d2 1\n");
    std::string out_path = sb.file("result.json");
    auto r = run({"sort", "--algo", "pointwise", "--oracle", "sim", "--data", keys, "--run",
                  runfile, "--qrels", qrels, "--direction", "descending", "--out", out_path});
    CHECK(r.code == 0);
    json doc = load_json(out_path);
    CHECK(doc["cases"][0]["ranking"] == json::array({"d1", "d2", "d3"}));
}

TEST_CASE("sort rejects simulated runs without latents") {
    Sandbox sb;
    std::string keys = sb.write("keys.jsonl", R"({"id":"a","text":"x"}
{"id":"b","text":"y"}
)");
    auto r = run({"sort", "--algo", "pointwise", "--oracle", "sim", "--data", keys});
    CHECK(r.code == 1);
    CHECK(r.err.find("latent") != std::string::npos);
}

TEST_CASE("run files referencing unknown keys are rejected") {
    Sandbox sb;
    std::string keys = sb.write("keys.jsonl", R"({"id":"d1","text":"x","latent":1}
)");
    std::string runfile = sb.write("run.txt", "q1 Q0 d1 1 1.0 t\nq1 Q0 dX 2 0.5 t\n");
    auto r = run({"sort", "--algo", "pointwise", "--oracle", "sim", "--data", keys, "--run",
                  runfile});
    CHECK(r.code == 1);
    CHECK(r.err.find("dX") != std::string::npos);
}

}  // TEST_SUITE
