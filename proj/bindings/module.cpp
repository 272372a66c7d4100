#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "orderby/algorithms.hpp"
#include "orderby/cache.hpp"
#include "orderby/caching_oracle.hpp"
#include "orderby/core.hpp"
#include "orderby/data.hpp"
#include "orderby/eval.hpp"
#include "orderby/sim_oracle.hpp"

namespace py = pybind11;
using namespace orderby;

namespace {

RankTask make_task(const std::string& criterion, const std::string& direction,
                   const std::optional<std::string>& query) {
    RankTask t;
    t.criterion = criterion;
    t.direction = direction_from_string(direction);
    t.query = query;
    return t;
}

AlgoSpec make_spec(const std::string& name, int m, int votes, double theta, int max_size,
                   int max_passes, std::uint64_t rng_seed, unsigned parallelism) {
    AlgoSpec s;
    s.name = name;
    s.m = m;
    s.votes = votes;
    s.theta = theta;
    s.max_size = max_size;
    s.max_passes = max_passes;
    s.rng_seed = rng_seed;
    s.parallelism = parallelism;
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Access paths for LLM-backed ORDER BY: five sorting strategies over a value,"
              " comparison, and listwise oracle, with a deterministic simulated backend.";
    m.attr("__version__") = kVersion;

    py::class_<Key>(m, "Key")
        .def(py::init([](std::string id, std::string text, std::optional<double> latent) {
                 return Key{std::move(id), std::move(text), latent};
             }),
             py::arg("id"), py::arg("text"), py::arg("latent") = py::none())
        .def_readwrite("id", &Key::id)
        .def_readwrite("text", &Key::text)
        .def_readwrite("latent", &Key::latent)
        .def("__repr__", [](const Key& k) { return "Key(id='" + k.id + "')"; });

    py::class_<RankTask>(m, "RankTask")
        .def(py::init(&make_task), py::arg("criterion"), py::arg("direction") = "ascending",
             py::arg("query") = py::none())
        .def_readwrite("criterion", &RankTask::criterion)
        .def_readwrite("query", &RankTask::query)
        .def_property(
            "direction", [](const RankTask& t) { return std::string(to_string(t.direction)); },
            [](RankTask& t, const std::string& d) { t.direction = direction_from_string(d); });

    py::class_<NoiseModel>(m, "NoiseModel")
        .def(py::init([](double flip_prob, double value_sigma, double invalid_prob,
                         double perm_swap_rate, std::uint64_t seed) {
                 return NoiseModel{flip_prob, value_sigma, invalid_prob, perm_swap_rate, seed};
             }),
             py::arg("flip_prob") = 0.0, py::arg("value_sigma") = 0.0,
             py::arg("invalid_prob") = 0.0, py::arg("perm_swap_rate") = 0.0, py::arg("seed") = 0)
        .def_readwrite("flip_prob", &NoiseModel::flip_prob)
        .def_readwrite("value_sigma", &NoiseModel::value_sigma)
        .def_readwrite("invalid_prob", &NoiseModel::invalid_prob)
        .def_readwrite("perm_swap_rate", &NoiseModel::perm_swap_rate)
        .def_readwrite("seed", &NoiseModel::seed);

    py::class_<TokenCostModel>(m, "TokenCostModel")
        .def(py::init([](std::int64_t prompt_tokens_per_key, std::int64_t prompt_overhead,
                         std::int64_t completion_tokens_per_key) {
                 return TokenCostModel{prompt_tokens_per_key, prompt_overhead,
                                       completion_tokens_per_key};
             }),
             py::arg("prompt_tokens_per_key") = 30, py::arg("prompt_overhead") = 60,
             py::arg("completion_tokens_per_key") = 8)
        .def_readwrite("prompt_tokens_per_key", &TokenCostModel::prompt_tokens_per_key)
        .def_readwrite("prompt_overhead", &TokenCostModel::prompt_overhead)
        .def_readwrite("completion_tokens_per_key", &TokenCostModel::completion_tokens_per_key);

    py::class_<UsageTotals>(m, "UsageTotals")
        .def_readonly("calls", &UsageTotals::calls)
        .def_readonly("prompt_tokens", &UsageTotals::prompt_tokens)
        .def_readonly("completion_tokens", &UsageTotals::completion_tokens)
        .def("total_tokens", &UsageTotals::total_tokens);

    py::class_<UsageMeter>(m, "UsageMeter")
        .def(py::init<>())
        .def("add", &UsageMeter::add, py::arg("calls"), py::arg("prompt_tokens"),
             py::arg("completion_tokens"))
        .def("totals", &UsageMeter::totals);

    py::class_<Oracle>(m, "Oracle");  // opaque base

    py::class_<SimulatedOracle, Oracle>(m, "SimulatedOracle")
        .def(py::init([](const NoiseModel& noise, const TokenCostModel& cost,
                         std::size_t max_window) {
                 return SimulatedOracle(SimOracleConfig{noise, cost, max_window, true});
             }),
             py::arg("noise") = NoiseModel{}, py::arg("cost") = TokenCostModel{},
             py::arg("max_window") = 0);

    py::class_<ResponseCache>(m, "ResponseCache")
        .def(py::init<>())
        .def(py::init<const std::string&>(), py::arg("path"))
        .def("lookup", &ResponseCache::lookup)
        .def("store", &ResponseCache::store)
        .def("__len__", &ResponseCache::size)
        .def("clear", &ResponseCache::clear);

    py::class_<CachingOracle, Oracle>(m, "CachingOracle")
        .def(py::init<Oracle&, ResponseCache&>(), py::keep_alive<1, 2>(), py::keep_alive<1, 3>());

    m.def("algorithm_names", [] { return algorithm_names(); });

    m.def(
        "sort",
        [](const std::string& algo, const std::vector<Key>& keys, const RankTask& task,
           Oracle& oracle, UsageMeter* meter, int m_param, int votes, double theta, int max_size,
           int max_passes, std::uint64_t rng_seed, unsigned parallelism) {
            AlgoSpec spec =
                make_spec(algo, m_param, votes, theta, max_size, max_passes, rng_seed, parallelism);
            std::unique_ptr<UsageMeter> local;
            if (!meter) {
                local = std::make_unique<UsageMeter>();
                meter = local.get();
            }
            return run_algorithm(spec, keys, task, oracle, *meter).ordered_ids;
        },
        py::arg("algo"), py::arg("keys"), py::arg("task"), py::arg("oracle"),
        py::arg("meter") = nullptr, py::arg("m") = 0, py::arg("votes") = 1,
        py::arg("theta") = 0.6, py::arg("max_size") = 64, py::arg("max_passes") = 0,
        py::arg("rng_seed") = 0, py::arg("parallelism") = 1,
        "Run one access path and return the ranked key ids (best first).");

    m.def(
        "determine_batch_size",
        [](const std::vector<Key>& keys, const RankTask& task, Oracle& oracle, double theta,
           int max_size, int initial, UsageMeter* meter) {
            std::unique_ptr<UsageMeter> local;
            if (!meter) {
                local = std::make_unique<UsageMeter>();
                meter = local.get();
            }
            BatchSizeSearchConfig cfg{theta, max_size, initial, 1e-9};
            auto res = determine_batch_size(keys, task, oracle, cfg, *meter);
            py::list rounds;
            for (const auto& r : res.rounds)
                rounds.append(py::make_tuple(r.m, r.alpha, r.invalid));
            return py::make_tuple(res.batch_size, rounds);
        },
        py::arg("keys"), py::arg("task"), py::arg("oracle"), py::arg("theta") = 0.6,
        py::arg("max_size") = 64, py::arg("initial") = 2, py::arg("meter") = nullptr,
        "Agreement-based batch-size search; returns (m, [(m, alpha, invalid), ...]).");

    m.def("repair_permutation", &repair_permutation, py::arg("raw"), py::arg("expected"));

    m.def(
        "kendall_tau_b",
        [](const std::vector<std::string>& predicted,
           const std::unordered_map<std::string, double>& truth) {
            return kendall_tau_b(Ranking{predicted}, truth);
        },
        py::arg("predicted"), py::arg("truth"));

    m.def(
        "ndcg_at_k",
        [](const std::vector<std::string>& predicted,
           const std::unordered_map<std::string, int>& relevance, int k) {
            return ndcg_at_k(Ranking{predicted}, relevance, k);
        },
        py::arg("predicted"), py::arg("relevance"), py::arg("k") = 10);

    m.def("agreement_fraction", &agreement_fraction, py::arg("a"), py::arg("b"),
          py::arg("tol") = 0.0);

    m.def(
        "fit_log_linear",
        [](const std::vector<std::pair<double, double>>& pts) {
            std::vector<SweepPoint> points;
            points.reserve(pts.size());
            for (const auto& [tokens, quality] : pts) points.push_back({tokens, quality, ""});
            LogLinearFit f = fit_log_linear(points);
            return py::make_tuple(f.intercept, f.slope, f.r_squared);
        },
        py::arg("points"), "Fit quality = a + b*ln(tokens); returns (a, b, r_squared).");

    m.def(
        "generate_synthetic",
        [](std::size_t n, const std::string& distribution, double tie_rate, std::uint64_t seed,
           const std::string& direction) {
            SyntheticSpec spec;
            spec.n = n;
            spec.distribution = distribution_from_string(distribution);
            spec.tie_rate = tie_rate;
            spec.seed = seed;
            spec.direction = direction_from_string(direction);
            Dataset ds = generate_synthetic(spec);
            py::dict truth;
            for (const auto& t : ds.truth) truth[py::str(t.id)] = t.rank;
            return py::make_tuple(ds.keys, truth, ds.task);
        },
        py::arg("n"), py::arg("distribution") = "distinct", py::arg("tie_rate") = 0.2,
        py::arg("seed") = 0, py::arg("direction") = "ascending",
        "Seeded synthetic dataset; returns (keys, truth_ranks, task).");
}
