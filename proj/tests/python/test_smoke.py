"""Smoke tests for the python bindings: each exposed operation runs end to
end against the simulated oracle."""

import math

import pytest

import llm_orderby as ob


def make_keys(latents):
    return [ob.Key(id=f"k{i + 1}", text=f"item {i + 1}", latent=v) for i, v in enumerate(latents)]


def zero_noise():
    return ob.SimulatedOracle(noise=ob.NoiseModel(seed=1))


def test_version_and_registry():
    assert ob.__version__
    assert set(ob.algorithm_names()) == {
        "pointwise",
        "external-pointwise",
        "quicksort",
        "external-bubble",
        "external-merge",
    }


@pytest.mark.parametrize("algo", ["pointwise", "external-pointwise", "quicksort",
                                  "external-bubble", "external-merge"])
def test_every_access_path_sorts_exactly(algo):
    keys = make_keys([5.0, 1.0, 4.0, 2.0, 3.0])
    task = ob.RankTask("order by the hidden value")
    got = ob.sort(algo, keys, task, zero_noise(), m=2)
    assert got == ["k2", "k4", "k5", "k3", "k1"]


def test_descending_direction():
    keys = make_keys([1.0, 3.0, 2.0])
    task = ob.RankTask("order by the hidden value", direction="descending")
    got = ob.sort("external-merge", keys, task, zero_noise(), m=2)
    assert got == ["k2", "k3", "k1"]


def test_sort_meters_usage():
    keys = make_keys(list(range(10)))
    meter = ob.UsageMeter()
    ob.sort("pointwise", keys, ob.RankTask("c"), zero_noise(), meter=meter)
    totals = meter.totals()
    assert totals.calls == 10
    assert totals.total_tokens() > 0


def test_noise_is_seeded_and_deterministic():
    keys = make_keys([float(i) for i in range(30)])
    task = ob.RankTask("c")
    oracle = ob.SimulatedOracle(noise=ob.NoiseModel(flip_prob=0.2, seed=7))
    a = ob.sort("quicksort", keys, task, oracle, votes=3, rng_seed=5)
    b = ob.sort("quicksort", keys, task, oracle, votes=3, rng_seed=5)
    assert a == b
    assert sorted(a) == sorted(k.id for k in keys)


def test_determine_batch_size_doubles_until_the_cap():
    keys = make_keys([float(i) for i in range(100)])
    oracle = zero_noise()
    m, rounds = ob.determine_batch_size(keys, ob.RankTask("c"), oracle, max_size=64)
    assert m == 64
    assert [r[0] for r in rounds] == [2, 4, 8, 16, 32]
    assert all(r[1] == 1.0 for r in rounds)


def test_caching_oracle_serves_repeats():
    keys = make_keys([3.0, 1.0, 2.0])
    task = ob.RankTask("c")
    backend = zero_noise()
    cache = ob.ResponseCache()
    oracle = ob.CachingOracle(backend, cache)
    meter = ob.UsageMeter()
    first = ob.sort("pointwise", keys, task, oracle, meter=meter)
    assert meter.totals().calls == 3
    second = ob.sort("pointwise", keys, task, oracle, meter=meter)
    assert second == first
    assert meter.totals().calls == 3  # replayed from the cache
    assert len(cache) == 3


def test_repair_permutation_rule():
    assert ob.repair_permutation(["b", "b", "z"], ["a", "b", "c"]) == ["b", "a", "c"]


def test_metrics_match_frozen_values():
    assert ob.kendall_tau_b(["a", "c", "b"], {"a": 0.0, "b": 1.0, "c": 2.0}) == pytest.approx(
        1.0 / 3.0, abs=1e-12
    )
    assert ob.ndcg_at_k(["a", "b", "c"], {"a": 0, "b": 3, "c": 2}, k=3) == pytest.approx(
        0.6653152460429406, abs=1e-9
    )
    assert ob.agreement_fraction([1, 2, 3, 4], [1, 2, 3, 9], tol=0) == 0.75


def test_fit_log_linear_recovers_exact_coefficients():
    pts = [(t, 0.1 + 0.05 * math.log(t)) for t in (100, 1000, 10000)]
    intercept, slope, r2 = ob.fit_log_linear(pts)
    assert intercept == pytest.approx(0.1, abs=1e-9)
    assert slope == pytest.approx(0.05, abs=1e-9)
    assert r2 == pytest.approx(1.0, abs=1e-9)


def test_generate_synthetic_round_trips_through_metrics():
    keys, truth, task = ob.generate_synthetic(50, seed=3)
    assert len(keys) == 50 and len(truth) == 50
    ranking = ob.sort("external-merge", keys, task, zero_noise(), m=8)
    assert ob.kendall_tau_b(ranking, truth) == 1.0
