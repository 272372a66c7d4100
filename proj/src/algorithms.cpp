#include "orderby/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iostream>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "orderby/rng.hpp"

namespace orderby {
namespace {

bool is_descending(const RankTask& task) { return task.direction == Direction::descending; }

// Direction is applied here, once, for the whole algorithm layer: backends
// answer in ascending orientation, algorithms consume "precedes" outcomes
// and best-first windows.
bool first_precedes(Oracle& oracle, const Key& a, const Key& b, const RankTask& task,
                    UsageMeter& meter) {
    auto r = oracle.compare(a, b, task, meter);
    bool first = true;
    if (!r.ok()) {
        std::cerr << "compare(" << a.id << ", " << b.id << ") failed (" << r.detail
                  << "); treating as first\n";
    } else {
        first = r.value.winner == Winner::first;
    }
    return is_descending(task) ? !first : first;
}

// Window sorted best-first per the task direction. A backend failure (only
// possible for live transports) degrades to the request order with a
// warning; sorting stays total.
std::vector<std::string> oriented_window_sort(Oracle& oracle, const std::vector<Key>& window,
                                              const RankTask& task, UsageMeter& meter) {
    auto r = oracle.sort_batch(window, task, meter);
    std::vector<std::string> ids;
    if (r.ok()) {
        ids = std::move(r.value.permutation);
    } else {
        std::cerr << "sort_batch of " << window.size() << " keys failed (" << r.detail
                  << "); keeping request order\n";
        ids.reserve(window.size());
        for (const Key& k : window) ids.push_back(k.id);
    }
    if (is_descending(task)) std::reverse(ids.begin(), ids.end());
    return ids;
}

struct ScoredKey {
    const Key* key = nullptr;
    double value = 0;
    bool scored = false;
    std::size_t input_index = 0;
};

Ranking rank_by_value(std::vector<ScoredKey> rows, const RankTask& task) {
    const bool desc = is_descending(task);
    std::sort(rows.begin(), rows.end(), [desc](const ScoredKey& a, const ScoredKey& b) {
        if (a.scored != b.scored) return a.scored;  // unscorable keys go to the worst end
        if (a.scored && a.value != b.value) return desc ? a.value > b.value : a.value < b.value;
        return a.input_index < b.input_index;  // stable among ties
    });
    Ranking out;
    out.ordered_ids.reserve(rows.size());
    for (const auto& r : rows) out.ordered_ids.push_back(r.key->id);
    return out;
}

void add_phase(AlgoReport* report, const std::string& name, const UsageTotals& before,
               const UsageTotals& after) {
    if (report) report->phases.push_back({name, after - before});
}

bool values_match(double a, double b, double rel_tol) {
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= rel_tol * scale;
}

}  // namespace

Ranking sort_pointwise(const std::vector<Key>& keys, const RankTask& task, Oracle& oracle,
                       UsageMeter& meter, AlgoReport* report) {
    UsageTotals before = meter.totals();
    std::vector<ScoredKey> rows(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        rows[i] = {&keys[i], 0, false, i};
        auto r = oracle.score_batch({keys[i]}, task, meter);
        if (r.ok()) {
            rows[i].value = r.value[0];
            rows[i].scored = true;
        }
    }
    add_phase(report, "scoring", before, meter.totals());
    return rank_by_value(std::move(rows), task);
}

Ranking sort_external_pointwise(const std::vector<Key>& keys, const RankTask& task,
                                Oracle& oracle, int batch_size, UsageMeter& meter,
                                AlgoReport* report) {
    if (batch_size < 1) throw std::invalid_argument("external-pointwise: batch size must be >= 1");
    UsageTotals before = meter.totals();

    std::vector<ScoredKey> rows(keys.size());
    for (std::size_t at = 0; at < keys.size(); at += std::size_t(batch_size)) {
        std::size_t end = std::min(keys.size(), at + std::size_t(batch_size));
        std::vector<Key> chunk(keys.begin() + at, keys.begin() + end);

        auto r = oracle.score_batch(chunk, task, meter);
        if (!r.ok()) r = oracle.score_batch(chunk, task, meter);  // one retry

        for (std::size_t i = at; i < end; ++i) rows[i] = {&keys[i], 0, false, i};
        if (r.ok()) {
            for (std::size_t i = at; i < end; ++i) {
                rows[i].value = r.value[i - at];
                rows[i].scored = true;
            }
        } else {
            // Chunk stays malformed: score its keys one by one.
            for (std::size_t i = at; i < end; ++i) {
                auto single = oracle.score_batch({keys[i]}, task, meter);
                if (single.ok()) {
                    rows[i].value = single.value[0];
                    rows[i].scored = true;
                }
            }
        }
    }
    add_phase(report, "scoring", before, meter.totals());
    return rank_by_value(std::move(rows), task);
}

BatchSizeResult determine_batch_size(const std::vector<Key>& keys, const RankTask& task,
                                     Oracle& oracle, const BatchSizeSearchConfig& cfg,
                                     UsageMeter& meter) {
    if (keys.size() < 2)
        throw std::invalid_argument("determine_batch_size: need at least 2 keys");
    if (cfg.initial < 2 || cfg.max_size < cfg.initial || !(cfg.theta > 0) || cfg.theta > 1)
        throw std::invalid_argument("determine_batch_size: bad config");

    BatchSizeResult result;
    int m = cfg.initial;
    const std::size_t n = keys.size();

    while (std::size_t(2 * m) < n && m < cfg.max_size) {
        std::vector<Key> b1(keys.begin(), keys.begin() + m);
        std::vector<Key> b2(keys.begin() + m, keys.begin() + 2 * m);
        std::vector<Key> b3(keys.begin(), keys.begin() + 2 * m);

        auto v1 = oracle.score_batch(b1, task, meter);
        auto v2 = oracle.score_batch(b2, task, meter);
        auto v3 = oracle.score_batch(b3, task, meter);
        if (!v1.ok() || !v2.ok() || !v3.ok()) {
            result.rounds.push_back({m, std::numeric_limits<double>::quiet_NaN(), true});
            break;
        }

        std::size_t agree = 0;
        for (int i = 0; i < 2 * m; ++i) {
            double merged = i < m ? v1.value[std::size_t(i)] : v2.value[std::size_t(i - m)];
            if (values_match(merged, v3.value[std::size_t(i)], cfg.value_match_rel_tol)) ++agree;
        }
        double alpha = double(agree) / double(2 * m);
        result.rounds.push_back({m, alpha, false});
        if (alpha >= cfg.theta) {
            m *= 2;
        } else {
            break;
        }
    }
    result.batch_size = m;
    return result;
}

namespace {

void quicksort_mv(std::vector<const Key*>& items, const RankTask& task, Oracle& oracle,
                  const VoteConfig& cfg, std::uint64_t rng_seed, UsageMeter& meter,
                  std::vector<const Key*>& out) {
    if (items.size() <= 1) {
        out.insert(out.end(), items.begin(), items.end());
        return;
    }
    const Key* pivot = items[0];
    std::vector<const Key*> less, greater;

    for (std::size_t i = 1; i < items.size(); ++i) {
        const Key* x = items[i];
        bool initial_less = first_precedes(oracle, *x, *pivot, task, meter);

        // Peers come from the partition opposite the initial vote; a win
        // against any of them reads as a vote for the earlier side through
        // transitivity.
        auto& pool = initial_less ? greater : less;
        int want = std::min<int>(cfg.votes - 1, int(pool.size()));
        int votes_less = initial_less ? 1 : 0;
        int votes_total = 1;
        if (want > 0) {
            SplitMix64 gen(mix64(rng_seed, fnv1a64(x->id)));
            std::vector<std::size_t> pick(pool.size());
            std::iota(pick.begin(), pick.end(), 0);
            for (int j = 0; j < want; ++j) {
                std::size_t swap_at = std::size_t(j) + gen.below(pick.size() - std::size_t(j));
                std::swap(pick[std::size_t(j)], pick[swap_at]);
                const Key* peer = pool[pick[std::size_t(j)]];
                votes_less += first_precedes(oracle, *x, *peer, task, meter) ? 1 : 0;
                ++votes_total;
            }
        }

        bool to_less;
        if (2 * votes_less > votes_total) {
            to_less = true;
        } else if (2 * votes_less < votes_total) {
            to_less = false;
        } else {
            to_less = initial_less;  // tie: keep the pivot comparison
        }
        (to_less ? less : greater).push_back(x);
    }

    quicksort_mv(less, task, oracle, cfg, rng_seed, meter, out);
    out.push_back(pivot);
    quicksort_mv(greater, task, oracle, cfg, rng_seed, meter, out);
}

}  // namespace

Ranking sort_quicksort_mv(const std::vector<Key>& keys, const RankTask& task, Oracle& oracle,
                          const VoteConfig& cfg, std::uint64_t rng_seed, UsageMeter& meter,
                          AlgoReport* report) {
    if (cfg.votes < 1) throw std::invalid_argument("quicksort: votes must be >= 1");
    UsageTotals before = meter.totals();

    std::vector<const Key*> items;
    items.reserve(keys.size());
    for (const Key& k : keys) items.push_back(&k);
    std::vector<const Key*> out;
    out.reserve(keys.size());
    quicksort_mv(items, task, oracle, cfg, rng_seed, meter, out);

    add_phase(report, "comparisons", before, meter.totals());
    Ranking r;
    r.ordered_ids.reserve(out.size());
    for (const Key* k : out) r.ordered_ids.push_back(k->id);
    return r;
}

Ranking sort_external_bubble(const std::vector<Key>& keys, const RankTask& task, Oracle& oracle,
                             int window, int max_passes, UsageMeter& meter, AlgoReport* report) {
    if (window < 2) throw std::invalid_argument("external-bubble: window must be >= 2");
    UsageTotals before = meter.totals();

    const std::size_t n = keys.size();
    KeyIndex index = build_key_index(keys);

    std::vector<std::string> current;
    current.reserve(n);
    for (const Key& k : keys) current.push_back(k.id);

    std::int64_t passes = 0;
    if (n >= 1 && n <= std::size_t(window)) {
        // One window covers the whole list: a single listwise call settles it.
        current = oriented_window_sort(oracle, keys, task, meter);
        passes = 1;
    } else if (n > 1) {
        const std::size_t w = std::size_t(window);
        const std::size_t stride = std::max<std::size_t>(std::size_t(window) / 2, 1);
        if (max_passes <= 0)
            max_passes = int((2 * n + std::size_t(window) - 1) / std::size_t(window));

        // Window start offsets, worst end (back) first, final window at 0.
        std::vector<std::size_t> starts;
        for (std::size_t s = n - w;; s = s > stride ? s - stride : 0) {
            starts.push_back(s);
            if (s == 0) break;
        }

        for (passes = 0; passes < max_passes;) {
            ++passes;
            bool changed = false;
            for (std::size_t s : starts) {
                std::vector<Key> window_keys;
                window_keys.reserve(w);
                for (std::size_t i = s; i < s + w; ++i)
                    window_keys.push_back(*index.at(current[i]));
                std::vector<std::string> sorted = oriented_window_sort(oracle, window_keys, task, meter);
                for (std::size_t i = 0; i < w; ++i) {
                    if (current[s + i] != sorted[i]) {
                        current[s + i] = sorted[i];
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }
    }

    add_phase(report, "window_sorting", before, meter.totals());
    if (report) report->counters["passes"] = passes;
    return Ranking{std::move(current)};
}

KeyIndex build_key_index(const std::vector<Key>& keys) {
    KeyIndex index;
    index.reserve(keys.size());
    for (const Key& k : keys) {
        if (!index.emplace(k.id, &k).second)
            throw std::invalid_argument("duplicate key id '" + k.id + "'");
    }
    return index;
}

std::vector<std::string> two_way_merge(const std::vector<std::string>& run1,
                                       const std::vector<std::string>& run2,
                                       const KeyIndex& keys, const MergeSortConfig& cfg,
                                       const RankTask& task, Oracle& oracle, UsageMeter& meter) {
    const std::size_t h = std::size_t(cfg.buffer_half());
    std::size_t i = 0, j = 0;
    std::vector<std::string> merged;
    merged.reserve(run1.size() + run2.size());

    while (i < run1.size() || j < run2.size()) {
        if (i >= run1.size()) {
            merged.insert(merged.end(), run2.begin() + j, run2.end());
            break;
        }
        if (j >= run2.size()) {
            merged.insert(merged.end(), run1.begin() + i, run1.end());
            break;
        }

        const std::size_t take1 = std::min(h, run1.size() - i);
        const std::size_t take2 = std::min(h, run2.size() - j);
        std::vector<Key> buffer;
        buffer.reserve(take1 + take2);
        std::unordered_set<std::string> from_run1;
        for (std::size_t t = 0; t < take1; ++t) {
            buffer.push_back(*keys.at(run1[i + t]));
            from_run1.insert(run1[i + t]);
        }
        for (std::size_t t = 0; t < take2; ++t) buffer.push_back(*keys.at(run2[j + t]));

        std::vector<std::string> sorted = oriented_window_sort(oracle, buffer, task, meter);

        // Emit from the buffer's front until either side's take is used up.
        // Each emission consumes the next unconsumed item of its source run,
        // so cursor advancement stays consistent with emitted identities
        // even when a noisy permutation reorders items within one run.
        std::size_t e1 = 0, e2 = 0;
        for (const std::string& id : sorted) {
            if (from_run1.count(id)) {
                merged.push_back(run1[i + e1]);
                ++e1;
            } else {
                merged.push_back(run2[j + e2]);
                ++e2;
            }
            if (e1 == take1 || e2 == take2) break;
        }
        i += e1;
        j += e2;
    }
    return merged;
}

Ranking sort_external_merge(const std::vector<Key>& keys, const RankTask& task, Oracle& oracle,
                            const MergeSortConfig& cfg, UsageMeter& meter, unsigned parallelism,
                            AlgoReport* report) {
    if (cfg.batch_size < 1) throw std::invalid_argument("external-merge: batch size must be >= 1");
    UsageTotals start = meter.totals();

    const std::size_t n = keys.size();
    if (n == 0) return {};
    KeyIndex index = build_key_index(keys);

    // Phase 1: run generation over consecutive chunks. Chunk requests are
    // independent, so they may run on several threads; run order is the
    // chunk order either way.
    const std::size_t m = std::size_t(cfg.batch_size);
    const std::size_t n_runs = (n + m - 1) / m;
    std::vector<std::vector<std::string>> runs(n_runs);
    auto sort_chunk = [&](std::size_t c) {
        std::size_t lo = c * m, hi = std::min(n, lo + m);
        std::vector<Key> chunk(keys.begin() + lo, keys.begin() + hi);
        runs[c] = oriented_window_sort(oracle, chunk, task, meter);
    };
    if (parallelism <= 1 || n_runs <= 1) {
        for (std::size_t c = 0; c < n_runs; ++c) sort_chunk(c);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t c = next.fetch_add(1); c < n_runs; c = next.fetch_add(1))
                sort_chunk(c);
        };
        std::vector<std::future<void>> pool;
        for (unsigned t = 0; t < std::min<unsigned>(parallelism, unsigned(n_runs)); ++t)
            pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();
    }
    UsageTotals after_runs = meter.totals();
    add_phase(report, "run_generation", start, after_runs);

    // Phase 2: merge runs pairwise; an odd trailing run is carried forward.
    std::int64_t rounds = 0;
    while (runs.size() > 1) {
        ++rounds;
        std::vector<std::vector<std::string>> next_runs;
        next_runs.reserve((runs.size() + 1) / 2);
        for (std::size_t r = 0; r < runs.size(); r += 2) {
            if (r + 1 < runs.size()) {
                next_runs.push_back(
                    two_way_merge(runs[r], runs[r + 1], index, cfg, task, oracle, meter));
            } else {
                next_runs.push_back(std::move(runs[r]));
            }
        }
        runs = std::move(next_runs);
    }
    add_phase(report, "merging", after_runs, meter.totals());
    if (report) {
        report->counters["runs"] = std::int64_t(n_runs);
        report->counters["merge_rounds"] = rounds;
    }
    return Ranking{std::move(runs.front())};
}

const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names{kAlgoPointwise, kAlgoExternalPointwise,
                                                kAlgoQuicksort, kAlgoExternalBubble,
                                                kAlgoExternalMerge};
    return names;
}

bool is_algorithm(const std::string& name) {
    const auto& names = algorithm_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

Ranking run_algorithm(const AlgoSpec& spec, const std::vector<Key>& keys, const RankTask& task,
                      Oracle& oracle, UsageMeter& meter, AlgoReport* report) {
    if (spec.name == kAlgoPointwise) {
        return sort_pointwise(keys, task, oracle, meter, report);
    }
    if (spec.name == kAlgoExternalPointwise) {
        int m = spec.m;
        if (m <= 0 && keys.size() >= 2) {
            // No batch size given: run the agreement search first.
            UsageTotals before = meter.totals();
            BatchSizeSearchConfig search{spec.theta, spec.max_size, spec.initial, 1e-9};
            auto found = determine_batch_size(keys, task, oracle, search, meter);
            m = found.batch_size;
            if (report) {
                report->phases.push_back({"batch_size_search", meter.totals() - before});
                report->batch_size_rounds = found.rounds;
                report->counters["batch_size"] = m;
            }
        } else if (m <= 0) {
            m = 1;
        }
        return sort_external_pointwise(keys, task, oracle, m, meter, report);
    }
    if (spec.name == kAlgoQuicksort) {
        return sort_quicksort_mv(keys, task, oracle, VoteConfig{spec.votes}, spec.rng_seed, meter,
                                 report);
    }
    if (spec.name == kAlgoExternalBubble) {
        return sort_external_bubble(keys, task, oracle, spec.m > 0 ? spec.m : 8, spec.max_passes,
                                    meter, report);
    }
    if (spec.name == kAlgoExternalMerge) {
        return sort_external_merge(keys, task, oracle, MergeSortConfig{spec.m > 0 ? spec.m : 8},
                                   meter, spec.parallelism, report);
    }
    throw std::invalid_argument("unknown algorithm: " + spec.name);
}

}  // namespace orderby
