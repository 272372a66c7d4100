#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "orderby/core.hpp"
#include "orderby/oracle.hpp"

namespace orderby {

// --- configuration ---------------------------------------------------------

struct BatchSizeSearchConfig {
    double theta = 0.6;               // agreement threshold
    int max_size = 64;                // maximum batch size M
    int initial = 2;                  // starting batch size
    double value_match_rel_tol = 1e-9;  // two values agree within this relative tolerance
};

struct MergeSortConfig {
    int batch_size = 8;  // m: run size and buffer budget

    // h: items taken from each run's front per buffer round.
    int buffer_half() const { return batch_size / 2 > 1 ? batch_size / 2 : 1; }
};

struct VoteConfig {
    int votes = 1;  // v >= 1; odd values avoid ties against the initial vote
};

// --- run reporting ----------------------------------------------------------

struct PhaseUsage {
    std::string name;
    UsageTotals usage;
};

struct BatchSizeRound {
    int m = 0;
    double alpha = 0;      // agreement for this round; NaN when invalid
    bool invalid = false;  // an oracle output was malformed; search stopped
};

struct AlgoReport {
    std::vector<PhaseUsage> phases;
    std::map<std::string, std::int64_t> counters;  // passes, merge_rounds, ...
    std::vector<BatchSizeRound> batch_size_rounds;
};

// --- the five access paths ---------------------------------------------------

// Scores every key in its own request, then sorts by value (stable; keys
// whose score stays invalid go to the worst end in input order).
Ranking sort_pointwise(const std::vector<Key>& keys, const RankTask& task, Oracle& oracle,
                       UsageMeter& meter, AlgoReport* report = nullptr);

// Scores consecutive chunks of `batch_size` keys per request. A chunk whose
// response is invalid is retried once, then scored key by key.
Ranking sort_external_pointwise(const std::vector<Key>& keys, const RankTask& task,
                                Oracle& oracle, int batch_size, UsageMeter& meter,
                                AlgoReport* report = nullptr);

// Agreement-based batch-size search: doubles m from `initial` while the
// values of two half batches merged together agree with the combined batch
// at rate >= theta, stopping at max_size, data exhaustion, an invalid
// output, or below-threshold agreement.
struct BatchSizeResult {
    int batch_size = 0;
    std::vector<BatchSizeRound> rounds;
};
BatchSizeResult determine_batch_size(const std::vector<Key>& keys, const RankTask& task,
                                     Oracle& oracle, const BatchSizeSearchConfig& cfg,
                                     UsageMeter& meter);

// First-element pivot quicksort where each item's side is decided by a
// majority over the pivot comparison plus up to votes-1 comparisons against
// peers sampled from the opposite partition, read through transitivity.
// Vote ties fall back to the pivot comparison. Peer sampling is seeded by
// (rng_seed, item id).
Ranking sort_quicksort_mv(const std::vector<Key>& keys, const RankTask& task, Oracle& oracle,
                          const VoteConfig& cfg, std::uint64_t rng_seed, UsageMeter& meter,
                          AlgoReport* report = nullptr);

// Sliding-window sort: windows of `window` keys, advancing by window/2 from
// the worst end toward the best end, repeated until a pass changes nothing
// or max_passes is reached (default ceil(2N/window) when max_passes <= 0).
Ranking sort_external_bubble(const std::vector<Key>& keys, const RankTask& task, Oracle& oracle,
                             int window, int max_passes, UsageMeter& meter,
                             AlgoReport* report = nullptr);

// External merge sort: phase 1 sorts consecutive chunks of batch_size keys
// into runs (chunks may be scored on `parallelism` threads; results do not
// depend on scheduling); phase 2 merges runs pairwise, carrying an odd
// trailing run forward, until one remains.
Ranking sort_external_merge(const std::vector<Key>& keys, const RankTask& task, Oracle& oracle,
                            const MergeSortConfig& cfg, UsageMeter& meter,
                            unsigned parallelism = 1, AlgoReport* report = nullptr);

// One merge step: repeatedly takes up to buffer_half() items from each
// run's front, sorts the union in one listwise request, and emits from the
// front of the buffer until either side's take is exhausted.
using KeyIndex = std::unordered_map<std::string, const Key*>;
KeyIndex build_key_index(const std::vector<Key>& keys);
std::vector<std::string> two_way_merge(const std::vector<std::string>& run1,
                                       const std::vector<std::string>& run2,
                                       const KeyIndex& keys, const MergeSortConfig& cfg,
                                       const RankTask& task, Oracle& oracle, UsageMeter& meter);

// --- registry ----------------------------------------------------------------

inline constexpr const char* kAlgoPointwise = "pointwise";
inline constexpr const char* kAlgoExternalPointwise = "external-pointwise";
inline constexpr const char* kAlgoQuicksort = "quicksort";
inline constexpr const char* kAlgoExternalBubble = "external-bubble";
inline constexpr const char* kAlgoExternalMerge = "external-merge";

const std::vector<std::string>& algorithm_names();
bool is_algorithm(const std::string& name);

struct AlgoSpec {
    std::string name;
    int m = 0;  // batch/window size; 0 = per-algorithm default (search, for external-pointwise)
    int votes = 1;
    double theta = 0.6;
    int max_size = 64;
    int initial = 2;
    int max_passes = 0;  // 0 = default bound
    std::uint64_t rng_seed = 0;
    unsigned parallelism = 1;
};

// Dispatches by registry name; throws std::invalid_argument for unknown
// names or out-of-range parameters.
Ranking run_algorithm(const AlgoSpec& spec, const std::vector<Key>& keys, const RankTask& task,
                      Oracle& oracle, UsageMeter& meter, AlgoReport* report = nullptr);

}  // namespace orderby
