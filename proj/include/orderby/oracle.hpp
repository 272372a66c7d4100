#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orderby/core.hpp"

namespace orderby {

enum class OracleStatus { ok, invalid_output, transport_error, comparison_failed };

const char* to_string(OracleStatus s);

template <typename T>
struct OracleResult {
    OracleStatus status = OracleStatus::ok;
    T value{};
    std::string detail;  // cause, for non-ok results

    bool ok() const { return status == OracleStatus::ok; }

    static OracleResult failure(OracleStatus s, std::string why) {
        OracleResult r;
        r.status = s;
        r.detail = std::move(why);
        return r;
    }
};

enum class Winner { first, second };

struct CompareOutcome {
    Winner winner = Winner::first;
};

// Ranked ids for one listwise request. `valid` records whether the raw
// response was a true permutation of the request before repair.
struct BatchSortResult {
    std::vector<std::string> permutation;
    bool valid = true;
};

// Seeded parameters of the simulated noisy oracle.
struct NoiseModel {
    double flip_prob = 0.0;       // probability a pairwise comparison is inverted
    double value_sigma = 0.0;     // stddev of additive Gaussian noise on scores
    double invalid_prob = 0.0;    // probability a batch response is malformed
    double perm_swap_rate = 0.0;  // expected fraction of adjacent transpositions
    std::uint64_t seed = 0;
};

// Fixed per-call token accounting for the simulated backend. The constants
// are configuration, not measurements; only relative cost matters.
struct TokenCostModel {
    std::int64_t prompt_tokens_per_key = 30;
    std::int64_t prompt_overhead = 60;
    std::int64_t completion_tokens_per_key = 8;
};

// The three capabilities the sorting algorithms consume: batch value
// scoring, pairwise comparison, and batch (listwise) sorting.
//
// Backends answer in the criterion's natural ascending orientation
// (compare: winner = the key that comes first ascending; sort_batch:
// ascending permutation; score_batch: raw values). Task direction is
// applied once, at the algorithm boundary.
class Oracle {
public:
    virtual ~Oracle() = default;

    // One value per key, in request order.
    virtual OracleResult<std::vector<double>> score_batch(const std::vector<Key>& keys,
                                                          const RankTask& task,
                                                          UsageMeter& meter) = 0;

    // Requires a.id != b.id. Exact ties break toward `first`.
    virtual OracleResult<CompareOutcome> compare(const Key& a, const Key& b,
                                                 const RankTask& task, UsageMeter& meter) = 0;

    virtual OracleResult<BatchSortResult> sort_batch(const std::vector<Key>& keys,
                                                     const RankTask& task,
                                                     UsageMeter& meter) = 0;

    // Backend identity folded into cache digests (kind, model, parameters).
    virtual std::string descriptor() const = 0;

    // Decoding parameters folded into cache digests; "{}" when none apply.
    virtual std::string decoding_descriptor() const { return "{}"; }
};

// Constrains `raw` to a permutation of `expected`: hallucinated ids are
// dropped, duplicates keep their first occurrence, and missing ids are
// appended in `expected` order.
std::vector<std::string> repair_permutation(const std::vector<std::string>& raw,
                                            const std::vector<std::string>& expected);

}  // namespace orderby
