#pragma once

#include <cstddef>

#include "orderby/oracle.hpp"

namespace orderby {

struct SimOracleConfig {
    NoiseModel noise;
    TokenCostModel cost;
    std::size_t max_window = 0;  // listwise request cap; 0 = unlimited
    bool repair = true;          // constrain listwise output to a permutation
};

// Deterministic noisy oracle over the keys' latent values. Every response
// is a pure function of (noise model, arguments): score noise is keyed on
// the batch composition, comparison flips on the unordered id pair, and
// listwise noise on the batch. Safe to call from multiple threads.
class SimulatedOracle final : public Oracle {
public:
    explicit SimulatedOracle(SimOracleConfig cfg) : cfg_(cfg) {}
    SimulatedOracle(NoiseModel noise, TokenCostModel cost = {})
        : cfg_{noise, cost, 0, true} {}

    OracleResult<std::vector<double>> score_batch(const std::vector<Key>& keys,
                                                  const RankTask& task,
                                                  UsageMeter& meter) override;
    OracleResult<CompareOutcome> compare(const Key& a, const Key& b, const RankTask& task,
                                         UsageMeter& meter) override;
    OracleResult<BatchSortResult> sort_batch(const std::vector<Key>& keys, const RankTask& task,
                                             UsageMeter& meter) override;
    std::string descriptor() const override;

    const SimOracleConfig& config() const { return cfg_; }

private:
    double latent_of(const Key& k) const;
    void meter_call(std::size_t n_keys, UsageMeter& meter) const;

    SimOracleConfig cfg_;
};

}  // namespace orderby
