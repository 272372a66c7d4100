#include "orderby/sim_oracle.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "orderby/rng.hpp"

namespace orderby {
namespace {

std::uint64_t batch_tag(const std::vector<Key>& keys) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const Key& k : keys) {
        h = mix64(h, fnv1a64(k.id));
    }
    return h;
}

}  // namespace

double SimulatedOracle::latent_of(const Key& k) const {
    if (!k.latent) {
        throw std::invalid_argument("simulated oracle requires a latent value for key '" +
                                    k.id + "'");
    }
    return *k.latent;
}

void SimulatedOracle::meter_call(std::size_t n_keys, UsageMeter& meter) const {
    const auto& c = cfg_.cost;
    meter.add(1, c.prompt_overhead + std::int64_t(n_keys) * c.prompt_tokens_per_key,
              std::int64_t(n_keys) * c.completion_tokens_per_key);
}

OracleResult<std::vector<double>> SimulatedOracle::score_batch(const std::vector<Key>& keys,
                                                               const RankTask& task,
                                                               UsageMeter& meter) {
    (void)task;
    if (keys.empty()) throw std::invalid_argument("score_batch: empty batch");
    if (cfg_.max_window && keys.size() > cfg_.max_window)
        throw std::invalid_argument("score_batch: batch exceeds the configured window");

    meter_call(keys.size(), meter);

    SplitMix64 stream(mix64(cfg_.noise.seed, mix64(fnv1a64("score"), batch_tag(keys))));
    if (stream.uniform() < cfg_.noise.invalid_prob) {
        return OracleResult<std::vector<double>>::failure(OracleStatus::invalid_output,
                                                          "simulated malformed value list");
    }
    std::vector<double> values;
    values.reserve(keys.size());
    for (const Key& k : keys) {
        double noise = cfg_.noise.value_sigma > 0 ? stream.gaussian(cfg_.noise.value_sigma) : 0.0;
        values.push_back(latent_of(k) + noise);
    }
    return {OracleStatus::ok, std::move(values), {}};
}

OracleResult<CompareOutcome> SimulatedOracle::compare(const Key& a, const Key& b,
                                                      const RankTask& task, UsageMeter& meter) {
    (void)task;
    if (a.id == b.id) throw std::invalid_argument("compare: keys must be distinct");

    meter_call(2, meter);

    double la = latent_of(a), lb = latent_of(b);
    bool first = la <= lb;  // exact ties break toward `first`

    // Flip events are keyed on the unordered pair so both argument orders
    // see a consistent winner key.
    const std::string& lo = a.id < b.id ? a.id : b.id;
    const std::string& hi = a.id < b.id ? b.id : a.id;
    SplitMix64 stream(
        mix64(cfg_.noise.seed, mix64(fnv1a64("compare"), mix64(fnv1a64(lo), fnv1a64(hi)))));
    if (stream.uniform() < cfg_.noise.flip_prob) first = !first;

    return {OracleStatus::ok, CompareOutcome{first ? Winner::first : Winner::second}, {}};
}

OracleResult<BatchSortResult> SimulatedOracle::sort_batch(const std::vector<Key>& keys,
                                                          const RankTask& task,
                                                          UsageMeter& meter) {
    (void)task;
    if (keys.empty()) throw std::invalid_argument("sort_batch: empty batch");
    if (cfg_.max_window && keys.size() > cfg_.max_window)
        throw std::invalid_argument("sort_batch: batch exceeds the configured window");

    meter_call(keys.size(), meter);

    // Ascending by latent; equal latents keep request order.
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return latent_of(keys[i]) < latent_of(keys[j]);
    });
    std::vector<std::string> raw;
    raw.reserve(keys.size());
    for (std::size_t i : order) raw.push_back(keys[i].id);

    SplitMix64 stream(mix64(cfg_.noise.seed, mix64(fnv1a64("sort"), batch_tag(keys))));
    for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
        if (stream.uniform() < cfg_.noise.perm_swap_rate) std::swap(raw[i], raw[i + 1]);
    }

    if (raw.size() > 1 && stream.uniform() < cfg_.noise.invalid_prob) {
        std::size_t at = std::size_t(stream.below(raw.size()));
        if (stream.uniform() < 0.5) {
            raw.erase(raw.begin() + at);  // drop one id
        } else {
            raw[at] = raw[std::size_t(stream.below(raw.size()))];  // duplicate over another
        }
    }

    std::vector<std::string> expected;
    expected.reserve(keys.size());
    for (const Key& k : keys) expected.push_back(k.id);

    if (is_permutation_of(raw, expected))
        return {OracleStatus::ok, BatchSortResult{std::move(raw), true}, {}};
    if (!cfg_.repair) {
        return OracleResult<BatchSortResult>::failure(OracleStatus::invalid_output,
                                                      "simulated malformed permutation");
    }
    return {OracleStatus::ok, BatchSortResult{repair_permutation(raw, expected), false}, {}};
}

std::string SimulatedOracle::descriptor() const {
    char buf[192];
    std::snprintf(buf, sizeof buf, "sim;seed=%llu;flip=%.17g;sigma=%.17g;swap=%.17g;invalid=%.17g",
                  static_cast<unsigned long long>(cfg_.noise.seed), cfg_.noise.flip_prob,
                  cfg_.noise.value_sigma, cfg_.noise.perm_swap_rate, cfg_.noise.invalid_prob);
    return buf;
}

}  // namespace orderby
