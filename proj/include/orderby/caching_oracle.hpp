#pragma once

#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "orderby/cache.hpp"
#include "orderby/oracle.hpp"

namespace orderby {

// Wraps a backend with digest-keyed response caching. The cached unit is
// the final outcome of one oracle operation (including the backend's own
// retry, and including failures), so replaying a run byte-reproduces it.
// Hits never touch the meter. Identical requests issued concurrently are
// collapsed into a single backend call.
class CachingOracle final : public Oracle {
public:
    CachingOracle(Oracle& inner, ResponseCache& cache) : inner_(inner), cache_(cache) {}

    OracleResult<std::vector<double>> score_batch(const std::vector<Key>& keys,
                                                  const RankTask& task,
                                                  UsageMeter& meter) override;
    OracleResult<CompareOutcome> compare(const Key& a, const Key& b, const RankTask& task,
                                         UsageMeter& meter) override;
    OracleResult<BatchSortResult> sort_batch(const std::vector<Key>& keys, const RankTask& task,
                                             UsageMeter& meter) override;

    std::string descriptor() const override { return inner_.descriptor(); }
    std::string decoding_descriptor() const override { return inner_.decoding_descriptor(); }

private:
    // Returns the serialized outcome for `digest`, computing it at most once
    // across threads.
    std::string resolve(const std::string& digest, const std::function<std::string()>& compute);

    Oracle& inner_;
    ResponseCache& cache_;
    std::mutex mu_;
    std::unordered_map<std::string, std::shared_future<std::string>> inflight_;
};

}  // namespace orderby
