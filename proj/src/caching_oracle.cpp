#include "orderby/caching_oracle.hpp"

#include <nlohmann/json.hpp>

#include "orderby/digest.hpp"

namespace orderby {
namespace {

using nlohmann::json;

json envelope(OracleStatus status, const std::string& detail) {
    json j;
    j["status"] = to_string(status);
    if (!detail.empty()) j["detail"] = detail;
    return j;
}

OracleStatus status_from(const json& j) {
    std::string s = j.value("status", "ok");
    if (s == "ok") return OracleStatus::ok;
    if (s == "invalid_output") return OracleStatus::invalid_output;
    if (s == "transport_error") return OracleStatus::transport_error;
    return OracleStatus::comparison_failed;
}

}  // namespace

std::string CachingOracle::resolve(const std::string& digest,
                                   const std::function<std::string()>& compute) {
    if (auto hit = cache_.lookup(digest)) return *hit;

    std::promise<std::string> promise;
    std::shared_future<std::string> fut;
    bool leader = false;
    {
        std::lock_guard lock(mu_);
        auto it = inflight_.find(digest);
        if (it == inflight_.end()) {
            fut = promise.get_future().share();
            inflight_.emplace(digest, fut);
            leader = true;
        } else {
            fut = it->second;
        }
    }
    if (!leader) return fut.get();

    std::string outcome;
    try {
        outcome = compute();
    } catch (...) {
        {
            std::lock_guard lock(mu_);
            inflight_.erase(digest);
        }
        promise.set_exception(std::current_exception());
        throw;
    }
    std::string stored = cache_.store(digest, outcome);
    {
        std::lock_guard lock(mu_);
        inflight_.erase(digest);
    }
    promise.set_value(stored);
    return stored;
}

OracleResult<std::vector<double>> CachingOracle::score_batch(const std::vector<Key>& keys,
                                                             const RankTask& task,
                                                             UsageMeter& meter) {
    std::string digest =
        request_digest("score", inner_.descriptor(), task, keys, inner_.decoding_descriptor());
    std::string stored = resolve(digest, [&] {
        auto r = inner_.score_batch(keys, task, meter);
        json j = envelope(r.status, r.detail);
        if (r.ok()) j["values"] = r.value;
        return j.dump();
    });
    json j = json::parse(stored);
    OracleResult<std::vector<double>> out;
    out.status = status_from(j);
    out.detail = j.value("detail", "");
    if (out.ok()) out.value = j["values"].get<std::vector<double>>();
    return out;
}

OracleResult<CompareOutcome> CachingOracle::compare(const Key& a, const Key& b,
                                                    const RankTask& task, UsageMeter& meter) {
    std::string digest = request_digest("compare", inner_.descriptor(), task, {a, b},
                                        inner_.decoding_descriptor());
    std::string stored = resolve(digest, [&] {
        auto r = inner_.compare(a, b, task, meter);
        json j = envelope(r.status, r.detail);
        if (r.ok()) j["winner"] = r.value.winner == Winner::first ? "first" : "second";
        return j.dump();
    });
    json j = json::parse(stored);
    OracleResult<CompareOutcome> out;
    out.status = status_from(j);
    out.detail = j.value("detail", "");
    if (out.ok())
        out.value.winner = j.value("winner", "first") == "first" ? Winner::first : Winner::second;
    return out;
}

OracleResult<BatchSortResult> CachingOracle::sort_batch(const std::vector<Key>& keys,
                                                        const RankTask& task, UsageMeter& meter) {
    std::string digest =
        request_digest("sort", inner_.descriptor(), task, keys, inner_.decoding_descriptor());
    std::string stored = resolve(digest, [&] {
        auto r = inner_.sort_batch(keys, task, meter);
        json j = envelope(r.status, r.detail);
        if (r.ok()) {
            j["perm"] = r.value.permutation;
            j["valid"] = r.value.valid;
        }
        return j.dump();
    });
    json j = json::parse(stored);
    OracleResult<BatchSortResult> out;
    out.status = status_from(j);
    out.detail = j.value("detail", "");
    if (out.ok()) {
        out.value.permutation = j["perm"].get<std::vector<std::string>>();
        out.value.valid = j.value("valid", true);
    }
    return out;
}

}  // namespace orderby
