#include "orderby/oracle.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace orderby {

const char* to_string(OracleStatus s) {
    switch (s) {
        case OracleStatus::ok: return "ok";
        case OracleStatus::invalid_output: return "invalid_output";
        case OracleStatus::transport_error: return "transport_error";
        case OracleStatus::comparison_failed: return "comparison_failed";
    }
    return "unknown";
}

bool is_permutation_of(const std::vector<std::string>& candidate,
                       const std::vector<std::string>& expected) {
    if (candidate.size() != expected.size()) return false;
    std::unordered_set<std::string> want(expected.begin(), expected.end());
    if (want.size() != expected.size()) return false;
    for (const auto& id : candidate) {
        auto it = want.find(id);
        if (it == want.end()) return false;
        want.erase(it);
    }
    return want.empty();
}

std::vector<std::string> repair_permutation(const std::vector<std::string>& raw,
                                            const std::vector<std::string>& expected) {
    std::unordered_map<std::string, bool> pending;  // id -> still missing
    pending.reserve(expected.size());
    for (const auto& id : expected) pending.emplace(id, true);

    std::vector<std::string> out;
    out.reserve(expected.size());
    for (const auto& id : raw) {
        auto it = pending.find(id);
        if (it == pending.end() || !it->second) continue;  // hallucinated or duplicate
        it->second = false;
        out.push_back(id);
    }
    for (const auto& id : expected) {
        if (pending[id]) out.push_back(id);
    }
    return out;
}

}  // namespace orderby
