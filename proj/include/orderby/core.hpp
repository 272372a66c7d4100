#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace orderby {

inline constexpr const char* kVersion = "0.1.0";

enum class Direction { ascending, descending };

inline const char* to_string(Direction d) {
    return d == Direction::ascending ? "ascending" : "descending";
}

inline Direction direction_from_string(const std::string& s) {
    if (s == "ascending" || s == "asc") return Direction::ascending;
    if (s == "descending" || s == "desc") return Direction::descending;
    throw std::invalid_argument("unknown direction: " + s);
}

// One sortable item. `latent` is a hidden ground-truth value read only by
// the simulated oracle and the evaluation layer; it never reaches a live
// prompt.
struct Key {
    std::string id;
    std::string text;
    std::optional<double> latent;
};

// The ordering criterion a sort is parameterized with.
struct RankTask {
    std::string criterion;
    Direction direction = Direction::ascending;
    std::optional<std::string> query;
};

// Output of a sort: key ids, best/first element first per the task direction.
struct Ranking {
    std::vector<std::string> ordered_ids;
};

struct UsageTotals {
    std::int64_t calls = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }

    UsageTotals operator-(const UsageTotals& o) const {
        return {calls - o.calls, prompt_tokens - o.prompt_tokens,
                completion_tokens - o.completion_tokens};
    }
};

// Cost counters for a run. Safe for concurrent accumulation; `calls` counts
// oracle invocations that were not served from the response cache.
class UsageMeter {
public:
    UsageMeter() = default;
    UsageMeter(const UsageMeter&) = delete;
    UsageMeter& operator=(const UsageMeter&) = delete;

    void add(std::int64_t calls, std::int64_t prompt_tokens, std::int64_t completion_tokens) {
        calls_.fetch_add(calls, std::memory_order_relaxed);
        prompt_.fetch_add(prompt_tokens, std::memory_order_relaxed);
        completion_.fetch_add(completion_tokens, std::memory_order_relaxed);
    }

    UsageTotals totals() const {
        return {calls_.load(std::memory_order_relaxed),
                prompt_.load(std::memory_order_relaxed),
                completion_.load(std::memory_order_relaxed)};
    }

private:
    std::atomic<std::int64_t> calls_{0};
    std::atomic<std::int64_t> prompt_{0};
    std::atomic<std::int64_t> completion_{0};
};

// True iff `candidate` contains exactly the same ids as `expected`, each once.
bool is_permutation_of(const std::vector<std::string>& candidate,
                       const std::vector<std::string>& expected);

}  // namespace orderby
