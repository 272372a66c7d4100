#pragma once

#include <cstddef>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace orderby {

struct CacheUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Digest-keyed response store. Entries live in an in-memory index; when a
// file path is configured every new entry is also appended as one JSON line
// so later processes can reload it. First store wins; entries are never
// rewritten.
class ResponseCache {
public:
    ResponseCache() = default;  // memory-only

    // Loads existing entries from `path` (created if absent) and appends new
    // ones to it. Throws CacheUnavailable when the file cannot be used.
    explicit ResponseCache(const std::string& path);

    ResponseCache(const ResponseCache&) = delete;
    ResponseCache& operator=(const ResponseCache&) = delete;

    std::optional<std::string> lookup(const std::string& digest) const;

    // Stores `response` under `digest` unless an entry already exists, and
    // returns the entry that ends up stored.
    std::string store(const std::string& digest, const std::string& response);

    std::size_t size() const;
    const std::string& path() const { return path_; }
    bool persistent() const { return !path_.empty(); }

    // Drops all entries; truncates the backing file when one is configured.
    void clear();

private:
    void append_line(const std::string& digest, const std::string& response);

    mutable std::mutex mu_;
    std::unordered_map<std::string, std::string> entries_;
    std::string path_;
    bool append_failed_ = false;
};

}  // namespace orderby
