#include "orderby/cache.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

namespace orderby {

ResponseCache::ResponseCache(const std::string& path) : path_(path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);

    if (fs::exists(p, ec)) {
        std::ifstream in(p);
        if (!in) throw CacheUnavailable("cache file not readable: " + path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("d") || !j.contains("r")) {
                // A torn trailing line from an interrupted run is tolerated;
                // anything after it is ignored.
                std::cerr << "cache: ignoring malformed entry at " << path << ":" << lineno
                          << " and everything after it\n";
                break;
            }
            entries_.emplace(j["d"].get<std::string>(), j["r"].get<std::string>());
        }
    } else {
        std::ofstream out(p, std::ios::app);
        if (!out) throw CacheUnavailable("cache file not writable: " + path);
    }
}

std::optional<std::string> ResponseCache::lookup(const std::string& digest) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::string ResponseCache::store(const std::string& digest, const std::string& response) {
    std::lock_guard lock(mu_);
    auto [it, inserted] = entries_.emplace(digest, response);
    if (inserted && !path_.empty()) append_line(digest, response);
    return it->second;
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

void ResponseCache::clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
    if (!path_.empty()) {
        std::ofstream out(path_, std::ios::trunc);
        if (!out) std::cerr << "cache: could not truncate " << path_ << "\n";
    }
}

void ResponseCache::append_line(const std::string& digest, const std::string& response) {
    std::ofstream out(path_, std::ios::app);
    nlohmann::json j;
    j["d"] = digest;
    j["r"] = response;
    if (out) out << j.dump() << "\n";
    if (!out && !append_failed_) {
        append_failed_ = true;
        std::cerr << "cache: append to " << path_ << " failed; continuing in memory only\n";
    }
}

}  // namespace orderby
