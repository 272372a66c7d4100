#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "orderby/core.hpp"

namespace orderby {

std::array<std::uint8_t, 32> sha256(std::string_view data);
std::string sha256_hex(std::string_view data);

// Canonical oracle-request serialization: a whitespace-free JSON document
// with a fixed field order covering the operation kind, backend identity,
// task, keys in request order, and decoding parameters. Identical requests
// serialize identically; any field change alters the output.
std::string canonical_request(std::string_view op,
                              std::string_view backend,
                              const RankTask& task,
                              const std::vector<Key>& keys,
                              std::string_view decoding);

inline std::string request_digest(std::string_view op,
                                  std::string_view backend,
                                  const RankTask& task,
                                  const std::vector<Key>& keys,
                                  std::string_view decoding) {
    return sha256_hex(canonical_request(op, backend, task, keys, decoding));
}

}  // namespace orderby
