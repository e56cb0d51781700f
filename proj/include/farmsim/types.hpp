#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace farmsim {

// Simulated time in whole microseconds since run start.
using SimTime = std::uint64_t;

constexpr SimTime kMicrosPerSecond = 1'000'000;

using NodeId = std::uint32_t;
using PartitionId = std::uint32_t;
using BucketId = std::uint32_t;

enum class RequestKind { read, write };

// A workload unit travelling through the farm. `deadline_abs` is end-to-end:
// it does not reset when the request is forwarded to the next tier.
struct Request {
    std::uint64_t id = 0;       // global arrival counter, dense and increasing
    std::uint64_t key = 0;      // in [0, key_space)
    RequestKind kind = RequestKind::read;
    SimTime arrival = 0;
    SimTime deadline_abs = 0;
};

inline std::string join_path(const std::vector<std::string>& segments) {
    std::string out;
    for (const auto& s : segments) {
        if (!out.empty()) out += '/';
        out += s;
    }
    return out;
}

}  // namespace farmsim
