#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "farmsim/topology.hpp"
#include "farmsim/types.hpp"

namespace farmsim::routing {

// Geoplex farm selection over the balancer's believed-live farm list
// (indices in declaration order). Returns nullopt when no farm is live.
std::optional<std::size_t> route_geoplex(std::uint64_t request_id, topology::GeoplexMode mode,
                                         const std::vector<std::size_t>& believed_live);

// Round-robin sprayer: the member after the last pick, wrapping. `members`
// must be in ascending id order.
std::optional<NodeId> sprayer_round_robin(const std::vector<NodeId>& members,
                                          std::optional<NodeId> last_pick);

// Least-queue sprayer: shortest queue wins, ties to the lowest id.
std::optional<NodeId> sprayer_least_queue(const std::vector<NodeId>& members,
                                          const std::function<std::size_t(NodeId)>& queue_len);

// Rendezvous weight for the sieve: FNV-1a64 over member_id || request_id,
// both 8-byte little-endian.
std::uint64_t rendezvous_weight(NodeId member, std::uint64_t request_id);

// IP sieve as highest-random-weight hashing: a pure function of the member
// set and the request id, so every member filters identically.
std::optional<NodeId> sieve_pick(std::uint64_t request_id, const std::vector<NodeId>& members);

}  // namespace farmsim::routing
