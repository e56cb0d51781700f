#include "farmsim/routing.hpp"

#include <algorithm>

#include "farmsim/workload.hpp"

namespace farmsim::routing {

std::optional<std::size_t> route_geoplex(std::uint64_t request_id, topology::GeoplexMode mode,
                                         const std::vector<std::size_t>& believed_live) {
    if (believed_live.empty()) return std::nullopt;
    if (mode == topology::GeoplexMode::active_passive) return believed_live.front();
    return believed_live[request_id % believed_live.size()];
}

std::optional<NodeId> sprayer_round_robin(const std::vector<NodeId>& members,
                                          std::optional<NodeId> last_pick) {
    if (members.empty()) return std::nullopt;
    if (!last_pick) return members.front();
    auto it = std::upper_bound(members.begin(), members.end(), *last_pick);
    if (it == members.end()) it = members.begin();
    return *it;
}

std::optional<NodeId> sprayer_least_queue(const std::vector<NodeId>& members,
                                          const std::function<std::size_t(NodeId)>& queue_len) {
    if (members.empty()) return std::nullopt;
    NodeId best = members.front();
    std::size_t best_len = queue_len(best);
    for (std::size_t i = 1; i < members.size(); ++i) {
        std::size_t len = queue_len(members[i]);
        if (len < best_len) {
            best = members[i];
            best_len = len;
        }
    }
    return best;
}

std::uint64_t rendezvous_weight(NodeId member, std::uint64_t request_id) {
    unsigned char bytes[16];
    std::uint64_t m = member;
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((m >> (8 * i)) & 0xFF);
    for (int i = 0; i < 8; ++i) bytes[8 + i] = static_cast<unsigned char>((request_id >> (8 * i)) & 0xFF);
    return workload::fnv1a64(bytes, 16);
}

std::optional<NodeId> sieve_pick(std::uint64_t request_id, const std::vector<NodeId>& members) {
    if (members.empty()) return std::nullopt;
    NodeId best = members.front();
    std::uint64_t best_weight = rendezvous_weight(best, request_id);
    for (std::size_t i = 1; i < members.size(); ++i) {
        std::uint64_t w = rendezvous_weight(members[i], request_id);
        if (w > best_weight || (w == best_weight && members[i] < best)) {
            best = members[i];
            best_weight = w;
        }
    }
    return best;
}

}  // namespace farmsim::routing
