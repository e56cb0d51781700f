#include "farmsim/lifecycle.hpp"

#include <algorithm>

namespace farmsim::lifecycle {

const char* node_health_name(NodeHealth h) {
    switch (h) {
        case NodeHealth::Healthy: return "healthy";
        case NodeHealth::Degraded: return "degraded";
        case NodeHealth::Failed: return "failed";
        case NodeHealth::Syncing: return "syncing";
    }
    return "unknown";
}

bool legal_transition(NodeHealth from, NodeHealth to) {
    switch (from) {
        case NodeHealth::Healthy:
            return to == NodeHealth::Failed || to == NodeHealth::Degraded;
        case NodeHealth::Degraded:
            return to == NodeHealth::Healthy || to == NodeHealth::Failed;
        case NodeHealth::Failed:
            return to == NodeHealth::Healthy;
        case NodeHealth::Syncing:
            return to == NodeHealth::Healthy;
    }
    return false;
}

RaidOutcome raid_mask(topology::RaidLevel raid, NodeHealth current) {
    if (raid == topology::RaidLevel::none) return RaidOutcome::Exposed;
    if (current == NodeHealth::Degraded) return RaidOutcome::Exposed;  // second fault
    return RaidOutcome::Masked;
}

const char* fault_action_name(FaultAction a) {
    switch (a) {
        case FaultAction::fail_node: return "fail_node";
        case FaultAction::repair_node: return "repair_node";
        case FaultAction::fail_disk: return "fail_disk";
        case FaultAction::repair_disk: return "repair_disk";
        case FaultAction::fail_site: return "fail_site";
        case FaultAction::repair_site: return "repair_site";
        case FaultAction::add_clone: return "add_clone";
        case FaultAction::add_partition: return "add_partition";
    }
    return "unknown";
}

std::vector<BucketMove> plan_rebalance(const std::vector<PartitionId>& assignment,
                                       std::uint32_t partition_count) {
    std::vector<std::vector<BucketId>> buckets_of(partition_count);
    for (BucketId b = 0; b < assignment.size(); ++b) {
        buckets_of[assignment[b]].push_back(b);
    }
    // Bucket lists are already sorted ascending by construction.

    std::vector<BucketMove> plan;
    for (;;) {
        PartitionId most = 0, least = 0;
        for (PartitionId p = 1; p < partition_count; ++p) {
            if (buckets_of[p].size() > buckets_of[most].size()) most = p;
            if (buckets_of[p].size() < buckets_of[least].size()) least = p;
        }
        if (buckets_of[most].size() - buckets_of[least].size() <= 1) break;
        BucketId bucket = buckets_of[most].front();
        buckets_of[most].erase(buckets_of[most].begin());
        auto& dst = buckets_of[least];
        dst.insert(std::lower_bound(dst.begin(), dst.end(), bucket), bucket);
        plan.push_back(BucketMove{bucket, most, least});
    }
    return plan;
}

std::optional<NodeId> pick_takeover_member(const std::vector<NodeId>& survivors,
                                           const std::vector<std::size_t>& served_counts) {
    if (survivors.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t i = 1; i < survivors.size(); ++i) {
        if (served_counts[i] < served_counts[best] ||
            (served_counts[i] == served_counts[best] && survivors[i] < survivors[best])) {
            best = i;
        }
    }
    return survivors[best];
}

SimTime copy_duration_us(std::uint64_t bytes, std::uint64_t bytes_per_second) {
    if (bytes == 0) return 0;
    std::uint64_t seconds = (bytes + bytes_per_second - 1) / bytes_per_second;
    return seconds * kMicrosPerSecond;
}

}  // namespace farmsim::lifecycle
