#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "farmsim/topology.hpp"
#include "farmsim/types.hpp"

namespace farmsim::lifecycle {

enum class NodeHealth { Healthy, Degraded, Failed, Syncing };

const char* node_health_name(NodeHealth h);

// Legal transitions only; everything else is a modelling bug.
//   Healthy  -> Failed | Degraded
//   Degraded -> Healthy | Failed
//   Failed   -> Healthy
//   Syncing  -> Healthy
bool legal_transition(NodeHealth from, NodeHealth to);

enum class RaidOutcome { Masked, Exposed };

// Effect of one disk fault given the node's RAID level and current health.
// Masked faults degrade the node but keep it serving; exposed faults take it
// out until the disk is repaired.
RaidOutcome raid_mask(topology::RaidLevel raid, NodeHealth current);

enum class FaultAction {
    fail_node,
    repair_node,
    fail_disk,
    repair_disk,
    fail_site,
    repair_site,
    add_clone,
    add_partition,
};

const char* fault_action_name(FaultAction a);

struct ScenarioEvent {
    SimTime at = 0;
    FaultAction action = FaultAction::fail_node;
    std::vector<std::string> path;  // geoplex-relative: farm [/service [/node]]
};

struct BucketMove {
    BucketId bucket = 0;
    PartitionId from = 0;
    PartitionId to = 0;
    bool operator==(const BucketMove&) const = default;
};

// Greedy repartitioning: repeatedly move the lowest-numbered bucket from the
// most-loaded partition (ties to the lowest partition id) to the least-loaded,
// until per-partition bucket counts differ by at most one. Planned against the
// target assignment, so moves are safe to run concurrently.
std::vector<BucketMove> plan_rebalance(const std::vector<PartitionId>& assignment,
                                       std::uint32_t partition_count);

// Surviving pack member that takes over orphaned partitions: fewest currently
// served partitions, ties to the lowest id. `served_counts[i]` pairs with
// `survivors[i]`.
std::optional<NodeId> pick_takeover_member(const std::vector<NodeId>& survivors,
                                           const std::vector<std::size_t>& served_counts);

// Sync time for a new shared-nothing clone: ceil(bytes / rate) seconds.
SimTime copy_duration_us(std::uint64_t bytes, std::uint64_t bytes_per_second);

}  // namespace farmsim::lifecycle
