#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "farmsim/types.hpp"

namespace farmsim::topology {

enum class RaidLevel { none, raid1, raid5 };

struct NodeSpec {
    std::string id;                     // unique within its service, e.g. "n0"
    double service_rate = 0.0;          // declared capacity, requests/second
    std::uint64_t disk_capacity = 0;    // bytes
    RaidLevel raid = RaidLevel::none;
    double degraded_rate_factor = 1.0;  // service-time divisor while Degraded
};

enum class StorageVariant { shared_nothing, shared_disk };

struct StorageModel {
    StorageVariant variant = StorageVariant::shared_nothing;
    std::optional<NodeSpec> shared_store;  // required iff shared_disk
    SimTime invalidation_cost_us = 0;      // per write per attached peer
};

enum class BalancerVariant { sprayer_round_robin, sprayer_least_queue, sieve_rendezvous };

struct BalancerPolicy {
    BalancerVariant variant = BalancerVariant::sprayer_round_robin;
    SimTime detection_delay_us = 500'000;  // failure -> balancer stops selecting
};

enum class PackMode { active_active, active_passive };

struct PackSpec {
    std::vector<NodeSpec> members;
    PackMode mode = PackMode::active_passive;
    StorageVariant storage_variant = StorageVariant::shared_nothing;
    std::vector<PartitionId> partitions_hosted;
};

enum class ServiceKind { racs, raps };

struct ServiceSpec {
    std::string name;
    ServiceKind kind = ServiceKind::racs;
    StorageModel storage;
    BalancerPolicy balancer;
    std::vector<NodeSpec> nodes;   // racs clone set
    std::vector<PackSpec> packs;   // raps packs
    std::uint32_t partition_count = 0;  // raps; partitions assigned round-robin
                                        // over packs when partitions_hosted empty
    std::uint32_t bucket_count = 0;     // raps
    std::uint64_t state_size = 0;       // bytes
    std::optional<std::string> forwards_to;
    bool forward_deadline_passthrough = true;  // deadlines are end-to-end
};

struct FarmSpec {
    std::string name;
    std::vector<ServiceSpec> services;
};

enum class GeoplexMode { none, active_active, active_passive };

struct GeoplexSpec {
    std::vector<FarmSpec> farms;
    GeoplexMode mode = GeoplexMode::none;
};

// bucket -> partition assignment. The serving table (partition -> pack member)
// lives in the per-run pack state, since it changes on failover.
struct PartitionMap {
    std::uint32_t bucket_count = 0;
    std::vector<PartitionId> assignment;  // size bucket_count
};

class ValidationError : public std::runtime_error {
public:
    enum class Code {
        DuplicateId,
        DanglingForward,
        ForwardCycle,
        EmptyPack,
        EmptyService,
        SharedDiskWithoutStore,
        InvalidCounts,
        BadGeoplex,
        BadNode,
    };

    ValidationError(Code code, std::string element, const std::string& what)
        : std::runtime_error(what + " (" + element + ")"),
          code(code),
          element(std::move(element)) {}

    Code code;
    std::string element;  // offending element path/name
};

// Round-robin initial assignment: assignment[b] = b mod P.
// Per-partition bucket counts differ by at most one.
PartitionMap partition_map_init(std::uint32_t bucket_count, std::uint32_t partition_count);

// Validated immutable farm model. Safe to share read-only across runs.
class Topology {
public:
    const GeoplexSpec& spec() const { return spec_; }
    const std::vector<FarmSpec>& farms() const { return spec_.farms; }
    GeoplexMode geoplex_mode() const { return spec_.mode; }

    // Initial bucket->partition map for a raps service, by (farm, service) index.
    const PartitionMap& initial_partition_map(std::size_t farm, std::size_t service) const;

    std::optional<std::size_t> find_farm(const std::string& name) const;
    std::optional<std::size_t> find_service(std::size_t farm, const std::string& name) const;

private:
    friend Topology build_topology(GeoplexSpec spec);
    GeoplexSpec spec_;
    // indexed [farm][service]; empty map for racs services
    std::vector<std::vector<PartitionMap>> partition_maps_;
};

// Validates the spec and freezes it. Fills in pack partition assignments and
// node ids where the spec left them implicit. Throws ValidationError naming
// the offending element.
Topology build_topology(GeoplexSpec spec);

}  // namespace farmsim::topology
