#include "farmsim/topology.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace farmsim::topology {

PartitionMap partition_map_init(std::uint32_t bucket_count, std::uint32_t partition_count) {
    if (partition_count < 1 || bucket_count < partition_count) {
        throw ValidationError(ValidationError::Code::InvalidCounts, "partition_map",
                              "bucket_count must be >= partition_count >= 1");
    }
    PartitionMap map;
    map.bucket_count = bucket_count;
    map.assignment.resize(bucket_count);
    for (std::uint32_t b = 0; b < bucket_count; ++b) map.assignment[b] = b % partition_count;
    return map;
}

namespace {

void check_node(const NodeSpec& node, const std::string& where) {
    if (!(node.service_rate > 0.0)) {
        throw ValidationError(ValidationError::Code::BadNode, where + "/" + node.id,
                              "service_rate must be > 0");
    }
    if (node.degraded_rate_factor <= 0.0) {
        throw ValidationError(ValidationError::Code::BadNode, where + "/" + node.id,
                              "degraded_rate_factor must be > 0");
    }
}

// Nodes may arrive without ids (the DSL never names them); number them
// "n0".."nK" in declaration order, pack members included, before checking
// uniqueness.
void assign_and_check_node_ids(const std::vector<NodeSpec*>& nodes, const std::string& where) {
    std::size_t next = 0;
    for (auto* n : nodes) {
        if (n->id.empty()) n->id = "n" + std::to_string(next);
        next++;
    }
    std::unordered_set<std::string> seen;
    for (const auto* n : nodes) {
        if (!seen.insert(n->id).second) {
            throw ValidationError(ValidationError::Code::DuplicateId, where + "/" + n->id,
                                  "duplicate node id within service");
        }
    }
}

void validate_service(ServiceSpec& svc, const std::string& farm_name) {
    const std::string where = farm_name + "/" + svc.name;

    std::vector<NodeSpec*> all_nodes;
    if (svc.kind == ServiceKind::racs) {
        if (svc.nodes.empty()) {
            throw ValidationError(ValidationError::Code::EmptyService, where,
                                  "racs service needs at least one node");
        }
        for (auto& n : svc.nodes) all_nodes.push_back(&n);
    } else {
        if (svc.packs.empty()) {
            throw ValidationError(ValidationError::Code::EmptyService, where,
                                  "raps service needs at least one pack");
        }
        for (std::size_t p = 0; p < svc.packs.size(); ++p) {
            if (svc.packs[p].members.empty()) {
                throw ValidationError(ValidationError::Code::EmptyPack,
                                      where + "/pack" + std::to_string(p), "pack has no members");
            }
            for (auto& m : svc.packs[p].members) all_nodes.push_back(&m);
        }

        // Distribute partitions round-robin over packs when unassigned.
        bool any_hosted = false;
        for (const auto& p : svc.packs) any_hosted |= !p.partitions_hosted.empty();
        if (!any_hosted) {
            if (svc.partition_count == 0) svc.partition_count = static_cast<std::uint32_t>(svc.packs.size());
            for (PartitionId pid = 0; pid < svc.partition_count; ++pid) {
                svc.packs[pid % svc.packs.size()].partitions_hosted.push_back(pid);
            }
        } else {
            std::uint32_t max_pid = 0;
            for (const auto& p : svc.packs)
                for (PartitionId pid : p.partitions_hosted) max_pid = std::max(max_pid, pid + 1);
            if (svc.partition_count == 0) svc.partition_count = max_pid;
        }

        // Every partition id in [0, P) appears in exactly one pack.
        std::vector<int> owners(svc.partition_count, 0);
        for (const auto& p : svc.packs) {
            for (PartitionId pid : p.partitions_hosted) {
                if (pid >= svc.partition_count) {
                    throw ValidationError(ValidationError::Code::InvalidCounts,
                                          where + "/p" + std::to_string(pid),
                                          "partition id out of range");
                }
                owners[pid]++;
            }
        }
        for (PartitionId pid = 0; pid < svc.partition_count; ++pid) {
            if (owners[pid] != 1) {
                throw ValidationError(ValidationError::Code::InvalidCounts,
                                      where + "/p" + std::to_string(pid),
                                      "partition must be hosted by exactly one pack");
            }
        }
        if (svc.bucket_count < svc.partition_count) {
            throw ValidationError(ValidationError::Code::InvalidCounts, where,
                                  "bucket_count must be >= partition count");
        }
    }

    assign_and_check_node_ids(all_nodes, where);
    for (const auto* n : all_nodes) check_node(*n, where);

    if (svc.storage.variant == StorageVariant::shared_disk) {
        if (!svc.storage.shared_store.has_value()) {
            throw ValidationError(ValidationError::Code::SharedDiskWithoutStore, where,
                                  "shared_disk storage requires a shared store node");
        }
        check_node(*svc.storage.shared_store, where);
    }
}

void check_forwarding(const FarmSpec& farm) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < farm.services.size(); ++i) index[farm.services[i].name] = i;

    for (const auto& svc : farm.services) {
        if (!svc.forwards_to) continue;
        if (index.find(*svc.forwards_to) == index.end()) {
            throw ValidationError(ValidationError::Code::DanglingForward,
                                  farm.name + "/" + svc.name,
                                  "forwards_to names missing service '" + *svc.forwards_to + "'");
        }
    }
    // Walk each chain; a chain longer than the service count implies a cycle.
    for (std::size_t start = 0; start < farm.services.size(); ++start) {
        std::size_t cur = start;
        std::size_t hops = 0;
        while (farm.services[cur].forwards_to) {
            cur = index.at(*farm.services[cur].forwards_to);
            if (++hops > farm.services.size()) {
                throw ValidationError(ValidationError::Code::ForwardCycle,
                                      farm.name + "/" + farm.services[start].name,
                                      "forwarding cycle");
            }
        }
    }
}

}  // namespace

Topology build_topology(GeoplexSpec spec) {
    if (spec.mode != GeoplexMode::none && spec.farms.size() < 2) {
        throw ValidationError(ValidationError::Code::BadGeoplex, "geoplex",
                              "geoplex with mode != none needs at least 2 farms");
    }
    std::unordered_set<std::string> farm_names;
    for (const auto& farm : spec.farms) {
        if (!farm_names.insert(farm.name).second) {
            throw ValidationError(ValidationError::Code::DuplicateId, farm.name,
                                  "duplicate farm name");
        }
    }

    for (auto& farm : spec.farms) {
        std::unordered_set<std::string> svc_names;
        for (auto& svc : farm.services) {
            if (!svc_names.insert(svc.name).second) {
                throw ValidationError(ValidationError::Code::DuplicateId,
                                      farm.name + "/" + svc.name, "duplicate service name");
            }
            validate_service(svc, farm.name);
        }
        check_forwarding(farm);
    }

    Topology topo;
    topo.spec_ = std::move(spec);
    topo.partition_maps_.resize(topo.spec_.farms.size());
    for (std::size_t f = 0; f < topo.spec_.farms.size(); ++f) {
        const auto& farm = topo.spec_.farms[f];
        topo.partition_maps_[f].resize(farm.services.size());
        for (std::size_t s = 0; s < farm.services.size(); ++s) {
            const auto& svc = farm.services[s];
            if (svc.kind == ServiceKind::raps) {
                topo.partition_maps_[f][s] = partition_map_init(svc.bucket_count, svc.partition_count);
            }
        }
    }
    return topo;
}

const PartitionMap& Topology::initial_partition_map(std::size_t farm, std::size_t service) const {
    return partition_maps_.at(farm).at(service);
}

std::optional<std::size_t> Topology::find_farm(const std::string& name) const {
    for (std::size_t f = 0; f < spec_.farms.size(); ++f) {
        if (spec_.farms[f].name == name) return f;
    }
    return std::nullopt;
}

std::optional<std::size_t> Topology::find_service(std::size_t farm, const std::string& name) const {
    const auto& services = spec_.farms.at(farm).services;
    for (std::size_t s = 0; s < services.size(); ++s) {
        if (services[s].name == name) return s;
    }
    return std::nullopt;
}

}  // namespace farmsim::topology
