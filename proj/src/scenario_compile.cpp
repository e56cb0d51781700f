#include <algorithm>
#include <cmath>
#include <map>

#include "farmsim/scenario.hpp"

namespace farmsim::scenario {

namespace {

SimTime to_micros(const Quantity& q) {
    double mult = 1.0;
    if (q.unit == "us") mult = 1.0;
    else if (q.unit == "ms") mult = 1e3;
    else if (q.unit == "s") mult = 1e6;
    else throw CompileError("not a time quantity: " + q.unit);
    return static_cast<SimTime>(std::floor(q.value * mult + 0.5));
}

std::uint64_t to_bytes(const Quantity& q) {
    double mult = 1.0;
    if (q.unit == "B") mult = 1.0;
    else if (q.unit == "KB") mult = 1e3;
    else if (q.unit == "MB") mult = 1e6;
    else if (q.unit == "GB") mult = 1e9;
    else if (q.unit == "TB") mult = 1e12;
    else throw CompileError("not a size quantity: " + q.unit);
    return static_cast<std::uint64_t>(std::floor(q.value * mult + 0.5));
}

std::uint64_t to_bytes_per_second(const Quantity& q) {
    double mult = 0.0;
    if (q.unit == "KB/s") mult = 1e3;
    else if (q.unit == "MB/s") mult = 1e6;
    else if (q.unit == "GB/s") mult = 1e9;
    else throw CompileError("not a speed quantity: " + q.unit);
    return static_cast<std::uint64_t>(std::floor(q.value * mult + 0.5));
}

topology::RaidLevel raid_from(const std::optional<std::string>& raid) {
    if (!raid || *raid == "none") return topology::RaidLevel::none;
    if (*raid == "raid1") return topology::RaidLevel::raid1;
    return topology::RaidLevel::raid5;
}

topology::NodeSpec node_from(const NodeBlock& block) {
    topology::NodeSpec spec;
    spec.service_rate = block.rate.value;
    spec.disk_capacity = to_bytes(block.disk);
    spec.raid = raid_from(block.raid);
    return spec;
}

topology::ServiceSpec compile_service(const ServiceBlock& block, const sim::Defaults& defaults) {
    topology::ServiceSpec svc;
    svc.name = block.name;
    svc.kind = block.kind == "racs" ? topology::ServiceKind::racs : topology::ServiceKind::raps;
    svc.balancer.detection_delay_us = defaults.detect_us;

    std::vector<topology::NodeSpec> node_templates;
    std::vector<PackBlock> pack_blocks;
    std::optional<std::uint64_t> clones;
    std::optional<StorageAttr> storage;

    for (const auto& attr : block.attrs) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, StorageAttr>) {
                    storage = a;
                } else if constexpr (std::is_same_v<T, ClonesAttr>) {
                    clones = a.count;
                } else if constexpr (std::is_same_v<T, PartitionsAttr>) {
                    svc.partition_count = static_cast<std::uint32_t>(a.count);
                } else if constexpr (std::is_same_v<T, BucketsAttr>) {
                    svc.bucket_count = static_cast<std::uint32_t>(a.count);
                } else if constexpr (std::is_same_v<T, NodeBlock>) {
                    node_templates.push_back(node_from(a));
                } else if constexpr (std::is_same_v<T, PackBlock>) {
                    pack_blocks.push_back(a);
                } else if constexpr (std::is_same_v<T, BalancerAttr>) {
                    if (a.policy == "round_robin") {
                        svc.balancer.variant = topology::BalancerVariant::sprayer_round_robin;
                    } else if (a.policy == "least_queue") {
                        svc.balancer.variant = topology::BalancerVariant::sprayer_least_queue;
                    } else {
                        svc.balancer.variant = topology::BalancerVariant::sieve_rendezvous;
                    }
                    if (a.detect) svc.balancer.detection_delay_us = to_micros(*a.detect);
                } else if constexpr (std::is_same_v<T, ForwardAttr>) {
                    svc.forwards_to = a.service;
                } else if constexpr (std::is_same_v<T, StateSizeAttr>) {
                    svc.state_size = to_bytes(a.size);
                }
            },
            attr);
    }

    if (svc.kind == topology::ServiceKind::racs) {
        if (!pack_blocks.empty()) {
            throw CompileError("service \"" + block.name + "\": racs service cannot have packs");
        }
        if (clones) {
            if (node_templates.size() != 1) {
                throw CompileError("service \"" + block.name +
                                   "\": clones needs exactly one node template");
            }
            for (std::uint64_t i = 0; i < *clones; ++i) svc.nodes.push_back(node_templates[0]);
        } else {
            svc.nodes = node_templates;
        }
        if (svc.nodes.empty()) {
            throw CompileError("service \"" + block.name + "\": racs service needs nodes");
        }
        if (storage) {
            svc.storage.variant = storage->variant == "shared_disk"
                                      ? topology::StorageVariant::shared_disk
                                      : topology::StorageVariant::shared_nothing;
            if (storage->invalidation) {
                svc.storage.invalidation_cost_us = to_micros(*storage->invalidation);
            }
        }
        if (svc.storage.variant == topology::StorageVariant::shared_disk) {
            // One backend storage server shared by the stateless clones.
            topology::NodeSpec store;
            store.service_rate = 0.0;
            for (const auto& n : svc.nodes) {
                store.service_rate = std::max(store.service_rate, n.service_rate);
                store.disk_capacity += n.disk_capacity;
            }
            svc.storage.shared_store = store;
        }
    } else {
        if (storage) {
            throw CompileError("service \"" + block.name +
                               "\": storage is pack-level for raps services");
        }
        if (node_templates.size() != 1) {
            throw CompileError("service \"" + block.name +
                               "\": raps service needs exactly one node template");
        }
        if (pack_blocks.empty()) {
            throw CompileError("service \"" + block.name + "\": raps service needs packs");
        }
        if (svc.partition_count == 0) {
            throw CompileError("service \"" + block.name + "\": raps service needs partitions");
        }
        if (svc.bucket_count == 0) {
            throw CompileError("service \"" + block.name + "\": raps service needs buckets");
        }
        for (const auto& pb : pack_blocks) {
            topology::PackSpec pack;
            if (pb.size == 0) {
                throw CompileError("service \"" + block.name + "\": pack size must be >= 1");
            }
            for (std::uint64_t i = 0; i < pb.size; ++i) pack.members.push_back(node_templates[0]);
            pack.mode = pb.mode == "active_active" ? topology::PackMode::active_active
                                                   : topology::PackMode::active_passive;
            pack.storage_variant = pb.storage == "shared_disk"
                                       ? topology::StorageVariant::shared_disk
                                       : topology::StorageVariant::shared_nothing;
            svc.packs.push_back(std::move(pack));
        }
    }
    return svc;
}

lifecycle::FaultAction action_from(const InjectAction& action) {
    if (action.verb == "add_clone") return lifecycle::FaultAction::add_clone;
    if (action.verb == "add_partition") return lifecycle::FaultAction::add_partition;
    const bool fail = action.verb == "fail";
    if (*action.target_kind == "node") {
        return fail ? lifecycle::FaultAction::fail_node : lifecycle::FaultAction::repair_node;
    }
    if (*action.target_kind == "disk") {
        return fail ? lifecycle::FaultAction::fail_disk : lifecycle::FaultAction::repair_disk;
    }
    return fail ? lifecycle::FaultAction::fail_site : lifecycle::FaultAction::repair_site;
}

}  // namespace

CompiledScenario compile_scenario(const ScenarioAst& ast) {
    CompiledScenario out;

    // Defaults first; they feed service compilation.
    for (const auto& block : ast.blocks) {
        if (const auto* d = std::get_if<DefaultsBlock>(&block)) {
            if (d->seed) out.defaults.seed = *d->seed;
            if (d->copy_rate) out.defaults.copy_rate_bps = to_bytes_per_second(*d->copy_rate);
            if (d->detect) out.defaults.detect_us = to_micros(*d->detect);
            if (d->takeover) out.defaults.takeover_us = to_micros(*d->takeover);
            if (d->geoplex_detect) out.defaults.geoplex_detect_us = to_micros(*d->geoplex_detect);
            if (d->provision) out.defaults.provision_us = to_micros(*d->provision);
            if (d->failback) out.defaults.failback_on_repair = *d->failback == "on_repair";
        }
    }

    std::map<std::string, topology::FarmSpec> farms_by_name;
    std::vector<std::string> farm_order;
    const GeoplexBlock* geoplex = nullptr;
    for (const auto& block : ast.blocks) {
        if (const auto* f = std::get_if<FarmBlock>(&block)) {
            topology::FarmSpec farm;
            farm.name = f->name;
            for (const auto& svc : f->services) {
                farm.services.push_back(compile_service(svc, out.defaults));
            }
            farms_by_name[f->name] = std::move(farm);
            farm_order.push_back(f->name);
        } else if (const auto* g = std::get_if<GeoplexBlock>(&block)) {
            if (geoplex) throw CompileError("multiple geoplex blocks");
            geoplex = g;
        }
    }

    if (geoplex) {
        out.geoplex.mode = geoplex->mode == "active_active"
                               ? topology::GeoplexMode::active_active
                               : topology::GeoplexMode::active_passive;
        if (geoplex->farms.size() != farm_order.size()) {
            throw CompileError("geoplex farm list must name every declared farm");
        }
        // The namelist fixes farm order for geoplex routing.
        for (const auto& name : geoplex->farms) {
            auto it = farms_by_name.find(name);
            if (it == farms_by_name.end()) {
                throw CompileError("geoplex names unknown farm \"" + name + "\"");
            }
            out.geoplex.farms.push_back(std::move(it->second));
        }
    } else {
        for (const auto& name : farm_order) {
            out.geoplex.farms.push_back(std::move(farms_by_name[name]));
        }
    }

    for (const auto& block : ast.blocks) {
        if (const auto* w = std::get_if<WorkloadBlock>(&block)) {
            workload::WorkloadSpec spec;
            spec.name = w->name;
            spec.target = w->target;
            spec.arrival = w->arrival_kind == "poisson" ? workload::ArrivalKind::poisson
                                                        : workload::ArrivalKind::fixed;
            if (spec.arrival == workload::ArrivalKind::poisson) {
                spec.rate_rps = w->arrival_value.value;
                if (!(spec.rate_rps > 0)) throw CompileError("poisson rate must be > 0");
            } else {
                spec.interval_us = to_micros(w->arrival_value);
                if (spec.interval_us == 0) throw CompileError("fixed interval must be > 0");
            }
            if (w->mix_read < 0 || w->mix_write < 0 || w->mix_read + w->mix_write <= 0) {
                throw CompileError("workload \"" + w->name + "\": bad read/write mix");
            }
            spec.read_fraction = w->mix_read / (w->mix_read + w->mix_write);
            spec.deadline_us = to_micros(w->deadline);
            spec.demand_us = to_micros(w->demand);
            if (spec.deadline_us == 0 || spec.demand_us == 0) {
                throw CompileError("workload \"" + w->name + "\": deadline and demand must be > 0");
            }
            if (w->write_demand) spec.write_demand_us = to_micros(*w->write_demand);
            if (w->keys) {
                if (*w->keys == 0) throw CompileError("key space must be >= 1");
                spec.key_space = *w->keys;
            }
            if (w->key_dist) {
                if (*w->key_dist == "uniform") spec.key_dist = workload::KeyDist::uniform;
                else if (*w->key_dist == "zipf") spec.key_dist = workload::KeyDist::zipf;
                else spec.key_dist = workload::KeyDist::sequence;
                if (w->zipf_s) spec.zipf_s = *w->zipf_s;
            }
            if (w->start) spec.start_us = to_micros(*w->start);
            spec.duration_us = to_micros(w->duration);
            out.horizon_us = std::max(out.horizon_us, spec.window_end());
            out.workloads.push_back(std::move(spec));
        } else if (const auto* inj = std::get_if<InjectBlock>(&block)) {
            for (const auto& a : inj->actions) {
                lifecycle::ScenarioEvent ev;
                ev.at = to_micros(a.at);
                ev.action = action_from(a);
                ev.path = a.path;
                out.horizon_us = std::max(out.horizon_us, ev.at);
                out.events.push_back(std::move(ev));
            }
        }
    }
    return out;
}

}  // namespace farmsim::scenario
