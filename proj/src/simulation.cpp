#include "farmsim/simulation.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "farmsim/routing.hpp"

namespace farmsim::sim {

using engine::EventKind;
using lifecycle::NodeHealth;
using topology::ServiceKind;
using topology::StorageVariant;

const char* fail_reason_name(FailReason r) {
    switch (r) {
        case FailReason::NoLiveFarm: return "no_live_farm";
        case FailReason::NoHealthyMember: return "no_healthy_member";
        case FailReason::PartitionUnavailable: return "partition_unavailable";
        case FailReason::RoutedToDeadNode: return "routed_to_dead_node";
        case FailReason::NodeFailedInFlight: return "node_failed_in_flight";
    }
    return "unknown";
}

std::vector<NodeId> ServiceRuntime::healthy_members() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes) {
        if (n.health == NodeHealth::Healthy || n.health == NodeHealth::Degraded) {
            out.push_back(n.id);
        }
    }
    return out;
}

std::vector<NodeId> ServiceRuntime::believed_healthy_members() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes) {
        if (n.health == NodeHealth::Syncing) continue;
        if (n.health == NodeHealth::Failed && believed_down.count(n.id)) continue;
        out.push_back(n.id);
    }
    return out;
}

namespace {

SimTime scaled_work(SimTime work_us, double rate_factor) {
    if (rate_factor == 1.0) return work_us;
    double scaled = std::floor(static_cast<double>(work_us) / rate_factor + 0.5);
    return scaled < 1.0 ? 1 : static_cast<SimTime>(scaled);
}

}  // namespace

Simulation::Simulation(const topology::Topology& topo,
                       std::vector<workload::WorkloadSpec> workloads,
                       std::vector<lifecycle::ScenarioEvent> scenario_events, SimConfig config,
                       TraceSink* trace)
    : topo_(topo),
      scenario_events_(std::move(scenario_events)),
      config_(config),
      trace_(trace),
      rng_(config.seed) {
    // Materialize runtime state from the immutable topology.
    const auto& farms = topo_.farms();
    farms_.resize(farms.size());
    farm_believed_live_.assign(farms.size(), true);
    accumulator_.register_scope("total");
    if (topo_.geoplex_mode() != topology::GeoplexMode::none) {
        accumulator_.register_scope("geoplex");
    }
    for (std::uint32_t f = 0; f < farms.size(); ++f) {
        auto& farm_rt = farms_[f];
        farm_rt.name = farms[f].name;
        accumulator_.register_scope(farm_rt.name);
        farm_rt.services.resize(farms[f].services.size());
        for (std::uint32_t s = 0; s < farms[f].services.size(); ++s) {
            const auto& spec = farms[f].services[s];
            auto& svc = farm_rt.services[s];
            svc.spec = &spec;
            svc.farm_idx = f;
            svc.svc_idx = s;
            svc.scope = farm_rt.name + "/" + spec.name;
            accumulator_.register_scope(svc.scope);

            auto add_node = [&](const topology::NodeSpec& ns) {
                NodeRuntime node;
                node.spec = ns;
                node.id = static_cast<NodeId>(svc.nodes.size());
                node.spec.id = "n" + std::to_string(node.id);
                svc.nodes.push_back(std::move(node));
                return svc.nodes.back().id;
            };

            if (spec.kind == ServiceKind::racs) {
                for (const auto& ns : spec.nodes) add_node(ns);
            } else {
                svc.partition_count = spec.partition_count;
                svc.bucket_assignment = topo_.initial_partition_map(f, s).assignment;
                svc.serving.assign(svc.partition_count, std::nullopt);
                svc.pack_of_partition.assign(svc.partition_count, 0);
                for (std::uint32_t p = 0; p < spec.packs.size(); ++p) {
                    const auto& pack_spec = spec.packs[p];
                    PackRuntime pack;
                    pack.mode = pack_spec.mode;
                    pack.storage_variant = pack_spec.storage_variant;
                    pack.partitions_hosted = pack_spec.partitions_hosted;
                    for (const auto& ns : pack_spec.members) pack.member_ids.push_back(add_node(ns));
                    // Initial serving: active_passive puts everything on the
                    // lowest-id member; active_active deals partitions
                    // round-robin over members in id order.
                    for (std::size_t i = 0; i < pack.partitions_hosted.size(); ++i) {
                        PartitionId pid = pack.partitions_hosted[i];
                        svc.pack_of_partition[pid] = p;
                        NodeId owner = pack.mode == topology::PackMode::active_passive
                                           ? pack.member_ids.front()
                                           : pack.member_ids[i % pack.member_ids.size()];
                        svc.serving[pid] = owner;
                    }
                    svc.packs.push_back(std::move(pack));
                }
            }
            if (spec.storage.variant == StorageVariant::shared_disk) {
                NodeRuntime store;
                store.spec = *spec.storage.shared_store;
                store.id = kStoreNode;
                store.spec.id = "store";
                svc.store = std::move(store);
            }
        }
    }

    // Workload targets: "farm/service", or a bare service name resolved at
    // geoplex level (all farms must host it) or to the unique hosting farm.
    for (auto& wl : workloads) {
        if (wl.target.empty()) throw SimulationError("workload '" + wl.name + "' has no target");
        if (wl.target.size() == 1) {
            const std::string& svc_name = wl.target[0];
            if (topo_.geoplex_mode() != topology::GeoplexMode::none) {
                for (std::uint32_t f = 0; f < farms.size(); ++f) {
                    if (!topo_.find_service(f, svc_name)) {
                        throw SimulationError("geoplex-level target '" + svc_name +
                                              "' missing from farm '" + farms[f].name + "'");
                    }
                }
                workload_targets_.push_back(
                    {true, {0, static_cast<std::uint32_t>(*topo_.find_service(0, svc_name))}});
            } else {
                std::optional<std::pair<std::uint32_t, std::uint32_t>> found;
                for (std::uint32_t f = 0; f < farms.size(); ++f) {
                    if (auto s = topo_.find_service(f, svc_name)) {
                        if (found) {
                            throw SimulationError("target '" + svc_name +
                                                  "' is ambiguous without a farm prefix");
                        }
                        found = {f, static_cast<std::uint32_t>(*s)};
                    }
                }
                if (!found) throw SimulationError("unknown target service '" + svc_name + "'");
                workload_targets_.push_back({false, *found});
            }
        } else {
            auto f = topo_.find_farm(wl.target[0]);
            if (!f) throw SimulationError("unknown target farm '" + wl.target[0] + "'");
            auto s = topo_.find_service(*f, wl.target[1]);
            if (!s) {
                throw SimulationError("unknown target service '" + join_path(wl.target) + "'");
            }
            workload_targets_.push_back(
                {false, {static_cast<std::uint32_t>(*f), static_cast<std::uint32_t>(*s)}});
        }
        generators_.emplace_back(wl);
    }

    if (config_.probe_node) {
        probe_ref_ = resolve_node_path(*config_.probe_node);
        if (!probe_ref_) throw SimulationError("probe node not found: " + join_path(*config_.probe_node));
        next_probe_ = config_.probe_interval_us;
    }

    // Seed the queue: first arrival per workload (in declaration order), then
    // the scripted fault/scale events.
    for (std::uint32_t w = 0; w < generators_.size(); ++w) {
        if (auto t = generators_[w].next_arrival(generators_[w].spec().start_us, rng_)) {
            queue_.schedule(0, *t, EventKind::Arrival, engine::ArrivalPayload{w});
        }
    }
    for (std::uint32_t i = 0; i < scenario_events_.size(); ++i) {
        const auto& ev = scenario_events_[i];
        EventKind kind;
        switch (ev.action) {
            case lifecycle::FaultAction::fail_node: kind = EventKind::NodeFail; break;
            case lifecycle::FaultAction::repair_node: kind = EventKind::NodeRepair; break;
            case lifecycle::FaultAction::fail_disk: kind = EventKind::DiskFail; break;
            case lifecycle::FaultAction::repair_disk: kind = EventKind::DiskRepair; break;
            case lifecycle::FaultAction::fail_site: kind = EventKind::SiteFail; break;
            case lifecycle::FaultAction::repair_site: kind = EventKind::SiteRepair; break;
            case lifecycle::FaultAction::add_clone: kind = EventKind::AddClone; break;
            case lifecycle::FaultAction::add_partition: kind = EventKind::AddPartition; break;
            default: throw SimulationError("unhandled scenario action");
        }
        if (kind == EventKind::AddClone || kind == EventKind::AddPartition) {
            auto farm = topo_.find_farm(ev.path.size() > 0 ? ev.path[0] : "");
            if (!farm || ev.path.size() != 2) {
                throw SimulationError("bad scale path: " + join_path(ev.path));
            }
            auto svc = topo_.find_service(*farm, ev.path[1]);
            if (!svc) throw SimulationError("bad scale path: " + join_path(ev.path));
            queue_.schedule(0, ev.at, kind,
                            engine::ScalePayload{{static_cast<std::uint32_t>(*farm),
                                                  static_cast<std::uint32_t>(*svc)}});
        } else if (kind == EventKind::SiteFail || kind == EventKind::SiteRepair) {
            auto farm = topo_.find_farm(ev.path.size() == 1 ? ev.path[0] : "");
            if (!farm) throw SimulationError("bad site path: " + join_path(ev.path));
            engine::FaultPayload payload;
            payload.farm = static_cast<std::uint32_t>(*farm);
            queue_.schedule(0, ev.at, kind, payload);
        } else {
            auto ref = resolve_node_path(ev.path);
            if (!ref) throw SimulationError("unknown node path: " + join_path(ev.path));
            engine::FaultPayload payload;
            payload.node = *ref;
            payload.farm = ref->farm;
            queue_.schedule(0, ev.at, kind, payload);
        }
    }
}

std::optional<engine::NodeRef> Simulation::resolve_node_path(const std::vector<std::string>& path) {
    if (path.size() != 3) return std::nullopt;
    auto f = topo_.find_farm(path[0]);
    if (!f) return std::nullopt;
    auto s = topo_.find_service(*f, path[1]);
    if (!s) return std::nullopt;
    auto& svc = farms_[*f].services[*s];
    engine::NodeRef ref{static_cast<std::uint32_t>(*f), static_cast<std::uint32_t>(*s), 0};
    if (path[2] == "store") {
        if (!svc.store) return std::nullopt;
        ref.node = kStoreNode;
        return ref;
    }
    for (const auto& n : svc.nodes) {
        if (n.spec.id == path[2]) {
            ref.node = n.id;
            return ref;
        }
    }
    return std::nullopt;
}

NodeRuntime& Simulation::node_at(const engine::NodeRef& ref) {
    auto& svc = farms_[ref.farm].services[ref.service];
    if (ref.node == kStoreNode) return *svc.store;
    return svc.nodes[ref.node];
}

ServiceRuntime& Simulation::service_at(std::uint32_t farm, std::uint32_t svc) {
    return farms_[farm].services[svc];
}

std::vector<std::size_t> Simulation::believed_live_farms() const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < farms_.size(); ++f) {
        if (farm_believed_live_[f]) out.push_back(f);
    }
    return out;
}

std::string Simulation::node_path(const ServiceRuntime& svc, NodeId id) const {
    return svc.scope + "/" + (id == kStoreNode ? "store" : svc.nodes[id].spec.id);
}

void Simulation::trace_line(const std::string& text) {
    if (trace_) trace_->line(text);
}

void Simulation::trace_event(const engine::Event& ev) {
    if (!trace_) return;
    const bool request_level = ev.kind == EventKind::Arrival || ev.kind == EventKind::ServiceStart ||
                               ev.kind == EventKind::ServiceDone;
    if (request_level && !config_.trace_requests) return;
    std::string line = "t=" + std::to_string(ev.time) + " seq=" + std::to_string(ev.sequence) +
                       " " + engine::event_kind_name(ev.kind);
    if (const auto* f = std::get_if<engine::FaultPayload>(&ev.payload)) {
        if (ev.kind == EventKind::SiteFail || ev.kind == EventKind::SiteRepair) {
            line += " farm=" + farms_[f->farm].name;
        } else {
            line += " node=" + node_path(farms_[f->node.farm].services[f->node.service], f->node.node);
        }
    } else if (const auto* d = std::get_if<engine::DetectedPayload>(&ev.payload)) {
        if (d->level == engine::DetectedPayload::Level::geoplex) {
            line += " farm=" + farms_[d->farm].name;
        } else {
            line += " node=" + node_path(farms_[d->node.farm].services[d->node.service], d->node.node);
        }
    } else if (const auto* t = std::get_if<engine::TakeoverPayload>(&ev.payload)) {
        auto& svc = farms_[t->service.farm].services[t->service.service];
        line += " service=" + svc.scope + " member=n" + std::to_string(t->to_member) + " partitions=";
        for (std::size_t i = 0; i < t->partitions.size(); ++i) {
            if (i) line += ',';
            line += "p" + std::to_string(t->partitions[i]);
        }
    } else if (const auto* s = std::get_if<engine::ScalePayload>(&ev.payload)) {
        auto& svc = farms_[s->service.farm].services[s->service.service];
        line += " service=" + svc.scope;
        if (ev.kind == EventKind::CloneJoined) line += " node=n" + std::to_string(s->node);
    } else if (const auto* b = std::get_if<engine::BucketMovePayload>(&ev.payload)) {
        auto& svc = farms_[b->service.farm].services[b->service.service];
        line += " service=" + svc.scope + " bucket=" + std::to_string(b->bucket) + " p" +
                std::to_string(b->from) + "->p" + std::to_string(b->to);
    } else if (const auto* a = std::get_if<engine::ArrivalPayload>(&ev.payload)) {
        line += " workload=" + generators_[a->workload].spec().name;
    } else if (const auto* n = std::get_if<engine::ServiceStartPayload>(&ev.payload)) {
        line += " node=" + node_path(farms_[n->node.farm].services[n->node.service], n->node.node);
    } else if (const auto* n2 = std::get_if<engine::ServiceDonePayload>(&ev.payload)) {
        line += " node=" + node_path(farms_[n2->node.farm].services[n2->node.service], n2->node.node);
    }
    trace_->line(line);
}

metrics::RunReport Simulation::run() {
    while (!queue_.empty() && queue_.top().time <= config_.t_end) {
        if (probe_ref_) {
            while (next_probe_ <= config_.t_end && next_probe_ < queue_.top().time) {
                queue_samples_.push_back({next_probe_, node_at(*probe_ref_).backlog()});
                next_probe_ += config_.probe_interval_us;
            }
        }
        engine::Event ev = queue_.pop();
        assert(ev.time >= clock_ && "clock must be monotone");
        clock_ = ev.time;
        trace_event(ev);
        switch (ev.kind) {
            case EventKind::Arrival:
                on_arrival(std::get<engine::ArrivalPayload>(ev.payload));
                break;
            case EventKind::ServiceStart:
                on_service_start(std::get<engine::ServiceStartPayload>(ev.payload));
                break;
            case EventKind::ServiceDone:
                on_service_done(std::get<engine::ServiceDonePayload>(ev.payload));
                break;
            case EventKind::NodeFail:
            case EventKind::NodeRepair:
            case EventKind::DiskFail:
            case EventKind::DiskRepair:
            case EventKind::SiteFail:
            case EventKind::SiteRepair:
                on_fault_event(ev.kind, std::get<engine::FaultPayload>(ev.payload));
                break;
            case EventKind::FailureDetected:
                on_detected(std::get<engine::DetectedPayload>(ev.payload));
                break;
            case EventKind::TakeoverDone:
                on_takeover_done(std::get<engine::TakeoverPayload>(ev.payload));
                break;
            case EventKind::AddClone:
                on_add_clone(std::get<engine::ScalePayload>(ev.payload));
                break;
            case EventKind::CloneJoined:
                on_clone_joined(std::get<engine::ScalePayload>(ev.payload));
                break;
            case EventKind::AddPartition:
                on_add_partition(std::get<engine::ScalePayload>(ev.payload));
                break;
            case EventKind::BucketMoveDone:
                on_bucket_move_done(std::get<engine::BucketMovePayload>(ev.payload));
                break;
        }
    }
    if (probe_ref_) {
        while (next_probe_ <= config_.t_end) {
            queue_samples_.push_back({next_probe_, node_at(*probe_ref_).backlog()});
            next_probe_ += config_.probe_interval_us;
        }
    }
    clock_ = config_.t_end;

    // Whatever is still in flight was presented but never serviced.
    std::vector<std::uint64_t> open_ids;
    open_ids.reserve(requests_.size());
    for (const auto& [id, rs] : requests_) open_ids.push_back(id);
    std::sort(open_ids.begin(), open_ids.end());
    for (auto id : open_ids) {
        auto& rs = requests_.at(id);
        if (!rs.failed) {
            accumulator_.on_outcome(rs.scopes, metrics::Outcome::InFlightAtEnd, clock_, 0);
        }
    }
    requests_.clear();

    // Node busy time and utilization.
    for (auto& farm : farms_) {
        for (auto& svc : farm.services) {
            for (auto& node : svc.nodes) {
                if (node.busy) {
                    node.busy_us += clock_ - node.current_started;
                    node.busy = false;
                }
                accumulator_.add_node_busy(node_path(svc, node.id), node.busy_us);
            }
            if (svc.store) {
                auto& store = *svc.store;
                if (store.busy) {
                    store.busy_us += clock_ - store.current_started;
                    store.busy = false;
                }
                accumulator_.add_node_busy(node_path(svc, kStoreNode), store.busy_us);
            }
        }
    }
    return accumulator_.finalize(config_.t_end);
}

void Simulation::on_arrival(const engine::ArrivalPayload& p) {
    auto& gen = generators_[p.workload];
    if (auto t = gen.next_arrival(clock_, rng_)) {
        queue_.schedule(clock_, *t, EventKind::Arrival, engine::ArrivalPayload{p.workload});
    }

    RequestState rs;
    rs.workload = p.workload;
    rs.req = gen.make_request(next_request_id_++, clock_, rng_);
    rs.scopes.push_back("total");

    const auto& [geoplex_level, target] = workload_targets_[p.workload];
    std::uint32_t farm = target.first;
    if (geoplex_level) {
        rs.scopes.push_back("geoplex");
        auto live = believed_live_farms();
        auto pick = routing::route_geoplex(rs.req.id, topo_.geoplex_mode(), live);
        accumulator_.on_presented(rs.scopes, rs.req.kind);
        if (!pick) {
            auto [it, _] = requests_.emplace(rs.req.id, std::move(rs));
            fail_request(it->second, FailReason::NoLiveFarm);
            maybe_erase(it->first);
            return;
        }
        farm = static_cast<std::uint32_t>(*pick);
        // Resolve the service by name in the chosen farm.
        auto svc_name = topo_.farms()[target.first].services[target.second].name;
        auto svc_idx = topo_.find_service(farm, svc_name);
        rs.scopes.push_back(farms_[farm].name);
        accumulator_.on_presented({rs.scopes.back()}, rs.req.kind);
        auto [it, _] = requests_.emplace(rs.req.id, std::move(rs));
        enter_service(it->second, farm, static_cast<std::uint32_t>(*svc_idx));
        maybe_erase(it->first);
        return;
    }

    rs.scopes.push_back(farms_[farm].name);
    accumulator_.on_presented(rs.scopes, rs.req.kind);
    auto [it, _] = requests_.emplace(rs.req.id, std::move(rs));
    enter_service(it->second, farm, target.second);
    maybe_erase(it->first);
}

void Simulation::enter_service(RequestState& rs, std::uint32_t farm, std::uint32_t svc_idx) {
    auto& svc = service_at(farm, svc_idx);
    rs.farm = farm;
    rs.service = svc_idx;
    rs.scopes.push_back(svc.scope);
    accumulator_.on_presented({svc.scope}, rs.req.kind);

    const auto& wl = generators_[rs.workload].spec();
    const SimTime work = wl.demand_for(rs.req.kind);

    if (svc.spec->kind == ServiceKind::racs) {
        const bool is_write = rs.req.kind == RequestKind::write;
        auto believed = svc.believed_healthy_members();
        if (is_write && svc.spec->storage.variant == StorageVariant::shared_nothing) {
            // Every clone holds a full copy: all of them perform the write.
            if (believed.empty()) {
                fail_request(rs, FailReason::NoHealthyMember);
                return;
            }
            rs.pending = static_cast<int>(believed.size());
            for (NodeId id : believed) dispatch_to_node(rs, svc, id, work, true, false);
            return;
        }
        std::optional<NodeId> pick;
        switch (svc.spec->balancer.variant) {
            case topology::BalancerVariant::sprayer_round_robin:
                pick = routing::sprayer_round_robin(believed, svc.rr_cursor);
                if (pick) svc.rr_cursor = *pick;
                break;
            case topology::BalancerVariant::sprayer_least_queue:
                pick = routing::sprayer_least_queue(
                    believed, [&](NodeId id) { return svc.nodes[id].backlog(); });
                break;
            case topology::BalancerVariant::sieve_rendezvous:
                pick = routing::sieve_pick(rs.req.id, believed);
                break;
        }
        if (!pick) {
            fail_request(rs, FailReason::NoHealthyMember);
            return;
        }
        rs.pending = 1;
        if (is_write && svc.spec->storage.variant == StorageVariant::shared_disk) {
            rs.store_next = true;
        }
        dispatch_to_node(rs, svc, *pick, work, is_write, false);
        return;
    }

    // raps: affinity route by key -> bucket -> partition -> serving member.
    BucketId bucket = workload::key_to_bucket(rs.req.key, svc.spec->bucket_count);
    PartitionId partition = svc.bucket_assignment[bucket];
    auto serving = svc.serving[partition];
    if (!serving) {
        fail_request(rs, FailReason::PartitionUnavailable);
        return;
    }
    rs.pending = 1;
    dispatch_to_node(rs, svc, *serving, work, rs.req.kind == RequestKind::write, false);
}

void Simulation::dispatch_to_node(RequestState& rs, ServiceRuntime& svc, NodeId id, SimTime work,
                                  bool is_write, bool store_stage) {
    auto& node = id == kStoreNode ? *svc.store : svc.nodes[id];
    if (node.health == NodeHealth::Failed || node.health == NodeHealth::Syncing) {
        rs.pending--;
        fail_request(rs, FailReason::RoutedToDeadNode);
        return;
    }
    Job job;
    job.request_id = rs.req.id;
    job.work_us = work;
    job.is_write = is_write;
    job.store_stage = store_stage;
    enqueue_job(svc, node, job);
}

void Simulation::enqueue_job(ServiceRuntime& svc, NodeRuntime& node, Job job) {
    node.queue.push_back(job);
    if (!node.busy && !node.start_pending) {
        node.start_pending = true;
        queue_.schedule(clock_, clock_, EventKind::ServiceStart,
                        engine::ServiceStartPayload{{svc.farm_idx, svc.svc_idx, node.id},
                                                    node.generation});
    }
}

void Simulation::on_service_start(const engine::ServiceStartPayload& p) {
    auto& node = node_at(p.node);
    if (p.generation != node.generation) return;  // node failed meanwhile
    node.start_pending = false;
    if (node.queue.empty() || node.busy) return;
    node.current = node.queue.front();
    node.queue.pop_front();
    node.busy = true;
    node.current_started = clock_;
    double factor = node.health == NodeHealth::Degraded ? node.spec.degraded_rate_factor : 1.0;
    SimTime duration = scaled_work(node.current.work_us, factor);
    queue_.schedule(clock_, clock_ + duration, EventKind::ServiceDone,
                    engine::ServiceDonePayload{p.node, node.generation});
}

void Simulation::on_service_done(const engine::ServiceDonePayload& p) {
    auto& svc = service_at(p.node.farm, p.node.service);
    auto& node = node_at(p.node);
    if (p.generation != node.generation) return;
    Job job = node.current;
    node.busy = false;
    node.busy_us += clock_ - node.current_started;
    if (!node.queue.empty() && !node.start_pending) {
        node.start_pending = true;
        queue_.schedule(clock_, clock_, EventKind::ServiceStart,
                        engine::ServiceStartPayload{p.node, node.generation});
    }

    auto it = requests_.find(job.request_id);
    if (it == requests_.end()) return;
    auto& rs = it->second;

    if (job.is_write) {
        accumulator_.on_node_write("total");
        if (std::find(rs.scopes.begin(), rs.scopes.end(), "geoplex") != rs.scopes.end()) {
            accumulator_.on_node_write("geoplex");
        }
        accumulator_.on_node_write(farms_[p.node.farm].name);
        accumulator_.on_node_write(svc.scope);
    }
    if (config_.record_executions) {
        ExecRecord rec;
        rec.time = clock_;
        rec.farm = p.node.farm;
        rec.service = p.node.service;
        rec.node = p.node.node;
        rec.request_id = job.request_id;
        rec.kind = job.is_write ? RequestKind::write : RequestKind::read;
        rec.store_stage = job.store_stage;
        if (svc.spec->kind == ServiceKind::raps) {
            rec.bucket = workload::key_to_bucket(rs.req.key, svc.spec->bucket_count);
        }
        executions_.push_back(rec);
    }

    resolve_replica(rs);
    maybe_erase(job.request_id);
}

void Simulation::resolve_replica(RequestState& rs) {
    rs.pending--;
    if (rs.failed || rs.pending > 0) return;

    auto& svc = service_at(rs.farm, rs.service);
    if (rs.store_next) {
        // Shared-disk write: one store operation costing the write demand plus
        // cache invalidation to every other attached live clone.
        rs.store_next = false;
        const auto& wl = generators_[rs.workload].spec();
        std::size_t peers = svc.healthy_members().size();
        SimTime inval = peers > 1 ? svc.spec->storage.invalidation_cost_us *
                                        static_cast<SimTime>(peers - 1)
                                  : 0;
        rs.pending = 1;
        dispatch_to_node(rs, svc, kStoreNode, wl.demand_for(RequestKind::write) + inval, true, true);
        return;
    }
    if (svc.spec->forwards_to) {
        auto next = topo_.find_service(rs.farm, *svc.spec->forwards_to);
        enter_service(rs, rs.farm, static_cast<std::uint32_t>(*next));
        return;
    }
    complete_request(rs);
}

void Simulation::fail_request(RequestState& rs, FailReason reason) {
    if (rs.failed) return;
    rs.failed = true;
    accumulator_.on_outcome(rs.scopes, metrics::Outcome::Failed, clock_, 0);
    if (config_.trace_requests) {
        trace_line("t=" + std::to_string(clock_) + " fail id=" + std::to_string(rs.req.id) +
                   " reason=" + fail_reason_name(reason));
    }
}

void Simulation::complete_request(RequestState& rs) {
    const std::uint64_t latency = clock_ - rs.req.arrival;
    const bool in_deadline = clock_ <= rs.req.deadline_abs;
    accumulator_.on_outcome(rs.scopes,
                            in_deadline ? metrics::Outcome::ServicedInDeadline
                                        : metrics::Outcome::ServicedLate,
                            clock_, latency);
    if (config_.trace_requests) {
        trace_line("t=" + std::to_string(clock_) + " done id=" + std::to_string(rs.req.id) +
                   " latency=" + std::to_string(latency) + (in_deadline ? "" : " late"));
    }
    requests_.erase(rs.req.id);
}

void Simulation::maybe_erase(std::uint64_t request_id) {
    auto it = requests_.find(request_id);
    if (it == requests_.end()) return;
    if (it->second.failed && it->second.pending <= 0) requests_.erase(it);
}

void Simulation::transition(ServiceRuntime& svc, NodeRuntime& node, NodeHealth to) {
    if (!lifecycle::legal_transition(node.health, to)) {
        throw SimulationError("illegal node state transition " +
                              std::string(lifecycle::node_health_name(node.health)) + " -> " +
                              lifecycle::node_health_name(to) + " at " +
                              node_path(svc, node.id));
    }
    node.health = to;
    node.last_transition = clock_;
}

void Simulation::fail_resident_jobs(NodeRuntime& node) {
    auto fail_job = [&](const Job& job) {
        auto it = requests_.find(job.request_id);
        if (it == requests_.end()) return;
        it->second.pending--;
        fail_request(it->second, FailReason::NodeFailedInFlight);
        maybe_erase(job.request_id);
    };
    if (node.busy) {
        node.busy_us += clock_ - node.current_started;
        node.busy = false;
        fail_job(node.current);
    }
    for (const auto& job : node.queue) fail_job(job);
    node.queue.clear();
    node.start_pending = false;
}

void Simulation::take_node_down(ServiceRuntime& svc, NodeRuntime& node, bool by_disk) {
    transition(svc, node, NodeHealth::Failed);
    node.generation++;
    node.failed_by_disk = by_disk;
    fail_resident_jobs(node);

    if (node.id == kStoreNode) return;  // the store has no balancer or pack view

    if (svc.spec->kind == ServiceKind::racs) {
        engine::DetectedPayload det;
        det.level = engine::DetectedPayload::Level::balancer;
        det.node = {svc.farm_idx, svc.svc_idx, node.id};
        queue_.schedule(clock_, clock_ + svc.spec->balancer.detection_delay_us,
                        EventKind::FailureDetected, det);
    } else {
        for (std::uint32_t p = 0; p < svc.packs.size(); ++p) {
            auto& pack = svc.packs[p];
            if (std::find(pack.member_ids.begin(), pack.member_ids.end(), node.id) ==
                pack.member_ids.end()) {
                continue;
            }
            pack.epoch++;
            std::vector<PartitionId> served;
            for (PartitionId pid : pack.partitions_hosted) {
                if (svc.serving[pid] == node.id) served.push_back(pid);
            }
            if (!served.empty()) pack.served_at_failure[node.id] = served;
            engine::DetectedPayload det;
            det.level = engine::DetectedPayload::Level::pack;
            det.node = {svc.farm_idx, svc.svc_idx, node.id};
            queue_.schedule(clock_, clock_ + config_.defaults.detect_us,
                            EventKind::FailureDetected, det);
            break;
        }
    }
}

void Simulation::restore_node(ServiceRuntime& svc, NodeRuntime& node) {
    transition(svc, node, NodeHealth::Healthy);
    node.failed_by_disk = false;
    svc.believed_down.erase(node.id);  // repaired nodes are recognized at once

    if (node.id == kStoreNode || svc.spec->kind != ServiceKind::raps) return;
    for (std::uint32_t p = 0; p < svc.packs.size(); ++p) {
        auto& pack = svc.packs[p];
        if (std::find(pack.member_ids.begin(), pack.member_ids.end(), node.id) ==
            pack.member_ids.end()) {
            continue;
        }
        pack.epoch++;
        if (config_.defaults.failback_on_repair) {
            auto it = pack.served_at_failure.find(node.id);
            if (it != pack.served_at_failure.end()) {
                for (PartitionId pid : it->second) {
                    svc.serving[pid] = std::nullopt;  // failback outage window
                    schedule_takeover(svc, p, pid, node.id);
                }
                pack.served_at_failure.erase(it);
            }
        } else {
            pack.served_at_failure.erase(node.id);
        }
        adopt_unserved(svc, p);
        break;
    }
}

void Simulation::schedule_takeover(ServiceRuntime& svc, std::uint32_t pack_idx,
                                   PartitionId partition, NodeId target) {
    auto& pack = svc.packs[pack_idx];
    svc.pending_takeover[partition] = pack.epoch;
    engine::TakeoverPayload payload;
    payload.service = {svc.farm_idx, svc.svc_idx};
    payload.pack = pack_idx;
    payload.partitions = {partition};
    payload.to_member = target;
    payload.epoch = pack.epoch;
    queue_.schedule(clock_, clock_ + config_.defaults.takeover_us, EventKind::TakeoverDone,
                    payload);
}

void Simulation::pack_failover(ServiceRuntime& svc, std::uint32_t pack_idx) {
    auto& pack = svc.packs[pack_idx];
    // Orphan everything served by a dead member, then replan all unserved.
    for (PartitionId pid : pack.partitions_hosted) {
        auto owner = svc.serving[pid];
        if (owner && svc.nodes[*owner].health == NodeHealth::Failed) {
            svc.serving[pid] = std::nullopt;
        }
    }
    adopt_unserved(svc, pack_idx);
}

void Simulation::adopt_unserved(ServiceRuntime& svc, std::uint32_t pack_idx) {
    auto& pack = svc.packs[pack_idx];
    std::vector<PartitionId> orphans;
    for (PartitionId pid : pack.partitions_hosted) {
        if (svc.serving[pid]) continue;
        auto pending = svc.pending_takeover.find(pid);
        if (pending != svc.pending_takeover.end() && pending->second == pack.epoch) continue;
        orphans.push_back(pid);
    }
    if (orphans.empty()) return;

    std::vector<NodeId> survivors;
    for (NodeId id : pack.member_ids) {
        auto h = svc.nodes[id].health;
        if (h == NodeHealth::Healthy || h == NodeHealth::Degraded) survivors.push_back(id);
    }
    if (survivors.empty()) {
        accumulator_.warn("no survivor in pack " + std::to_string(pack_idx) + " of " + svc.scope +
                          "; partitions unavailable until repair");
        trace_line("t=" + std::to_string(clock_) + " no_survivor service=" + svc.scope + " pack=" +
                   std::to_string(pack_idx));
        return;
    }

    if (pack.mode == topology::PackMode::active_passive) {
        // The designated standby (lowest id survivor) takes everything.
        NodeId standby = survivors.front();
        for (PartitionId pid : orphans) schedule_takeover(svc, pack_idx, pid, standby);
        return;
    }
    // Active-active: fewest-served survivor per orphan, counting pending
    // assignments so the load spreads.
    std::vector<std::size_t> counts(survivors.size(), 0);
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        for (PartitionId pid : pack.partitions_hosted) {
            if (svc.serving[pid] == survivors[i]) counts[i]++;
        }
    }
    for (PartitionId pid : orphans) {
        auto target = lifecycle::pick_takeover_member(survivors, counts);
        schedule_takeover(svc, pack_idx, pid, *target);
        for (std::size_t i = 0; i < survivors.size(); ++i) {
            if (survivors[i] == *target) counts[i]++;
        }
    }
}

void Simulation::on_fault_event(EventKind kind, const engine::FaultPayload& p) {
    if (kind == EventKind::SiteFail || kind == EventKind::SiteRepair) {
        auto& farm = farms_[p.farm];
        if (kind == EventKind::SiteFail) {
            if (!farm.live) {
                accumulator_.warn("fail_site on already-failed farm " + farm.name);
                return;
            }
            farm.live = false;
            for (auto& svc : farm.services) {
                for (auto& node : svc.nodes) {
                    if (node.health == NodeHealth::Healthy || node.health == NodeHealth::Degraded) {
                        take_node_down(svc, node, false);
                    }
                }
                if (svc.store && (svc.store->health == NodeHealth::Healthy ||
                                  svc.store->health == NodeHealth::Degraded)) {
                    take_node_down(svc, *svc.store, false);
                }
            }
            if (topo_.geoplex_mode() != topology::GeoplexMode::none) {
                engine::DetectedPayload det;
                det.level = engine::DetectedPayload::Level::geoplex;
                det.farm = p.farm;
                queue_.schedule(clock_, clock_ + config_.defaults.geoplex_detect_us,
                                EventKind::FailureDetected, det);
            }
        } else {
            if (farm.live) {
                accumulator_.warn("repair_site on live farm " + farm.name);
                return;
            }
            farm.live = true;
            farm_believed_live_[p.farm] = true;
            for (auto& svc : farm.services) {
                for (auto& node : svc.nodes) {
                    if (node.health == NodeHealth::Failed) restore_node(svc, node);
                }
                if (svc.store && svc.store->health == NodeHealth::Failed) {
                    restore_node(svc, *svc.store);
                }
            }
        }
        return;
    }

    auto& svc = service_at(p.node.farm, p.node.service);
    auto& node = node_at(p.node);
    const std::string path = node_path(svc, node.id);
    switch (kind) {
        case EventKind::NodeFail:
            if (node.health == NodeHealth::Failed) {
                accumulator_.warn("fail_node on already-failed node " + path);
            } else if (node.health == NodeHealth::Syncing) {
                accumulator_.warn("fail_node on syncing node " + path + "; ignored");
            } else {
                take_node_down(svc, node, false);
            }
            break;
        case EventKind::NodeRepair:
            if (node.health != NodeHealth::Failed) {
                accumulator_.warn("repair_node on non-failed node " + path);
            } else {
                restore_node(svc, node);
            }
            break;
        case EventKind::DiskFail: {
            if (node.health == NodeHealth::Failed || node.health == NodeHealth::Syncing) {
                accumulator_.warn("fail_disk on unavailable node " + path);
                break;
            }
            auto outcome = lifecycle::raid_mask(node.spec.raid, node.health);
            if (outcome == lifecycle::RaidOutcome::Masked) {
                transition(svc, node, NodeHealth::Degraded);
                trace_line("t=" + std::to_string(clock_) + " raid_masked node=" + path);
            } else {
                take_node_down(svc, node, true);
                trace_line("t=" + std::to_string(clock_) + " raid_exposed node=" + path);
            }
            break;
        }
        case EventKind::DiskRepair:
            if (node.health == NodeHealth::Degraded) {
                transition(svc, node, NodeHealth::Healthy);
            } else if (node.health == NodeHealth::Failed && node.failed_by_disk) {
                restore_node(svc, node);
            } else {
                accumulator_.warn("repair_disk without disk fault on " + path);
            }
            break;
        default: break;
    }
}

void Simulation::on_detected(const engine::DetectedPayload& p) {
    if (p.level == engine::DetectedPayload::Level::geoplex) {
        if (!farms_[p.farm].live) farm_believed_live_[p.farm] = false;
        return;
    }
    auto& svc = service_at(p.node.farm, p.node.service);
    auto& node = node_at(p.node);
    if (node.health != NodeHealth::Failed) return;  // repaired before detection
    if (p.level == engine::DetectedPayload::Level::balancer) {
        svc.believed_down.insert(node.id);
        return;
    }
    for (std::uint32_t i = 0; i < svc.packs.size(); ++i) {
        const auto& ids = svc.packs[i].member_ids;
        if (std::find(ids.begin(), ids.end(), node.id) != ids.end()) {
            pack_failover(svc, i);
            break;
        }
    }
}

void Simulation::on_takeover_done(const engine::TakeoverPayload& p) {
    auto& svc = service_at(p.service.farm, p.service.service);
    auto& pack = svc.packs[p.pack];
    if (p.epoch != pack.epoch) return;  // membership changed; a replan superseded this
    for (PartitionId pid : p.partitions) {
        svc.serving[pid] = p.to_member;
        svc.pending_takeover.erase(pid);
    }
}

void Simulation::on_add_clone(const engine::ScalePayload& p) {
    auto& svc = service_at(p.service.farm, p.service.service);
    if (svc.spec->kind != ServiceKind::racs) {
        accumulator_.warn("add_clone on non-racs service " + svc.scope);
        return;
    }
    NodeRuntime node;
    node.spec = svc.nodes.front().spec;  // clone the first node's hardware
    node.id = static_cast<NodeId>(svc.nodes.size());
    node.spec.id = "n" + std::to_string(node.id);
    node.health = NodeHealth::Syncing;
    node.last_transition = clock_;
    svc.nodes.push_back(std::move(node));

    SimTime join_delay =
        svc.spec->storage.variant == StorageVariant::shared_nothing
            ? lifecycle::copy_duration_us(svc.spec->state_size, config_.defaults.copy_rate_bps)
            : config_.defaults.provision_us;
    engine::ScalePayload joined = p;
    joined.node = svc.nodes.back().id;
    queue_.schedule(clock_, clock_ + join_delay, EventKind::CloneJoined, joined);
}

void Simulation::on_clone_joined(const engine::ScalePayload& p) {
    auto& svc = service_at(p.service.farm, p.service.service);
    if (!farms_[p.service.farm].live) {
        accumulator_.warn("clone join on failed site " + svc.scope + "; ignored");
        return;
    }
    auto& node = svc.nodes[p.node];
    if (node.health != NodeHealth::Syncing) return;
    transition(svc, node, NodeHealth::Healthy);
}

void Simulation::on_add_partition(const engine::ScalePayload& p) {
    auto& svc = service_at(p.service.farm, p.service.service);
    if (svc.spec->kind != ServiceKind::raps) {
        accumulator_.warn("add_partition on non-raps service " + svc.scope);
        return;
    }
    const PartitionId new_pid = svc.partition_count++;
    const auto& last = svc.packs.back();
    PackRuntime pack;
    pack.mode = last.mode;
    pack.storage_variant = last.storage_variant;
    pack.partitions_hosted = {new_pid};
    const auto member_template = svc.nodes[last.member_ids.front()].spec;
    for (std::size_t i = 0; i < last.member_ids.size(); ++i) {
        NodeRuntime node;
        node.spec = member_template;
        node.id = static_cast<NodeId>(svc.nodes.size());
        node.spec.id = "n" + std::to_string(node.id);
        node.last_transition = clock_;
        svc.nodes.push_back(std::move(node));
        pack.member_ids.push_back(svc.nodes.back().id);
    }
    svc.serving.push_back(pack.member_ids.front());
    svc.pack_of_partition.push_back(static_cast<std::uint32_t>(svc.packs.size()));
    svc.packs.push_back(std::move(pack));

    auto plan = lifecycle::plan_rebalance(svc.bucket_assignment, svc.partition_count);
    const std::uint64_t bucket_bytes = svc.spec->state_size / svc.spec->bucket_count;
    const SimTime move_duration =
        lifecycle::copy_duration_us(bucket_bytes, config_.defaults.copy_rate_bps);
    for (const auto& move : plan) {
        svc.moving[move.bucket] = move;
        engine::BucketMovePayload payload;
        payload.service = p.service;
        payload.bucket = move.bucket;
        payload.from = move.from;
        payload.to = move.to;
        queue_.schedule(clock_, clock_ + move_duration, EventKind::BucketMoveDone, payload);
    }
}

void Simulation::on_bucket_move_done(const engine::BucketMovePayload& p) {
    auto& svc = service_at(p.service.farm, p.service.service);
    svc.bucket_assignment[p.bucket] = p.to;  // atomic cutover
    svc.moving.erase(p.bucket);
    completed_moves_.push_back({clock_, lifecycle::BucketMove{p.bucket, p.from, p.to}});
}

}  // namespace farmsim::sim
