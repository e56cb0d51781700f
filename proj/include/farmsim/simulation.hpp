#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "farmsim/event.hpp"
#include "farmsim/lifecycle.hpp"
#include "farmsim/metrics.hpp"
#include "farmsim/rng.hpp"
#include "farmsim/topology.hpp"
#include "farmsim/workload.hpp"

namespace farmsim::sim {

// Scenario-level defaults; the DSL defaults block overrides these.
struct Defaults {
    std::uint64_t seed = 1;
    SimTime detect_us = 500'000;           // balancer + pack failure detection
    SimTime takeover_us = 2'000'000;       // pack partition takeover
    SimTime geoplex_detect_us = 1'000'000; // site failure detection at geoplex level
    std::uint64_t copy_rate_bps = 100'000'000;  // clone sync + bucket move speed
    SimTime provision_us = 1'000'000;      // shared-disk clone join time
    bool failback_on_repair = false;
};

struct SimConfig {
    std::uint64_t seed = 1;
    SimTime t_end = 0;
    Defaults defaults;
    bool trace_requests = false;     // per-request events in the trace
    bool record_executions = false;  // keep a structured execution log (tests)
    // Queue-length probe: node path -> sampled every probe_interval_us.
    std::optional<std::vector<std::string>> probe_node;
    SimTime probe_interval_us = kMicrosPerSecond;
};

class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void line(const std::string& text) = 0;
};

// One completed node execution; kept only when record_executions is set.
struct ExecRecord {
    SimTime time = 0;
    std::uint32_t farm = 0;
    std::uint32_t service = 0;
    NodeId node = 0;
    std::uint64_t request_id = 0;
    RequestKind kind = RequestKind::read;
    bool store_stage = false;
    std::optional<BucketId> bucket;
};

enum class FailReason {
    NoLiveFarm,
    NoHealthyMember,
    PartitionUnavailable,
    RoutedToDeadNode,
    NodeFailedInFlight,
};

const char* fail_reason_name(FailReason r);

constexpr NodeId kStoreNode = 0xFFFFFFFFu;

struct Job {
    std::uint64_t request_id = 0;
    SimTime work_us = 0;
    bool is_write = false;
    bool store_stage = false;
};

struct NodeRuntime {
    topology::NodeSpec spec;
    NodeId id = 0;
    lifecycle::NodeHealth health = lifecycle::NodeHealth::Healthy;
    SimTime last_transition = 0;
    std::uint64_t generation = 0;  // bumped on failure; stales queued events
    std::deque<Job> queue;
    bool busy = false;
    bool start_pending = false;
    Job current;
    SimTime current_started = 0;
    std::uint64_t busy_us = 0;
    bool failed_by_disk = false;

    std::size_t backlog() const { return queue.size() + (busy ? 1 : 0); }
};

struct PackRuntime {
    topology::PackMode mode = topology::PackMode::active_passive;
    topology::StorageVariant storage_variant = topology::StorageVariant::shared_nothing;
    std::vector<NodeId> member_ids;            // ascending
    std::vector<PartitionId> partitions_hosted;
    std::uint64_t epoch = 0;  // invalidates in-flight takeovers
    // member id -> partitions it served when it failed (failback bookkeeping)
    std::map<NodeId, std::vector<PartitionId>> served_at_failure;
};

struct ServiceRuntime {
    const topology::ServiceSpec* spec = nullptr;
    std::uint32_t farm_idx = 0;
    std::uint32_t svc_idx = 0;
    std::string scope;  // "farm/service"
    std::vector<NodeRuntime> nodes;  // index == NodeId, members only
    std::optional<NodeRuntime> store;
    std::set<NodeId> believed_down;  // balancer's stale view
    std::optional<NodeId> rr_cursor;

    // raps state
    std::vector<PackRuntime> packs;
    std::uint32_t partition_count = 0;
    std::vector<PartitionId> bucket_assignment;         // flips at BucketMoveDone
    std::vector<std::optional<NodeId>> serving;         // partition -> member
    std::vector<std::uint32_t> pack_of_partition;
    std::map<BucketId, lifecycle::BucketMove> moving;   // in-flight bucket moves
    std::map<PartitionId, std::uint64_t> pending_takeover;  // partition -> plan epoch

    // Actual-state member list: Healthy or Degraded, ascending id.
    std::vector<NodeId> healthy_members() const;
    // Balancer view: actual plus failed-but-undetected, minus Syncing.
    std::vector<NodeId> believed_healthy_members() const;
};

struct FarmRuntime {
    std::string name;
    bool live = true;
    std::vector<ServiceRuntime> services;
};

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Simulation {
public:
    Simulation(const topology::Topology& topo, std::vector<workload::WorkloadSpec> workloads,
               std::vector<lifecycle::ScenarioEvent> scenario_events, SimConfig config,
               TraceSink* trace = nullptr);

    // Dispatches every event with time <= t_end and finalizes the report.
    metrics::RunReport run();

    SimTime clock() const { return clock_; }
    const std::vector<FarmRuntime>& farms() const { return farms_; }
    const std::vector<ExecRecord>& executions() const { return executions_; }
    const std::vector<std::pair<SimTime, std::size_t>>& queue_samples() const {
        return queue_samples_;
    }
    // Completed bucket moves with completion times, in completion order.
    const std::vector<std::pair<SimTime, lifecycle::BucketMove>>& completed_moves() const {
        return completed_moves_;
    }

private:
    struct RequestState {
        Request req;
        std::uint32_t workload = 0;
        std::uint32_t farm = 0;
        std::uint32_t service = 0;
        int pending = 0;          // outstanding node executions this hop
        bool failed = false;
        bool store_next = false;  // shared-disk write: store stage after node
        std::vector<std::string> scopes;
    };

    // event handlers
    void on_arrival(const engine::ArrivalPayload& p);
    void on_service_start(const engine::ServiceStartPayload& p);
    void on_service_done(const engine::ServiceDonePayload& p);
    void on_fault_event(engine::EventKind kind, const engine::FaultPayload& p);
    void on_detected(const engine::DetectedPayload& p);
    void on_takeover_done(const engine::TakeoverPayload& p);
    void on_add_clone(const engine::ScalePayload& p);
    void on_clone_joined(const engine::ScalePayload& p);
    void on_add_partition(const engine::ScalePayload& p);
    void on_bucket_move_done(const engine::BucketMovePayload& p);

    // request path
    void enter_service(RequestState& rs, std::uint32_t farm, std::uint32_t svc);
    void dispatch_to_node(RequestState& rs, ServiceRuntime& svc, NodeId node, SimTime work,
                          bool is_write, bool store_stage);
    void enqueue_job(ServiceRuntime& svc, NodeRuntime& node, Job job);
    void fail_request(RequestState& rs, FailReason reason);
    void complete_request(RequestState& rs);
    void resolve_replica(RequestState& rs);
    void maybe_erase(std::uint64_t request_id);

    // lifecycle
    void transition(ServiceRuntime& svc, NodeRuntime& node, lifecycle::NodeHealth to);
    void take_node_down(ServiceRuntime& svc, NodeRuntime& node, bool by_disk);
    void restore_node(ServiceRuntime& svc, NodeRuntime& node);
    void fail_resident_jobs(NodeRuntime& node);
    void pack_failover(ServiceRuntime& svc, std::uint32_t pack_idx);
    void adopt_unserved(ServiceRuntime& svc, std::uint32_t pack_idx);
    void schedule_takeover(ServiceRuntime& svc, std::uint32_t pack_idx, PartitionId partition,
                           NodeId target);

    NodeRuntime& node_at(const engine::NodeRef& ref);
    ServiceRuntime& service_at(std::uint32_t farm, std::uint32_t svc);
    std::optional<engine::NodeRef> resolve_node_path(const std::vector<std::string>& path);

    std::vector<std::size_t> believed_live_farms() const;
    std::string node_path(const ServiceRuntime& svc, NodeId id) const;

    void trace_event(const engine::Event& ev);
    void trace_line(const std::string& text);

    const topology::Topology& topo_;
    std::vector<workload::Generator> generators_;
    std::vector<std::pair<bool, std::pair<std::uint32_t, std::uint32_t>>> workload_targets_;
    std::vector<lifecycle::ScenarioEvent> scenario_events_;
    SimConfig config_;
    TraceSink* trace_ = nullptr;

    engine::EventQueue queue_;
    SimTime clock_ = 0;
    Rng rng_;
    std::uint64_t next_request_id_ = 0;

    std::vector<FarmRuntime> farms_;
    std::vector<bool> farm_believed_live_;
    std::unordered_map<std::uint64_t, RequestState> requests_;

    metrics::Accumulator accumulator_;
    std::vector<ExecRecord> executions_;
    std::vector<std::pair<SimTime, std::size_t>> queue_samples_;
    std::vector<std::pair<SimTime, lifecycle::BucketMove>> completed_moves_;
    std::optional<engine::NodeRef> probe_ref_;
    SimTime next_probe_ = 0;
};

}  // namespace farmsim::sim
