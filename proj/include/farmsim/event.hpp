#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <variant>
#include <vector>

#include "farmsim/types.hpp"

namespace farmsim::engine {

enum class EventKind {
    Arrival,
    ServiceStart,
    ServiceDone,
    NodeFail,
    NodeRepair,
    DiskFail,
    DiskRepair,
    SiteFail,
    SiteRepair,
    FailureDetected,
    TakeoverDone,
    AddClone,
    CloneJoined,
    AddPartition,
    BucketMoveDone,
};

const char* event_kind_name(EventKind kind);

// Addressing within the simulation runtime. Farm/service/node are indices
// into the runtime tables, stable for the run.
struct NodeRef {
    std::uint32_t farm = 0;
    std::uint32_t service = 0;
    NodeId node = 0;
    bool operator==(const NodeRef&) const = default;
};

struct ServiceRef {
    std::uint32_t farm = 0;
    std::uint32_t service = 0;
    bool operator==(const ServiceRef&) const = default;
};

struct ArrivalPayload {
    std::uint32_t workload = 0;
};

struct ServiceStartPayload {
    NodeRef node;
    std::uint64_t generation = 0;  // stale after a node failure
};

struct ServiceDonePayload {
    NodeRef node;
    std::uint64_t generation = 0;
};

struct FaultPayload {
    NodeRef node;          // node/disk events
    std::uint32_t farm = 0;  // site events
};

// Detection is scoped: a balancer learns of a member death, a pack begins
// takeover, or the geoplex stops routing to a dead farm.
struct DetectedPayload {
    enum class Level { balancer, pack, geoplex } level = Level::balancer;
    NodeRef node;
    std::uint32_t farm = 0;
};

struct TakeoverPayload {
    ServiceRef service;
    std::uint32_t pack = 0;
    std::vector<PartitionId> partitions;
    NodeId to_member = 0;
    std::uint64_t epoch = 0;  // stale if the pack changed again meanwhile
};

struct ScalePayload {
    ServiceRef service;
    NodeId node = 0;  // CloneJoined
};

struct BucketMovePayload {
    ServiceRef service;
    BucketId bucket = 0;
    PartitionId from = 0;
    PartitionId to = 0;
};

using EventPayload = std::variant<ArrivalPayload, ServiceStartPayload, ServiceDonePayload,
                                  FaultPayload, DetectedPayload, TakeoverPayload, ScalePayload,
                                  BucketMovePayload>;

struct Event {
    SimTime time = 0;
    std::uint64_t sequence = 0;  // insertion order, breaks time ties
    EventKind kind = EventKind::Arrival;
    EventPayload payload;
};

class TimeTravel : public std::logic_error {
public:
    explicit TimeTravel(SimTime event_time, SimTime clock)
        : std::logic_error("event scheduled at t=" + std::to_string(event_time) +
                           " before clock t=" + std::to_string(clock)) {}
};

// Dispatch order is (time, sequence) lexicographic: total and deterministic.
class EventQueue {
public:
    void schedule(SimTime clock, SimTime time, EventKind kind, EventPayload payload) {
        if (time < clock) throw TimeTravel(time, clock);
        heap_.push(Event{time, next_sequence_++, kind, std::move(payload)});
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    const Event& top() const { return heap_.top(); }

    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        return e;
    }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.sequence > b.sequence;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_sequence_ = 0;
};

}  // namespace farmsim::engine
