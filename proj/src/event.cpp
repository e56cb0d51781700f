#include "farmsim/event.hpp"

namespace farmsim::engine {

const char* event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::Arrival: return "arrival";
        case EventKind::ServiceStart: return "service_start";
        case EventKind::ServiceDone: return "service_done";
        case EventKind::NodeFail: return "node_fail";
        case EventKind::NodeRepair: return "node_repair";
        case EventKind::DiskFail: return "disk_fail";
        case EventKind::DiskRepair: return "disk_repair";
        case EventKind::SiteFail: return "site_fail";
        case EventKind::SiteRepair: return "site_repair";
        case EventKind::FailureDetected: return "failure_detected";
        case EventKind::TakeoverDone: return "takeover_done";
        case EventKind::AddClone: return "add_clone";
        case EventKind::CloneJoined: return "clone_joined";
        case EventKind::AddPartition: return "add_partition";
        case EventKind::BucketMoveDone: return "bucket_move_done";
    }
    return "unknown";
}

}  // namespace farmsim::engine
