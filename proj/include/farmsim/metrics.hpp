#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "farmsim/types.hpp"

namespace farmsim::metrics {

enum class Outcome { ServicedInDeadline, ServicedLate, Failed, InFlightAtEnd };

class EmptySample : public std::invalid_argument {
public:
    EmptySample() : std::invalid_argument("percentile of empty sample") {}
};

class NoTraffic : public std::invalid_argument {
public:
    NoTraffic() : std::invalid_argument("no presented requests in scope") {}
};

class NoWrites : public std::invalid_argument {
public:
    NoWrites() : std::invalid_argument("no client writes in scope") {}
};

// Nearest-rank percentile: the value at index ceil(p/100 * n) of the
// ascending sort, 1-based. p in (0, 100].
std::uint64_t percentile_nearest_rank(std::vector<std::uint64_t> sample, double p);

// serviced_in_deadline / presented, rounded half-up to 6 decimal places and
// rendered with exact integer arithmetic ("0.900000").
std::string format_ratio6(std::uint64_t numerator, std::uint64_t denominator);

struct ScopeStats {
    std::uint64_t presented = 0;
    std::uint64_t serviced_in_deadline = 0;
    std::uint64_t serviced_late = 0;
    std::uint64_t failed = 0;
    std::uint64_t in_flight = 0;
    std::uint64_t client_writes = 0;
    std::uint64_t node_writes = 0;
    std::uint64_t p50_us = 0;
    std::uint64_t p95_us = 0;
    std::uint64_t p99_us = 0;

    std::uint64_t serviced() const { return serviced_in_deadline + serviced_late; }
};

struct RunReport {
    SimTime duration_us = 0;
    // Keyed by scope path ("total", farm, farm/service, "geoplex").
    std::map<std::string, ScopeStats> scopes;
    // Sorted end-to-end latencies per service scope; enclosing scopes pool
    // these. Retained so seed-sweep merges can recompute exact percentiles.
    std::map<std::string, std::vector<std::uint64_t>> service_latencies;
    // node path -> busy microseconds
    std::map<std::string, std::uint64_t> node_busy_us;
    // scope path -> 1 s window index -> completions in that window
    std::map<std::string, std::map<std::uint64_t, std::uint64_t>> throughput_windows;
    std::vector<std::string> warnings;

    double availability(const std::string& scope) const;
    double write_amplification(const std::string& scope) const;
    double node_utilization(const std::string& node_path) const;
};

// Per-run accumulator owned by the engine. Latencies are kept per service
// scope only; enclosing scopes pool them at finalize time.
class Accumulator {
public:
    // `service_scopes` must name every service scope up front so empty
    // services still report. Enclosing scopes are derived from the paths.
    void register_scope(const std::string& scope_path);

    void on_presented(const std::vector<std::string>& scopes, RequestKind kind);
    void on_outcome(const std::vector<std::string>& scopes, Outcome outcome, SimTime completion,
                    std::uint64_t latency_us);
    void on_node_write(const std::string& scope_path);
    void add_node_busy(const std::string& node_path, std::uint64_t busy_us);
    void warn(const std::string& message);

    RunReport finalize(SimTime duration_us) const;

private:
    struct ScopeAccum {
        ScopeStats stats;
        std::vector<std::uint64_t> latencies;
        std::map<std::uint64_t, std::uint64_t> windows;
    };
    std::map<std::string, ScopeAccum> scopes_;
    std::map<std::string, std::uint64_t> node_busy_;
    std::vector<std::string> warnings_;
};

// CSV with the exact column set, one row per scope with presented > 0, rows
// sorted by scope path. Emission is deterministic byte-for-byte.
std::string emit_csv(const RunReport& report);

// JSON object keyed by scope path, keys sorted, numbers with at most six
// fractional digits.
std::string emit_json(const RunReport& report);

// Pure fold for seed sweeps: counters add, latencies pool and percentiles
// are recomputed from the pooled samples, node busy times add.
RunReport merge_reports(const std::vector<RunReport>& reports);

}  // namespace farmsim::metrics
