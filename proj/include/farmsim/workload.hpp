#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "farmsim/rng.hpp"
#include "farmsim/types.hpp"

namespace farmsim::workload {

enum class ArrivalKind { poisson, fixed };
enum class KeyDist { uniform, zipf, sequence };

struct WorkloadSpec {
    std::string name;
    // Target: either "farm/service", or a bare service name routed at the
    // geoplex level when a geoplex is declared.
    std::vector<std::string> target;
    ArrivalKind arrival = ArrivalKind::poisson;
    double rate_rps = 0.0;        // poisson
    SimTime interval_us = 0;      // fixed
    double read_fraction = 1.0;
    std::uint64_t key_space = 1 << 20;
    KeyDist key_dist = KeyDist::uniform;
    double zipf_s = 1.0;
    SimTime deadline_us = 0;
    SimTime demand_us = 0;        // node work per read
    SimTime write_demand_us = 0;  // node work per write; defaults to demand_us
    SimTime start_us = 0;
    SimTime duration_us = 0;

    SimTime window_end() const { return start_us + duration_us; }
    SimTime demand_for(RequestKind kind) const {
        return kind == RequestKind::write ? write_demand_us : demand_us;
    }
};

constexpr std::uint64_t kMaxKeySpace = 1 << 20;

// FNV-1a 64 over an arbitrary byte run.
std::uint64_t fnv1a64(const unsigned char* data, std::size_t len);

// FNV-1a 64 over the key's 8-byte little-endian encoding, mod bucket count.
std::uint64_t key_hash(std::uint64_t key);
BucketId key_to_bucket(std::uint64_t key, std::uint32_t bucket_count);

// Exact inverse-CDF sampler for zipf(s) over [0, K): weight(k) = (k+1)^-s.
class ZipfTable {
public:
    ZipfTable(std::uint64_t key_space, double s);
    std::uint64_t sample(double u) const;

private:
    std::vector<double> cumulative_;
};

// Advances one workload's arrival process and draws per-request fields.
// Pure apart from the shared Rng it consumes from.
class Generator {
public:
    explicit Generator(const WorkloadSpec& spec);

    // Next arrival strictly after `t`; nullopt once past the window.
    std::optional<SimTime> next_arrival(SimTime t, Rng& rng) const;

    // Draw kind and key for a request arriving at `t` (consumes rng;
    // `sequence` keys consume nothing and cycle deterministically).
    Request make_request(std::uint64_t id, SimTime t, Rng& rng);

    const WorkloadSpec& spec() const { return spec_; }

private:
    WorkloadSpec spec_;
    std::optional<ZipfTable> zipf_;
    std::uint64_t sequence_counter_ = 0;
};

}  // namespace farmsim::workload
