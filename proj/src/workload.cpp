#include "farmsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace farmsim::workload {

std::uint64_t fnv1a64(const unsigned char* data, std::size_t len) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t key_hash(std::uint64_t key) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((key >> (8 * i)) & 0xFF);
    return fnv1a64(bytes, 8);
}

BucketId key_to_bucket(std::uint64_t key, std::uint32_t bucket_count) {
    return static_cast<BucketId>(key_hash(key) % bucket_count);
}

ZipfTable::ZipfTable(std::uint64_t key_space, double s) {
    if (key_space == 0 || key_space > kMaxKeySpace) {
        throw std::invalid_argument("zipf key space must be in [1, 2^20]");
    }
    if (!(s > 0.0)) throw std::invalid_argument("zipf exponent must be > 0");
    cumulative_.resize(key_space);
    double total = 0.0;
    for (std::uint64_t k = 0; k < key_space; ++k) {
        total += std::pow(static_cast<double>(k + 1), -s);
        cumulative_[k] = total;
    }
    for (auto& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
}

std::uint64_t ZipfTable::sample(double u) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::uint64_t>(it - cumulative_.begin());
}

Generator::Generator(const WorkloadSpec& spec) : spec_(spec) {
    if (spec_.write_demand_us == 0) spec_.write_demand_us = spec_.demand_us;
    if (spec_.key_dist == KeyDist::zipf) zipf_.emplace(spec_.key_space, spec_.zipf_s);
}

std::optional<SimTime> Generator::next_arrival(SimTime t, Rng& rng) const {
    SimTime next;
    if (spec_.arrival == ArrivalKind::fixed) {
        next = t + spec_.interval_us;
    } else {
        next = t + rng.exponential_us(spec_.rate_rps);
    }
    if (next >= spec_.window_end()) return std::nullopt;
    return next;
}

Request Generator::make_request(std::uint64_t id, SimTime t, Rng& rng) {
    Request req;
    req.id = id;
    req.arrival = t;
    req.deadline_abs = t + spec_.deadline_us;
    req.kind = rng.uniform01() < spec_.read_fraction ? RequestKind::read : RequestKind::write;
    switch (spec_.key_dist) {
        case KeyDist::uniform: {
            double u = rng.uniform01();
            auto key = static_cast<std::uint64_t>(u * static_cast<double>(spec_.key_space));
            req.key = std::min(key, spec_.key_space - 1);
            break;
        }
        case KeyDist::zipf:
            req.key = zipf_->sample(rng.uniform01());
            break;
        case KeyDist::sequence:
            req.key = sequence_counter_++ % spec_.key_space;
            break;
    }
    return req;
}

}  // namespace farmsim::workload
