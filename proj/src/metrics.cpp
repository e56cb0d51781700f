#include "farmsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace farmsim::metrics {

std::uint64_t percentile_nearest_rank(std::vector<std::uint64_t> sample, double p) {
    if (sample.empty()) throw EmptySample();
    if (!(p > 0.0) || p > 100.0) throw std::invalid_argument("percentile p must be in (0, 100]");
    std::sort(sample.begin(), sample.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sample.size())));
    if (rank == 0) rank = 1;
    return sample[rank - 1];
}

std::string format_ratio6(std::uint64_t numerator, std::uint64_t denominator) {
    if (denominator == 0) throw NoTraffic();
    // round(num/den * 10^6) half-up, in integers
    const unsigned long long scaled = numerator * 1000000ULL;
    const unsigned long long units = (2 * scaled + denominator) / (2 * denominator);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%llu.%06llu", units / 1000000ULL, units % 1000000ULL);
    return buf;
}

double RunReport::availability(const std::string& scope) const {
    const auto& s = scopes.at(scope);
    if (s.presented == 0) throw NoTraffic();
    return static_cast<double>(s.serviced_in_deadline) / static_cast<double>(s.presented);
}

double RunReport::write_amplification(const std::string& scope) const {
    const auto& s = scopes.at(scope);
    if (s.client_writes == 0) throw NoWrites();
    return static_cast<double>(s.node_writes) / static_cast<double>(s.client_writes);
}

double RunReport::node_utilization(const std::string& node_path) const {
    if (duration_us == 0) return 0.0;
    return static_cast<double>(node_busy_us.at(node_path)) / static_cast<double>(duration_us);
}

void Accumulator::register_scope(const std::string& scope_path) {
    scopes_[scope_path];
}

void Accumulator::on_presented(const std::vector<std::string>& scopes, RequestKind kind) {
    for (const auto& path : scopes) {
        auto& acc = scopes_[path];
        acc.stats.presented++;
        if (kind == RequestKind::write) acc.stats.client_writes++;
    }
}

void Accumulator::on_outcome(const std::vector<std::string>& scopes, Outcome outcome,
                             SimTime completion, std::uint64_t latency_us) {
    for (const auto& path : scopes) {
        auto& acc = scopes_[path];
        switch (outcome) {
            case Outcome::ServicedInDeadline: acc.stats.serviced_in_deadline++; break;
            case Outcome::ServicedLate: acc.stats.serviced_late++; break;
            case Outcome::Failed: acc.stats.failed++; break;
            case Outcome::InFlightAtEnd: acc.stats.in_flight++; break;
        }
        if (outcome == Outcome::ServicedInDeadline || outcome == Outcome::ServicedLate) {
            acc.latencies.push_back(latency_us);
            acc.windows[completion / kMicrosPerSecond]++;
        }
    }
}

void Accumulator::on_node_write(const std::string& scope_path) {
    scopes_[scope_path].stats.node_writes++;
}

void Accumulator::add_node_busy(const std::string& node_path, std::uint64_t busy_us) {
    node_busy_[node_path] += busy_us;
}

void Accumulator::warn(const std::string& message) { warnings_.push_back(message); }

namespace {

void fill_percentiles(ScopeStats& stats, std::vector<std::uint64_t>& latencies) {
    if (latencies.empty()) return;
    std::sort(latencies.begin(), latencies.end());
    auto at = [&](double p) {
        auto rank = static_cast<std::size_t>(
            std::ceil(p / 100.0 * static_cast<double>(latencies.size())));
        return latencies[std::max<std::size_t>(rank, 1) - 1];
    };
    stats.p50_us = at(50.0);
    stats.p95_us = at(95.0);
    stats.p99_us = at(99.0);
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

RunReport Accumulator::finalize(SimTime duration_us) const {
    RunReport report;
    report.duration_us = duration_us;
    report.node_busy_us = node_busy_;
    report.warnings = warnings_;

    for (const auto& [path, acc] : scopes_) {
        report.scopes[path] = acc.stats;
        auto sorted = acc.latencies;
        fill_percentiles(report.scopes[path], sorted);
        report.service_latencies[path] = std::move(sorted);
        report.throughput_windows[path] = acc.windows;
    }
    return report;
}

std::string emit_csv(const RunReport& report) {
    std::string out = "scope,presented,in_deadline,late,failed,in_flight,availability,p50_us,p95_us,p99_us,write_amp\n";
    for (const auto& [path, s] : report.scopes) {
        if (s.presented == 0) continue;
        out += path;
        char buf[256];
        std::snprintf(buf, sizeof(buf), ",%llu,%llu,%llu,%llu,%llu,",
                      static_cast<unsigned long long>(s.presented),
                      static_cast<unsigned long long>(s.serviced_in_deadline),
                      static_cast<unsigned long long>(s.serviced_late),
                      static_cast<unsigned long long>(s.failed),
                      static_cast<unsigned long long>(s.in_flight));
        out += buf;
        out += format_ratio6(s.serviced_in_deadline, s.presented);
        std::snprintf(buf, sizeof(buf), ",%llu,%llu,%llu,",
                      static_cast<unsigned long long>(s.p50_us),
                      static_cast<unsigned long long>(s.p95_us),
                      static_cast<unsigned long long>(s.p99_us));
        out += buf;
        out += s.client_writes == 0 ? "0.000000" : format_ratio6(s.node_writes, s.client_writes);
        out += '\n';
    }
    return out;
}

std::string emit_json(const RunReport& report) {
    nlohmann::json root = nlohmann::json::object();
    for (const auto& [path, s] : report.scopes) {
        if (s.presented == 0) continue;
        nlohmann::json row = nlohmann::json::object();
        row["presented"] = s.presented;
        row["in_deadline"] = s.serviced_in_deadline;
        row["late"] = s.serviced_late;
        row["failed"] = s.failed;
        row["in_flight"] = s.in_flight;
        row["availability"] =
            round6(static_cast<double>(s.serviced_in_deadline) / static_cast<double>(s.presented));
        row["p50_us"] = s.p50_us;
        row["p95_us"] = s.p95_us;
        row["p99_us"] = s.p99_us;
        row["write_amp"] = s.client_writes == 0
                               ? 0.0
                               : round6(static_cast<double>(s.node_writes) /
                                        static_cast<double>(s.client_writes));
        root[path] = std::move(row);
    }
    return root.dump(2) + "\n";
}

RunReport merge_reports(const std::vector<RunReport>& reports) {
    RunReport merged;
    for (const auto& r : reports) {
        merged.duration_us = std::max(merged.duration_us, r.duration_us);
        for (const auto& [path, s] : r.scopes) {
            auto& m = merged.scopes[path];
            m.presented += s.presented;
            m.serviced_in_deadline += s.serviced_in_deadline;
            m.serviced_late += s.serviced_late;
            m.failed += s.failed;
            m.in_flight += s.in_flight;
            m.client_writes += s.client_writes;
            m.node_writes += s.node_writes;
        }
        for (const auto& [path, lats] : r.service_latencies) {
            auto& pool = merged.service_latencies[path];
            pool.insert(pool.end(), lats.begin(), lats.end());
        }
        for (const auto& [path, busy] : r.node_busy_us) merged.node_busy_us[path] += busy;
        for (const auto& [path, windows] : r.throughput_windows) {
            auto& m = merged.throughput_windows[path];
            for (const auto& [w, n] : windows) m[w] += n;
        }
        merged.warnings.insert(merged.warnings.end(), r.warnings.begin(), r.warnings.end());
    }
    for (auto& [path, lats] : merged.service_latencies) {
        fill_percentiles(merged.scopes[path], lats);
    }
    return merged;
}

}  // namespace farmsim::metrics
