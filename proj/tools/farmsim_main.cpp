// farmsim: run, validate and inspect farm scalability scenarios.
//
//   farmsim run <file> [--seed U64] [--seeds N] [--until DURATION] [--out DIR] [--trace]
//   farmsim validate <file>
//   farmsim report <report.json>
//
// Exit codes: 0 success, 1 usage error, 2 parse/validation error, 3 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "farmsim/metrics.hpp"
#include "farmsim/scenario.hpp"
#include "farmsim/simulation.hpp"
#include "farmsim/topology.hpp"

namespace {

namespace fs = std::filesystem;
using namespace farmsim;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// "3600s", "250ms", "90us"
SimTime parse_duration(const std::string& text) {
    std::size_t pos = 0;
    double value = std::stod(text, &pos);
    std::string unit = text.substr(pos);
    if (unit == "us") return static_cast<SimTime>(value);
    if (unit == "ms") return static_cast<SimTime>(value * 1e3);
    if (unit == "s") return static_cast<SimTime>(value * 1e6);
    throw CLI::ValidationError("--until", "expected a duration like 3600s, 250ms or 90us");
}

class FileTrace : public sim::TraceSink {
public:
    explicit FileTrace(const fs::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
    }
    void line(const std::string& text) override { out_ << text << '\n'; }

private:
    std::ofstream out_;
};

struct RunInputs {
    scenario::CompiledScenario compiled;
    topology::Topology topo;
};

RunInputs load_inputs(const std::string& file) {
    auto ast = scenario::parse_scenario(read_file(file));
    auto compiled = scenario::compile_scenario(ast);
    auto topo = topology::build_topology(compiled.geoplex);
    return {std::move(compiled), std::move(topo)};
}

metrics::RunReport run_one(const RunInputs& inputs, std::uint64_t seed, SimTime until,
                           bool trace_requests, const fs::path& trace_path) {
    sim::SimConfig config;
    config.seed = seed;
    config.t_end = until;
    config.defaults = inputs.compiled.defaults;
    config.trace_requests = trace_requests;
    FileTrace trace(trace_path);
    sim::Simulation simulation(inputs.topo, inputs.compiled.workloads, inputs.compiled.events,
                               config, &trace);
    return simulation.run();
}

int cmd_run(const std::string& file, std::optional<std::uint64_t> seed_flag,
            std::optional<std::string> until_flag, unsigned seeds, const std::string& out_dir,
            bool trace_requests) {
    RunInputs inputs;
    try {
        inputs = load_inputs(file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << file << ": " << e.what() << "\n";
        return 2;
    }
    try {
        fs::create_directories(out_dir);
        const std::uint64_t base_seed = seed_flag.value_or(inputs.compiled.defaults.seed);
        const SimTime until =
            until_flag ? parse_duration(*until_flag) : inputs.compiled.horizon_us;

        if (seeds <= 1) {
            auto report = run_one(inputs, base_seed, until, trace_requests,
                                  fs::path(out_dir) / "trace.log");
            write_file(fs::path(out_dir) / "report.csv", metrics::emit_csv(report));
            write_file(fs::path(out_dir) / "report.json", metrics::emit_json(report));
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << metrics::emit_csv(report);
            return 0;
        }

        // Seed sweep: independent runs, one report per seed plus a merged summary.
        std::vector<std::future<metrics::RunReport>> futures;
        for (unsigned i = 0; i < seeds; ++i) {
            const std::uint64_t seed = base_seed + i;
            futures.push_back(std::async(std::launch::async, [&, seed] {
                return run_one(inputs, seed, until, trace_requests,
                               fs::path(out_dir) / ("trace_" + std::to_string(seed) + ".log"));
            }));
        }
        std::vector<metrics::RunReport> reports;
        for (unsigned i = 0; i < seeds; ++i) {
            reports.push_back(futures[i].get());
            const std::uint64_t seed = base_seed + i;
            write_file(fs::path(out_dir) / ("report_" + std::to_string(seed) + ".csv"),
                       metrics::emit_csv(reports.back()));
            write_file(fs::path(out_dir) / ("report_" + std::to_string(seed) + ".json"),
                       metrics::emit_json(reports.back()));
        }
        auto merged = metrics::merge_reports(reports);
        write_file(fs::path(out_dir) / "summary.csv", metrics::emit_csv(merged));
        write_file(fs::path(out_dir) / "summary.json", metrics::emit_json(merged));
        std::cout << metrics::emit_csv(merged);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_validate(const std::string& file) {
    try {
        auto inputs = load_inputs(file);
        // Constructing a simulation resolves workload targets and inject paths.
        sim::SimConfig config;
        config.seed = inputs.compiled.defaults.seed;
        config.t_end = 0;
        config.defaults = inputs.compiled.defaults;
        sim::Simulation simulation(inputs.topo, inputs.compiled.workloads, inputs.compiled.events,
                                   config);
        std::cout << file << ": ok\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << file << ": " << e.what() << "\n";
        return 2;
    }
}

int cmd_report(const std::string& file) {
    try {
        auto json = nlohmann::json::parse(read_file(file));
        std::printf("%-28s %12s %12s %8s %8s %10s %12s %10s %10s %10s %10s\n", "scope",
                    "presented", "in_deadline", "late", "failed", "in_flight", "availability",
                    "p50_us", "p95_us", "p99_us", "write_amp");
        for (const auto& [scope, row] : json.items()) {
            std::printf("%-28s %12llu %12llu %8llu %8llu %10llu %12.6f %10llu %10llu %10llu %10.3f\n",
                        scope.c_str(),
                        static_cast<unsigned long long>(row.value("presented", 0ULL)),
                        static_cast<unsigned long long>(row.value("in_deadline", 0ULL)),
                        static_cast<unsigned long long>(row.value("late", 0ULL)),
                        static_cast<unsigned long long>(row.value("failed", 0ULL)),
                        static_cast<unsigned long long>(row.value("in_flight", 0ULL)),
                        row.value("availability", 0.0),
                        static_cast<unsigned long long>(row.value("p50_us", 0ULL)),
                        static_cast<unsigned long long>(row.value("p95_us", 0ULL)),
                        static_cast<unsigned long long>(row.value("p99_us", 0ULL)),
                        row.value("write_amp", 0.0));
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << file << ": " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic farm/clone/partition/pack scalability simulator"};
    app.require_subcommand(1);

    std::string file;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> until;
    unsigned seeds = 1;
    bool trace = false;

    auto* run = app.add_subcommand("run", "run a scenario and write reports");
    run->add_option("file", file, "scenario file")->required();
    run->add_option("--seed", seed, "PRNG seed (default: scenario defaults)");
    run->add_option("--seeds", seeds, "number of consecutive seeds to sweep");
    run->add_option("--until", until, "simulated horizon, e.g. 3600s");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--trace", trace, "include per-request events in trace.log");

    auto* validate = app.add_subcommand("validate", "parse and validate a scenario");
    validate->add_option("file", file, "scenario file")->required();

    auto* report = app.add_subcommand("report", "render a saved report.json as a table");
    report->add_option("file", file, "report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (run->parsed()) return cmd_run(file, seed, until, seeds, out_dir, trace);
    if (validate->parsed()) return cmd_validate(file);
    return cmd_report(file);
}
