#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "farmsim/lifecycle.hpp"
#include "farmsim/simulation.hpp"
#include "farmsim/topology.hpp"
#include "farmsim/workload.hpp"

namespace farmsim::scenario {

// Source position, carried on every AST node. Compares equal to any other
// position so formatting changes do not break AST identity.
struct SourcePos {
    int line = 1;
    int col = 1;
    bool operator==(const SourcePos&) const { return true; }
};

// A dimensioned literal as written: value plus unit token ("rps", "GB",
// "ms", "MB/s"). Units are mandatory on all dimensioned attributes.
struct Quantity {
    double value = 0.0;
    std::string unit;
    bool operator==(const Quantity&) const = default;
};

struct NodeBlock {
    Quantity rate;  // rps
    Quantity disk;  // size unit
    std::optional<std::string> raid;
    SourcePos pos;
    bool operator==(const NodeBlock&) const = default;
};

struct PackBlock {
    std::uint64_t size = 0;
    std::string mode;     // active_active | active_passive
    std::string storage;  // shared_disk | shared_nothing
    SourcePos pos;
    bool operator==(const PackBlock&) const = default;
};

struct StorageAttr {
    std::string variant;  // shared_nothing | shared_disk
    std::optional<Quantity> invalidation;  // time unit, shared_disk only
    bool operator==(const StorageAttr&) const = default;
};

struct ClonesAttr {
    std::uint64_t count = 0;
    bool operator==(const ClonesAttr&) const = default;
};

struct PartitionsAttr {
    std::uint64_t count = 0;
    bool operator==(const PartitionsAttr&) const = default;
};

struct BucketsAttr {
    std::uint64_t count = 0;
    bool operator==(const BucketsAttr&) const = default;
};

struct BalancerAttr {
    std::string policy;  // round_robin | least_queue | sieve
    std::optional<Quantity> detect;
    bool operator==(const BalancerAttr&) const = default;
};

struct ForwardAttr {
    std::string service;
    bool operator==(const ForwardAttr&) const = default;
};

struct StateSizeAttr {
    Quantity size;
    bool operator==(const StateSizeAttr&) const = default;
};

using ServiceAttr = std::variant<StorageAttr, ClonesAttr, PartitionsAttr, BucketsAttr, NodeBlock,
                                 PackBlock, BalancerAttr, ForwardAttr, StateSizeAttr>;

struct ServiceBlock {
    std::string name;
    std::string kind;  // racs | raps
    std::vector<ServiceAttr> attrs;  // declaration order
    SourcePos pos;
    bool operator==(const ServiceBlock&) const = default;
};

struct FarmBlock {
    std::string name;
    std::vector<ServiceBlock> services;
    SourcePos pos;
    bool operator==(const FarmBlock&) const = default;
};

struct GeoplexBlock {
    std::string mode;  // active_active | active_passive
    std::vector<std::string> farms;
    SourcePos pos;
    bool operator==(const GeoplexBlock&) const = default;
};

struct WorkloadBlock {
    std::string name;
    std::vector<std::string> target;  // path segments
    std::string arrival_kind;         // poisson | fixed
    Quantity arrival_value;
    double mix_read = 0.0;
    double mix_write = 0.0;
    Quantity deadline;
    Quantity demand;
    std::optional<Quantity> write_demand;
    std::optional<std::uint64_t> keys;
    std::optional<std::string> key_dist;  // uniform | zipf | sequence
    std::optional<double> zipf_s;
    std::optional<Quantity> start;
    Quantity duration;
    SourcePos pos;
    bool operator==(const WorkloadBlock&) const = default;
};

struct InjectAction {
    Quantity at;
    std::string verb;  // fail | repair | add_clone | add_partition
    std::optional<std::string> target_kind;  // node | disk | site (fail/repair)
    std::vector<std::string> path;
    SourcePos pos;
    bool operator==(const InjectAction&) const = default;
};

struct InjectBlock {
    std::vector<InjectAction> actions;
    SourcePos pos;
    bool operator==(const InjectBlock&) const = default;
};

struct DefaultsBlock {
    std::optional<std::uint64_t> seed;
    std::optional<Quantity> copy_rate;  // speed unit
    std::optional<Quantity> detect;
    std::optional<Quantity> takeover;
    std::optional<Quantity> geoplex_detect;
    std::optional<Quantity> provision;
    std::optional<std::string> failback;  // none | on_repair
    SourcePos pos;
    bool operator==(const DefaultsBlock&) const = default;
};

using Block = std::variant<GeoplexBlock, FarmBlock, WorkloadBlock, InjectBlock, DefaultsBlock>;

struct ScenarioAst {
    std::vector<Block> blocks;
    bool operator==(const ScenarioAst&) const = default;
};

class ParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnknownUnit, DuplicateBlockName };

    ParseError(Kind kind, int line, int col, const std::string& message)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + message),
          kind(kind),
          line(line),
          col(col) {}

    Kind kind;
    int line;
    int col;
};

class CompileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Recursive descent over the grammar in the README. No error recovery: the
// first syntax error aborts with its location.
ScenarioAst parse_scenario(const std::string& text);

// Canonical form: two-space indent, blocks in declaration order, one
// attribute per line. parse(serialize(parse(t))) == parse(t), and canonical
// output is a byte fixpoint.
std::string serialize_scenario(const ScenarioAst& ast);

// Everything a run needs, compiled from the AST.
struct CompiledScenario {
    topology::GeoplexSpec geoplex;
    std::vector<workload::WorkloadSpec> workloads;
    std::vector<lifecycle::ScenarioEvent> events;
    sim::Defaults defaults;
    SimTime horizon_us = 0;  // latest workload window end
};

CompiledScenario compile_scenario(const ScenarioAst& ast);

}  // namespace farmsim::scenario
