#include <charconv>

#include "farmsim/scenario.hpp"

namespace farmsim::scenario {

namespace {

std::string fmt_num(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string fmt_quantity(const Quantity& q) { return fmt_num(q.value) + " " + q.unit; }

std::string fmt_path(const std::vector<std::string>& segments) {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out += '/';
        out += '"' + segments[i] + '"';
    }
    return out;
}

class Writer {
public:
    void open(const std::string& header) {
        line(header + " {");
        indent_++;
    }
    void close() {
        indent_--;
        line("}");
    }
    void line(const std::string& text) {
        for (int i = 0; i < indent_; ++i) out_ += "  ";
        out_ += text;
        out_ += '\n';
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
    int indent_ = 0;
};

void emit_node(Writer& w, const NodeBlock& node) {
    w.open("node");
    w.line("rate " + fmt_quantity(node.rate));
    w.line("disk " + fmt_quantity(node.disk));
    if (node.raid) w.line("raid " + *node.raid);
    w.close();
}

void emit_service(Writer& w, const ServiceBlock& svc) {
    w.open("service \"" + svc.name + "\"");
    w.line("kind " + svc.kind);
    for (const auto& attr : svc.attrs) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, StorageAttr>) {
                    std::string text = "storage " + a.variant;
                    if (a.invalidation) text += " invalidation " + fmt_quantity(*a.invalidation);
                    w.line(text);
                } else if constexpr (std::is_same_v<T, ClonesAttr>) {
                    w.line("clones " + std::to_string(a.count));
                } else if constexpr (std::is_same_v<T, PartitionsAttr>) {
                    w.line("partitions " + std::to_string(a.count));
                } else if constexpr (std::is_same_v<T, BucketsAttr>) {
                    w.line("buckets " + std::to_string(a.count));
                } else if constexpr (std::is_same_v<T, NodeBlock>) {
                    emit_node(w, a);
                } else if constexpr (std::is_same_v<T, PackBlock>) {
                    w.open("pack");
                    w.line("size " + std::to_string(a.size));
                    w.line("mode " + a.mode);
                    w.line("storage " + a.storage);
                    w.close();
                } else if constexpr (std::is_same_v<T, BalancerAttr>) {
                    std::string text = "balancer " + a.policy;
                    if (a.detect) text += " detect " + fmt_quantity(*a.detect);
                    w.line(text);
                } else if constexpr (std::is_same_v<T, ForwardAttr>) {
                    w.line("forward \"" + a.service + "\"");
                } else if constexpr (std::is_same_v<T, StateSizeAttr>) {
                    w.line("state_size " + fmt_quantity(a.size));
                }
            },
            attr);
    }
    w.close();
}

}  // namespace

std::string serialize_scenario(const ScenarioAst& ast) {
    Writer w;
    for (const auto& block : ast.blocks) {
        std::visit(
            [&](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, GeoplexBlock>) {
                    w.open("geoplex");
                    w.line("mode " + b.mode);
                    std::string farms = "farms";
                    for (const auto& f : b.farms) farms += " \"" + f + "\"";
                    w.line(farms);
                    w.close();
                } else if constexpr (std::is_same_v<T, FarmBlock>) {
                    w.open("farm \"" + b.name + "\"");
                    for (const auto& svc : b.services) emit_service(w, svc);
                    w.close();
                } else if constexpr (std::is_same_v<T, WorkloadBlock>) {
                    w.open("workload \"" + b.name + "\"");
                    w.line("target " + fmt_path(b.target));
                    w.line("arrival " + b.arrival_kind + " " + fmt_quantity(b.arrival_value));
                    w.line("mix read " + fmt_num(b.mix_read) + " write " + fmt_num(b.mix_write));
                    w.line("deadline " + fmt_quantity(b.deadline));
                    w.line("demand " + fmt_quantity(b.demand));
                    if (b.write_demand) w.line("write_demand " + fmt_quantity(*b.write_demand));
                    if (b.keys) w.line("keys " + std::to_string(*b.keys));
                    if (b.key_dist) {
                        std::string text = "key_dist " + *b.key_dist;
                        if (b.zipf_s) text += " " + fmt_num(*b.zipf_s);
                        w.line(text);
                    }
                    if (b.start) w.line("start " + fmt_quantity(*b.start));
                    w.line("duration " + fmt_quantity(b.duration));
                    w.close();
                } else if constexpr (std::is_same_v<T, InjectBlock>) {
                    w.open("inject");
                    for (const auto& a : b.actions) {
                        std::string text = "at " + fmt_quantity(a.at) + " : " + a.verb;
                        if (a.target_kind) text += " " + *a.target_kind;
                        text += " " + fmt_path(a.path);
                        w.line(text);
                    }
                    w.close();
                } else if constexpr (std::is_same_v<T, DefaultsBlock>) {
                    w.open("defaults");
                    if (b.seed) w.line("seed " + std::to_string(*b.seed));
                    if (b.copy_rate) w.line("copy_rate " + fmt_quantity(*b.copy_rate));
                    if (b.detect) w.line("detect " + fmt_quantity(*b.detect));
                    if (b.takeover) w.line("takeover " + fmt_quantity(*b.takeover));
                    if (b.geoplex_detect) {
                        w.line("geoplex_detect " + fmt_quantity(*b.geoplex_detect));
                    }
                    if (b.provision) w.line("provision " + fmt_quantity(*b.provision));
                    if (b.failback) w.line("failback " + *b.failback);
                    w.close();
                }
            },
            block);
    }
    return w.take();
}

}  // namespace farmsim::scenario
