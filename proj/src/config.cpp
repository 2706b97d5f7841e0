#include "racksim/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace racksim {

namespace {

using nlohmann::json;

struct Node {
    const json& j;
    std::string path;

    void expect_object() const
    {
        if (!j.is_object()) {
            throw ConfigError(path + ": expected an object");
        }
    }

    void only(std::initializer_list<const char*> allowed) const
    {
        expect_object();
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [key, value] : j.items()) {
            if (!ok.contains(key)) {
                throw ConfigError(path + "." + key + ": unknown key");
            }
        }
    }

    bool has(const char* key) const { return j.contains(key); }

    Node at(const char* key) const
    {
        if (!j.contains(key)) {
            throw ConfigError(path + "." + key + ": missing required key");
        }
        return Node{j.at(key), path + "." + key};
    }

    Node item(std::size_t i) const { return Node{j.at(i), path + "[" + std::to_string(i) + "]"}; }

    double number() const
    {
        if (!j.is_number()) {
            throw ConfigError(path + ": expected a number");
        }
        return j.get<double>();
    }

    std::int64_t integer() const
    {
        if (!j.is_number_integer()) {
            throw ConfigError(path + ": expected an integer");
        }
        return j.get<std::int64_t>();
    }

    bool boolean() const
    {
        if (!j.is_boolean()) {
            throw ConfigError(path + ": expected true or false");
        }
        return j.get<bool>();
    }

    std::string string() const
    {
        if (!j.is_string()) {
            throw ConfigError(path + ": expected a string");
        }
        return j.get<std::string>();
    }

    std::size_t size() const
    {
        if (!j.is_array()) {
            throw ConfigError(path + ": expected an array");
        }
        return j.size();
    }

    double number_or(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
    std::int64_t integer_or(const char* key, std::int64_t fallback) const
    {
        return has(key) ? at(key).integer() : fallback;
    }
};

double positive(const Node& n)
{
    const double v = n.number();
    if (!(v > 0.0)) {
        throw ConfigError(n.path + ": must be > 0");
    }
    return v;
}

double non_negative(const Node& n)
{
    const double v = n.number();
    if (!(v >= 0.0)) {
        throw ConfigError(n.path + ": must be >= 0");
    }
    return v;
}

double fraction(const Node& n)
{
    const double v = n.number();
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError(n.path + ": must be in [0, 1]");
    }
    return v;
}

int bounded_int(const Node& n, std::int64_t lo, std::int64_t hi)
{
    const auto v = n.integer();
    if (v < lo || v > hi) {
        throw ConfigError(n.path + ": must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
}

std::vector<ServerId> server_list(const Node& n)
{
    std::vector<ServerId> out;
    for (std::size_t i = 0; i < n.size(); ++i) {
        out.push_back(static_cast<ServerId>(bounded_int(n.item(i), 0, 1 << 20)));
    }
    return out;
}

ServiceDistribution parse_service(const Node& n)
{
    n.expect_object();
    const std::string kind = n.at("kind").string();
    ServiceDistribution d;
    if (kind == "exponential") {
        n.only({"kind", "mean_us"});
        d = ServiceDistribution::exponential(positive(n.at("mean_us")));
    } else if (kind == "deterministic") {
        n.only({"kind", "service_us"});
        d = ServiceDistribution::deterministic(positive(n.at("service_us")));
    } else if (kind == "bimodal" || kind == "trimodal" || kind == "discrete") {
        n.only({"kind", "modes"});
        const Node modes = n.at("modes");
        const std::size_t want = kind == "bimodal" ? 2 : kind == "trimodal" ? 3 : 0;
        if (want != 0 && modes.size() != want) {
            throw ConfigError(modes.path + ": " + kind + " needs " + std::to_string(want) + " modes");
        }
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const Node m = modes.item(i);
            m.only({"prob", "service_us"});
            pairs.emplace_back(m.at("prob").number(), m.at("service_us").number());
        }
        try {
            d = ServiceDistribution::discrete(std::move(pairs));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(modes.path + ": " + e.what());
        }
    } else {
        throw ConfigError(n.path + ".kind: unknown service kind '" + kind + "'");
    }
    try {
        d.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(n.path + ": " + e.what());
    }
    return d;
}

ClassSpec parse_class(const Node& n)
{
    n.only({"class", "prob", "priority", "locality", "packets", "dependency", "service"});
    ClassSpec c;
    c.class_tag = bounded_int(n.at("class"), 0, 1023);
    c.probability = n.has("prob") ? fraction(n.at("prob")) : 1.0;
    c.priority = n.has("priority") ? bounded_int(n.at("priority"), -1000, 1000) : 0;
    c.locality = n.has("locality") ? bounded_int(n.at("locality"), 0, 1023) : kNoLocality;
    c.packets = n.has("packets") ? bounded_int(n.at("packets"), 1, 1024) : 1;
    c.dependency = n.has("dependency") ? bounded_int(n.at("dependency"), 1, 1024) : 1;
    c.service = parse_service(n.at("service"));
    return c;
}

void parse_workload(const Node& n, WorkloadConfig& w)
{
    n.only({"clients", "inter_packet_gap_us", "dependency_gap_us", "sources"});
    if (n.has("clients")) {
        w.clients = bounded_int(n.at("clients"), 1, 1 << 24);
    }
    if (n.has("inter_packet_gap_us")) {
        w.inter_packet_gap_us = non_negative(n.at("inter_packet_gap_us"));
    }
    if (n.has("dependency_gap_us")) {
        w.dependency_gap_us = non_negative(n.at("dependency_gap_us"));
    }
    const Node sources = n.at("sources");
    if (sources.size() == 0) {
        throw ConfigError(sources.path + ": needs at least one source");
    }
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const Node s = sources.item(i);
        s.only({"share", "start_us", "stop_us", "mix"});
        TrafficSource src;
        if (s.has("share")) {
            src.share = non_negative(s.at("share"));
        }
        if (s.has("start_us")) {
            src.start_us = non_negative(s.at("start_us"));
        }
        if (s.has("stop_us")) {
            src.stop_us = non_negative(s.at("stop_us"));
        }
        const Node mix = s.at("mix");
        for (std::size_t m = 0; m < mix.size(); ++m) {
            src.mix.push_back(parse_class(mix.item(m)));
        }
        if (src.mix.empty()) {
            throw ConfigError(mix.path + ": needs at least one class");
        }
        double total = 0.0;
        for (const auto& c : src.mix) {
            total += c.probability;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ConfigError(mix.path + ": class probabilities sum to " + std::to_string(total) + ", not 1");
        }
        w.sources.push_back(std::move(src));
    }
}

void parse_servers(const Node& n, RackConfig& rack)
{
    n.only({"count", "workers", "inactive", "locality_sets", "intra"});
    rack.servers = bounded_int(n.at("count"), 1, 4096);
    if (n.has("workers")) {
        const Node w = n.at("workers");
        rack.workers.clear();
        if (w.j.is_array()) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                rack.workers.push_back(bounded_int(w.item(i), 1, 4096));
            }
        } else {
            rack.workers.push_back(bounded_int(w, 1, 4096));
        }
    }
    if (n.has("inactive")) {
        rack.initially_inactive = server_list(n.at("inactive"));
    }
    if (n.has("locality_sets")) {
        const Node sets = n.at("locality_sets");
        for (std::size_t i = 0; i < sets.size(); ++i) {
            rack.locality_sets.push_back(server_list(sets.item(i)));
            if (rack.locality_sets.back().empty()) {
                throw ConfigError(sets.item(i).path + ": locality set is empty");
            }
        }
    }
    if (n.has("intra")) {
        const Node in = n.at("intra");
        in.only({"policy", "slice_us", "preempt_threshold_us", "overhead_us", "priority_preempt_us", "weights"});
        auto& p = rack.intra;
        if (in.has("policy")) {
            try {
                p.kind = parse_intra_kind(in.at("policy").string());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(in.path + ".policy: " + e.what());
            }
        }
        if (in.has("slice_us")) {
            p.slice_us = positive(in.at("slice_us"));
        }
        if (in.has("preempt_threshold_us")) {
            p.preempt_threshold_us = non_negative(in.at("preempt_threshold_us"));
        }
        if (in.has("overhead_us")) {
            p.overhead_us = non_negative(in.at("overhead_us"));
        }
        if (in.has("priority_preempt_us")) {
            p.priority_preempt_us = non_negative(in.at("priority_preempt_us"));
        }
        if (in.has("weights")) {
            const Node w = in.at("weights");
            w.expect_object();
            for (const auto& [key, value] : w.j.items()) {
                int tag = 0;
                try {
                    std::size_t used = 0;
                    tag = std::stoi(key, &used);
                    if (used != key.size()) {
                        throw std::invalid_argument(key);
                    }
                } catch (const std::exception&) {
                    throw ConfigError(w.path + "." + key + ": weight keys must be class tags");
                }
                p.weights[tag] = positive(Node{value, w.path + "." + key});
            }
        }
    }
}

void parse_policy(const Node& n, RackConfig& rack)
{
    n.only({"kind", "k", "bound", "clients"});
    const std::string kind = n.at("kind").string();
    auto& pol = rack.switch_config.policy;
    using K = SchedulingPolicy::Kind;
    if (kind == "random") {
        pol.kind = K::Random;
    } else if (kind == "hash") {
        pol.kind = K::HashRandom;
    } else if (kind == "rr") {
        pol.kind = K::RoundRobin;
    } else if (kind == "shortest") {
        pol.kind = K::Shortest;
    } else if (kind == "sampling") {
        pol.kind = K::Sampling;
    } else if (kind == "jbsq") {
        pol.kind = K::Jbsq;
    } else if (kind == "global-cfcfs" || kind == "global-ps") {
        rack.mode = RackMode::Global;
        rack.intra.kind = kind == "global-cfcfs" ? IntraPolicy::Kind::Cfcfs : IntraPolicy::Kind::Ps;
    } else if (kind == "client") {
        rack.mode = RackMode::ClientBased;
    } else {
        throw ConfigError(n.path + ".kind: unknown policy '" + kind + "'");
    }
    if (n.has("k")) {
        const int k = bounded_int(n.at("k"), 1, 4096);
        pol.k = k;
        rack.client_k = k;
    }
    if (n.has("bound")) {
        pol.jbsq_bound = bounded_int(n.at("bound"), 1, 1 << 20);
    }
    if (n.has("clients")) {
        if (rack.mode != RackMode::ClientBased) {
            throw ConfigError(n.path + ".clients: only valid for the client policy");
        }
        rack.client_count = bounded_int(n.at("clients"), 1, 1 << 24);
    }
}

Fault parse_fault(const Node& n)
{
    n.only({"at_us", "kind", "duration_us", "server", "planned"});
    Fault f;
    f.at_us = non_negative(n.at("at_us"));
    const std::string kind = n.at("kind").string();
    if (kind == "switch-fail") {
        f.kind = Fault::Kind::SwitchFail;
        f.duration_us = positive(n.at("duration_us"));
    } else if (kind == "add-server" || kind == "remove-server") {
        f.kind = kind == "add-server" ? Fault::Kind::AddServer : Fault::Kind::RemoveServer;
        f.server = static_cast<ServerId>(bounded_int(n.at("server"), 0, 1 << 20));
        if (n.has("planned")) {
            f.planned = n.at("planned").boolean();
        }
    } else {
        throw ConfigError(n.path + ".kind: unknown fault '" + kind + "'");
    }
    return f;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& name)
{
    json root;
    try {
        root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(name + ": " + e.what());
    }
    const Node n{root, name};
    n.only({"name", "servers", "network", "workload", "policy", "tracking", "pipeline", "reqtable", "sweep", "faults",
            "queue_sample_rate", "timeline_bin_us", "output"});

    ExperimentConfig cfg;
    cfg.name = n.has("name") ? n.at("name").string() : name;
    RackConfig& rack = cfg.rack;

    parse_servers(n.at("servers"), rack);

    if (n.has("network")) {
        const Node net = n.at("network");
        net.only({"client_switch_us", "switch_server_us", "switch_latency_us"});
        if (net.has("client_switch_us")) {
            rack.network.client_switch_us = non_negative(net.at("client_switch_us"));
        }
        if (net.has("switch_server_us")) {
            rack.network.switch_server_us = non_negative(net.at("switch_server_us"));
        }
        if (net.has("switch_latency_us")) {
            rack.network.switch_latency_us = non_negative(net.at("switch_latency_us"));
        }
    }

    parse_workload(n.at("workload"), rack.workload);
    parse_policy(n.at("policy"), rack);

    if (n.has("tracking")) {
        const Node t = n.at("tracking");
        t.only({"kind", "report_loss_prob", "double_count_prob"});
        auto& tr = rack.switch_config.tracking;
        if (t.has("kind")) {
            try {
                tr.kind = parse_tracking_kind(t.at("kind").string());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(t.path + ".kind: " + e.what());
            }
        }
        if (t.has("report_loss_prob")) {
            tr.report_loss_prob = fraction(t.at("report_loss_prob"));
        }
        if (t.has("double_count_prob")) {
            tr.double_count_prob = fraction(t.at("double_count_prob"));
        }
    }

    if (n.has("pipeline")) {
        const Node p = n.at("pipeline");
        p.only({"max_stages", "comparisons_per_stage", "reads_per_stage", "structure"});
        auto& b = rack.switch_config.pipeline;
        if (p.has("max_stages")) {
            b.max_stages = bounded_int(p.at("max_stages"), 1, 1 << 16);
        }
        if (p.has("comparisons_per_stage")) {
            b.comparisons_per_stage = bounded_int(p.at("comparisons_per_stage"), 1, 1 << 16);
        }
        if (p.has("reads_per_stage")) {
            b.reads_per_stage = bounded_int(p.at("reads_per_stage"), 1, 1 << 16);
        }
        if (p.has("structure")) {
            const std::string s = p.at("structure").string();
            if (s == "tree") {
                rack.switch_config.min_structure = MinStructure::Tree;
            } else if (s == "linear") {
                rack.switch_config.min_structure = MinStructure::Linear;
            } else {
                throw ConfigError(p.path + ".structure: expected tree or linear");
            }
        }
    }

    if (n.has("reqtable")) {
        const Node r = n.at("reqtable");
        r.only({"stages", "slots_per_stage", "ttl_us", "purge_delay_us"});
        auto& sc = rack.switch_config;
        if (r.has("stages")) {
            sc.table_stages = static_cast<std::size_t>(bounded_int(r.at("stages"), 1, 64));
        }
        if (r.has("slots_per_stage")) {
            sc.table_slots_per_stage = static_cast<std::size_t>(bounded_int(r.at("slots_per_stage"), 1, 1 << 24));
        }
        if (r.has("ttl_us")) {
            sc.stale_ttl_us = non_negative(r.at("ttl_us"));
        }
        if (r.has("purge_delay_us")) {
            sc.purge_delay_us = non_negative(r.at("purge_delay_us"));
        }
    }

    const Node sweep = n.at("sweep");
    sweep.only({"loads", "seeds", "requests_per_point", "duration_us", "warmup_fraction"});
    const Node loads = sweep.at("loads");
    for (std::size_t i = 0; i < loads.size(); ++i) {
        cfg.sweep.loads.push_back(non_negative(loads.item(i)));
    }
    if (cfg.sweep.loads.empty()) {
        throw ConfigError(loads.path + ": sweep needs at least one load");
    }
    if (sweep.has("seeds")) {
        const Node seeds = sweep.at("seeds");
        cfg.sweep.seeds.clear();
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            const auto s = seeds.item(i).integer();
            if (s < 0) {
                throw ConfigError(seeds.item(i).path + ": seeds must be >= 0");
            }
            cfg.sweep.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        if (cfg.sweep.seeds.empty()) {
            throw ConfigError(seeds.path + ": needs at least one seed");
        }
    }
    if (sweep.has("requests_per_point")) {
        cfg.sweep.length.measured_requests = static_cast<std::uint64_t>(bounded_int(sweep.at("requests_per_point"), 1, 1 << 30));
    }
    if (sweep.has("duration_us")) {
        cfg.sweep.length.duration_us = positive(sweep.at("duration_us"));
    }
    if (sweep.has("warmup_fraction")) {
        rack.warmup_fraction = fraction(sweep.at("warmup_fraction"));
    }

    if (n.has("faults")) {
        const Node faults = n.at("faults");
        for (std::size_t i = 0; i < faults.size(); ++i) {
            rack.faults.push_back(parse_fault(faults.item(i)));
        }
    }
    if (n.has("queue_sample_rate")) {
        rack.queue_sample_rate_per_us = non_negative(n.at("queue_sample_rate"));
    }
    if (n.has("timeline_bin_us")) {
        rack.timeline_bin_us = non_negative(n.at("timeline_bin_us"));
    }
    if (n.has("output")) {
        cfg.output = n.at("output").string();
    }

    try {
        rack.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(name + ": " + e.what());
    }
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string() + ": cannot open");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.stem().string());
}

std::string config_hash(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace racksim
