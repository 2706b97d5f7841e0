#include "racksim/rack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace racksim {

namespace {

constexpr ServerId kManyServers = kNoServer - 1;

std::size_t class_key_count(const WorkloadConfig& workload)
{
    const auto tags = workload.class_tags();
    return tags.empty() ? 1 : static_cast<std::size_t>(tags.back()) + 1;
}

Membership make_membership(const RackConfig& c)
{
    if (c.mode == RackMode::Global) {
        return Membership(1, std::vector<std::vector<ServerId>>(c.locality_sets.size(), std::vector<ServerId>{0}));
    }
    std::vector<bool> active(static_cast<std::size_t>(c.servers), true);
    for (ServerId s : c.initially_inactive) {
        active.at(s) = false;
    }
    return Membership(static_cast<std::size_t>(c.servers), c.locality_sets, active);
}

} // namespace

int RackConfig::total_workers() const
{
    std::set<ServerId> inactive(initially_inactive.begin(), initially_inactive.end());
    int total = 0;
    for (ServerId s = 0; s < static_cast<ServerId>(servers); ++s) {
        if (!inactive.contains(s)) {
            total += workers_of(s);
        }
    }
    return total;
}

void RackConfig::validate() const
{
    if (servers < 1) {
        throw std::invalid_argument("servers.count must be >= 1");
    }
    if (workers.empty() || (workers.size() != 1 && workers.size() != static_cast<std::size_t>(servers))) {
        throw std::invalid_argument("servers.workers must have 1 or servers.count entries");
    }
    for (int w : workers) {
        if (w < 1) {
            throw std::invalid_argument("every server needs >= 1 worker");
        }
    }
    for (ServerId s : initially_inactive) {
        if (s >= static_cast<ServerId>(servers)) {
            throw std::invalid_argument("servers.inactive names server " + std::to_string(s) + " outside the rack");
        }
    }
    if (total_workers() < 1) {
        throw std::invalid_argument("no server is active at start");
    }
    intra.validate();
    workload.validate();
    if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
        throw std::invalid_argument("warmup_fraction must be in [0, 1)");
    }
    if (network.client_switch_us < 0.0 || network.switch_server_us < 0.0 || network.switch_latency_us < 0.0) {
        throw std::invalid_argument("network delays must be >= 0");
    }
    if (queue_sample_rate_per_us < 0.0 || timeline_bin_us < 0.0) {
        throw std::invalid_argument("sampling rate and timeline bin must be >= 0");
    }

    // Every locality class a source uses must be declared, and sampling must fit the smallest set.
    std::size_t smallest = static_cast<std::size_t>(servers);
    std::map<int, int> priority_of;
    for (const auto& src : workload.sources) {
        for (const auto& c : src.mix) {
            if (c.locality != kNoLocality) {
                if (c.locality < 0 || static_cast<std::size_t>(c.locality) >= locality_sets.size()) {
                    throw std::invalid_argument("class " + std::to_string(c.class_tag) + " uses undeclared locality " +
                                                std::to_string(c.locality));
                }
                smallest = std::min(smallest, locality_sets[static_cast<std::size_t>(c.locality)].size());
            }
            auto [it, inserted] = priority_of.emplace(c.class_tag, c.priority);
            if (!inserted && it->second != c.priority) {
                throw std::invalid_argument("class " + std::to_string(c.class_tag) + " declared with two priorities");
            }
        }
    }
    for (const auto& set : locality_sets) {
        for (ServerId s : set) {
            if (s >= static_cast<ServerId>(servers)) {
                throw std::invalid_argument("locality set names server " + std::to_string(s) + " outside the rack");
            }
        }
    }

    const auto& policy = switch_config.policy;
    if (mode == RackMode::Switch) {
        if (policy.kind == SchedulingPolicy::Kind::Sampling &&
            (policy.k < 1 || static_cast<std::size_t>(policy.k) > smallest)) {
            throw std::invalid_argument("sampling k=" + std::to_string(policy.k) + " must be in [1, " +
                                        std::to_string(smallest) + "] (smallest eligible set)");
        }
        if (policy.kind == SchedulingPolicy::Kind::Jbsq && policy.jbsq_bound < 1) {
            throw std::invalid_argument("jbsq bound must be >= 1");
        }
        check_pipeline_fit(policy, servers, switch_config.pipeline, switch_config.min_structure);
    }
    if (mode == RackMode::ClientBased && (client_k < 1 || static_cast<std::size_t>(client_k) > smallest)) {
        throw std::invalid_argument("client k must be in [1, smallest eligible set]");
    }
    if (mode == RackMode::ClientBased && client_count < 1) {
        throw std::invalid_argument("client count must be >= 1");
    }
    if (switch_config.table_stages < 1 || switch_config.table_slots_per_stage < 1) {
        throw std::invalid_argument("request table needs >= 1 stage and slot");
    }
    const auto& t = switch_config.tracking;
    if (t.report_loss_prob < 0.0 || t.report_loss_prob > 1.0 || t.double_count_prob < 0.0 || t.double_count_prob > 1.0) {
        throw std::invalid_argument("tracking probabilities must be in [0, 1]");
    }
    for (const auto& f : faults) {
        if (f.at_us < 0.0) {
            throw std::invalid_argument("fault time must be >= 0");
        }
        if (f.kind == Fault::Kind::SwitchFail && !(f.duration_us > 0.0)) {
            throw std::invalid_argument("switch failure needs duration_us > 0");
        }
        if (f.kind != Fault::Kind::SwitchFail) {
            if (mode == RackMode::Global) {
                throw std::invalid_argument("server reconfiguration is not modeled for the global policies");
            }
            if (f.server >= static_cast<ServerId>(servers)) {
                throw std::invalid_argument("fault names server " + std::to_string(f.server) + " outside the rack");
            }
        }
    }
}

RackSimulation::RackSimulation(RackConfig config, double load_fraction, std::uint64_t seed)
    : config_(std::move(config)),
      load_fraction_(load_fraction),
      seed_(seed),
      membership_(make_membership(config_)),
      factory_(config_.workload, config_.clients()),
      arrival_rng_(seed, StreamRole::Arrivals),
      service_rng_(seed, StreamRole::Service),
      mix_rng_(seed, StreamRole::Mix),
      client_rng_(seed, StreamRole::Arrivals, 1),
      sample_rng_(seed, StreamRole::Sampling, 1),
      client_sampling_rng_(seed, StreamRole::Sampling)
{
    config_.validate();
    if (!(load_fraction >= 0.0) || !std::isfinite(load_fraction)) {
        throw std::invalid_argument("load fraction must be finite and >= 0");
    }
    const std::size_t keys = class_key_count(config_.workload);
    SwitchConfig sc = config_.switch_config;
    sc.per_class_counters = config_.intra.multi_queue();
    sc.client_directed = config_.mode == RackMode::ClientBased;
    switch_ = std::make_unique<TorSwitch>(sc, membership_, keys, seed);

    if (config_.mode == RackMode::Global) {
        servers_.push_back(std::make_unique<Server>(0, config_.total_workers(), config_.intra,
                                                    sc.tracking.kind, keys, events_));
    } else {
        for (ServerId s = 0; s < static_cast<ServerId>(config_.servers); ++s) {
            servers_.push_back(std::make_unique<Server>(s, config_.workers_of(s), config_.intra, sc.tracking.kind,
                                                        keys, events_));
        }
    }
    if (config_.mode == RackMode::ClientBased) {
        views_.assign(static_cast<std::size_t>(config_.client_count), ClientView(servers_.size()));
    }
    const int workers = config_.total_workers();
    for (const auto& src : config_.workload.sources) {
        source_rates_.push_back(src.rate(load_fraction_, workers));
    }
    record_.dispatch_per_server.assign(servers_.size(), 0);
    record_.timeline_bin_us = config_.timeline_bin_us;
}

RackSimulation::~RackSimulation() = default;

void RackSimulation::set_server_observer(Server::Observer* observer)
{
    for (auto& s : servers_) {
        s->set_observer(observer);
    }
}

double RackSimulation::offered_rate() const
{
    double r = 0.0;
    for (double x : source_rates_) {
        r += x;
    }
    return r;
}

std::uint32_t RackSimulation::store_packet(const Packet& pkt)
{
    if (!free_packets_.empty()) {
        const std::uint32_t slot = free_packets_.back();
        free_packets_.pop_back();
        packet_pool_[slot] = pkt;
        return slot;
    }
    packet_pool_.push_back(pkt);
    return static_cast<std::uint32_t>(packet_pool_.size() - 1);
}

Packet RackSimulation::take_packet(std::uint64_t slot)
{
    const auto s = static_cast<std::uint32_t>(slot);
    Packet p = packet_pool_[s];
    free_packets_.push_back(s);
    return p;
}

void RackSimulation::start(SimTime arrivals_end, SimTime warmup_end)
{
    if (started_) {
        throw ContractViolation("simulation already started");
    }
    started_ = true;
    arrivals_end_ = arrivals_end;
    warmup_end_ = warmup_end;
    record_.window_start_us = warmup_end;
    record_.window_end_us = arrivals_end;

    for (std::size_t i = 0; i < config_.workload.sources.size(); ++i) {
        const auto& src = config_.workload.sources[i];
        if (!(source_rates_[i] > 0.0)) {
            continue;
        }
        const SimTime t = src.start_us + next_arrival(source_rates_[i], arrival_rng_);
        if (t < std::min(src.stop_us, arrivals_end_)) {
            events_.schedule(t, EventKind::ClientEmit, EventPayload{static_cast<std::uint32_t>(i), 0, 0});
        }
    }
    for (std::size_t i = 0; i < config_.faults.size(); ++i) {
        events_.schedule(config_.faults[i].at_us, EventKind::FaultInject,
                         EventPayload{static_cast<std::uint32_t>(i), 0, 0});
    }
    if (config_.queue_sample_rate_per_us > 0.0 && arrivals_end_ > 0.0) {
        const SimTime t = warmup_end_ + sample_rng_.exponential(1.0 / config_.queue_sample_rate_per_us);
        if (t < arrivals_end_) {
            events_.schedule(t, EventKind::SamplingTick);
        }
    }
    const SimTime ttl = config_.switch_config.stale_ttl_us;
    if (config_.mode != RackMode::ClientBased && ttl > 0.0 && std::isfinite(ttl) && ttl < arrivals_end_) {
        events_.schedule(ttl, EventKind::StaleSweep);
    }
}

void RackSimulation::run_until(SimTime end)
{
    events_.run_until(end, [this](const Event& ev) { handle(ev); });
}

void RackSimulation::drain(SimTime cap)
{
    while (!events_.empty() && events_.next_time() <= cap) {
        handle(events_.pop());
    }
}

MetricsRecord RackSimulation::run(const RunLength& length)
{
    const double rate = offered_rate();
    SimTime total = 0.0;
    if (length.duration_us > 0.0) {
        total = length.duration_us;
    } else if (rate > 0.0) {
        const double window = static_cast<double>(length.measured_requests) / rate;
        total = window / (1.0 - config_.warmup_fraction);
    }
    const SimTime warm = total * config_.warmup_fraction;
    start(total, warm);
    run_until(total);
    drain(total + std::max(20.0 * total, 1e5));
    return metrics();
}

void RackSimulation::handle(const Event& ev)
{
    if (event_trace_) {
        event_trace_(ev);
    }
    switch (ev.kind) {
    case EventKind::ClientEmit: on_client_emit(ev); break;
    case EventKind::PacketArriveAtSwitch:
    case EventKind::ReplyArriveAtSwitch: on_switch_arrival(take_packet(ev.payload.ref)); break;
    case EventKind::PacketArriveAtServer: on_server_arrival(take_packet(ev.payload.ref)); break;
    case EventKind::QuantumExpire:
    case EventKind::RequestComplete: on_worker_event(ev); break;
    case EventKind::ReplyArriveAtClient: on_client_reply(take_packet(ev.payload.ref)); break;
    case EventKind::FaultInject: on_fault(config_.faults.at(ev.payload.target)); break;
    case EventKind::Reconfigure: switch_->purge_server(ev.payload.target); break;
    case EventKind::SamplingTick: on_sample(); break;
    case EventKind::StaleSweep: {
        switch_->sweep_stale(events_.now());
        const SimTime next = events_.now() + config_.switch_config.stale_ttl_us;
        if (next < arrivals_end_) {
            events_.schedule(next, EventKind::StaleSweep);
        }
        break;
    }
    }
}

void RackSimulation::on_client_emit(const Event& ev)
{
    const SimTime now = events_.now();
    const std::size_t src_index = ev.payload.target;
    const auto& src = config_.workload.sources[src_index];
    const int clients = config_.clients();
    const ClientId client = clients > 1 ? client_rng_.uniform_index(static_cast<std::uint32_t>(clients)) : 0;

    request_scratch_.clear();
    factory_.make_request(client, src_index, now, mix_rng_, service_rng_, request_scratch_);

    ServerId directed = kNoServer;
    if (config_.mode == RackMode::ClientBased) {
        const auto eligible = membership_.eligible(request_scratch_.front().locality);
        directed = dispatch_client(views_.at(client), eligible, config_.client_k, client_sampling_rng_);
        if (directed == kNoServer) {
            directed = rendezvous_hash(request_scratch_.front().id, membership_.fallback_domain(request_scratch_.front().locality), seed_);
        }
        if (decision_trace_) {
            decision_trace_(now, request_scratch_.front().id, directed);
        }
    }

    const double gap = config_.workload.inter_packet_gap_us;
    for (const Request& r : request_scratch_) {
        const auto index = static_cast<std::uint32_t>(requests_.size());
        requests_.push_back(r);
        status_.push_back(RequestStatus::Pending);
        delivered_to_.push_back(kNoServer);
        completion_time_.push_back(std::numeric_limits<double>::quiet_NaN());
        if (in_window(r.arrival_time)) {
            ++record_.classes[r.class_tag].arrived_in_window;
        }
        for (std::uint16_t p = 0; p < r.num_packets; ++p) {
            Packet pkt;
            pkt.type = (r.member == 0 && p == 0) ? PacketType::ReqFirst : PacketType::ReqRest;
            pkt.req_id = r.id;
            pkt.class_tag = r.class_tag;
            pkt.locality = r.locality;
            pkt.group_size = r.group_size;
            pkt.member = r.member;
            pkt.member_packets = r.num_packets;
            pkt.seq = p;
            pkt.dst_server = directed;
            pkt.client = r.client;
            pkt.request_index = index;
            const SimTime at = r.arrival_time + p * gap + config_.network.client_switch_us;
            events_.schedule(at, EventKind::PacketArriveAtSwitch, EventPayload{0, 0, store_packet(pkt)});
        }
    }

    const SimTime next = now + next_arrival(source_rates_[src_index], arrival_rng_);
    if (next < std::min(src.stop_us, arrivals_end_)) {
        events_.schedule(next, EventKind::ClientEmit, ev.payload);
    }
}

void RackSimulation::on_switch_arrival(const Packet& pkt)
{
    forward_scratch_.clear();
    switch_->process_packet(pkt, events_.now(), forward_scratch_);
    route(forward_scratch_);
}

void RackSimulation::route(std::vector<Forward>& forwards)
{
    const SimTime now = events_.now();
    const auto& net = config_.network;
    for (const Forward& f : forwards) {
        switch (f.kind) {
        case Forward::Kind::ToServer:
            if (f.packet.type == PacketType::ReqFirst) {
                if (f.packet.dst_server < record_.dispatch_per_server.size()) {
                    ++record_.dispatch_per_server[f.packet.dst_server];
                }
                if (decision_trace_ && config_.mode != RackMode::ClientBased) {
                    decision_trace_(now, f.packet.req_id, f.packet.dst_server);
                }
            }
            events_.schedule(now + net.switch_latency_us + net.switch_server_us, EventKind::PacketArriveAtServer,
                             EventPayload{0, 0, store_packet(f.packet)});
            break;
        case Forward::Kind::ToClient:
            events_.schedule(now + net.switch_latency_us + net.client_switch_us, EventKind::ReplyArriveAtClient,
                             EventPayload{0, 0, store_packet(f.packet)});
            break;
        case Forward::Kind::Drop: mark_dropped(f.packet.request_index); break;
        }
    }
}

void RackSimulation::on_server_arrival(const Packet& pkt)
{
    const ServerId s = pkt.dst_server;
    if (s >= servers_.size() || membership_.failed(s)) {
        mark_dropped(pkt.request_index);
        return;
    }
    const Request& r = requests_[pkt.request_index];
    const std::uint32_t leader = pkt.request_index - r.member;
    ServerId& seen = delivered_to_[leader];
    if (seen == kNoServer) {
        seen = s;
    } else if (seen != s && seen != kManyServers) {
        seen = kManyServers;
        ++affinity_violations_;
    }
    if (delivery_trace_) {
        delivery_trace_(events_.now(), pkt.request_index, s, pkt.type);
    }
    servers_[s]->receive(pkt, r, events_.now());
}

void RackSimulation::on_worker_event(const Event& ev)
{
    reply_scratch_.clear();
    servers_.at(ev.payload.target)->on_worker_event(ev.payload.aux, ev.payload.ref, events_.now(), reply_scratch_);
    for (const Packet& rep : reply_scratch_) {
        events_.schedule(events_.now() + config_.network.switch_server_us, EventKind::ReplyArriveAtSwitch,
                         EventPayload{0, 0, store_packet(rep)});
    }
}

void RackSimulation::on_client_reply(const Packet& pkt)
{
    const SimTime now = events_.now();
    if (config_.mode == RackMode::ClientBased && pkt.load && pkt.client < views_.size() &&
        pkt.src_server < views_[pkt.client].servers()) {
        views_[pkt.client].on_reply(pkt.src_server, *pkt.load);
    }
    const std::uint32_t i = pkt.request_index;
    if (status_[i] != RequestStatus::Pending) {
        return;
    }
    status_[i] = RequestStatus::Completed;
    ++completed_;
    completion_time_[i] = now;
    const Request& r = requests_[i];
    const double latency = now - r.arrival_time;
    auto& cls = record_.classes[r.class_tag];
    if (in_window(r.arrival_time)) {
        cls.latencies.push_back(latency);
    }
    if (in_window(now)) {
        ++cls.completed_in_window;
    }
    if (config_.timeline_bin_us > 0.0) {
        const auto bin = static_cast<std::size_t>(now / config_.timeline_bin_us);
        if (record_.timeline.size() <= bin) {
            record_.timeline.resize(bin + 1);
        }
        ++record_.timeline[bin].completions[r.class_tag];
        record_.timeline[bin].latencies[r.class_tag].push_back(latency);
    }
}

void RackSimulation::on_fault(const Fault& fault)
{
    const SimTime now = events_.now();
    switch (fault.kind) {
    case Fault::Kind::SwitchFail:
        for (std::uint32_t i : switch_->fail(now, now + fault.duration_us)) {
            mark_dropped(i);
        }
        break;
    case Fault::Kind::AddServer: {
        if (membership_.failed(fault.server)) {
            servers_[fault.server]->fail();
        }
        forward_scratch_.clear();
        switch_->add_server(fault.server, now, forward_scratch_);
        route(forward_scratch_);
        break;
    }
    case Fault::Kind::RemoveServer:
        switch_->remove_server(fault.server, fault.planned);
        if (!fault.planned) {
            for (std::uint32_t i : servers_[fault.server]->fail()) {
                mark_dropped(i);
            }
            events_.schedule(now + config_.switch_config.purge_delay_us, EventKind::Reconfigure,
                             EventPayload{fault.server, 0, 0});
        }
        break;
    }
}

void RackSimulation::on_sample()
{
    const SimTime now = events_.now();
    if (in_window(now)) {
        auto& hist = record_.queue_length_histogram;
        for (ServerId s = 0; s < servers_.size(); ++s) {
            if (membership_.failed(s)) {
                continue;
            }
            const std::size_t q = servers_[s]->outstanding();
            if (hist.size() <= q) {
                hist.resize(q + 1, 0);
            }
            ++hist[q];
        }
    }
    const SimTime next = now + sample_rng_.exponential(1.0 / config_.queue_sample_rate_per_us);
    if (next < arrivals_end_) {
        events_.schedule(next, EventKind::SamplingTick);
    }
}

void RackSimulation::mark_dropped(std::uint32_t request_index)
{
    if (request_index < status_.size() && status_[request_index] == RequestStatus::Pending) {
        status_[request_index] = RequestStatus::Dropped;
        ++dropped_;
    }
}

MetricsRecord RackSimulation::metrics() const
{
    MetricsRecord m = record_;
    m.injected = requests_.size();
    m.completed = 0;
    m.dropped = 0;
    m.in_flight = 0;
    for (RequestStatus st : status_) {
        switch (st) {
        case RequestStatus::Completed: ++m.completed; break;
        case RequestStatus::Dropped: ++m.dropped; break;
        case RequestStatus::Pending: ++m.in_flight; break;
        }
    }
    const auto& c = switch_->counters();
    m.table_fallbacks = c.table_fallbacks;
    m.absent_reads = c.absent_reads;
    m.dropped_packets = c.dropped_packets;
    m.reports_lost = c.reports_lost;
    m.affinity_violations = affinity_violations_;
    m.events = events_.dispatched();
    return m;
}

} // namespace racksim
