#pragma once

#include "racksim/baselines.hpp"
#include "racksim/membership.hpp"
#include "racksim/metrics.hpp"
#include "racksim/server.hpp"
#include "racksim/sim_core.hpp"
#include "racksim/tor_switch.hpp"
#include "racksim/workload.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace racksim {

/// One-way link and switch traversal delays (µs).
struct NetworkConfig {
    double client_switch_us = 1.0;
    double switch_server_us = 1.0;
    double switch_latency_us = 1.0;
};

struct Fault {
    enum class Kind : std::uint8_t { SwitchFail, AddServer, RemoveServer };
    Kind kind = Kind::SwitchFail;
    SimTime at_us = 0.0;
    SimTime duration_us = 0.0;
    ServerId server = 0;
    bool planned = true;
};

/// Who picks the server for a new request.
enum class RackMode : std::uint8_t {
    Switch,      ///< the ToR switch (policy in SwitchConfig)
    Global,      ///< one rack-wide queue over all workers (idealized centralized scheduler)
    ClientBased, ///< each client runs power-of-k over its own reply-fed view
};

struct RackConfig {
    int servers = 8;
    /// Workers per server: one entry applies to all servers, otherwise one per server.
    std::vector<int> workers{8};
    std::vector<std::vector<ServerId>> locality_sets;
    /// Servers that start inactive (brought in later by an AddServer fault).
    std::vector<ServerId> initially_inactive;

    IntraPolicy intra;
    NetworkConfig network;
    SwitchConfig switch_config;
    RackMode mode = RackMode::Switch;
    int client_k = 2;
    int client_count = 100;

    WorkloadConfig workload;
    std::vector<Fault> faults;

    /// Poisson rate (per µs) of queue-length samples; 0 disables sampling.
    double queue_sample_rate_per_us = 0.0;
    /// Timeline bucket width; 0 disables the timeline.
    double timeline_bin_us = 0.0;
    double warmup_fraction = 0.1;

    int workers_of(ServerId s) const { return workers.size() == 1 ? workers.front() : workers.at(s); }
    /// Workers on servers that are active at time 0; this defines rack capacity.
    int total_workers() const;
    int clients() const { return mode == RackMode::ClientBased ? client_count : workload.clients; }
    /// Throws std::invalid_argument with a diagnostic.
    void validate() const;
};

struct RunLength {
    /// Requests to generate inside the measurement window (after warmup).
    std::uint64_t measured_requests = 500000;
    /// When > 0, overrides measured_requests with a fixed simulated duration.
    SimTime duration_us = 0.0;
};

enum class RequestStatus : std::uint8_t { Pending, Completed, Dropped };

/// One simulation run: rack topology, workload at one load fraction, one seed.
class RackSimulation {
public:
    RackSimulation(RackConfig config, double load_fraction, std::uint64_t seed);
    ~RackSimulation();
    RackSimulation(const RackSimulation&) = delete;
    RackSimulation& operator=(const RackSimulation&) = delete;

    /// Whole lifecycle: arrivals until the window closes, then drain.
    MetricsRecord run(const RunLength& length);

    /// Schedules sources, faults and periodic events; arrivals stop at `arrivals_end`.
    void start(SimTime arrivals_end, SimTime warmup_end);
    /// Dispatches every event with time <= end.
    void run_until(SimTime end);
    /// Dispatches until no events remain or the clock would pass `cap`.
    void drain(SimTime cap);

    MetricsRecord metrics() const;

    /// Total offered rate (requests/µs) of all sources at this load.
    double offered_rate() const;
    SimTime now() const noexcept { return events_.now(); }

    const TorSwitch& tor() const noexcept { return *switch_; }
    const Server& server(ServerId s) const { return *servers_.at(s); }
    std::size_t server_count() const noexcept { return servers_.size(); }
    const Membership& membership() const noexcept { return membership_; }
    const std::vector<Request>& requests() const noexcept { return requests_; }
    RequestStatus status(std::size_t index) const { return status_.at(index); }
    /// Distinct servers that received packets of the request (0, 1, or more on violation).
    std::uint64_t affinity_violations() const noexcept { return affinity_violations_; }
    SimTime completion_time(std::size_t index) const { return completion_time_.at(index); }

    /// Called for every dispatched event.
    void set_event_trace(std::function<void(const Event&)> trace) { event_trace_ = std::move(trace); }
    /// Called when a new request is assigned a server: (time, request id, server).
    void set_decision_trace(std::function<void(SimTime, RequestId, ServerId)> trace)
    {
        decision_trace_ = std::move(trace);
    }
    /// Called when a request packet is delivered to a server: (time, request index, server, packet seq).
    void set_delivery_trace(std::function<void(SimTime, std::uint32_t, ServerId, PacketType)> trace)
    {
        delivery_trace_ = std::move(trace);
    }
    void set_server_observer(Server::Observer* observer);

    const RackConfig& config() const noexcept { return config_; }

private:
    void handle(const Event& ev);
    void on_client_emit(const Event& ev);
    void on_switch_arrival(const Packet& pkt);
    void on_server_arrival(const Packet& pkt);
    void on_worker_event(const Event& ev);
    void on_client_reply(const Packet& pkt);
    void on_fault(const Fault& fault);
    void on_sample();
    void route(std::vector<Forward>& forwards);
    void mark_dropped(std::uint32_t request_index);
    std::uint32_t store_packet(const Packet& pkt);
    Packet take_packet(std::uint64_t slot);
    bool in_window(SimTime t) const noexcept { return t >= warmup_end_ && t < arrivals_end_; }

    RackConfig config_;
    double load_fraction_;
    std::uint64_t seed_;
    EventQueue events_;
    Membership membership_;
    std::unique_ptr<TorSwitch> switch_;
    std::vector<std::unique_ptr<Server>> servers_;
    std::vector<ClientView> views_;
    RequestFactory factory_;
    std::vector<double> source_rates_;

    RngStream arrival_rng_;
    RngStream service_rng_;
    RngStream mix_rng_;
    RngStream client_rng_;
    RngStream sample_rng_;
    RngStream client_sampling_rng_;

    std::vector<Request> requests_;
    std::vector<RequestStatus> status_;
    std::vector<ServerId> delivered_to_;
    std::vector<SimTime> completion_time_;
    std::uint64_t affinity_violations_ = 0;

    std::vector<Packet> packet_pool_;
    std::vector<std::uint32_t> free_packets_;
    std::vector<Forward> forward_scratch_;
    std::vector<Packet> reply_scratch_;
    std::vector<Request> request_scratch_;

    SimTime warmup_end_ = 0.0;
    SimTime arrivals_end_ = 0.0;
    bool started_ = false;

    MetricsRecord record_;
    std::uint64_t completed_ = 0;
    std::uint64_t dropped_ = 0;

    std::function<void(const Event&)> event_trace_;
    std::function<void(SimTime, RequestId, ServerId)> decision_trace_;
    std::function<void(SimTime, std::uint32_t, ServerId, PacketType)> delivery_trace_;
};

} // namespace racksim
