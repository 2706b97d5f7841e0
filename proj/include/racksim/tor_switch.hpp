#pragma once

#include "racksim/load_table.hpp"
#include "racksim/membership.hpp"
#include "racksim/packet.hpp"
#include "racksim/req_table.hpp"
#include "racksim/rng.hpp"
#include "racksim/selection.hpp"
#include "racksim/sim_core.hpp"

#include <cstdint>
#include <list>
#include <unordered_map>
#include <vector>

namespace racksim {

struct SwitchConfig {
    SchedulingPolicy policy;
    TrackingMechanism tracking;
    PipelineBudget pipeline;
    MinStructure min_structure = MinStructure::Tree;
    std::size_t table_stages = 4;
    std::size_t table_slots_per_stage = 16384;
    /// Control-plane sweep removes mappings older than this.
    SimTime stale_ttl_us = 100000.0;
    /// Delay before the control plane purges mappings of an unplanned-removed server.
    SimTime purge_delay_us = 1000.0;
    /// Keep one LoadTable counter per class tag (multi-queue servers) instead of one per server.
    bool per_class_counters = false;
    /// Requests arrive already addressed (client-side scheduling); the switch only forwards.
    bool client_directed = false;
};

/// One output of packet processing.
struct Forward {
    enum class Kind : std::uint8_t { ToServer, ToClient, Drop };
    Kind kind = Kind::ToServer;
    Packet packet;
};

struct SwitchCounters {
    std::uint64_t table_fallbacks = 0;   ///< REQF could not be stored; hash dispatch used
    std::uint64_t absent_reads = 0;      ///< REQR found no mapping (lost state)
    std::uint64_t dropped_packets = 0;   ///< dropped while the switch was down
    std::uint64_t held_requests = 0;     ///< JBSQ requests that had to wait at the switch
    std::uint64_t stale_purged = 0;
    std::uint64_t reports_lost = 0;
    std::vector<std::uint64_t> dispatch_per_server;
};

/// Behavioral model of the ToR-switch scheduler.
///
/// REQF: select a server, remember it in the request table, forward.
/// REQR: forward to the remembered server (hash fallback when absent).
/// REP:  clear the mapping, update the load table, forward to the client.
class TorSwitch {
public:
    TorSwitch(const SwitchConfig& config, Membership& membership, std::size_t class_keys, std::uint64_t seed);

    /// Appends the forwarding decisions for `pkt` to `out` (JBSQ may release
    /// several held packets on one reply, or hold a request and emit nothing).
    void process_packet(const Packet& pkt, SimTime now, std::vector<Forward>& out);

    ServerId select_server(const Packet& reqf);

    /// Takes the switch down until `until`; all state is lost. Returns the
    /// request-pool indices of held (JBSQ) requests that were discarded.
    std::vector<std::uint32_t> fail(SimTime now, SimTime until);
    bool is_down(SimTime now) const noexcept { return now < down_until_; }

    void add_server(ServerId s, SimTime now, std::vector<Forward>& out);
    void remove_server(ServerId s, bool planned);
    std::size_t purge_server(ServerId s);
    std::size_t sweep_stale(SimTime now);

    std::size_t key_of(const Packet& pkt) const noexcept
    {
        return config_.per_class_counters ? static_cast<std::size_t>(pkt.class_tag) : 0;
    }

    const SwitchConfig& config() const noexcept { return config_; }
    const ReqTable& table() const noexcept { return table_; }
    ReqTable& table() noexcept { return table_; }
    const LoadTable& loads() const noexcept { return loads_; }
    LoadTable& loads() noexcept { return loads_; }
    const SwitchCounters& counters() const noexcept { return counters_; }
    const Membership& membership() const noexcept { return *membership_; }
    std::size_t held() const noexcept { return held_.size(); }
    const std::vector<std::uint32_t>& jbsq_outstanding() const noexcept { return outstanding_; }

private:
    struct Held {
        Packet first;
        std::vector<Packet> rest;
    };

    void dispatch_first(const Packet& pkt, ServerId chosen, SimTime now, std::vector<Forward>& out);
    void on_reply(const Packet& pkt, std::vector<Forward>& out);
    ServerId select_bounded(const Packet& reqf) const;
    void release_held(SimTime now, std::vector<Forward>& out);
    ServerId fallback_target(const Packet& pkt) const;

    SwitchConfig config_;
    Membership* membership_;
    ReqTable table_;
    LoadTable loads_;
    ServerSelector selector_;
    RngStream sampling_rng_;
    RngStream loss_rng_;
    std::uint64_t hash_seed_;
    SimTime down_until_ = -1.0;
    SwitchCounters counters_;
    std::vector<std::uint32_t> outstanding_;
    std::list<Held> held_;
    std::unordered_map<RequestId, std::list<Held>::iterator> held_index_;
};

} // namespace racksim
