#pragma once

#include "racksim/workload.hpp"

#include <cstdint>
#include <limits>
#include <optional>

namespace racksim {

using ServerId = std::uint32_t;
constexpr ServerId kNoServer = std::numeric_limits<ServerId>::max();

/// One packet crossing the ToR switch, carrying the scheduling header
/// (TYPE, REQ_ID, LOAD) plus the fields the simulator needs to route it.
struct Packet {
    PacketType type = PacketType::ReqFirst;
    RequestId req_id = 0;
    std::int16_t class_tag = 0;
    std::int16_t locality = kNoLocality;
    /// Requests to expect under this id (dependency groups); 1 otherwise.
    std::uint16_t group_size = 1;
    std::uint16_t member = 0;
    std::uint16_t member_packets = 1;
    std::uint16_t seq = 0;
    /// LOAD field; present iff the packet is a reply.
    std::optional<double> load;
    ServerId src_server = kNoServer;
    /// Set by the switch on requests, or by the client under client-side scheduling.
    ServerId dst_server = kNoServer;
    ClientId client = 0;
    /// Simulator bookkeeping: index of the originating request in the run's request pool.
    std::uint32_t request_index = 0;

    bool is_request() const noexcept { return type == PacketType::ReqFirst || type == PacketType::ReqRest; }
    bool is_reply() const noexcept { return !is_request(); }
};

} // namespace racksim
