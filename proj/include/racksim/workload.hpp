#pragma once

#include "racksim/rng.hpp"
#include "racksim/sim_core.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace racksim {

using RequestId = std::uint64_t;
using ClientId = std::uint32_t;

constexpr int kNoLocality = -1;
constexpr int kClientIdBits = 24;
constexpr int kLocalSeqBits = 40;

/// Client id in the high bits, client-local sequence number in the low bits.
constexpr RequestId make_request_id(ClientId client, std::uint64_t local_seq) noexcept
{
    return (static_cast<RequestId>(client) << kLocalSeqBits) |
           (local_seq & ((RequestId{1} << kLocalSeqBits) - 1));
}
constexpr ClientId client_of(RequestId id) noexcept
{
    return static_cast<ClientId>(id >> kLocalSeqBits);
}

class ServiceDistribution {
public:
    enum class Kind : std::uint8_t { Exponential, Discrete, Deterministic };

    ServiceDistribution() = default;

    static ServiceDistribution exponential(double mean_us);
    static ServiceDistribution deterministic(double service_us);
    /// Weighted point masses, e.g. Bimodal(90%-50, 10%-500) = {{0.9, 50}, {0.1, 500}}.
    static ServiceDistribution discrete(std::vector<std::pair<double, double>> modes);
    static ServiceDistribution bimodal(double p1, double s1, double p2, double s2)
    {
        return discrete({{p1, s1}, {p2, s2}});
    }
    static ServiceDistribution trimodal(double p1, double s1, double p2, double s2, double p3, double s3)
    {
        return discrete({{p1, s1}, {p2, s2}, {p3, s3}});
    }

    Kind kind() const noexcept { return kind_; }
    double mean() const noexcept;
    /// (probability, service µs) pairs; a single pair for Exponential/Deterministic.
    const std::vector<std::pair<double, double>>& modes() const noexcept { return modes_; }

    /// Throws std::invalid_argument unless probabilities sum to 1 (±1e-9) and all times are > 0.
    void validate() const;

    std::string describe() const;

private:
    Kind kind_ = Kind::Deterministic;
    std::vector<std::pair<double, double>> modes_{{1.0, 1.0}};

    friend double draw_service(const ServiceDistribution&, RngStream&);
};

/// Exponential inter-arrival gap with mean 1/rate (rate in requests per µs).
double next_arrival(double rate, RngStream& rng);

double draw_service(const ServiceDistribution& dist, RngStream& rng);

/// One entry of a traffic source's request mix.
struct ClassSpec {
    int class_tag = 0;
    double probability = 1.0;
    int priority = 0;
    int locality = kNoLocality;
    ServiceDistribution service = ServiceDistribution::exponential(50.0);
    int packets = 1;
    /// Number of requests sharing one request id (dependency group); 1 = independent.
    int dependency = 1;
};

/// An independent Poisson stream of requests.
///
/// At load fraction L, the source injects L * share of rack capacity measured
/// against its own mean service time, so a single source with share 1 yields
/// utilization L.
struct TrafficSource {
    double share = 1.0;
    SimTime start_us = 0.0;
    SimTime stop_us = std::numeric_limits<double>::infinity();
    std::vector<ClassSpec> mix;

    double mean_service() const;
    /// Arrival rate in requests/µs at the given load fraction for a rack with `total_workers`.
    double rate(double load_fraction, int total_workers) const
    {
        return load_fraction * share * total_workers / mean_service();
    }
};

struct WorkloadConfig {
    int clients = 4;
    double inter_packet_gap_us = 1.0;
    double dependency_gap_us = 1.0;
    std::vector<TrafficSource> sources;

    void validate() const;
    /// Class tags referenced by any source, ascending.
    std::vector<int> class_tags() const;
};

struct Request {
    RequestId id = 0;
    SimTime arrival_time = 0.0;
    double service_time = 0.0;
    ClientId client = 0;
    std::int16_t class_tag = 0;
    std::int16_t priority = 0;
    std::int16_t locality = kNoLocality;
    std::uint16_t num_packets = 1;
    std::uint16_t group_size = 1;
    std::uint16_t member = 0;
    std::uint16_t source = 0;
};

/// Builds requests with globally unique ids (per-client sequence counters).
class RequestFactory {
public:
    explicit RequestFactory(const WorkloadConfig& config, int clients);

    /// Appends one request, or every member of a dependency group, to `out`.
    /// Group members share the request id and are spaced by the dependency gap.
    void make_request(ClientId client, std::size_t source, SimTime now, RngStream& mix_rng,
                      RngStream& service_rng, std::vector<Request>& out);

    const ClassSpec& pick_class(std::size_t source, RngStream& mix_rng) const;

private:
    const WorkloadConfig* config_;
    std::vector<std::uint64_t> next_seq_;
};

enum class PacketType : std::uint8_t {
    ReqFirst, ///< REQF: first packet of a request
    ReqRest,  ///< REQR: remaining packets, routed by the affinity table
    Reply,    ///< REP: clears the affinity entry
    /// Reply from a dependency-group member sent before the server has received
    /// the whole group; forwarded to the client without clearing the entry.
    ReplyKeep,
};

const char* to_string(PacketType type) noexcept;

/// Packet types a request emits, in order: REQF then REQR x (P-1). Dependency
/// group members after the first are all REQR so they follow the first member.
std::vector<PacketType> packetize(const Request& request);

} // namespace racksim
