#include "racksim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace racksim {

ServiceDistribution ServiceDistribution::exponential(double mean_us)
{
    ServiceDistribution d;
    d.kind_ = Kind::Exponential;
    d.modes_ = {{1.0, mean_us}};
    d.validate();
    return d;
}

ServiceDistribution ServiceDistribution::deterministic(double service_us)
{
    ServiceDistribution d;
    d.kind_ = Kind::Deterministic;
    d.modes_ = {{1.0, service_us}};
    d.validate();
    return d;
}

ServiceDistribution ServiceDistribution::discrete(std::vector<std::pair<double, double>> modes)
{
    ServiceDistribution d;
    d.kind_ = Kind::Discrete;
    d.modes_ = std::move(modes);
    d.validate();
    return d;
}

double ServiceDistribution::mean() const noexcept
{
    double m = 0.0;
    for (const auto& [p, s] : modes_) {
        m += p * s;
    }
    return m;
}

void ServiceDistribution::validate() const
{
    if (modes_.empty()) {
        throw std::invalid_argument("service distribution has no modes");
    }
    double total = 0.0;
    for (const auto& [p, s] : modes_) {
        if (!(p >= 0.0) || !(p <= 1.0)) {
            throw std::invalid_argument("service probability out of [0,1]: " + std::to_string(p));
        }
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument("service time must be > 0: " + std::to_string(s));
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("service probabilities sum to " + std::to_string(total) + ", not 1");
    }
}

std::string ServiceDistribution::describe() const
{
    std::ostringstream os;
    switch (kind_) {
    case Kind::Exponential: os << "Exp(" << modes_[0].second << ")"; break;
    case Kind::Deterministic: os << "Det(" << modes_[0].second << ")"; break;
    case Kind::Discrete:
        os << "Discrete(";
        for (std::size_t i = 0; i < modes_.size(); ++i) {
            os << (i ? ", " : "") << modes_[i].first * 100.0 << "%-" << modes_[i].second;
        }
        os << ")";
        break;
    }
    return os.str();
}

double next_arrival(double rate, RngStream& rng)
{
    if (!(rate > 0.0)) {
        throw std::invalid_argument("arrival rate must be > 0");
    }
    return rng.exponential(1.0 / rate);
}

double draw_service(const ServiceDistribution& dist, RngStream& rng)
{
    switch (dist.kind_) {
    case ServiceDistribution::Kind::Exponential: {
        // A zero draw would violate service_time > 0.
        double s = 0.0;
        while (!(s > 0.0)) {
            s = rng.exponential(dist.modes_[0].second);
        }
        return s;
    }
    case ServiceDistribution::Kind::Deterministic: return dist.modes_[0].second;
    case ServiceDistribution::Kind::Discrete: {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (const auto& [p, s] : dist.modes_) {
            acc += p;
            if (u < acc) {
                return s;
            }
        }
        return dist.modes_.back().second;
    }
    }
    return dist.modes_[0].second;
}

double TrafficSource::mean_service() const
{
    double m = 0.0;
    for (const auto& c : mix) {
        m += c.probability * c.service.mean();
    }
    return m;
}

void WorkloadConfig::validate() const
{
    if (clients < 1) {
        throw std::invalid_argument("workload.clients must be >= 1");
    }
    if (inter_packet_gap_us < 0.0 || dependency_gap_us < 0.0) {
        throw std::invalid_argument("packet/dependency gaps must be >= 0");
    }
    if (sources.empty()) {
        throw std::invalid_argument("workload needs at least one source");
    }
    for (const auto& src : sources) {
        if (!(src.share > 0.0)) {
            throw std::invalid_argument("source share must be > 0");
        }
        if (src.stop_us <= src.start_us) {
            throw std::invalid_argument("source stop_us must exceed start_us");
        }
        if (src.mix.empty()) {
            throw std::invalid_argument("source mix is empty");
        }
        double total = 0.0;
        for (const auto& c : src.mix) {
            c.service.validate();
            if (c.probability < 0.0) {
                throw std::invalid_argument("class probability must be >= 0");
            }
            if (c.packets < 1 || c.packets > 0xffff) {
                throw std::invalid_argument("packets must be in [1, 65535]");
            }
            if (c.dependency < 1 || c.dependency > 0xffff) {
                throw std::invalid_argument("dependency must be in [1, 65535]");
            }
            if (c.class_tag < 0 || c.class_tag > 0x7fff) {
                throw std::invalid_argument("class tag must be in [0, 32767]");
            }
            total += c.probability;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument("class probabilities sum to " + std::to_string(total) + ", not 1");
        }
    }
}

std::vector<int> WorkloadConfig::class_tags() const
{
    std::set<int> tags;
    for (const auto& src : sources) {
        for (const auto& c : src.mix) {
            tags.insert(c.class_tag);
        }
    }
    return {tags.begin(), tags.end()};
}

RequestFactory::RequestFactory(const WorkloadConfig& config, int clients)
    : config_(&config), next_seq_(static_cast<std::size_t>(std::max(clients, 1)), 0)
{
    if (static_cast<std::uint64_t>(clients) >= (std::uint64_t{1} << kClientIdBits)) {
        throw std::invalid_argument("too many clients");
    }
}

const ClassSpec& RequestFactory::pick_class(std::size_t source, RngStream& mix_rng) const
{
    const auto& mix = config_->sources.at(source).mix;
    if (mix.size() == 1) {
        return mix.front();
    }
    const double u = mix_rng.uniform01();
    double acc = 0.0;
    for (const auto& c : mix) {
        acc += c.probability;
        if (u < acc) {
            return c;
        }
    }
    return mix.back();
}

void RequestFactory::make_request(ClientId client, std::size_t source, SimTime now, RngStream& mix_rng,
                                  RngStream& service_rng, std::vector<Request>& out)
{
    const ClassSpec& spec = pick_class(source, mix_rng);
    const RequestId id = make_request_id(client, next_seq_.at(client)++);
    for (int m = 0; m < spec.dependency; ++m) {
        Request r;
        r.id = id;
        r.arrival_time = now + m * config_->dependency_gap_us;
        r.service_time = draw_service(spec.service, service_rng);
        r.client = client;
        r.class_tag = static_cast<std::int16_t>(spec.class_tag);
        r.priority = static_cast<std::int16_t>(spec.priority);
        r.locality = static_cast<std::int16_t>(spec.locality);
        r.num_packets = static_cast<std::uint16_t>(spec.packets);
        r.group_size = static_cast<std::uint16_t>(spec.dependency);
        r.member = static_cast<std::uint16_t>(m);
        r.source = static_cast<std::uint16_t>(source);
        out.push_back(r);
    }
}

const char* to_string(PacketType type) noexcept
{
    switch (type) {
    case PacketType::ReqFirst: return "REQF";
    case PacketType::ReqRest: return "REQR";
    case PacketType::Reply: return "REP";
    case PacketType::ReplyKeep: return "REP-KEEP";
    }
    return "?";
}

std::vector<PacketType> packetize(const Request& request)
{
    std::vector<PacketType> types(request.num_packets, PacketType::ReqRest);
    if (request.member == 0) {
        types.front() = PacketType::ReqFirst;
    }
    return types;
}

} // namespace racksim
