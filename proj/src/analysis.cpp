#include "racksim/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace racksim {

std::vector<double> jsq_equilibrium(double rho, int K, int n_max)
{
    if (!(rho > 0.0) || !(rho < 1.0)) {
        throw std::invalid_argument("jsq_equilibrium needs 0 < rho < 1");
    }
    if (K < 1 || n_max < 0) {
        throw std::invalid_argument("jsq_equilibrium needs K >= 1 and n_max >= 0");
    }
    std::vector<double> x(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) {
        x[static_cast<std::size_t>(n)] = std::pow(rho, static_cast<double>(n) * K);
    }
    return x;
}

double mm1_sojourn(double lambda, double mu)
{
    if (!(mu > 0.0) || !(lambda >= 0.0)) {
        throw std::invalid_argument("mm1_sojourn needs mu > 0 and lambda >= 0");
    }
    if (lambda >= mu) {
        throw std::invalid_argument("mm1_sojourn: lambda >= mu is unstable");
    }
    return 1.0 / (mu - lambda);
}

RackConfig jsq_rack(const JsqModel& model, const ServiceDistribution& service)
{
    RackConfig c;
    c.servers = model.servers;
    c.workers = {1};
    c.intra = model.intra;
    c.network = NetworkConfig{0.0, 0.0, 0.0};
    c.switch_config.policy.kind = SchedulingPolicy::Kind::Shortest;
    c.switch_config.tracking.kind = TrackingMechanism::Kind::Proactive;
    c.switch_config.pipeline.max_stages = 64;
    c.queue_sample_rate_per_us = model.sample_rate_per_us;
    TrafficSource src;
    ClassSpec cls;
    cls.service = service;
    src.mix = {cls};
    c.workload.sources = {src};
    c.workload.clients = 1;
    return c;
}

std::vector<std::uint64_t> jsq_queue_histogram(const JsqModel& model, const ServiceDistribution& service,
                                               const std::vector<std::uint64_t>& seeds)
{
    std::vector<std::uint64_t> pooled;
    const RackConfig config = jsq_rack(model, service);
    for (std::uint64_t seed : seeds) {
        RackSimulation sim(config, model.rho, seed);
        const auto m = sim.run(RunLength{model.requests_per_seed, 0.0});
        const auto& h = m.queue_length_histogram;
        if (pooled.size() < h.size()) {
            pooled.resize(h.size(), 0);
        }
        for (std::size_t i = 0; i < h.size(); ++i) {
            pooled[i] += h[i];
        }
    }
    return pooled;
}

double insensitivity_check(const JsqModel& model, const ServiceDistribution& a, const ServiceDistribution& b,
                           const std::vector<std::uint64_t>& seeds)
{
    if (std::abs(a.mean() - b.mean()) > 1e-6 * a.mean()) {
        throw std::invalid_argument("insensitivity_check needs distributions with equal means");
    }
    return total_variation(jsq_queue_histogram(model, a, seeds), jsq_queue_histogram(model, b, seeds));
}

} // namespace racksim
