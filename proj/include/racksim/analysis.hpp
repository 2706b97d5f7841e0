#pragma once

#include "racksim/rack.hpp"
#include "racksim/server.hpp"
#include "racksim/workload.hpp"

#include <cstdint>
#include <vector>

namespace racksim {

/// JSQ balanced-condition tail: x[n] = rho^(n*K), the probability a tagged
/// queue holds at least n jobs. Throws unless 0 < rho < 1 and K >= 1.
std::vector<double> jsq_equilibrium(double rho, int K, int n_max);

/// Mean M/M/1 sojourn 1/(mu - lambda) (rates per µs). Throws on overload.
double mm1_sojourn(double lambda, double mu);

/// Setup of an M/G/K/JSQ run: K single-worker servers, exact JSQ with
/// instantaneous counts, no network delay, one class.
struct JsqModel {
    int servers = 8;
    double rho = 0.7;
    IntraPolicy intra;
    std::uint64_t requests_per_seed = 200000;
    double sample_rate_per_us = 0.01;
};

RackConfig jsq_rack(const JsqModel& model, const ServiceDistribution& service);

/// Pooled per-server queue-length histogram over the seeds.
std::vector<std::uint64_t> jsq_queue_histogram(const JsqModel& model, const ServiceDistribution& service,
                                               const std::vector<std::uint64_t>& seeds);

/// Total-variation distance between the queue-length histograms of the two
/// service distributions (which should share a mean) under the same model.
double insensitivity_check(const JsqModel& model, const ServiceDistribution& a, const ServiceDistribution& b,
                           const std::vector<std::uint64_t>& seeds);

} // namespace racksim
