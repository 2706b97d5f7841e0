#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rack_fixtures.hpp"
#include "racksim/analysis.hpp"
#include "racksim/metrics.hpp"

#include <cmath>
#include <numeric>

using namespace racksim;

TEST_CASE("nearest-rank quantile examples")
{
    const std::vector<double> one{10.0};
    CHECK(*quantile(one, 0.99) == 10.0);

    std::vector<double> hundred(100);
    std::iota(hundred.begin(), hundred.end(), 1.0);
    CHECK(*quantile(hundred, 0.99) == 99.0);
    CHECK(*quantile(hundred, 0.5) == 50.0);
    CHECK(*quantile(hundred, 0.999) == 100.0);
    CHECK(*quantile(hundred, 0.001) == 1.0);

    CHECK_FALSE(quantile(std::vector<double>{}, 0.5).has_value());
}

TEST_CASE("quantile is order-independent and monotone in p")
{
    RngStream rng(4, StreamRole::Service);
    std::vector<double> xs(5000);
    for (double& x : xs) {
        x = rng.exponential(50.0);
    }
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    double last = 0.0;
    for (double p = 0.01; p < 1.0; p += 0.01) {
        const double q = *quantile(xs, p);
        CHECK(q == *quantile_sorted(sorted, p));
        CHECK(q >= last);
        last = q;
    }
}

TEST_CASE("Exp(50) p99 matches the closed form")
{
    RngStream rng(5, StreamRole::Service);
    std::vector<double> xs(1000000);
    for (double& x : xs) {
        x = rng.exponential(50.0);
    }
    CHECK(*quantile(xs, 0.99) == doctest::Approx(50.0 * std::log(100.0)).epsilon(3.0 / 230.3));
}

TEST_CASE("summary reports count, mean and tails")
{
    std::vector<double> xs(1000);
    std::iota(xs.begin(), xs.end(), 1.0);
    const auto s = summarize(xs);
    CHECK(s.count == 1000);
    CHECK(s.mean == doctest::Approx(500.5));
    CHECK(*s.p50 == 500.0);
    CHECK(*s.p99 == 990.0);
    CHECK(*s.p999 == 999.0);
    const auto e = summarize({});
    CHECK(e.count == 0);
    CHECK_FALSE(e.p99.has_value());
}

TEST_CASE("jsq_equilibrium spot values")
{
    const auto x = jsq_equilibrium(0.5, 8, 3);
    CHECK(x[0] == 1.0);
    CHECK(x[1] == 0.00390625);
    CHECK(jsq_equilibrium(0.9, 2, 2)[2] == doctest::Approx(0.6561).epsilon(1e-15));
    const auto single = jsq_equilibrium(0.3, 1, 5);
    for (int n = 0; n <= 5; ++n) {
        CHECK(single[static_cast<std::size_t>(n)] == doctest::Approx(std::pow(0.3, n)));
    }
    for (std::size_t n = 1; n < x.size(); ++n) {
        CHECK(x[n] < x[n - 1]);
    }
    CHECK_THROWS_AS(jsq_equilibrium(1.0, 8, 3), std::invalid_argument);
    CHECK_THROWS_AS(jsq_equilibrium(0.0, 8, 3), std::invalid_argument);
    CHECK_THROWS_AS(jsq_equilibrium(0.5, 0, 3), std::invalid_argument);
}

TEST_CASE("mm1_sojourn closed form")
{
    CHECK(mm1_sojourn(0.01, 0.02) == doctest::Approx(100.0));
    CHECK(mm1_sojourn(0.015, 0.02) == doctest::Approx(200.0));
    CHECK(mm1_sojourn(1e-12, 0.02) == doctest::Approx(50.0));
    CHECK_THROWS_AS(mm1_sojourn(0.02, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(mm1_sojourn(0.03, 0.02), std::invalid_argument);
}

TEST_CASE("simulated M/M/1 mean sojourn near the closed form")
{
    for (double rho : {0.5, 0.7}) {
        RackSimulation sim(racksim::testing::simple_rack(1, 1, SchedulingPolicy::Kind::Random), rho, 21);
        const auto m = sim.run(RunLength{300000, 0.0});
        CHECK(m.summary().mean == doctest::Approx(mm1_sojourn(rho / 50.0, 1.0 / 50.0)).epsilon(0.05));
    }
}

TEST_CASE("histogram helpers")
{
    const std::vector<std::uint64_t> a{2, 2, 0, 0};
    const std::vector<std::uint64_t> b{0, 2, 2};
    CHECK(normalize(a) == std::vector<double>{0.5, 0.5, 0.0, 0.0});
    CHECK(total_variation(a, b) == doctest::Approx(0.5));
    CHECK(total_variation(a, a) == 0.0);
    CHECK(tail_fraction(b, 1) == 1.0);
    CHECK(tail_fraction(b, 2) == 0.5);
    CHECK(tail_fraction(b, 7) == 0.0);
}

TEST_CASE("insensitivity check: identical laws differ only by sampling noise")
{
    JsqModel model;
    model.intra.kind = IntraPolicy::Kind::Ps;
    model.intra.slice_us = 5.0;
    model.requests_per_seed = 100000;
    const auto exp = ServiceDistribution::exponential(50.0);
    CHECK(insensitivity_check(model, exp, exp, {1, 2}) == 0.0);
    const auto h1 = jsq_queue_histogram(model, exp, {1, 2});
    const auto h2 = jsq_queue_histogram(model, exp, {3, 4});
    CHECK(total_variation(h1, h2) < 0.02);
    CHECK_THROWS_AS(insensitivity_check(model, exp, ServiceDistribution::exponential(40.0), {1}),
                    std::invalid_argument);
}

TEST_CASE("offered and achieved throughput")
{
    RackSimulation sim(racksim::testing::simple_rack(4, 4, SchedulingPolicy::Kind::Sampling), 0.6, 3);
    const auto m = sim.run(RunLength{100000, 0.0});
    const double offered = 0.6 * 16 / 50.0 * 1e6;
    CHECK(m.offered_rps() == doctest::Approx(offered).epsilon(0.02));
    CHECK(m.achieved_rps() == doctest::Approx(m.offered_rps()).epsilon(0.01));
}
