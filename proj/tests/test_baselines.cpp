#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rack_fixtures.hpp"
#include "racksim/baselines.hpp"

#include <numeric>

using namespace racksim;
using racksim::testing::simple_rack;

TEST_CASE("random dispatch with a single server always picks it")
{
    RngStream rng(1, StreamRole::Sampling);
    const std::vector<ServerId> one{5};
    for (int i = 0; i < 100; ++i) {
        CHECK(dispatch_random(one, rng) == 5);
    }
}

TEST_CASE("random dispatch over 8 servers is uniform")
{
    RngStream rng(2, StreamRole::Sampling);
    std::vector<ServerId> all(8);
    std::iota(all.begin(), all.end(), ServerId{0});
    std::vector<int> hits(8, 0);
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        ++hits[dispatch_random(all, rng)];
    }
    for (int h : hits) {
        CHECK(static_cast<double>(h) / n == doctest::Approx(0.125).epsilon(0.2 / 12.5));
    }
}

TEST_CASE("hash dispatch is a pure function of the request id")
{
    std::vector<ServerId> all(8);
    std::iota(all.begin(), all.end(), ServerId{0});
    std::vector<int> hits(8, 0);
    for (RequestId id = 0; id < 80000; ++id) {
        const ServerId s = dispatch_hash(id, all, 7);
        CHECK(s == dispatch_hash(id, all, 7));
        ++hits[s];
    }
    for (int h : hits) {
        CHECK(h == doctest::Approx(10000).epsilon(0.05));
    }
}

TEST_CASE("global scheduler equals one server with all the workers")
{
    RackConfig global = simple_rack(8, 8, SchedulingPolicy::Kind::Random, 50.0, 1.0);
    global.mode = RackMode::Global;
    RackConfig pooled = simple_rack(1, 64, SchedulingPolicy::Kind::Random, 50.0, 1.0);
    RackSimulation a(global, 0.8, 5);
    RackSimulation b(pooled, 0.8, 5);
    const auto ma = a.run(RunLength{30000, 0.0});
    const auto mb = b.run(RunLength{30000, 0.0});
    CHECK(a.server_count() == 1);
    CHECK(a.server(0).workers() == 64);
    CHECK(ma.all_latencies() == mb.all_latencies());
}

TEST_CASE("client view only moves on the client's own dispatches and replies")
{
    ClientView v(4);
    CHECK(v.estimate(2) == 0.0);
    v.on_dispatch(2);
    v.on_dispatch(2);
    CHECK(v.estimate(2) == 2.0);
    v.on_reply(2, 0.0);
    CHECK(v.estimate(2) == 0.0);
    CHECK_THROWS(v.estimate(4));

    RngStream rng(3, StreamRole::Sampling);
    const std::vector<ServerId> two{0, 1};
    v.on_reply(0, 5.0);
    CHECK(dispatch_client(v, two, 2, rng) == 1);
    CHECK(v.estimate(1) == 1.0);
}

TEST_CASE("one client with zero delay decides exactly like switch power-of-two")
{
    auto decisions = [](RackMode mode) {
        RackConfig c = simple_rack(8, 2, SchedulingPolicy::Kind::Sampling);
        c.switch_config.tracking.kind = TrackingMechanism::Kind::Proactive;
        c.mode = mode;
        c.client_count = 1;
        c.client_k = 2;
        RackSimulation sim(c, 0.8, 11);
        std::vector<std::pair<RequestId, ServerId>> out;
        sim.set_decision_trace([&](SimTime, RequestId id, ServerId s) { out.emplace_back(id, s); });
        sim.run(RunLength{20000, 0.0});
        return out;
    };
    const auto sw = decisions(RackMode::Switch);
    const auto cl = decisions(RackMode::ClientBased);
    REQUIRE(sw.size() > 20000);
    CHECK(sw == cl);
}

TEST_CASE("global cFCFS tail is no worse than random per-server cFCFS")
{
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RackConfig per = simple_rack(8, 8, SchedulingPolicy::Kind::Random, 50.0, 1.0);
        RackConfig global = per;
        global.mode = RackMode::Global;
        const auto mp = RackSimulation(per, 0.8, seed).run(RunLength{40000, 0.0});
        const auto mg = RackSimulation(global, 0.8, seed).run(RunLength{40000, 0.0});
        wins += *mg.summary().p99 <= *mp.summary().p99;
    }
    CHECK(wins == 10);
}
