#pragma once

#include "racksim/server.hpp"

#include <map>
#include <memory>
#include <vector>

namespace racksim::testing {

/// Drives one or more servers from an explicit arrival list.
struct Harness : Server::Observer {
    struct Arrival {
        double time;
        double service;
        ServerId server = 0;
        int class_tag = 0;
        int priority = 0;
    };

    EventQueue events;
    std::vector<std::unique_ptr<Server>> servers;
    std::vector<Request> requests;
    std::vector<double> completion;
    std::vector<double> first_start;
    std::vector<Packet> replies;
    std::vector<std::pair<double, std::uint32_t>> preempts;

    Harness(int n_servers, int workers, const IntraPolicy& policy,
            TrackingMechanism::Kind tracking = TrackingMechanism::Kind::Int1, std::size_t classes = 1)
    {
        for (int s = 0; s < n_servers; ++s) {
            servers.push_back(std::make_unique<Server>(static_cast<ServerId>(s), workers, policy, tracking, classes, events));
            servers.back()->set_observer(this);
        }
    }

    void on_start(ServerId, std::uint32_t idx, std::uint32_t, SimTime t, bool fresh) override
    {
        if (fresh) {
            first_start[idx] = t;
        }
    }
    void on_preempt(ServerId, std::uint32_t idx, SimTime t) override { preempts.emplace_back(t, idx); }

    void add(const Arrival& a)
    {
        Request r;
        r.id = make_request_id(0, requests.size());
        r.arrival_time = a.time;
        r.service_time = a.service;
        r.class_tag = static_cast<std::int16_t>(a.class_tag);
        r.priority = static_cast<std::int16_t>(a.priority);
        r.source = static_cast<std::uint16_t>(a.server);
        requests.push_back(r);
        completion.push_back(-1.0);
        first_start.push_back(-1.0);
        events.schedule(a.time, EventKind::PacketArriveAtServer,
                        EventPayload{a.server, 0, requests.size() - 1});
    }

    void run(double until = 1e12)
    {
        events.run_until(until, [&](const Event& e) {
            if (e.kind == EventKind::PacketArriveAtServer) {
                const auto idx = static_cast<std::uint32_t>(e.payload.ref);
                servers[e.payload.target]->enqueue(idx, requests[idx], events.now());
                return;
            }
            std::vector<Packet> out;
            servers[e.payload.target]->on_worker_event(e.payload.aux, e.payload.ref, events.now(), out);
            for (const auto& p : out) {
                completion[p.request_index] = events.now();
                replies.push_back(p);
            }
        });
    }
};

} // namespace racksim::testing
