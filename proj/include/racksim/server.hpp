#pragma once

#include "racksim/load_table.hpp"
#include "racksim/packet.hpp"
#include "racksim/sim_core.hpp"
#include "racksim/workload.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace racksim {

struct IntraPolicy {
    enum class Kind : std::uint8_t {
        Cfcfs,           ///< one FIFO queue feeding all workers
        Ps,              ///< round-robin time slicing across one queue
        MultiQueueCfcfs, ///< a FIFO per class tag; earliest head wins
        MultiQueuePs,    ///< time slicing with a queue per class tag
        StrictPriority,  ///< a queue per class tag, highest priority first, preemptive
        WeightedFair,    ///< a queue per class tag, slice-granular weighted fair queueing
    };

    Kind kind = Kind::Cfcfs;
    double slice_us = 25.0;
    /// cFCFS-family preemption after this much continuous service; 0 disables.
    double preempt_threshold_us = 0.0;
    /// Cost of switching a worker from a preempted request to a different one.
    double overhead_us = 0.5;
    /// Delay before a high-priority request starts on a preempted worker.
    double priority_preempt_us = 5.0;
    /// WeightedFair weights by class tag; missing tags weigh 1.
    std::map<int, double> weights;

    bool multi_queue() const noexcept
    {
        return kind != Kind::Cfcfs && kind != Kind::Ps;
    }
    bool sliced() const noexcept
    {
        return kind == Kind::Ps || kind == Kind::MultiQueuePs || kind == Kind::WeightedFair;
    }
    void validate() const;
};

const char* to_string(IntraPolicy::Kind kind) noexcept;
IntraPolicy::Kind parse_intra_kind(const std::string& name);

/// A multi-core server: request reassembly, per-key queues, W identical workers
/// and the intra-server scheduler. Worker timers are events in the shared queue:
/// kind QuantumExpire/RequestComplete, payload {server, worker, generation}.
class Server {
public:
    Server(ServerId id, int workers, const IntraPolicy& policy, TrackingMechanism::Kind tracking,
           std::size_t class_keys, EventQueue& events);

    /// Delivers a request packet. Once every packet of a request (member) has
    /// arrived the request is enqueued.
    void receive(const Packet& pkt, const Request& req, SimTime now);

    /// Queues a fully received request and dispatches idle workers.
    void enqueue(std::uint32_t request_index, const Request& req, SimTime now);

    /// Handles a worker timer. Stale generations are ignored. Replies for
    /// completed requests are appended to `replies`.
    void on_worker_event(std::uint32_t worker, std::uint64_t generation, SimTime now, std::vector<Packet>& replies);

    /// INT1/INT2/Proactive: outstanding (queued + running) requests of the key.
    /// INT3: their remaining service time in µs.
    double current_load(std::size_t key, SimTime now) const;

    std::size_t queue_key(const Request& req) const noexcept
    {
        return policy_.multi_queue() ? static_cast<std::size_t>(req.class_tag) : 0;
    }

    /// Drops all state (unplanned failure) and returns the request-pool indices
    /// of every request it held, including partially received ones. Pending
    /// timers become stale.
    std::vector<std::uint32_t> fail();

    ServerId id() const noexcept { return id_; }
    int workers() const noexcept { return static_cast<int>(workers_.size()); }
    std::size_t outstanding() const noexcept { return total_outstanding_; }
    std::size_t queued() const noexcept;
    int busy_workers() const noexcept;
    const IntraPolicy& policy() const noexcept { return policy_; }

    /// Per-request observation hooks for tests: (request index, time).
    struct Observer {
        virtual ~Observer() = default;
        virtual void on_start(ServerId, std::uint32_t /*request_index*/, std::uint32_t /*worker*/, SimTime, bool /*fresh*/) {}
        virtual void on_preempt(ServerId, std::uint32_t /*request_index*/, SimTime) {}
    };
    void set_observer(Observer* observer) noexcept { observer_ = observer; }

private:
    struct Job {
        std::uint32_t request_index = 0;
        RequestId id = 0;
        std::uint16_t member = 0;
        std::uint16_t group_size = 1;
        std::int16_t class_tag = 0;
        std::int16_t priority = 0;
        std::size_t key = 0;
        double remaining = 0.0;
        SimTime stamp = 0.0;
        std::uint64_t order = 0;
        bool started = false;
    };
    struct Worker {
        std::int64_t job = -1;
        SimTime run_start = 0.0;
        double budget = 0.0;
        std::uint64_t generation = 0;
    };
    struct Assembly {
        std::uint16_t expected_members = 1;
        std::uint16_t received_members = 0;
        std::uint16_t completed_members = 0;
        std::vector<std::uint16_t> packets;
        std::vector<std::uint32_t> request_index;
    };

    std::uint32_t alloc_job(const Job& job);
    void push_queue(std::uint32_t job, bool front);
    std::int64_t pop_next();
    void start(std::uint32_t worker, std::uint32_t job, SimTime now, double delay);
    void fill_idle(SimTime now);
    void try_priority_preempt(const Job& incoming, SimTime now);
    Packet make_reply(const Job& job, SimTime now);
    double weight(std::size_t key) const;

    ServerId id_;
    IntraPolicy policy_;
    TrackingMechanism::Kind tracking_;
    EventQueue* events_;
    std::vector<Worker> workers_;
    std::vector<Job> jobs_;
    std::vector<std::uint32_t> free_jobs_;
    std::vector<std::deque<std::uint32_t>> queues_;
    std::vector<std::size_t> outstanding_;
    std::vector<double> queued_work_;
    std::vector<double> virtual_time_;
    std::size_t total_outstanding_ = 0;
    std::uint64_t next_order_ = 0;
    std::unordered_map<RequestId, Assembly> assembling_;
    Observer* observer_ = nullptr;
};

} // namespace racksim
