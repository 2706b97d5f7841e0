#include "racksim/server.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace racksim {

namespace {
constexpr double kDoneEpsilon = 1e-9;
}

const char* to_string(IntraPolicy::Kind kind) noexcept
{
    switch (kind) {
    case IntraPolicy::Kind::Cfcfs: return "cfcfs";
    case IntraPolicy::Kind::Ps: return "ps";
    case IntraPolicy::Kind::MultiQueueCfcfs: return "mq-cfcfs";
    case IntraPolicy::Kind::MultiQueuePs: return "mq-ps";
    case IntraPolicy::Kind::StrictPriority: return "priority";
    case IntraPolicy::Kind::WeightedFair: return "wfq";
    }
    return "?";
}

IntraPolicy::Kind parse_intra_kind(const std::string& name)
{
    if (name == "cfcfs") return IntraPolicy::Kind::Cfcfs;
    if (name == "ps") return IntraPolicy::Kind::Ps;
    if (name == "mq-cfcfs") return IntraPolicy::Kind::MultiQueueCfcfs;
    if (name == "mq-ps") return IntraPolicy::Kind::MultiQueuePs;
    if (name == "priority") return IntraPolicy::Kind::StrictPriority;
    if (name == "wfq") return IntraPolicy::Kind::WeightedFair;
    throw std::invalid_argument("unknown intra-server policy '" + name + "' (cfcfs|ps|mq-cfcfs|mq-ps|priority|wfq)");
}

void IntraPolicy::validate() const
{
    if (sliced() && !(slice_us > 0.0)) {
        throw std::invalid_argument("PS slice must be > 0");
    }
    if (preempt_threshold_us < 0.0 || overhead_us < 0.0 || priority_preempt_us < 0.0) {
        throw std::invalid_argument("threshold and overheads must be >= 0");
    }
    for (const auto& [tag, w] : weights) {
        if (!(w > 0.0)) {
            throw std::invalid_argument("weight for class " + std::to_string(tag) + " must be > 0");
        }
    }
}

Server::Server(ServerId id, int workers, const IntraPolicy& policy, TrackingMechanism::Kind tracking,
               std::size_t class_keys, EventQueue& events)
    : id_(id), policy_(policy), tracking_(tracking), events_(&events)
{
    if (workers < 1) {
        throw std::invalid_argument("server needs at least one worker");
    }
    policy_.validate();
    const std::size_t keys = policy_.multi_queue() ? std::max<std::size_t>(class_keys, 1) : 1;
    workers_.resize(static_cast<std::size_t>(workers));
    queues_.resize(keys);
    outstanding_.assign(keys, 0);
    queued_work_.assign(keys, 0.0);
    virtual_time_.assign(keys, 0.0);
}

double Server::weight(std::size_t key) const
{
    const auto it = policy_.weights.find(static_cast<int>(key));
    return it == policy_.weights.end() ? 1.0 : it->second;
}

std::size_t Server::queued() const noexcept
{
    std::size_t n = 0;
    for (const auto& q : queues_) {
        n += q.size();
    }
    return n;
}

int Server::busy_workers() const noexcept
{
    return static_cast<int>(std::count_if(workers_.begin(), workers_.end(), [](const Worker& w) { return w.job >= 0; }));
}

std::uint32_t Server::alloc_job(const Job& job)
{
    if (!free_jobs_.empty()) {
        const std::uint32_t slot = free_jobs_.back();
        free_jobs_.pop_back();
        jobs_[slot] = job;
        return slot;
    }
    jobs_.push_back(job);
    return static_cast<std::uint32_t>(jobs_.size() - 1);
}

void Server::receive(const Packet& pkt, const Request& req, SimTime now)
{
    if (req.group_size == 1 && req.num_packets == 1) {
        enqueue(pkt.request_index, req, now);
        return;
    }
    Assembly& a = assembling_[pkt.req_id];
    if (a.packets.empty()) {
        a.expected_members = pkt.group_size;
        a.packets.assign(pkt.group_size, 0);
        a.request_index.assign(pkt.group_size, 0);
    }
    if (pkt.member >= a.packets.size()) {
        return;
    }
    a.request_index[pkt.member] = pkt.request_index;
    if (++a.packets[pkt.member] == pkt.member_packets) {
        ++a.received_members;
        if (a.expected_members == 1) {
            assembling_.erase(pkt.req_id);
        }
        enqueue(pkt.request_index, req, now);
    }
}

void Server::push_queue(std::uint32_t job, bool front)
{
    Job& j = jobs_[job];
    auto& q = queues_[j.key];
    if (front) {
        q.push_front(job);
    } else {
        q.push_back(job);
    }
    queued_work_[j.key] += j.remaining;
}

std::int64_t Server::pop_next()
{
    std::size_t best = queues_.size();
    if (queues_.size() == 1) {
        best = queues_[0].empty() ? 1 : 0;
    } else {
        for (std::size_t k = 0; k < queues_.size(); ++k) {
            if (queues_[k].empty()) {
                continue;
            }
            if (best == queues_.size()) {
                best = k;
                continue;
            }
            const Job& cand = jobs_[queues_[k].front()];
            const Job& cur = jobs_[queues_[best].front()];
            bool better = false;
            switch (policy_.kind) {
            case IntraPolicy::Kind::StrictPriority:
                better = cand.priority > cur.priority ||
                         (cand.priority == cur.priority &&
                          (cand.stamp < cur.stamp || (cand.stamp == cur.stamp && cand.order < cur.order)));
                break;
            case IntraPolicy::Kind::WeightedFair: better = virtual_time_[k] < virtual_time_[best]; break;
            default:
                better = cand.stamp < cur.stamp || (cand.stamp == cur.stamp && cand.order < cur.order);
                break;
            }
            if (better) {
                best = k;
            }
        }
    }
    if (best >= queues_.size()) {
        return -1;
    }
    const std::uint32_t job = queues_[best].front();
    queues_[best].pop_front();
    queued_work_[best] -= jobs_[job].remaining;
    if (queues_[best].empty()) {
        queued_work_[best] = 0.0;
    }
    return job;
}

void Server::start(std::uint32_t worker, std::uint32_t job, SimTime now, double delay)
{
    Worker& w = workers_[worker];
    Job& j = jobs_[job];
    const bool fresh = !j.started;
    j.started = true;
    double budget = j.remaining;
    if (policy_.sliced()) {
        budget = std::min(policy_.slice_us, j.remaining);
    } else if (policy_.preempt_threshold_us > 0.0) {
        budget = std::min(policy_.preempt_threshold_us, j.remaining);
    }
    w.job = job;
    w.run_start = now + delay;
    w.budget = budget;
    ++w.generation;
    const EventKind kind = budget >= j.remaining ? EventKind::RequestComplete : EventKind::QuantumExpire;
    events_->schedule(w.run_start + budget, kind, EventPayload{id_, worker, w.generation});
    if (observer_) {
        observer_->on_start(id_, j.request_index, worker, w.run_start, fresh);
    }
}

void Server::fill_idle(SimTime now)
{
    for (std::uint32_t i = 0; i < workers_.size(); ++i) {
        if (workers_[i].job >= 0) {
            continue;
        }
        const std::int64_t next = pop_next();
        if (next < 0) {
            return;
        }
        start(i, static_cast<std::uint32_t>(next), now, 0.0);
    }
}

void Server::enqueue(std::uint32_t request_index, const Request& req, SimTime now)
{
    Job j;
    j.request_index = request_index;
    j.id = req.id;
    j.member = req.member;
    j.group_size = req.group_size;
    j.class_tag = req.class_tag;
    j.priority = req.priority;
    j.key = queue_key(req);
    if (j.key >= queues_.size()) {
        throw std::out_of_range("class tag " + std::to_string(req.class_tag) + " exceeds configured classes");
    }
    j.remaining = req.service_time;
    j.stamp = now;
    j.order = next_order_++;

    if (policy_.kind == IntraPolicy::Kind::WeightedFair && outstanding_[j.key] == 0) {
        // A queue that becomes backlogged starts at the current minimum virtual
        // time so idle periods do not bank credit.
        double vmin = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < outstanding_.size(); ++k) {
            if (outstanding_[k] > 0) {
                vmin = std::min(vmin, virtual_time_[k]);
            }
        }
        if (std::isfinite(vmin)) {
            virtual_time_[j.key] = std::max(virtual_time_[j.key], vmin);
        }
    }
    ++outstanding_[j.key];
    ++total_outstanding_;

    const std::uint32_t slot = alloc_job(j);
    push_queue(slot, false);
    if (policy_.kind == IntraPolicy::Kind::StrictPriority) {
        try_priority_preempt(jobs_[slot], now);
    }
    fill_idle(now);
}

void Server::try_priority_preempt(const Job& incoming, SimTime now)
{
    std::int64_t victim = -1;
    for (std::uint32_t i = 0; i < workers_.size(); ++i) {
        const Worker& w = workers_[i];
        if (w.job < 0) {
            return; // an idle worker will take it
        }
        const Job& running = jobs_[static_cast<std::size_t>(w.job)];
        if (running.priority >= incoming.priority) {
            continue;
        }
        if (victim < 0) {
            victim = i;
            continue;
        }
        const Job& cur = jobs_[static_cast<std::size_t>(workers_[static_cast<std::size_t>(victim)].job)];
        if (running.priority < cur.priority ||
            (running.priority == cur.priority && w.run_start > workers_[static_cast<std::size_t>(victim)].run_start)) {
            victim = i;
        }
    }
    if (victim < 0) {
        return;
    }
    Worker& w = workers_[static_cast<std::size_t>(victim)];
    Job& j = jobs_[static_cast<std::size_t>(w.job)];
    const double served = std::max(0.0, now - w.run_start);
    if (served >= w.budget) {
        return; // finishing at this instant
    }
    j.remaining -= served;
    const auto job = static_cast<std::uint32_t>(w.job);
    if (observer_) {
        observer_->on_preempt(id_, j.request_index, now);
    }
    push_queue(job, true);
    w.job = -1;
    ++w.generation;
    const std::int64_t next = pop_next();
    start(static_cast<std::uint32_t>(victim), static_cast<std::uint32_t>(next), now, policy_.priority_preempt_us);
}

void Server::on_worker_event(std::uint32_t worker, std::uint64_t generation, SimTime now,
                             std::vector<Packet>& replies)
{
    if (worker >= workers_.size()) {
        return;
    }
    Worker& w = workers_[worker];
    if (w.generation != generation || w.job < 0) {
        return;
    }
    const auto job = static_cast<std::uint32_t>(w.job);
    Job& j = jobs_[job];
    j.remaining -= w.budget;
    if (policy_.kind == IntraPolicy::Kind::WeightedFair) {
        virtual_time_[j.key] += w.budget / weight(j.key);
    }

    if (j.remaining <= kDoneEpsilon) {
        j.remaining = 0.0;
        --outstanding_[j.key];
        --total_outstanding_;
        w.job = -1;
        replies.push_back(make_reply(j, now));
        free_jobs_.push_back(job);
        const std::int64_t next = pop_next();
        if (next >= 0) {
            start(worker, static_cast<std::uint32_t>(next), now, 0.0);
        }
        return;
    }

    // Slice or threshold expiry: back to the tail of its own queue.
    j.stamp = now;
    j.order = next_order_++;
    push_queue(job, false);
    w.job = -1;
    const std::int64_t next = pop_next();
    const bool same = next == static_cast<std::int64_t>(job);
    if (!same && observer_) {
        observer_->on_preempt(id_, j.request_index, now);
    }
    start(worker, static_cast<std::uint32_t>(next), now, same ? 0.0 : policy_.overhead_us);
}

double Server::current_load(std::size_t key, SimTime now) const
{
    if (key >= outstanding_.size()) {
        return 0.0;
    }
    if (tracking_ != TrackingMechanism::Kind::Int3) {
        return static_cast<double>(outstanding_[key]);
    }
    double work = queued_work_[key];
    for (const Worker& w : workers_) {
        if (w.job < 0) {
            continue;
        }
        const Job& j = jobs_[static_cast<std::size_t>(w.job)];
        if (j.key != key) {
            continue;
        }
        work += std::max(0.0, j.remaining - std::max(0.0, now - w.run_start));
    }
    return work;
}

Packet Server::make_reply(const Job& job, SimTime now)
{
    Packet rep;
    rep.type = PacketType::Reply;
    if (job.group_size > 1) {
        auto it = assembling_.find(job.id);
        if (it != assembling_.end()) {
            Assembly& a = it->second;
            if (a.received_members < a.expected_members) {
                rep.type = PacketType::ReplyKeep;
            }
            if (++a.completed_members >= a.expected_members) {
                assembling_.erase(it);
            }
        }
    }
    rep.req_id = job.id;
    rep.class_tag = job.class_tag;
    rep.member = job.member;
    rep.group_size = job.group_size;
    rep.load = current_load(job.key, now);
    rep.src_server = id_;
    rep.client = client_of(job.id);
    rep.request_index = job.request_index;
    return rep;
}

std::vector<std::uint32_t> Server::fail()
{
    std::vector<std::uint32_t> lost;
    for (const auto& w : workers_) {
        if (w.job >= 0) {
            lost.push_back(jobs_[static_cast<std::size_t>(w.job)].request_index);
        }
    }
    for (const auto& q : queues_) {
        for (std::uint32_t j : q) {
            lost.push_back(jobs_[j].request_index);
        }
    }
    for (const auto& [id, a] : assembling_) {
        for (std::size_t m = 0; m < a.packets.size(); ++m) {
            if (a.packets[m] > 0) {
                lost.push_back(a.request_index[m]);
            }
        }
    }
    for (auto& w : workers_) {
        w.job = -1;
        ++w.generation;
    }
    for (auto& q : queues_) {
        q.clear();
    }
    jobs_.clear();
    free_jobs_.clear();
    std::fill(outstanding_.begin(), outstanding_.end(), 0);
    std::fill(queued_work_.begin(), queued_work_.end(), 0.0);
    std::fill(virtual_time_.begin(), virtual_time_.end(), 0.0);
    total_outstanding_ = 0;
    assembling_.clear();
    std::sort(lost.begin(), lost.end());
    lost.erase(std::unique(lost.begin(), lost.end()), lost.end());
    return lost;
}

} // namespace racksim
