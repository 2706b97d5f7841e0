#include "racksim/tor_switch.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>

namespace racksim {

TorSwitch::TorSwitch(const SwitchConfig& config, Membership& membership, std::size_t class_keys, std::uint64_t seed)
    : config_(config),
      membership_(&membership),
      table_(config.table_stages, config.table_slots_per_stage, mix64(seed ^ 0x7ab1e)),
      loads_(membership.physical(), config.per_class_counters ? class_keys : 1),
      selector_(config.policy, config.tracking.kind, config.per_class_counters ? class_keys : 1, mix64(seed ^ 0x5e1ec7)),
      sampling_rng_(seed, StreamRole::Sampling),
      loss_rng_(seed, StreamRole::Loss),
      hash_seed_(mix64(seed ^ 0xfa11bac)),
      outstanding_(membership.physical(), 0)
{
    counters_.dispatch_per_server.assign(membership.physical(), 0);
}

ServerId TorSwitch::fallback_target(const Packet& pkt) const
{
    return rendezvous_hash(pkt.req_id, membership_->fallback_domain(pkt.locality), hash_seed_);
}

ServerId TorSwitch::select_server(const Packet& reqf)
{
    if (config_.policy.kind == SchedulingPolicy::Kind::Jbsq) {
        return select_bounded(reqf);
    }
    return selector_.select(reqf.req_id, key_of(reqf), membership_->eligible(reqf.locality), loads_, sampling_rng_);
}

ServerId TorSwitch::select_bounded(const Packet& reqf) const
{
    ServerId best = kNoServer;
    for (ServerId s : membership_->eligible(reqf.locality)) {
        if (outstanding_[s] >= static_cast<std::uint32_t>(config_.policy.jbsq_bound)) {
            continue;
        }
        if (best == kNoServer || outstanding_[s] < outstanding_[best]) {
            best = s;
        }
    }
    return best;
}

void TorSwitch::process_packet(const Packet& pkt, SimTime now, std::vector<Forward>& out)
{
    if (is_down(now)) {
        ++counters_.dropped_packets;
        out.push_back(Forward{Forward::Kind::Drop, pkt});
        return;
    }

    if (pkt.is_reply()) {
        on_reply(pkt, out);
        release_held(now, out);
        return;
    }

    if (config_.client_directed) {
        if (pkt.type == PacketType::ReqFirst && pkt.dst_server < counters_.dispatch_per_server.size()) {
            ++counters_.dispatch_per_server[pkt.dst_server];
        }
        out.push_back(Forward{Forward::Kind::ToServer, pkt});
        return;
    }

    if (pkt.type == PacketType::ReqFirst) {
        if (config_.policy.kind == SchedulingPolicy::Kind::Jbsq) {
            const ServerId s = select_bounded(pkt);
            if (s == kNoServer || !held_.empty()) {
                // FIFO: a new request never overtakes one already waiting.
                ++counters_.held_requests;
                held_.push_back(Held{pkt, {}});
                held_index_.emplace(pkt.req_id, std::prev(held_.end()));
                release_held(now, out);
                return;
            }
            dispatch_first(pkt, s, now, out);
            return;
        }
        const ServerId s = select_server(pkt);
        if (s == kNoServer) {
            // No eligible server is active; hash among live servers of the locality class.
            dispatch_first(pkt, fallback_target(pkt), now, out);
            return;
        }
        dispatch_first(pkt, s, now, out);
        return;
    }

    // REQR
    if (auto it = held_index_.find(pkt.req_id); it != held_index_.end()) {
        it->second->rest.push_back(pkt);
        return;
    }
    Packet fwd = pkt;
    if (auto s = table_.read(pkt.req_id)) {
        fwd.dst_server = *s;
    } else {
        ++counters_.absent_reads;
        fwd.dst_server = fallback_target(pkt);
        if (membership_->failed(fwd.dst_server)) {
            out.push_back(Forward{Forward::Kind::Drop, fwd});
            return;
        }
    }
    out.push_back(Forward{Forward::Kind::ToServer, fwd});
}

void TorSwitch::dispatch_first(const Packet& pkt, ServerId chosen, SimTime now, std::vector<Forward>& out)
{
    Packet fwd = pkt;
    if (table_.insert(pkt.req_id, chosen, now) == ReqTable::InsertResult::Fallback) {
        ++counters_.table_fallbacks;
        chosen = fallback_target(pkt);
    }
    fwd.dst_server = chosen;
    if (chosen == kNoServer || membership_->failed(chosen)) {
        out.push_back(Forward{Forward::Kind::Drop, fwd});
        return;
    }
    ++counters_.dispatch_per_server[chosen];
    ++outstanding_[chosen];
    if (config_.tracking.kind == TrackingMechanism::Kind::Proactive) {
        double inc = 1.0;
        if (loss_rng_.bernoulli(config_.tracking.double_count_prob)) {
            inc += 1.0;
        }
        loads_.add(chosen, key_of(pkt), inc);
    }
    out.push_back(Forward{Forward::Kind::ToServer, fwd});
}

void TorSwitch::on_reply(const Packet& pkt, std::vector<Forward>& out)
{
    const bool clears = pkt.type == PacketType::Reply;
    if (clears) {
        table_.remove(pkt.req_id);
        if (pkt.src_server < outstanding_.size() && outstanding_[pkt.src_server] > 0) {
            --outstanding_[pkt.src_server];
        }
    }
    if (pkt.src_server < membership_->physical()) {
        const bool lost = loss_rng_.bernoulli(config_.tracking.report_loss_prob);
        if (lost) {
            ++counters_.reports_lost;
        } else if (config_.tracking.kind == TrackingMechanism::Kind::Proactive) {
            if (clears) {
                loads_.add(pkt.src_server, key_of(pkt), -1.0);
            }
        } else if (pkt.load) {
            loads_.apply_report(pkt.src_server, key_of(pkt), *pkt.load, config_.tracking.kind);
        }
    }
    out.push_back(Forward{Forward::Kind::ToClient, pkt});
}

void TorSwitch::release_held(SimTime now, std::vector<Forward>& out)
{
    while (!held_.empty()) {
        Held& head = held_.front();
        const ServerId s = select_bounded(head.first);
        if (s == kNoServer) {
            return;
        }
        Held h = std::move(head);
        held_index_.erase(h.first.req_id);
        held_.pop_front();
        dispatch_first(h.first, s, now, out);
        const ServerId target = out.back().packet.dst_server;
        for (Packet& p : h.rest) {
            p.dst_server = target;
            out.push_back(Forward{Forward::Kind::ToServer, p});
        }
    }
}

std::vector<std::uint32_t> TorSwitch::fail(SimTime now, SimTime until)
{
    down_until_ = until;
    std::vector<std::uint32_t> discarded;
    for (const Held& h : held_) {
        discarded.push_back(h.first.request_index);
    }
    held_.clear();
    held_index_.clear();
    table_.clear();
    loads_.reset();
    std::fill(outstanding_.begin(), outstanding_.end(), 0U);
    (void)now;
    return discarded;
}

void TorSwitch::add_server(ServerId s, SimTime now, std::vector<Forward>& out)
{
    membership_->activate(s);
    release_held(now, out);
}

void TorSwitch::remove_server(ServerId s, bool planned)
{
    if (planned) {
        membership_->deactivate(s);
    } else {
        membership_->fail(s);
    }
}

std::size_t TorSwitch::purge_server(ServerId s)
{
    return table_.purge_server(s);
}

std::size_t TorSwitch::sweep_stale(SimTime now)
{
    const std::size_t n = table_.purge_older_than(now - config_.stale_ttl_us);
    counters_.stale_purged += n;
    return n;
}

} // namespace racksim
