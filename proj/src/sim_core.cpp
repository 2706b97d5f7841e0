#include "racksim/sim_core.hpp"

#include <algorithm>

namespace racksim {

const char* to_string(EventKind kind) noexcept
{
    switch (kind) {
    case EventKind::ClientEmit: return "ClientEmit";
    case EventKind::PacketArriveAtSwitch: return "PacketArriveAtSwitch";
    case EventKind::PacketArriveAtServer: return "PacketArriveAtServer";
    case EventKind::QuantumExpire: return "QuantumExpire";
    case EventKind::RequestComplete: return "RequestComplete";
    case EventKind::ReplyArriveAtSwitch: return "ReplyArriveAtSwitch";
    case EventKind::ReplyArriveAtClient: return "ReplyArriveAtClient";
    case EventKind::FaultInject: return "FaultInject";
    case EventKind::Reconfigure: return "Reconfigure";
    case EventKind::SamplingTick: return "SamplingTick";
    case EventKind::StaleSweep: return "StaleSweep";
    }
    return "?";
}

void EventQueue::schedule(SimTime at, EventKind kind, EventPayload payload)
{
    if (!std::isfinite(at)) {
        throw ContractViolation("event scheduled at non-finite time");
    }
    if (at < now_) {
        throw ContractViolation("event scheduled in the past: t=" + std::to_string(at) +
                                " < clock=" + std::to_string(now_));
    }
    heap_.push_back(Event{at, next_sequence_++, kind, payload});
    std::push_heap(heap_.begin(), heap_.end(), later);
}

Event EventQueue::pop()
{
    if (heap_.empty()) {
        throw ContractViolation("pop from empty event queue");
    }
    std::pop_heap(heap_.begin(), heap_.end(), later);
    Event ev = heap_.back();
    heap_.pop_back();
    now_ = ev.time;
    ++dispatched_;
    return ev;
}

} // namespace racksim
