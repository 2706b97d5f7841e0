#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace racksim {

/// Simulated time in microseconds.
using SimTime = double;

/// Raised when a caller breaks an engine precondition (e.g. scheduling into the past).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class EventKind : std::uint8_t {
    ClientEmit,
    PacketArriveAtSwitch,
    PacketArriveAtServer,
    QuantumExpire,
    RequestComplete,
    ReplyArriveAtSwitch,
    ReplyArriveAtClient,
    FaultInject,
    Reconfigure,
    SamplingTick,
    StaleSweep,
};

const char* to_string(EventKind kind) noexcept;

/// Kind-specific payload. Meaning of the fields is fixed by the handler for each kind.
struct EventPayload {
    std::uint32_t target = 0;
    std::uint32_t aux = 0;
    std::uint64_t ref = 0;
};

struct Event {
    SimTime time = 0.0;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::ClientEmit;
    EventPayload payload;
};

/// Time-ordered event queue with a monotone clock.
///
/// Events are dispatched in (time, insertion sequence) order, so events that
/// share a timestamp come out FIFO.
class EventQueue {
public:
    SimTime now() const noexcept { return now_; }
    bool empty() const noexcept { return heap_.empty(); }
    std::size_t size() const noexcept { return heap_.size(); }
    std::uint64_t dispatched() const noexcept { return dispatched_; }

    /// Time of the earliest pending event. Precondition: !empty().
    SimTime next_time() const { return heap_.front().time; }

    void schedule(SimTime at, EventKind kind, EventPayload payload = {});
    void schedule_in(SimTime delay, EventKind kind, EventPayload payload = {})
    {
        schedule(now_ + delay, kind, payload);
    }

    /// Removes the earliest event and advances the clock to its time.
    Event pop();

    /// Dispatches every event with time <= end through `handler`, then sets the
    /// clock to `end` if it is still behind. Returns the number of events dispatched.
    template <class Handler>
    std::uint64_t run_until(SimTime end, Handler&& handler)
    {
        std::uint64_t count = 0;
        while (!heap_.empty() && heap_.front().time <= end) {
            const Event ev = pop();
            handler(ev);
            ++count;
        }
        if (now_ < end && std::isfinite(end)) {
            now_ = end;
        }
        return count;
    }

    void clear() noexcept
    {
        heap_.clear();
        now_ = 0.0;
        next_sequence_ = 0;
        dispatched_ = 0;
    }

private:
    static bool later(const Event& a, const Event& b) noexcept
    {
        return a.time > b.time || (a.time == b.time && a.sequence > b.sequence);
    }

    std::vector<Event> heap_;
    SimTime now_ = 0.0;
    std::uint64_t next_sequence_ = 0;
    std::uint64_t dispatched_ = 0;
};

} // namespace racksim
