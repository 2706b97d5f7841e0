#pragma once

#include "racksim/packet.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace racksim {

struct TrackingMechanism {
    enum class Kind : std::uint8_t {
        Int1,      ///< per-server outstanding count, piggybacked on replies
        Int2,      ///< only (argmin server, min value), piggybacked on replies
        Int3,      ///< per-server remaining service time, piggybacked on replies
        Proactive, ///< switch-side +1 on REQF, -1 on REP
    };

    Kind kind = Kind::Int1;
    /// Probability a reply's load information is lost before it updates the switch
    /// (INT: report not applied; Proactive: decrement skipped).
    double report_loss_prob = 0.0;
    /// Proactive only: probability a REQF is counted twice (retransmission).
    double double_count_prob = 0.0;

    bool reports_work() const noexcept { return kind == Kind::Int3; }
};

const char* to_string(TrackingMechanism::Kind kind) noexcept;
TrackingMechanism::Kind parse_tracking_kind(const std::string& name);

/// Latest known per-server, per-queue-key load, plus the INT2 minimum register.
class LoadTable {
public:
    struct MinEntry {
        ServerId server = kNoServer;
        double value = std::numeric_limits<double>::infinity();
    };

    LoadTable(std::size_t servers, std::size_t keys);

    std::size_t servers() const noexcept { return servers_; }
    std::size_t keys() const noexcept { return keys_; }

    double load(ServerId s, std::size_t key) const { return counters_[index(s, key)]; }
    void set(ServerId s, std::size_t key, double value) { counters_[index(s, key)] = value < 0.0 ? 0.0 : value; }
    /// Adds `delta`, clamping at zero.
    void add(ServerId s, std::size_t key, double delta);

    const MinEntry& min_entry(std::size_t key) const { return min_.at(key); }

    /// Applies a piggybacked report under `kind`. Proactive ignores reports.
    ///
    /// INT2 rule: a report from the stored server replaces the stored value; a
    /// report from any other server replaces the pair only if strictly smaller.
    void apply_report(ServerId s, std::size_t key, double reported, TrackingMechanism::Kind kind);

    void reset();

private:
    std::size_t index(ServerId s, std::size_t key) const noexcept { return static_cast<std::size_t>(s) * keys_ + key; }

    std::size_t servers_;
    std::size_t keys_;
    std::vector<double> counters_;
    std::vector<MinEntry> min_;
};

} // namespace racksim
