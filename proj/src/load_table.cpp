#include "racksim/load_table.hpp"

#include <algorithm>
#include <stdexcept>

namespace racksim {

const char* to_string(TrackingMechanism::Kind kind) noexcept
{
    switch (kind) {
    case TrackingMechanism::Kind::Int1: return "int1";
    case TrackingMechanism::Kind::Int2: return "int2";
    case TrackingMechanism::Kind::Int3: return "int3";
    case TrackingMechanism::Kind::Proactive: return "proactive";
    }
    return "?";
}

TrackingMechanism::Kind parse_tracking_kind(const std::string& name)
{
    if (name == "int1") return TrackingMechanism::Kind::Int1;
    if (name == "int2") return TrackingMechanism::Kind::Int2;
    if (name == "int3") return TrackingMechanism::Kind::Int3;
    if (name == "proactive") return TrackingMechanism::Kind::Proactive;
    throw std::invalid_argument("unknown tracking mechanism '" + name + "' (int1|int2|int3|proactive)");
}

LoadTable::LoadTable(std::size_t servers, std::size_t keys)
    : servers_(servers), keys_(keys == 0 ? 1 : keys), counters_(servers_ * keys_, 0.0), min_(keys_)
{
}

void LoadTable::add(ServerId s, std::size_t key, double delta)
{
    double& c = counters_[index(s, key)];
    c += delta;
    if (c < 0.0) {
        c = 0.0;
    }
}

void LoadTable::apply_report(ServerId s, std::size_t key, double reported, TrackingMechanism::Kind kind)
{
    switch (kind) {
    case TrackingMechanism::Kind::Int1:
    case TrackingMechanism::Kind::Int3: set(s, key, reported); break;
    case TrackingMechanism::Kind::Int2: {
        MinEntry& m = min_.at(key);
        if (m.server == s || reported < m.value) {
            m = MinEntry{s, reported};
        }
        break;
    }
    case TrackingMechanism::Kind::Proactive: break;
    }
}

void LoadTable::reset()
{
    std::fill(counters_.begin(), counters_.end(), 0.0);
    std::fill(min_.begin(), min_.end(), MinEntry{});
}

} // namespace racksim
