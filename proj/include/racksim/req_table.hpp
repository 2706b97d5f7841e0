#pragma once

#include "racksim/packet.hpp"
#include "racksim/sim_core.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace racksim {

/// Request-affinity table: n stages of m register slots, each stage indexed by
/// its own hash of the request id. A request lives in at most one slot, and
/// every operation touches only the hashed slot of each stage.
class ReqTable {
public:
    enum class InsertResult : std::uint8_t { Inserted, Fallback };

    ReqTable(std::size_t stages, std::size_t slots_per_stage, std::uint64_t seed);

    /// Stores the mapping in the first stage whose hashed slot is empty.
    /// Fallback means every stage collided; the caller dispatches by hash instead.
    InsertResult insert(RequestId id, ServerId server, SimTime now);
    std::optional<ServerId> read(RequestId id) const;
    /// Clears the slot holding `id`, if any. Slots holding other ids are left alone.
    void remove(RequestId id);

    /// Stage that currently holds `id`, if any.
    std::optional<std::size_t> stage_of(RequestId id) const;
    std::size_t slot_index(std::size_t stage, RequestId id) const noexcept;

    /// Control-plane sweeps. Both return the number of entries removed.
    std::size_t purge_server(ServerId server);
    std::size_t purge_older_than(SimTime cutoff);
    void clear();

    std::size_t occupancy() const noexcept { return occupancy_; }
    std::size_t stages() const noexcept { return stages_; }
    std::size_t slots_per_stage() const noexcept { return slots_; }
    std::uint64_t fallback_count() const noexcept { return fallbacks_; }

private:
    struct Slot {
        RequestId id = 0;
        ServerId server = kNoServer;
        SimTime inserted_at = 0.0;
        bool used = false;
    };

    Slot& at(std::size_t stage, RequestId id) noexcept { return table_[stage * slots_ + slot_index(stage, id)]; }
    const Slot& at(std::size_t stage, RequestId id) const noexcept
    {
        return table_[stage * slots_ + slot_index(stage, id)];
    }

    std::size_t stages_;
    std::size_t slots_;
    std::vector<std::uint64_t> seeds_;
    std::vector<Slot> table_;
    std::size_t occupancy_ = 0;
    std::uint64_t fallbacks_ = 0;
};

} // namespace racksim
