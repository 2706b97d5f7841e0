#include "racksim/req_table.hpp"

#include "racksim/rng.hpp"

#include <stdexcept>

namespace racksim {

ReqTable::ReqTable(std::size_t stages, std::size_t slots_per_stage, std::uint64_t seed)
    : stages_(stages), slots_(slots_per_stage), table_(stages * slots_per_stage)
{
    if (stages == 0 || slots_per_stage == 0) {
        throw std::invalid_argument("request table needs >= 1 stage and >= 1 slot per stage");
    }
    seeds_.reserve(stages);
    for (std::size_t i = 0; i < stages; ++i) {
        seeds_.push_back(mix64(seed ^ mix64(0x5eed0000ULL + i)));
    }
}

std::size_t ReqTable::slot_index(std::size_t stage, RequestId id) const noexcept
{
    return static_cast<std::size_t>(mix64(id ^ seeds_[stage]) % slots_);
}

ReqTable::InsertResult ReqTable::insert(RequestId id, ServerId server, SimTime now)
{
    for (std::size_t i = 0; i < stages_; ++i) {
        Slot& s = at(i, id);
        if (!s.used) {
            s = Slot{id, server, now, true};
            ++occupancy_;
            return InsertResult::Inserted;
        }
    }
    ++fallbacks_;
    return InsertResult::Fallback;
}

std::optional<ServerId> ReqTable::read(RequestId id) const
{
    for (std::size_t i = 0; i < stages_; ++i) {
        const Slot& s = at(i, id);
        if (s.used && s.id == id) {
            return s.server;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> ReqTable::stage_of(RequestId id) const
{
    for (std::size_t i = 0; i < stages_; ++i) {
        const Slot& s = at(i, id);
        if (s.used && s.id == id) {
            return i;
        }
    }
    return std::nullopt;
}

void ReqTable::remove(RequestId id)
{
    for (std::size_t i = 0; i < stages_; ++i) {
        Slot& s = at(i, id);
        if (s.used && s.id == id) {
            s = Slot{};
            --occupancy_;
        }
    }
}

std::size_t ReqTable::purge_server(ServerId server)
{
    std::size_t removed = 0;
    for (auto& s : table_) {
        if (s.used && s.server == server) {
            s = Slot{};
            ++removed;
        }
    }
    occupancy_ -= removed;
    return removed;
}

std::size_t ReqTable::purge_older_than(SimTime cutoff)
{
    std::size_t removed = 0;
    for (auto& s : table_) {
        if (s.used && s.inserted_at < cutoff) {
            s = Slot{};
            ++removed;
        }
    }
    occupancy_ -= removed;
    return removed;
}

void ReqTable::clear()
{
    for (auto& s : table_) {
        s = Slot{};
    }
    occupancy_ = 0;
}

} // namespace racksim
