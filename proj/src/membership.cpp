#include "racksim/membership.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace racksim {

Membership::Membership(std::size_t physical, std::vector<std::vector<ServerId>> locality_sets,
                       std::vector<bool> active)
    : active_(std::move(active)), failed_(physical, false), sets_(std::move(locality_sets))
{
    if (physical == 0) {
        throw std::invalid_argument("rack needs at least one server");
    }
    if (active_.empty()) {
        active_.assign(physical, true);
    }
    if (active_.size() != physical) {
        throw std::invalid_argument("active flags do not match server count");
    }
    for (ServerId s = 0; s < physical; ++s) {
        all_.push_back(s);
    }
    for (auto& set : sets_) {
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        if (set.empty()) {
            throw std::invalid_argument("locality set is empty");
        }
        if (set.back() >= physical) {
            throw std::invalid_argument("locality set names server " + std::to_string(set.back()) +
                                        " but the rack has " + std::to_string(physical));
        }
    }
    rebuild();
}

std::size_t Membership::active_count() const noexcept
{
    return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true));
}

void Membership::activate(ServerId s)
{
    active_.at(s) = true;
    failed_.at(s) = false;
    rebuild();
}

void Membership::deactivate(ServerId s)
{
    active_.at(s) = false;
    rebuild();
}

void Membership::fail(ServerId s)
{
    active_.at(s) = false;
    failed_.at(s) = true;
    rebuild();
}

const std::vector<ServerId>& Membership::locality_set(int locality) const
{
    if (locality == kNoLocality) {
        return all_;
    }
    if (locality < 0 || static_cast<std::size_t>(locality) >= sets_.size()) {
        throw std::out_of_range("unknown locality class " + std::to_string(locality));
    }
    return sets_[static_cast<std::size_t>(locality)];
}

std::span<const ServerId> Membership::eligible(int locality) const
{
    return eligible_.at(static_cast<std::size_t>(locality + 1));
}

std::span<const ServerId> Membership::fallback_domain(int locality) const
{
    const auto& set = locality_set(locality);
    return {set.data(), set.size()};
}

bool Membership::is_eligible(ServerId s, int locality) const
{
    const auto e = eligible(locality);
    return std::binary_search(e.begin(), e.end(), s);
}

void Membership::rebuild()
{
    eligible_.assign(sets_.size() + 1, {});
    for (int loc = kNoLocality; loc < static_cast<int>(sets_.size()); ++loc) {
        auto& e = eligible_[static_cast<std::size_t>(loc + 1)];
        for (ServerId s : locality_set(loc)) {
            if (active_[s]) {
                e.push_back(s);
            }
        }
    }
}

} // namespace racksim
