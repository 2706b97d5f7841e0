#pragma once

#include "racksim/packet.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace racksim {

/// Which physical servers exist, which are active for new selections, which have
/// failed, and which servers each locality class may use.
class Membership {
public:
    /// `locality_sets[L]` lists the servers allowed for locality class L.
    /// `active` empty means every server starts active.
    Membership(std::size_t physical, std::vector<std::vector<ServerId>> locality_sets = {},
               std::vector<bool> active = {});

    std::size_t physical() const noexcept { return active_.size(); }
    std::size_t active_count() const noexcept;
    std::size_t locality_classes() const noexcept { return sets_.size(); }
    bool active(ServerId s) const { return active_.at(s); }
    bool failed(ServerId s) const { return failed_.at(s); }

    void activate(ServerId s);
    /// Planned removal: excluded from new selections, still alive.
    void deactivate(ServerId s);
    /// Unplanned removal: excluded from selections; fallback packets hashing to it are dropped.
    void fail(ServerId s);

    /// Active servers allowed for the locality class (kNoLocality = all), ascending.
    std::span<const ServerId> eligible(int locality) const;
    bool is_eligible(ServerId s, int locality) const;

    /// Hash-fallback domain: every configured server of the locality class,
    /// whatever its state, so all packets of a request hash to the same server
    /// across membership changes.
    std::span<const ServerId> fallback_domain(int locality) const;

    const std::vector<ServerId>& locality_set(int locality) const;

private:
    void rebuild();

    std::vector<bool> active_;
    std::vector<bool> failed_;
    std::vector<std::vector<ServerId>> sets_;
    std::vector<ServerId> all_;
    std::vector<std::vector<ServerId>> eligible_;      // [locality + 1]
};

} // namespace racksim
