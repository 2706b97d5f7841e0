#include "racksim/baselines.hpp"

#include "racksim/selection.hpp"

namespace racksim {

ServerId dispatch_random(std::span<const ServerId> eligible, RngStream& rng)
{
    if (eligible.empty()) {
        return kNoServer;
    }
    return eligible[rng.uniform_index(static_cast<std::uint32_t>(eligible.size()))];
}

ServerId dispatch_hash(RequestId id, std::span<const ServerId> eligible, std::uint64_t seed)
{
    return rendezvous_hash(id, eligible, seed);
}

ServerId dispatch_client(ClientView& view, std::span<const ServerId> eligible, int k, RngStream& rng)
{
    if (eligible.empty()) {
        return kNoServer;
    }
    // Same draw procedure as the switch sampler, so identical information
    // yields identical decisions.
    const auto sample = sample_distinct(eligible, k, rng);
    ServerId best = kNoServer;
    double best_load = 0.0;
    for (ServerId s : sample) {
        const double l = view.estimate(s);
        if (best == kNoServer || l < best_load || (l == best_load && s < best)) {
            best = s;
            best_load = l;
        }
    }
    view.on_dispatch(best);
    return best;
}

} // namespace racksim
