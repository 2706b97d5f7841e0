#pragma once

#include "racksim/packet.hpp"
#include "racksim/rng.hpp"

#include <span>
#include <vector>

namespace racksim {

/// Uniform choice over the eligible set.
ServerId dispatch_random(std::span<const ServerId> eligible, RngStream& rng);

/// Stateless hash dispatch: the same id always lands on the same server.
ServerId dispatch_hash(RequestId id, std::span<const ServerId> eligible, std::uint64_t seed);

/// A client's private, reply-fed estimate of every server's queue length.
class ClientView {
public:
    explicit ClientView(std::size_t servers) : estimate_(servers, 0.0) {}

    double estimate(ServerId s) const { return estimate_.at(s); }
    /// Only the client's own replies move its estimates.
    void on_reply(ServerId s, double load) { estimate_.at(s) = load; }
    void on_dispatch(ServerId s) { estimate_.at(s) += 1.0; }
    std::size_t servers() const noexcept { return estimate_.size(); }

private:
    std::vector<double> estimate_;
};

/// Power-of-k over the client's own estimates; the chosen server's estimate is
/// bumped locally so one client does not pile onto a server between replies.
ServerId dispatch_client(ClientView& view, std::span<const ServerId> eligible, int k, RngStream& rng);

} // namespace racksim
