#pragma once

#include "racksim/load_table.hpp"
#include "racksim/membership.hpp"
#include "racksim/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace racksim {

struct SchedulingPolicy {
    enum class Kind : std::uint8_t {
        HashRandom, ///< rendezvous hash of the request id over the eligible set
        Random,     ///< uniform draw over the eligible set
        RoundRobin, ///< cyclic per queue key
        Shortest,   ///< exact JSQ over the eligible set
        Sampling,   ///< power-of-k-choices
        Jbsq,       ///< join-bounded-shortest-queue with a switch-side wait queue
    };

    Kind kind = Kind::Sampling;
    int k = 2;
    int jbsq_bound = 3;

    bool load_aware() const noexcept { return kind == Kind::Shortest || kind == Kind::Sampling || kind == Kind::Jbsq; }
};

std::string describe(const SchedulingPolicy& policy);

/// Index of the minimum of `loads` over `candidates`; ties go to the lowest server id.
ServerId argmin_load(std::span<const ServerId> candidates, const LoadTable& loads, std::size_t key);

/// k distinct servers drawn uniformly from `eligible` (partial Fisher-Yates,
/// k clamped to the set size). Draw order is part of the determinism contract.
std::vector<ServerId> sample_distinct(std::span<const ServerId> eligible, int k, RngStream& rng);

/// Rendezvous (highest-random-weight) hash. Removing a server only remaps the
/// ids whose winner was that server.
ServerId rendezvous_hash(RequestId id, std::span<const ServerId> domain, std::uint64_t seed);

/// Per-request server selection for every policy except JBSQ, whose bounded
/// variant lives in the switch because it needs exact outstanding counts.
class ServerSelector {
public:
    ServerSelector(SchedulingPolicy policy, TrackingMechanism::Kind tracking, std::size_t keys,
                   std::uint64_t hash_seed);

    /// Precondition: `eligible` is non-empty.
    ServerId select(RequestId id, std::size_t key, std::span<const ServerId> eligible, const LoadTable& loads,
                    RngStream& rng);

    const SchedulingPolicy& policy() const noexcept { return policy_; }

private:
    SchedulingPolicy policy_;
    TrackingMechanism::Kind tracking_;
    std::uint64_t hash_seed_;
    std::vector<std::uint64_t> rr_cursor_;
};

/// Pipeline resources available to the selection logic.
struct PipelineBudget {
    int max_stages = 12;
    int comparisons_per_stage = 4;
    int reads_per_stage = 4;
};

enum class MinStructure : std::uint8_t { Tree, Linear };

/// Stages to reduce `candidates` values to their minimum with a comparison tree,
/// splitting layers wider than `comparisons_per_stage` across extra stages.
int tree_min_stages(int candidates, int comparisons_per_stage);

/// Stages the policy needs for a rack of `num_servers`.
int stage_cost(const SchedulingPolicy& policy, int num_servers, const PipelineBudget& budget,
               MinStructure structure = MinStructure::Tree);

/// Throws std::invalid_argument with a diagnostic if the policy does not fit the budget.
void check_pipeline_fit(const SchedulingPolicy& policy, int num_servers, const PipelineBudget& budget,
                        MinStructure structure = MinStructure::Tree);

} // namespace racksim
