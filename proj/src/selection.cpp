#include "racksim/selection.hpp"

#include <algorithm>
#include <stdexcept>

namespace racksim {

std::string describe(const SchedulingPolicy& policy)
{
    switch (policy.kind) {
    case SchedulingPolicy::Kind::HashRandom: return "hash";
    case SchedulingPolicy::Kind::Random: return "random";
    case SchedulingPolicy::Kind::RoundRobin: return "rr";
    case SchedulingPolicy::Kind::Shortest: return "shortest";
    case SchedulingPolicy::Kind::Sampling: return "sampling-" + std::to_string(policy.k);
    case SchedulingPolicy::Kind::Jbsq: return "jbsq-" + std::to_string(policy.jbsq_bound);
    }
    return "?";
}

ServerId argmin_load(std::span<const ServerId> candidates, const LoadTable& loads, std::size_t key)
{
    ServerId best = kNoServer;
    double best_load = 0.0;
    for (ServerId s : candidates) {
        const double l = loads.load(s, key);
        if (best == kNoServer || l < best_load || (l == best_load && s < best)) {
            best = s;
            best_load = l;
        }
    }
    return best;
}

std::vector<ServerId> sample_distinct(std::span<const ServerId> eligible, int k, RngStream& rng)
{
    std::vector<ServerId> pool(eligible.begin(), eligible.end());
    const auto n = static_cast<std::uint32_t>(pool.size());
    const auto take = static_cast<std::uint32_t>(std::clamp(k, 1, static_cast<int>(n)));
    for (std::uint32_t i = 0; i < take; ++i) {
        const std::uint32_t j = i + rng.uniform_index(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    return pool;
}

ServerId rendezvous_hash(RequestId id, std::span<const ServerId> domain, std::uint64_t seed)
{
    ServerId best = kNoServer;
    std::uint64_t best_weight = 0;
    for (ServerId s : domain) {
        const std::uint64_t w = mix64(mix64(id ^ seed) ^ (0x9e3779b97f4a7c15ULL * (s + 1)));
        if (best == kNoServer || w > best_weight) {
            best = s;
            best_weight = w;
        }
    }
    return best;
}

ServerSelector::ServerSelector(SchedulingPolicy policy, TrackingMechanism::Kind tracking, std::size_t keys,
                               std::uint64_t hash_seed)
    : policy_(policy), tracking_(tracking), hash_seed_(hash_seed), rr_cursor_(keys == 0 ? 1 : keys, 0)
{
    if (policy_.kind == SchedulingPolicy::Kind::Sampling && policy_.k < 1) {
        throw std::invalid_argument("sampling k must be >= 1");
    }
    if (policy_.kind == SchedulingPolicy::Kind::Jbsq && policy_.jbsq_bound < 1) {
        throw std::invalid_argument("jbsq bound must be >= 1");
    }
}

ServerId ServerSelector::select(RequestId id, std::size_t key, std::span<const ServerId> eligible,
                                const LoadTable& loads, RngStream& rng)
{
    if (eligible.empty()) {
        return kNoServer;
    }
    // INT2 keeps a single (server, min) register, so load-aware policies can
    // only follow it.
    if (tracking_ == TrackingMechanism::Kind::Int2 && policy_.load_aware()) {
        const auto& m = loads.min_entry(key);
        if (m.server != kNoServer && std::binary_search(eligible.begin(), eligible.end(), m.server)) {
            return m.server;
        }
        return eligible[rng.uniform_index(static_cast<std::uint32_t>(eligible.size()))];
    }
    switch (policy_.kind) {
    case SchedulingPolicy::Kind::HashRandom: return rendezvous_hash(id, eligible, hash_seed_);
    case SchedulingPolicy::Kind::Random:
        return eligible[rng.uniform_index(static_cast<std::uint32_t>(eligible.size()))];
    case SchedulingPolicy::Kind::RoundRobin: {
        auto& cursor = rr_cursor_.at(key);
        return eligible[cursor++ % eligible.size()];
    }
    case SchedulingPolicy::Kind::Shortest:
    case SchedulingPolicy::Kind::Jbsq: return argmin_load(eligible, loads, key);
    case SchedulingPolicy::Kind::Sampling: {
        const auto sample = sample_distinct(eligible, policy_.k, rng);
        return argmin_load(sample, loads, key);
    }
    }
    return eligible.front();
}

int tree_min_stages(int candidates, int comparisons_per_stage)
{
    if (candidates < 1 || comparisons_per_stage < 1) {
        throw std::invalid_argument("tree_min_stages needs >= 1 candidate and >= 1 comparison per stage");
    }
    int stages = 0;
    int width = candidates;
    while (width > 1) {
        const int comparisons = width / 2;
        stages += (comparisons + comparisons_per_stage - 1) / comparisons_per_stage;
        width = (width + 1) / 2;
    }
    return stages;
}

int stage_cost(const SchedulingPolicy& policy, int num_servers, const PipelineBudget& budget, MinStructure structure)
{
    if (num_servers < 1) {
        throw std::invalid_argument("stage_cost needs >= 1 server");
    }
    if (budget.comparisons_per_stage < 1 || budget.reads_per_stage < 1) {
        throw std::invalid_argument("pipeline budget needs >= 1 comparison and >= 1 read per stage");
    }
    auto min_over = [&](int candidates) {
        return structure == MinStructure::Linear ? candidates : tree_min_stages(candidates, budget.comparisons_per_stage);
    };
    switch (policy.kind) {
    case SchedulingPolicy::Kind::HashRandom:
    case SchedulingPolicy::Kind::Random:
    case SchedulingPolicy::Kind::RoundRobin: return 1;
    case SchedulingPolicy::Kind::Shortest:
    case SchedulingPolicy::Kind::Jbsq: return min_over(num_servers);
    case SchedulingPolicy::Kind::Sampling: {
        const int k = policy.k;
        const int reads = (k + budget.reads_per_stage - 1) / budget.reads_per_stage;
        return reads + min_over(k);
    }
    }
    return 1;
}

void check_pipeline_fit(const SchedulingPolicy& policy, int num_servers, const PipelineBudget& budget,
                        MinStructure structure)
{
    const int need = stage_cost(policy, num_servers, budget, structure);
    if (need > budget.max_stages) {
        throw std::invalid_argument("policy " + describe(policy) + " over " + std::to_string(num_servers) +
                                    " servers needs " + std::to_string(need) + " pipeline stages but max_stages is " +
                                    std::to_string(budget.max_stages) + " (comparisons_per_stage=" +
                                    std::to_string(budget.comparisons_per_stage) +
                                    ", reads_per_stage=" + std::to_string(budget.reads_per_stage) + ")");
    }
}

} // namespace racksim
