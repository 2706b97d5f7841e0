#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace racksim {

/// Nearest-rank quantile: the ceil(p*n)-th smallest sample. Empty input has no quantile.
std::optional<double> quantile(std::span<const double> samples, double p);
/// Same, for input already sorted ascending.
std::optional<double> quantile_sorted(std::span<const double> sorted, double p);

struct LatencySummary {
    std::size_t count = 0;
    double mean = 0.0;
    std::optional<double> p50;
    std::optional<double> p99;
    std::optional<double> p999;
};

LatencySummary summarize(std::vector<double> samples);

struct ClassMetrics {
    /// Sojourn times (µs) of requests that arrived in the measurement window and completed.
    std::vector<double> latencies;
    std::uint64_t arrived_in_window = 0;
    std::uint64_t completed_in_window = 0;
};

/// Completions and latencies bucketed by completion time.
struct TimelineBin {
    std::map<int, std::uint64_t> completions;
    std::map<int, std::vector<double>> latencies;
};

struct MetricsRecord {
    double window_start_us = 0.0;
    double window_end_us = 0.0;
    std::map<int, ClassMetrics> classes;

    std::uint64_t injected = 0;
    std::uint64_t completed = 0;
    std::uint64_t in_flight = 0;
    std::uint64_t dropped = 0;

    std::uint64_t table_fallbacks = 0;
    std::uint64_t absent_reads = 0;
    std::uint64_t dropped_packets = 0;
    std::uint64_t reports_lost = 0;
    std::uint64_t affinity_violations = 0;
    std::uint64_t events = 0;

    std::vector<std::uint64_t> dispatch_per_server;
    /// Outstanding-request counts seen by Poisson-epoch samples of every live server.
    std::vector<std::uint64_t> queue_length_histogram;

    double timeline_bin_us = 0.0;
    std::vector<TimelineBin> timeline;

    double window_us() const noexcept { return window_end_us - window_start_us; }
    double offered_rps(std::optional<int> class_tag = std::nullopt) const;
    double achieved_rps(std::optional<int> class_tag = std::nullopt) const;
    /// All classes merged.
    std::vector<double> all_latencies() const;
    LatencySummary summary(std::optional<int> class_tag = std::nullopt) const;
};

/// Normalized histogram (probabilities summing to 1).
std::vector<double> normalize(std::span<const std::uint64_t> histogram);

/// Total-variation distance between two histograms after normalization.
double total_variation(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Fraction of histogram mass at values >= n.
double tail_fraction(std::span<const std::uint64_t> histogram, std::size_t n);

} // namespace racksim
