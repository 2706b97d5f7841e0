#include "racksim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace racksim {

std::optional<double> quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) {
        return std::nullopt;
    }
    if (!(p > 0.0) || !(p < 1.0)) {
        throw std::invalid_argument("quantile level must be in (0, 1)");
    }
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

std::optional<double> quantile(std::span<const double> samples, double p)
{
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, p);
}

LatencySummary summarize(std::vector<double> samples)
{
    LatencySummary s;
    s.count = samples.size();
    if (samples.empty()) {
        return s;
    }
    std::sort(samples.begin(), samples.end());
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    s.p50 = quantile_sorted(samples, 0.5);
    s.p99 = quantile_sorted(samples, 0.99);
    s.p999 = quantile_sorted(samples, 0.999);
    return s;
}

double MetricsRecord::offered_rps(std::optional<int> class_tag) const
{
    if (window_us() <= 0.0) {
        return 0.0;
    }
    std::uint64_t n = 0;
    for (const auto& [tag, c] : classes) {
        if (!class_tag || *class_tag == tag) {
            n += c.arrived_in_window;
        }
    }
    return static_cast<double>(n) / window_us() * 1e6;
}

double MetricsRecord::achieved_rps(std::optional<int> class_tag) const
{
    if (window_us() <= 0.0) {
        return 0.0;
    }
    std::uint64_t n = 0;
    for (const auto& [tag, c] : classes) {
        if (!class_tag || *class_tag == tag) {
            n += c.completed_in_window;
        }
    }
    return static_cast<double>(n) / window_us() * 1e6;
}

std::vector<double> MetricsRecord::all_latencies() const
{
    std::vector<double> all;
    for (const auto& [tag, c] : classes) {
        all.insert(all.end(), c.latencies.begin(), c.latencies.end());
    }
    return all;
}

LatencySummary MetricsRecord::summary(std::optional<int> class_tag) const
{
    if (!class_tag) {
        return summarize(all_latencies());
    }
    const auto it = classes.find(*class_tag);
    return it == classes.end() ? LatencySummary{} : summarize(it->second.latencies);
}

std::vector<double> normalize(std::span<const std::uint64_t> histogram)
{
    const double total = static_cast<double>(std::accumulate(histogram.begin(), histogram.end(), std::uint64_t{0}));
    std::vector<double> p(histogram.size(), 0.0);
    if (total <= 0.0) {
        return p;
    }
    for (std::size_t i = 0; i < histogram.size(); ++i) {
        p[i] = static_cast<double>(histogram[i]) / total;
    }
    return p;
}

double total_variation(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b)
{
    const auto pa = normalize(a);
    const auto pb = normalize(b);
    const std::size_t n = std::max(pa.size(), pb.size());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i < pa.size() ? pa[i] : 0.0;
        const double y = i < pb.size() ? pb[i] : 0.0;
        d += std::abs(x - y);
    }
    return 0.5 * d;
}

double tail_fraction(std::span<const std::uint64_t> histogram, std::size_t n)
{
    const auto p = normalize(histogram);
    double t = 0.0;
    for (std::size_t i = n; i < p.size(); ++i) {
        t += p[i];
    }
    return t;
}

} // namespace racksim
