#pragma once

#include "racksim/config.hpp"
#include "racksim/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace racksim {

struct ResultRow {
    double load_fraction = 0.0;
    double offered_rps = 0.0;
    double achieved_rps = 0.0;
    int class_tag = 0;
    std::optional<double> p50_us;
    std::optional<double> p99_us;
    std::optional<double> p999_us;
    double mean_us = 0.0;
    std::uint64_t fallback_count = 0;
    std::uint64_t seed = 0;
};

inline constexpr const char* kCsvHeader =
    "load_fraction,offered_rps,achieved_rps,class_tag,p50_us,p99_us,p999_us,mean_us,fallback_count,seed";

/// One row per class present in the record.
std::vector<ResultRow> rows_from(const MetricsRecord& m, double load, std::uint64_t seed);

struct PointTiming {
    double load = 0.0;
    std::uint64_t seed = 0;
    double wall_s = 0.0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows; // ordered by (load, class, seed)
    std::vector<PointTiming> timings;
};

/// Runs every (load, seed) point on up to `parallel` threads.
ExperimentResult run_experiment(const ExperimentConfig& config, int parallel = 1);

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(std::istream& in, const std::string& name = "csv");

void write_manifest(std::ostream& out, const ExperimentConfig& config, const std::string& config_text,
                    const ExperimentResult& result);

struct CompareRow {
    double load = 0.0;
    int class_tag = 0;
    std::optional<double> p99_a;
    std::optional<double> p99_b;
    std::optional<double> ratio;
};

/// Per-(load, class) p99 averaged over seeds, a against b. Throws
/// std::runtime_error if the two grids differ.
std::vector<CompareRow> compare(const std::vector<ResultRow>& a, const std::vector<ResultRow>& b);

void write_compare(std::ostream& out, const std::vector<CompareRow>& rows);

} // namespace racksim
