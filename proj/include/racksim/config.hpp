#pragma once

#include "racksim/rack.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace racksim {

struct SweepConfig {
    std::vector<double> loads;
    std::vector<std::uint64_t> seeds{1};
    RunLength length;
};

struct ExperimentConfig {
    std::string name;
    RackConfig rack;
    SweepConfig sweep;
    std::string output = "results";
};

/// Raised for malformed or inconsistent configs; what() names the key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& name = "config");
ExperimentConfig parse_config(const std::filesystem::path& path);

/// 64-bit FNV-1a of the config text, as 16 hex digits.
std::string config_hash(const std::string& text);

} // namespace racksim
