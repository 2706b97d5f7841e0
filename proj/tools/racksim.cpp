#include "racksim/config.hpp"
#include "racksim/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace racksim;

namespace {

std::string slurp(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(path.string() + ": cannot open");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<ResultRow> load_rows(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(path.string() + ": cannot open");
    }
    return read_csv(in, path.string());
}

int cmd_run(const fs::path& config_path, const std::string& out_dir, int parallel)
{
    const std::string text = slurp(config_path);
    const ExperimentConfig cfg = parse_config_text(text, config_path.stem().string());
    const fs::path dir = out_dir.empty() ? fs::path(cfg.output) : fs::path(out_dir);
    fs::create_directories(dir);

    const auto result = run_experiment(cfg, parallel);

    const fs::path csv = dir / (cfg.name + ".csv");
    std::ofstream out(csv);
    write_csv(out, result.rows);
    std::ofstream manifest(dir / (cfg.name + ".manifest.txt"));
    write_manifest(manifest, cfg, text, result);
    if (!out || !manifest) {
        throw std::runtime_error(dir.string() + ": write failed");
    }
    std::cout << "wrote " << csv.string() << " (" << result.rows.size() << " rows)\n";
    return 0;
}

int cmd_compare(const fs::path& a, const fs::path& b)
{
    write_compare(std::cout, compare(load_rows(a), load_rows(b)));
    return 0;
}

int cmd_validate(const fs::path& config_path)
{
    const auto cfg = parse_config(config_path);
    std::cout << cfg.name << ": ok (" << cfg.rack.servers << " servers, " << cfg.sweep.loads.size() << " loads, "
              << cfg.sweep.seeds.size() << " seeds)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rack-scale request scheduling simulator"};
    app.require_subcommand(1);

    std::string run_config, out_dir;
    int parallel = 1;
    auto* run = app.add_subcommand("run", "Run a sweep and write CSV plus manifest");
    run->add_option("config", run_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory (default: the config's output key)");
    run->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);

    std::string csv_a, csv_b;
    auto* cmp = app.add_subcommand("compare", "Per-point p99 of a against b");
    cmp->add_option("a", csv_a, "First CSV")->required()->check(CLI::ExistingFile);
    cmp->add_option("b", csv_b, "Second CSV")->required()->check(CLI::ExistingFile);

    std::string validate_config;
    auto* val = app.add_subcommand("validate", "Parse and check a config");
    val->add_option("config", validate_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(run_config, out_dir, parallel);
        }
        if (*cmp) {
            return cmd_compare(csv_a, csv_b);
        }
        return cmd_validate(validate_config);
    } catch (const std::exception& e) {
        std::cerr << "racksim: " << e.what() << '\n';
        return 1;
    }
}
