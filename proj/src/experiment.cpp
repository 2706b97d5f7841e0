#include "racksim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef RACKSIM_VERSION
#define RACKSIM_VERSION "0.0.0"
#endif

namespace racksim {

namespace {

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string opt(const std::optional<double>& v)
{
    return v ? fmt("%.3f", *v) : std::string{};
}

std::optional<double> parse_opt(const std::string& s)
{
    if (s.empty()) {
        return std::nullopt;
    }
    return std::stod(s);
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::vector<ResultRow> rows_from(const MetricsRecord& m, double load, std::uint64_t seed)
{
    std::vector<ResultRow> rows;
    for (const auto& [tag, c] : m.classes) {
        const auto s = summarize(c.latencies);
        ResultRow r;
        r.load_fraction = load;
        r.offered_rps = m.offered_rps(tag);
        r.achieved_rps = m.achieved_rps(tag);
        r.class_tag = tag;
        r.p50_us = s.p50;
        r.p99_us = s.p99;
        r.p999_us = s.p999;
        r.mean_us = s.mean;
        r.fallback_count = m.table_fallbacks;
        r.seed = seed;
        rows.push_back(r);
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int parallel)
{
    struct Point {
        double load;
        std::uint64_t seed;
        std::vector<ResultRow> rows;
        double wall_s = 0.0;
    };
    std::vector<Point> points;
    for (double load : config.sweep.loads) {
        for (std::uint64_t seed : config.sweep.seeds) {
            points.push_back(Point{load, seed, {}, 0.0});
        }
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                const auto t0 = std::chrono::steady_clock::now();
                RackSimulation sim(config.rack, points[i].load, points[i].seed);
                points[i].rows = rows_from(sim.run(config.sweep.length), points[i].load, points[i].seed);
                points[i].wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const int threads = std::clamp<int>(parallel, 1, static_cast<int>(std::max<std::size_t>(points.size(), 1)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    ExperimentResult result;
    for (const auto& p : points) {
        result.rows.insert(result.rows.end(), p.rows.begin(), p.rows.end());
        result.timings.push_back(PointTiming{p.load, p.seed, p.wall_s});
    }
    std::stable_sort(result.rows.begin(), result.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.load_fraction != b.load_fraction) {
            return a.load_fraction < b.load_fraction;
        }
        if (a.class_tag != b.class_tag) {
            return a.class_tag < b.class_tag;
        }
        return a.seed < b.seed;
    });
    return result;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << fmt("%.4f", r.load_fraction) << ',' << fmt("%.1f", r.offered_rps) << ',' << fmt("%.1f", r.achieved_rps)
            << ',' << r.class_tag << ',' << opt(r.p50_us) << ',' << opt(r.p99_us) << ',' << opt(r.p999_us) << ','
            << fmt("%.3f", r.mean_us) << ',' << r.fallback_count << ',' << r.seed << '\n';
    }
}

std::vector<ResultRow> read_csv(std::istream& in, const std::string& name)
{
    std::string line;
    if (!std::getline(in, line) || split(line) != split(kCsvHeader)) {
        throw std::runtime_error(name + ": missing or unexpected CSV header");
    }
    std::vector<ResultRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto f = split(line);
        if (f.size() != 10) {
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": expected 10 fields");
        }
        try {
            ResultRow r;
            r.load_fraction = std::stod(f[0]);
            r.offered_rps = std::stod(f[1]);
            r.achieved_rps = std::stod(f[2]);
            r.class_tag = std::stoi(f[3]);
            r.p50_us = parse_opt(f[4]);
            r.p99_us = parse_opt(f[5]);
            r.p999_us = parse_opt(f[6]);
            r.mean_us = std::stod(f[7]);
            r.fallback_count = std::stoull(f[8]);
            r.seed = std::stoull(f[9]);
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    return rows;
}

void write_manifest(std::ostream& out, const ExperimentConfig& config, const std::string& config_text,
                    const ExperimentResult& result)
{
    out << "tool racksim " << RACKSIM_VERSION << '\n';
    out << "config " << config.name << '\n';
    out << "config_hash " << config_hash(config_text) << '\n';
    out << "seeds";
    for (auto s : config.sweep.seeds) {
        out << ' ' << s;
    }
    out << '\n';
    out << "loads";
    for (double l : config.sweep.loads) {
        out << ' ' << fmt("%.4f", l);
    }
    out << '\n';
    if (config.sweep.length.duration_us > 0.0) {
        out << "duration_us " << fmt("%.1f", config.sweep.length.duration_us) << '\n';
    } else {
        out << "requests_per_point " << config.sweep.length.measured_requests << '\n';
    }
    for (const auto& t : result.timings) {
        out << "point load=" << fmt("%.4f", t.load) << " seed=" << t.seed << " wall_s=" << fmt("%.3f", t.wall_s)
            << '\n';
    }
}

std::vector<CompareRow> compare(const std::vector<ResultRow>& a, const std::vector<ResultRow>& b)
{
    struct Acc {
        double sum = 0.0;
        int n = 0;
        int missing = 0;
    };
    auto group = [](const std::vector<ResultRow>& rows) {
        std::map<std::pair<double, int>, Acc> g;
        for (const auto& r : rows) {
            auto& acc = g[{r.load_fraction, r.class_tag}];
            if (r.p99_us) {
                acc.sum += *r.p99_us;
                ++acc.n;
            } else {
                ++acc.missing;
            }
        }
        return g;
    };
    const auto ga = group(a);
    const auto gb = group(b);
    if (ga.size() != gb.size() || !std::equal(ga.begin(), ga.end(), gb.begin(),
                                              [](const auto& x, const auto& y) { return x.first == y.first; })) {
        std::ostringstream msg;
        msg << "sweep grids differ: " << ga.size() << " vs " << gb.size() << " (load, class) points";
        for (const auto& [key, acc] : ga) {
            if (!gb.contains(key)) {
                msg << "; load " << key.first << " class " << key.second << " only in the first file";
                break;
            }
        }
        for (const auto& [key, acc] : gb) {
            if (!ga.contains(key)) {
                msg << "; load " << key.first << " class " << key.second << " only in the second file";
                break;
            }
        }
        throw std::runtime_error(msg.str());
    }
    std::vector<CompareRow> out;
    for (const auto& [key, x] : ga) {
        const auto& y = gb.at(key);
        CompareRow r;
        r.load = key.first;
        r.class_tag = key.second;
        if (x.n > 0) {
            r.p99_a = x.sum / x.n;
        }
        if (y.n > 0) {
            r.p99_b = y.sum / y.n;
        }
        if (r.p99_a && r.p99_b && *r.p99_b > 0.0) {
            r.ratio = *r.p99_a / *r.p99_b;
        }
        out.push_back(r);
    }
    return out;
}

void write_compare(std::ostream& out, const std::vector<CompareRow>& rows)
{
    out << "load_fraction,class_tag,p99_a_us,p99_b_us,ratio\n";
    for (const auto& r : rows) {
        out << fmt("%.4f", r.load) << ',' << r.class_tag << ',' << opt(r.p99_a) << ',' << opt(r.p99_b) << ','
            << (r.ratio ? fmt("%.4f", *r.ratio) : std::string{}) << '\n';
    }
}

} // namespace racksim
