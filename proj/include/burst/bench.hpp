#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "burst/mode.hpp"

namespace burst::bench {

/// One generated page tree: index.html plus a font, a stylesheet, a script,
/// and `image_count` images of `image_bytes` pseudo-random bytes each. The
/// same seed and config always produce a byte-identical tree.
struct FixtureConfig {
    std::filesystem::path dir;
    std::size_t image_count = 4;
    std::int64_t image_bytes = 30 * 1024;
    std::int64_t font_bytes = 44 * 1024;
    std::int64_t css_bytes = 120 * 1024;
    std::int64_t js_bytes = 84 * 1024;
    std::uint64_t seed = 1009;
};

void generate_fixture(const FixtureConfig& config);

struct ModeSpec {
    Mode mode = Mode::Get;
    int connections = 6;
    bool operator==(const ModeSpec&) const = default;
};

/// Parses "get:6" / "burst:1"; nullopt on anything else.
std::optional<ModeSpec> parse_mode_spec(std::string_view text);

struct ExperimentConfig {
    std::vector<std::size_t> image_counts{1, 10, 25, 50, 100, 150};
    std::vector<ModeSpec> modes{{Mode::Get, 6}, {Mode::Burst, 1}, {Mode::Burst, 6}};
    int runs_per_point = 10;
    std::int64_t image_bytes = 30 * 1024;
    std::chrono::milliseconds processing_delay{20};
    std::uint64_t seed = 1009;
    /// Fixture root; empty means a fresh temporary directory, removed after
    /// the run.
    std::filesystem::path work_dir;
};

/// Measured load times for one (n, mode, connections) point, in
/// milliseconds. mean/stddev use the population definition and are always
/// recomputable from the samples.
struct RunStats {
    std::size_t n = 0;  // images per page
    Mode mode = Mode::Get;
    int connections = 1;
    std::vector<double> samples_ms;
    bool failed = false;

    double mean_ms() const;
    double stddev_ms() const;
};

/// Generates one fixture per image count, starts a loopback server with the
/// configured processing delay, and runs every (n, mode) point
/// `runs_per_point` times with a cold cache per run. Each point gets one
/// extra untimed warm-up run. A failed fetch marks the point failed and the
/// experiment continues. Rows come back sorted by (n, mode, connections).
std::vector<RunStats> run_experiment(const ExperimentConfig& config);

/// CSV: `n,mode,connections,mean_ms,stddev_ms,samples`, samples ';'-joined,
/// skipping failed points. Throws when there is nothing to summarize.
std::string summarize(const std::vector<RunStats>& stats);

}  // namespace burst::bench
