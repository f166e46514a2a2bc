#include "burst/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <stdexcept>

#include "burst/client.hpp"
#include "burst/log.hpp"
#include "burst/server.hpp"
#include "burst/util.hpp"

namespace burst::bench {

namespace fs = std::filesystem;

namespace {

std::string random_blob(std::mt19937_64& rng, std::int64_t size) {
    std::string out;
    out.reserve(static_cast<std::size_t>(size));
    while (static_cast<std::int64_t>(out.size()) < size) {
        std::uint64_t word = rng();
        for (int i = 0; i < 8 && static_cast<std::int64_t>(out.size()) < size; ++i) {
            out.push_back(static_cast<char>(word & 0xff));
            word >>= 8;
        }
    }
    return out;
}

void write_file(const fs::path& file, std::string_view bytes) {
    std::ofstream out(file, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + file.string());
}

std::string image_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%03zu.jpg", index);
    return buf;
}

std::string index_html(std::size_t image_count) {
    std::string out =
        "<!doctype html>\n"
        "<html>\n"
        "<head>\n"
        "<title>fixture</title>\n"
        "<link rel=\"preload\" href=\"font.woff2\" as=\"font\">\n"
        "<link rel=\"stylesheet\" href=\"style.css\">\n"
        "<script src=\"app.js\"></script>\n"
        "</head>\n"
        "<body>\n";
    for (std::size_t i = 0; i < image_count; ++i)
        out += "<img src=\"" + image_name(i) + "\">\n";
    out += "</body>\n</html>\n";
    return out;
}

}  // namespace

void generate_fixture(const FixtureConfig& config) {
    if (config.image_bytes <= 0 || config.font_bytes <= 0 || config.css_bytes <= 0 ||
        config.js_bytes <= 0)
        throw std::invalid_argument("fixture object sizes must be > 0");
    fs::create_directories(config.dir);

    // Fixed generation order keeps the RNG stream, and therefore the tree,
    // reproducible for a given seed.
    std::mt19937_64 rng(config.seed);
    write_file(config.dir / "font.woff2", random_blob(rng, config.font_bytes));
    write_file(config.dir / "style.css", random_blob(rng, config.css_bytes));
    write_file(config.dir / "app.js", random_blob(rng, config.js_bytes));
    for (std::size_t i = 0; i < config.image_count; ++i)
        write_file(config.dir / image_name(i), random_blob(rng, config.image_bytes));
    write_file(config.dir / "index.html", index_html(config.image_count));
}

std::optional<ModeSpec> parse_mode_spec(std::string_view text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    const auto mode = parse_mode(text.substr(0, colon));
    const auto connections = parse_uint(text.substr(colon + 1));
    if (!mode || !connections || *connections < 1 || *connections > 1024)
        return std::nullopt;
    return ModeSpec{*mode, static_cast<int>(*connections)};
}

double RunStats::mean_ms() const {
    if (samples_ms.empty()) return 0.0;
    double sum = 0.0;
    for (double sample : samples_ms) sum += sample;
    return sum / static_cast<double>(samples_ms.size());
}

double RunStats::stddev_ms() const {
    if (samples_ms.empty()) return 0.0;
    const double mean = mean_ms();
    double accum = 0.0;
    for (double sample : samples_ms) accum += (sample - mean) * (sample - mean);
    return std::sqrt(accum / static_cast<double>(samples_ms.size()));
}

namespace {

fs::path make_temp_dir() {
    std::string tmpl = (fs::temp_directory_path() / "burst-bench-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr)
        throw std::runtime_error("cannot create a temporary fixture directory");
    return fs::path(tmpl);
}

bool stats_order(const RunStats& a, const RunStats& b) {
    if (a.n != b.n) return a.n < b.n;
    if (a.mode != b.mode)
        return to_string(a.mode) < to_string(b.mode);
    return a.connections < b.connections;
}

}  // namespace

std::vector<RunStats> run_experiment(const ExperimentConfig& config) {
    if (config.runs_per_point < 2)
        throw std::invalid_argument("at least two runs per point are needed for a stddev");
    if (config.image_counts.empty() || config.modes.empty())
        throw std::invalid_argument("experiment needs image counts and modes");
    if (config.image_bytes <= 0)
        throw std::invalid_argument("image size must be > 0");

    const bool own_dir = config.work_dir.empty();
    const fs::path root = own_dir ? make_temp_dir() : config.work_dir;

    std::vector<RunStats> rows;
    try {
        for (std::size_t n : config.image_counts) {
            FixtureConfig fixture;
            fixture.dir = root / ("n" + std::to_string(n));
            fixture.image_count = n;
            fixture.image_bytes = config.image_bytes;
            fixture.seed = config.seed;
            generate_fixture(fixture);
        }

        server::ServerConfig server_config;
        server_config.docroot = root;
        server_config.processing_delay = config.processing_delay;
        server::Server server(server_config);
        server.start();

        for (std::size_t n : config.image_counts) {
            for (const ModeSpec& spec : config.modes) {
                RunStats row;
                row.n = n;
                row.mode = spec.mode;
                row.connections = spec.connections;

                // one untimed warm-up, then the measured runs, cold cache each
                for (int run = 0; run <= config.runs_per_point && !row.failed; ++run) {
                    client::ObjectCache cache;
                    client::FetchPlan plan;
                    plan.mode = spec.mode;
                    plan.connections = spec.connections;
                    plan.page = wire::ObjectRef{"/n" + std::to_string(n) + "/index.html"};
                    plan.host = "127.0.0.1";
                    plan.port = server.port();
                    try {
                        const auto result = client::fetch_page(plan, cache);
                        if (run > 0)
                            row.samples_ms.push_back(result.total_duration.count() * 1000.0);
                    } catch (const std::exception& err) {
                        log_warn("point n=" + std::to_string(n) + " mode=" +
                                 std::string(to_string(spec.mode)) + ":" +
                                 std::to_string(spec.connections) + " failed: " + err.what());
                        row.failed = true;
                        row.samples_ms.clear();
                    }
                }
                rows.push_back(std::move(row));
            }
        }
        server.stop();
    } catch (...) {
        if (own_dir) fs::remove_all(root);
        throw;
    }
    if (own_dir) fs::remove_all(root);

    std::sort(rows.begin(), rows.end(), stats_order);
    return rows;
}

std::string summarize(const std::vector<RunStats>& stats) {
    if (stats.empty()) throw std::invalid_argument("no experiment rows to summarize");
    std::string out = "n,mode,connections,mean_ms,stddev_ms,samples\n";
    std::size_t emitted = 0;
    for (const RunStats& row : stats) {
        if (row.failed || row.samples_ms.empty()) continue;
        ++emitted;
        out += std::to_string(row.n);
        out += ',';
        out += to_string(row.mode);
        out += ',';
        out += std::to_string(row.connections);
        out += ',';
        out += format_double(row.mean_ms());
        out += ',';
        out += format_double(row.stddev_ms());
        out += ',';
        for (std::size_t i = 0; i < row.samples_ms.size(); ++i) {
            if (i > 0) out += ';';
            out += format_double(row.samples_ms[i]);
        }
        out += '\n';
    }
    if (emitted == 0) throw std::runtime_error("every experiment point failed");
    return out;
}

}  // namespace burst::bench
