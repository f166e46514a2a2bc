#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "burst/bench.hpp"
#include "burst/client.hpp"
#include "burst/html_extract.hpp"
#include "burst/log.hpp"
#include "burst/model.hpp"
#include "burst/server.hpp"
#include "burst/util.hpp"
#include "burst/version.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

// host[:port]/path pieces of an http:// URL
struct ParsedUrl {
    std::string host;
    std::uint16_t port = 80;
    std::string path = "/";
};

ParsedUrl parse_http_url(const std::string& url) {
    const std::string prefix = "http://";
    if (url.rfind(prefix, 0) != 0)
        throw CLI::ValidationError("URL", "only http:// URLs are supported: " + url);
    std::string rest = url.substr(prefix.size());
    ParsedUrl out;
    const std::size_t slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    const std::size_t colon = authority.rfind(':');
    if (colon != std::string::npos) {
        const auto port = burst::parse_uint(authority.substr(colon + 1));
        if (!port || *port < 1 || *port > 65535)
            throw CLI::ValidationError("URL", "invalid port in " + url);
        out.port = static_cast<std::uint16_t>(*port);
        authority = authority.substr(0, colon);
    }
    if (authority.empty())
        throw CLI::ValidationError("URL", "missing host in " + url);
    out.host = authority;
    return out;
}

void write_output(const std::string& out_path, const std::string& data) {
    if (out_path.empty()) {
        std::fwrite(data.data(), 1, data.size(), stdout);
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("cannot write " + out_path);
}

int run_serve(const std::string& root, std::uint16_t port, const std::string& host,
              int delay_ms, bool per_object_delay, int max_burst) {
    burst::server::ServerConfig config;
    config.docroot = root;
    config.host = host;
    config.port = port;
    config.processing_delay = std::chrono::milliseconds(delay_ms);
    config.per_object_delay = per_object_delay;
    config.max_burst_paths = max_burst;

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    burst::server::serve(config, g_stop);
    return 0;
}

int run_fetch(const std::string& url, const std::string& mode_name, int connections,
              const std::string& cache_dir, bool timing) {
    const ParsedUrl parsed = parse_http_url(url);
    const auto mode = burst::parse_mode(mode_name);
    if (!mode) throw CLI::ValidationError("--mode", "expected get or burst");

    burst::client::FetchPlan plan;
    plan.mode = *mode;
    plan.connections = connections;
    plan.page = burst::wire::ObjectRef{parsed.path};
    plan.host = parsed.host;
    plan.port = parsed.port;

    burst::client::ObjectCache cache;
    if (!cache_dir.empty()) cache = burst::client::ObjectCache::load_dir(cache_dir);

    const auto result = burst::client::fetch_page(plan, cache);
    if (!cache_dir.empty()) cache.save_dir(cache_dir);

    const auto manifest = burst::html::extract_manifest(result.html, plan.page);
    for (const auto& ref : manifest.objects) {
        const auto it = result.objects.find(ref);
        const int status = it == result.objects.end() ? 0 : it->second.status;
        const std::size_t size = it == result.objects.end() ? 0 : it->second.body.size();
        std::printf("%d %s %zu\n", status, ref.path.c_str(), size);
    }
    std::printf("total_duration_ms=%s\n",
                burst::format_double(result.total_duration.count() * 1000.0).c_str());
    if (timing) {
        std::printf("request_count=%llu\n",
                    static_cast<unsigned long long>(result.request_count));
        std::printf("bytes_on_wire=%llu\n",
                    static_cast<unsigned long long>(result.bytes_on_wire));
    }
    return 0;
}

int run_extract(const std::string& file, std::string base) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file);
    std::ostringstream content;
    content << in.rdbuf();

    if (base.empty()) {
        const auto name = std::filesystem::path(file).filename().string();
        base = "/" + name;
    }
    const auto manifest =
        burst::html::extract_manifest(content.str(), burst::wire::ObjectRef{base});
    for (const auto& ref : manifest.objects) std::printf("%s\n", ref.path.c_str());
    return 0;
}

int run_model(std::int64_t payload, std::size_t max_n, const std::vector<int>& connections,
              std::int64_t ip, std::int64_t tcp, std::int64_t http) {
    burst::model::OverheadParams params{ip, tcp, http};
    const auto rows = burst::model::efficiency_sweep(payload, max_n, params, connections);
    const std::string csv = burst::model::sweep_to_csv(rows);
    std::fwrite(csv.data(), 1, csv.size(), stdout);
    return 0;
}

int run_bench(const std::vector<std::size_t>& image_counts,
              const std::vector<std::string>& mode_names, int runs, int delay_ms,
              int image_kb, std::uint64_t seed, const std::string& out_path,
              bool model_only) {
    if (model_only)
        return run_model(1400, 150, {1, 6}, 20, 20, 0) == 0 ? 0 : 2;

    burst::bench::ExperimentConfig config;
    config.image_counts = image_counts;
    config.modes.clear();
    for (const std::string& name : mode_names) {
        const auto spec = burst::bench::parse_mode_spec(name);
        if (!spec)
            throw CLI::ValidationError("--modes", "expected mode:connections, got " + name);
        config.modes.push_back(*spec);
    }
    config.runs_per_point = runs;
    config.image_bytes = static_cast<std::int64_t>(image_kb) * 1024;
    config.processing_delay = std::chrono::milliseconds(delay_ms);
    config.seed = seed;

    const auto rows = burst::bench::run_experiment(config);
    write_output(out_path, burst::bench::summarize(rows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"static HTTP server, page fetcher, and benchmark for the BURST "
                 "batched-object extension"};
    app.set_version_flag("--version", std::string("httpburst ") + burst::kVersion +
                                          " (wire protocol revision " +
                                          std::to_string(burst::kWireRevision) + ")");
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "error, warn, info, or debug")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
    app.require_subcommand(1);

    // serve
    auto* serve = app.add_subcommand("serve", "serve a directory over GET and BURST");
    std::string root;
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080;
    int delay_ms = 0;
    bool per_object_delay = false;
    int max_burst = 512;
    serve->add_option("--root", root, "document root directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    serve->add_option("--port", port, "listen port");
    serve->add_option("--host", host, "listen address");
    serve->add_option("--delay-ms", delay_ms, "processing delay per request, ms")
        ->check(CLI::NonNegativeNumber);
    serve->add_flag("--per-object-delay", per_object_delay,
                    "apply the delay per burst part instead of per request");
    serve->add_option("--max-burst", max_burst, "maximum paths per BURST request")
        ->check(CLI::PositiveNumber);

    // fetch
    auto* fetch = app.add_subcommand("fetch", "load a page and its objects");
    std::string url;
    std::string mode_name = "get";
    int connections = 6;
    std::string cache_dir;
    bool timing = false;
    fetch->add_option("url", url, "page URL (http://host:port/path)")->required();
    fetch->add_option("--mode", mode_name, "get or burst")
        ->check(CLI::IsMember({"get", "burst"}));
    fetch->add_option("--connections", connections, "parallel connections")
        ->check(CLI::Range(1, 64));
    fetch->add_option("--cache-dir", cache_dir, "object cache directory");
    fetch->add_flag("--timing", timing, "also print request and byte counters");

    // extract
    auto* extract = app.add_subcommand("extract", "list a page's inlined objects");
    std::string html_file;
    std::string base;
    extract->add_option("file", html_file, "HTML file")->required();
    extract->add_option("--base", base, "server path of the page (default /<filename>)");

    // model
    auto* model = app.add_subcommand("model", "emit the analytic efficiency sweep as CSV");
    std::int64_t payload = 1400;
    std::size_t max_n = 150;
    std::vector<int> model_connections{1, 6};
    std::int64_t ip = 20, tcp = 20, http = 0;
    model->add_option("--payload", payload, "object size, bytes")
        ->check(CLI::NonNegativeNumber);
    model->add_option("--max-n", max_n, "largest object count")->check(CLI::PositiveNumber);
    model->add_option("--c", model_connections, "BURST connection counts")
        ->delimiter(',');
    model->add_option("--ip", ip, "IP header bytes")->check(CLI::NonNegativeNumber);
    model->add_option("--tcp", tcp, "TCP header bytes")->check(CLI::NonNegativeNumber);
    model->add_option("--http", http, "HTTP header bytes")->check(CLI::NonNegativeNumber);

    // bench
    auto* bench = app.add_subcommand("bench", "measure GET vs BURST page load times");
    std::vector<std::size_t> image_counts{1, 10, 25, 50, 100, 150};
    std::vector<std::string> mode_names{"get:6", "burst:1", "burst:6"};
    int runs = 10;
    int bench_delay_ms = 20;
    int image_kb = 30;
    std::uint64_t seed = 1009;
    std::string out_path;
    bool model_only = false;
    bench->add_option("--n", image_counts, "image counts")->delimiter(',');
    bench->add_option("--modes", mode_names, "mode:connections pairs")->delimiter(',');
    bench->add_option("--runs", runs, "timed runs per point")->check(CLI::Range(2, 1000));
    bench->add_option("--delay-ms", bench_delay_ms, "server processing delay, ms")
        ->check(CLI::NonNegativeNumber);
    bench->add_option("--image-kb", image_kb, "image size, KiB")
        ->check(CLI::PositiveNumber);
    bench->add_option("--seed", seed, "fixture RNG seed");
    bench->add_option("--out", out_path, "CSV output file (default stdout)");
    bench->add_flag("--model-only", model_only,
                    "emit the analytic sweep instead of measuring");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (const auto level = burst::parse_log_level(log_level))
        burst::set_log_level(*level);

    try {
        if (serve->parsed())
            return run_serve(root, port, host, delay_ms, per_object_delay, max_burst);
        if (fetch->parsed())
            return run_fetch(url, mode_name, connections, cache_dir, timing);
        if (extract->parsed()) return run_extract(html_file, base);
        if (model->parsed())
            return run_model(payload, max_n, model_connections, ip, tcp, http);
        if (bench->parsed())
            return run_bench(image_counts, mode_names, runs, bench_delay_ms, image_kb,
                             seed, out_path, model_only);
    } catch (const CLI::ValidationError& e) {
        burst::log_error(e.what());
        return 1;
    } catch (const std::exception& e) {
        burst::log_error(e.what());
        return 2;
    }
    return 1;
}
