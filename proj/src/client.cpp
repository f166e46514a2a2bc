#include "burst/client.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <thread>

#include "burst/log.hpp"
#include "burst/net.hpp"
#include "burst/util.hpp"

namespace burst::client {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

ObjectCache::ObjectCache(ObjectCache&& other) noexcept {
    std::lock_guard<std::mutex> lock(other.mutex_);
    entries_ = std::move(other.entries_);
}

ObjectCache& ObjectCache::operator=(ObjectCache&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        entries_ = std::move(other.entries_);
    }
    return *this;
}

bool ObjectCache::contains(const wire::ObjectRef& ref) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.find(ref) != entries_.end();
}

std::optional<std::string> ObjectCache::lookup(const wire::ObjectRef& ref) const {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = entries_.find(ref);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ObjectCache::insert(const wire::ObjectRef& ref, std::string bytes) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_[ref] = std::move(bytes);
}

std::size_t ObjectCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

void ObjectCache::clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.clear();
}

ObjectCache ObjectCache::load_dir(const fs::path& dir) {
    ObjectCache cache;
    std::error_code ec;
    if (!fs::is_directory(dir, ec) || ec) return cache;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const auto path = percent_decode(entry.path().filename().string());
        if (!path || !wire::valid_path(*path)) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream body;
        body << in.rdbuf();
        if (in.bad()) continue;
        cache.insert(wire::ObjectRef{*path}, body.str());
    }
    return cache;
}

void ObjectCache::save_dir(const fs::path& dir) const {
    fs::create_directories(dir);
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [ref, bytes] : entries_) {
        std::ofstream out(dir / percent_encode(ref.path), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
}

std::vector<std::vector<wire::ObjectRef>> partition_missing(
    const std::vector<MissingObject>& missing, int connections) {
    if (missing.empty())
        throw std::invalid_argument("nothing to partition: missing set is empty");
    if (connections < 1)
        throw std::invalid_argument("connections must be >= 1");

    const std::size_t group_count =
        std::min<std::size_t>(static_cast<std::size_t>(connections), missing.size());
    std::vector<std::vector<std::size_t>> groups(group_count);

    const bool sizes_known =
        std::all_of(missing.begin(), missing.end(),
                    [](const MissingObject& m) { return m.size.has_value(); });

    if (!sizes_known) {
        for (std::size_t i = 0; i < missing.size(); ++i)
            groups[i % group_count].push_back(i);
    } else {
        // Longest first into the least loaded group.
        std::vector<std::size_t> order(missing.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (*missing[a].size != *missing[b].size)
                return *missing[a].size > *missing[b].size;
            return a < b;
        });
        using Load = std::pair<std::int64_t, std::size_t>;  // (byte total, group)
        std::priority_queue<Load, std::vector<Load>, std::greater<>> loads;
        for (std::size_t g = 0; g < group_count; ++g) loads.emplace(0, g);
        for (std::size_t index : order) {
            auto [load, g] = loads.top();
            loads.pop();
            groups[g].push_back(index);
            loads.emplace(load + *missing[index].size, g);
        }
        for (auto& group : groups) std::sort(group.begin(), group.end());
    }

    std::vector<std::vector<wire::ObjectRef>> out(group_count);
    for (std::size_t g = 0; g < group_count; ++g) {
        out[g].reserve(groups[g].size());
        for (std::size_t index : groups[g]) out[g].push_back(missing[index].ref);
    }
    return out;
}

std::vector<wire::ObjectRef> diff_cache(const html::PageManifest& manifest,
                                        const ObjectCache& cache) {
    std::vector<wire::ObjectRef> missing;
    for (const wire::ObjectRef& ref : manifest.objects)
        if (!cache.contains(ref)) missing.push_back(ref);
    return missing;
}

namespace {

net::HttpStream open_stream(const std::string& host, std::uint16_t port,
                            net::Deadline deadline) {
    try {
        return net::HttpStream(net::connect_tcp(host, port, deadline));
    } catch (const std::exception& err) {
        throw FetchError("cannot connect to " + host + ":" + std::to_string(port) +
                         ": " + err.what());
    }
}

struct WorkerResult {
    std::vector<std::pair<wire::ObjectRef, FetchedObject>> fetched;
    Clock::time_point last_byte{};
    std::uint64_t requests = 0;
    std::uint64_t bytes = 0;
    std::exception_ptr error;
};

std::string host_header(const FetchPlan& plan) {
    return plan.host + ":" + std::to_string(plan.port);
}

FetchedObject object_from_status(int status, std::string body, const wire::ObjectRef& ref) {
    if (status == 200) return FetchedObject{200, std::move(body)};
    if (status == 404) return FetchedObject{404, {}};
    throw FetchError("unexpected status " + std::to_string(status) + " for " + ref.path);
}

void get_worker(const FetchPlan& plan, const std::vector<wire::ObjectRef>& missing,
                std::atomic<std::size_t>& next, net::HttpStream stream,
                net::Deadline deadline, WorkerResult& out) {
    try {
        const std::string host = host_header(plan);
        while (true) {
            const std::size_t index = next.fetch_add(1);
            if (index >= missing.size()) break;
            const wire::ObjectRef& ref = missing[index];
            stream.write(wire::encode_get_request(ref, host), deadline);
            ++out.requests;
            auto response = stream.read_response(deadline);
            if (!response)
                throw FetchError("server closed the connection before " + ref.path);
            out.last_byte = Clock::now();
            out.fetched.emplace_back(
                ref, object_from_status(response->status, std::move(response->body), ref));
        }
    } catch (...) {
        out.error = std::current_exception();
    }
    out.bytes = stream.bytes_read() + stream.bytes_written();
}

void burst_worker(const FetchPlan& plan, const std::vector<wire::ObjectRef>& group,
                  net::HttpStream stream, net::Deadline deadline, WorkerResult& out) {
    try {
        const wire::BurstRequest request{group};
        stream.write(wire::encode_burst_request(request, host_header(plan)), deadline);
        ++out.requests;
        for (const wire::ObjectRef& ref : group) {
            auto response = stream.read_response(deadline);
            if (!response)
                throw wire::IncompleteFrame("burst response ended before " + ref.path);
            wire::BurstPart part = wire::part_from_response(*response);
            if (part.path != ref)
                throw wire::ProtocolError("burst part out of order: expected " + ref.path +
                                          ", got " + part.path.path);
            out.last_byte = Clock::now();
            out.fetched.emplace_back(
                ref, object_from_status(part.status, std::move(part.body), ref));
        }
    } catch (...) {
        out.error = std::current_exception();
    }
    out.bytes = stream.bytes_read() + stream.bytes_written();
}

}  // namespace

FetchResult fetch_page(const FetchPlan& plan, ObjectCache& cache) {
    if (plan.connections < 1)
        throw std::invalid_argument("connections must be >= 1");
    if (!wire::valid_path(plan.page.path))
        throw std::invalid_argument("invalid page path: " + plan.page.path);

    const net::Deadline deadline = net::deadline_after(plan.timeout);
    net::HttpStream first = open_stream(plan.host, plan.port, deadline);

    const Clock::time_point start = Clock::now();
    std::optional<wire::Response> page_response;
    try {
        first.write(wire::encode_get_request(plan.page, host_header(plan)), deadline);
        page_response = first.read_response(deadline);
    } catch (const std::exception& err) {
        throw FetchError(std::string("page request failed: ") + err.what());
    }
    if (!page_response)
        throw FetchError("server closed the connection before the page response");
    if (page_response->status != 200)
        throw FetchError("page request failed with status " +
                         std::to_string(page_response->status) + " for " + plan.page.path);
    Clock::time_point last_byte = Clock::now();

    const html::PageManifest manifest =
        html::extract_manifest(page_response->body, plan.page);
    const std::vector<wire::ObjectRef> missing = diff_cache(manifest, cache);

    FetchResult result;
    result.html = std::move(page_response->body);
    result.request_count = 1;

    std::vector<WorkerResult> workers;
    if (!missing.empty()) {
        std::vector<std::vector<wire::ObjectRef>> groups;
        std::atomic<std::size_t> next{0};
        if (plan.mode == Mode::Burst) {
            std::vector<MissingObject> unsized;
            unsized.reserve(missing.size());
            for (const wire::ObjectRef& ref : missing)
                unsized.push_back(MissingObject{ref, std::nullopt});
            groups = partition_missing(unsized, plan.connections);
        } else {
            groups.resize(std::min<std::size_t>(
                static_cast<std::size_t>(plan.connections), missing.size()));
        }

        // all connections are opened before any worker starts, so a failed
        // connect cannot leave threads behind
        std::vector<net::HttpStream> streams;
        streams.reserve(groups.size());
        streams.push_back(std::move(first));  // the page connection is worker 0
        for (std::size_t w = 1; w < groups.size(); ++w)
            streams.push_back(open_stream(plan.host, plan.port, deadline));

        workers.resize(groups.size());
        std::vector<std::thread> threads;
        threads.reserve(groups.size());
        try {
            for (std::size_t w = 0; w < groups.size(); ++w) {
                if (plan.mode == Mode::Burst) {
                    threads.emplace_back(burst_worker, std::cref(plan),
                                         std::cref(groups[w]), std::move(streams[w]),
                                         deadline, std::ref(workers[w]));
                } else {
                    threads.emplace_back(get_worker, std::cref(plan), std::cref(missing),
                                         std::ref(next), std::move(streams[w]), deadline,
                                         std::ref(workers[w]));
                }
            }
        } catch (...) {
            for (std::thread& thread : threads) thread.join();
            throw;
        }
        for (std::thread& thread : threads) thread.join();
    }

    std::size_t failures = 0;
    std::string first_error;
    for (WorkerResult& worker : workers) {
        if (worker.error) {
            ++failures;
            if (first_error.empty()) {
                try {
                    std::rethrow_exception(worker.error);
                } catch (const std::exception& err) {
                    first_error = err.what();
                }
            }
        }
        result.request_count += worker.requests;
        for (auto& [ref, object] : worker.fetched)
            result.objects.emplace(ref, std::move(object));
        if (worker.last_byte > last_byte) last_byte = worker.last_byte;
    }
    result.bytes_on_wire = first.socket().valid()
                               ? first.bytes_read() + first.bytes_written()
                               : 0;
    for (const WorkerResult& worker : workers) result.bytes_on_wire += worker.bytes;

    if (failures > 0)
        throw FetchError("page load failed on " + std::to_string(failures) + " of " +
                         std::to_string(workers.size()) + " connections (" +
                         std::to_string(result.objects.size()) + " of " +
                         std::to_string(missing.size()) + " objects retrieved): " +
                         first_error);

    // cached entries complete the manifest coverage
    for (const wire::ObjectRef& ref : manifest.objects) {
        if (result.objects.count(ref)) continue;
        if (auto bytes = cache.lookup(ref))
            result.objects.emplace(ref, FetchedObject{200, std::move(*bytes)});
    }
    for (const auto& [ref, object] : result.objects)
        if (object.status == 200) cache.insert(ref, object.body);

    result.total_duration = last_byte - start;
    return result;
}

}  // namespace burst::client
