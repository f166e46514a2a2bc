#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "burst/html_extract.hpp"
#include "burst/mode.hpp"
#include "burst/wire.hpp"

namespace burst::client {

class FetchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// How to load one page: strategy, parallelism, and where the page lives.
struct FetchPlan {
    Mode mode = Mode::Get;
    int connections = 6;  // what mainstream browsers allocate per host
    wire::ObjectRef page;
    std::string host = "127.0.0.1";
    std::uint16_t port = 80;
    std::chrono::milliseconds timeout{60000};
};

/// Thread-safe object store keyed by path. Only inlined objects land here;
/// pages themselves are never cached.
class ObjectCache {
public:
    ObjectCache() = default;
    ObjectCache(ObjectCache&& other) noexcept;
    ObjectCache& operator=(ObjectCache&& other) noexcept;
    ObjectCache(const ObjectCache&) = delete;
    ObjectCache& operator=(const ObjectCache&) = delete;

    bool contains(const wire::ObjectRef& ref) const;
    std::optional<std::string> lookup(const wire::ObjectRef& ref) const;
    void insert(const wire::ObjectRef& ref, std::string bytes);
    std::size_t size() const;
    void clear();

    /// Directory layout: one file per object, file name = percent-encoded
    /// path.
    static ObjectCache load_dir(const std::filesystem::path& dir);
    void save_dir(const std::filesystem::path& dir) const;

private:
    mutable std::mutex mutex_;
    std::map<wire::ObjectRef, std::string> entries_;
};

struct FetchedObject {
    int status = 0;
    std::string body;
    bool operator==(const FetchedObject&) const = default;
};

struct FetchResult {
    /// One entry per manifest reference; 404s carry that status and no body.
    std::map<wire::ObjectRef, FetchedObject> objects;
    std::string html;
    std::chrono::duration<double> total_duration{0};
    std::uint64_t request_count = 0;
    std::uint64_t bytes_on_wire = 0;
};

struct MissingObject {
    wire::ObjectRef ref;
    std::optional<std::int64_t> size;  // byte size when known ahead of time
};

/// Splits the missing set into at most `connections` non-empty groups. With
/// sizes known for every entry, greedy longest-first assignment to the least
/// loaded group keeps the largest group's byte total small (page delay is
/// decided by the slowest connection); otherwise round-robin in manifest
/// order. Throws std::invalid_argument for an empty missing set.
std::vector<std::vector<wire::ObjectRef>> partition_missing(
    const std::vector<MissingObject>& missing, int connections);

/// Manifest references absent from the cache, in manifest order.
std::vector<wire::ObjectRef> diff_cache(const html::PageManifest& manifest,
                                        const ObjectCache& cache);

/// Loads a page end to end: GET the page, extract its manifest, drop cached
/// entries, then fetch the missing objects with per-object GETs over a shared
/// work queue or with one BURST per partition group. The clock runs from the
/// page request write to the last object byte read. Successful objects are
/// inserted into the cache. Throws FetchError on connection, protocol, or
/// timeout failures; a timed-out load never yields a partial result.
FetchResult fetch_page(const FetchPlan& plan, ObjectCache& cache);

}  // namespace burst::client
