#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>
#include <set>

#include "burst/client.hpp"
#include "oracles.hpp"

using namespace burst;
using namespace burst::client;

namespace {

std::vector<MissingObject> unsized(std::size_t n) {
    std::vector<MissingObject> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({wire::ObjectRef{"/obj" + std::to_string(i)}, std::nullopt});
    return out;
}

std::vector<MissingObject> sized(const std::vector<std::int64_t>& sizes) {
    std::vector<MissingObject> out;
    for (std::size_t i = 0; i < sizes.size(); ++i)
        out.push_back({wire::ObjectRef{"/obj" + std::to_string(i)}, sizes[i]});
    return out;
}

std::int64_t max_group_load(const std::vector<std::vector<wire::ObjectRef>>& groups,
                            const std::vector<MissingObject>& missing) {
    std::int64_t worst = 0;
    for (const auto& group : groups) {
        std::int64_t load = 0;
        for (const auto& ref : group)
            for (const auto& object : missing)
                if (object.ref == ref) load += object.size.value_or(0);
        worst = std::max(worst, load);
    }
    return worst;
}

void check_partition_shape(const std::vector<std::vector<wire::ObjectRef>>& groups,
                           const std::vector<MissingObject>& missing, int connections) {
    CHECK(groups.size() <= static_cast<std::size_t>(connections));
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& group : groups) {
        CHECK(!group.empty());
        for (const auto& ref : group) {
            CHECK(seen.insert(ref.path).second);
            ++total;
        }
    }
    CHECK(total == missing.size());
}

}  // namespace

TEST_CASE("round-robin partition in manifest order") {
    const auto missing = unsized(4);
    const auto groups = partition_missing(missing, 2);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0] == std::vector<wire::ObjectRef>{missing[0].ref, missing[2].ref});
    CHECK(groups[1] == std::vector<wire::ObjectRef>{missing[1].ref, missing[3].ref});
}

TEST_CASE("partition edge cases") {
    CHECK(partition_missing(unsized(1), 6).size() == 1);
    CHECK_THROWS_AS(partition_missing({}, 2), std::invalid_argument);
    CHECK_THROWS_AS(partition_missing(unsized(3), 0), std::invalid_argument);

    // one entry without a size disables the size-aware strategy
    auto mixed = sized({5, 4, 3});
    mixed[1].size.reset();
    const auto groups = partition_missing(mixed, 2);
    CHECK(groups[0] == std::vector<wire::ObjectRef>{mixed[0].ref, mixed[2].ref});
    CHECK(groups[1] == std::vector<wire::ObjectRef>{mixed[1].ref});
}

TEST_CASE("round-robin group sizes differ by at most one") {
    std::mt19937 rng(5150);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 1 + rng() % 40;
        const int connections = 1 + static_cast<int>(rng() % 8);
        const auto missing = unsized(n);
        const auto groups = partition_missing(missing, connections);
        check_partition_shape(groups, missing, connections);
        std::size_t smallest = missing.size(), largest = 0;
        for (const auto& group : groups) {
            smallest = std::min(smallest, group.size());
            largest = std::max(largest, group.size());
        }
        CHECK(largest - smallest <= 1);
    }
}

TEST_CASE("size-aware partition on a worked instance") {
    // longest-first into the least loaded group: 5 then 4 land apart, the
    // threes fill up to loads 8 and 10
    const auto missing = sized({5, 4, 3, 3, 3});
    const auto groups = partition_missing(missing, 2);
    check_partition_shape(groups, missing, 2);
    CHECK(max_group_load(groups, missing) == 10);
    CHECK(oracle::optimal_max_load({5, 4, 3, 3, 3}, 2) == 9);
    // classical greedy bound against the optimum
    CHECK(3 * max_group_load(groups, missing) <= 4 * 9);
}

TEST_CASE("size-aware partition stays within the greedy bound") {
    std::mt19937 rng(606);
    for (int iter = 0; iter < 300; ++iter) {
        const std::size_t n = 1 + rng() % 8;
        const int connections = 1 + static_cast<int>(rng() % 3);
        std::vector<std::int64_t> sizes;
        for (std::size_t i = 0; i < n; ++i)
            sizes.push_back(1 + static_cast<std::int64_t>(rng() % 10));
        const auto missing = sized(sizes);
        const auto groups = partition_missing(missing, connections);
        check_partition_shape(groups, missing, connections);
        const std::int64_t greedy = max_group_load(groups, missing);
        const std::int64_t best = oracle::optimal_max_load(sizes, connections);
        CHECK(greedy >= best);
        CHECK(3 * greedy <= 4 * best);
    }
}

TEST_CASE("cache diffing preserves manifest order") {
    html::PageManifest manifest;
    manifest.source_path = wire::ObjectRef{"/index.html"};
    for (int i = 0; i < 4; ++i)
        manifest.objects.push_back(wire::ObjectRef{"/o" + std::to_string(i)});

    ObjectCache cache;
    CHECK(diff_cache(manifest, cache).size() == 4);

    cache.insert(manifest.objects[1], "one");
    cache.insert(manifest.objects[2], "two");
    const auto missing = diff_cache(manifest, cache);
    REQUIRE(missing.size() == 2);
    CHECK(missing[0] == manifest.objects[0]);
    CHECK(missing[1] == manifest.objects[3]);

    cache.insert(manifest.objects[0], "zero");
    cache.insert(manifest.objects[3], "three");
    CHECK(diff_cache(manifest, cache).empty());
}

TEST_CASE("object cache basics") {
    ObjectCache cache;
    const wire::ObjectRef ref{"/img/a.png"};
    CHECK_FALSE(cache.contains(ref));
    cache.insert(ref, "payload");
    CHECK(cache.contains(ref));
    CHECK(*cache.lookup(ref) == "payload");
    cache.insert(ref, "updated");
    CHECK(*cache.lookup(ref) == "updated");
    CHECK(cache.size() == 1);
    cache.clear();
    CHECK(cache.size() == 0);
}

TEST_CASE("cache directory round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "burst-cache-test";
    fs::remove_all(dir);

    ObjectCache cache;
    cache.insert(wire::ObjectRef{"/img/a.png"}, std::string("bin\0ary", 7));
    cache.insert(wire::ObjectRef{"/style.css"}, "body{}");
    cache.save_dir(dir);

    // file names are the percent-encoded paths
    CHECK(fs::exists(dir / "%2Fimg%2Fa.png"));
    CHECK(fs::exists(dir / "%2Fstyle.css"));

    const ObjectCache loaded = ObjectCache::load_dir(dir);
    CHECK(loaded.size() == 2);
    CHECK(*loaded.lookup(wire::ObjectRef{"/img/a.png"}) == std::string("bin\0ary", 7));
    CHECK(*loaded.lookup(wire::ObjectRef{"/style.css"}) == "body{}");

    CHECK(ObjectCache::load_dir(dir / "does-not-exist").size() == 0);
    fs::remove_all(dir);
}
