#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>

#include "burst/client.hpp"
#include "burst/net.hpp"
#include "burst/server.hpp"
#include "burst/wire.hpp"

using namespace burst;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

struct TempDocroot {
    fs::path dir;

    TempDocroot() {
        dir = fs::temp_directory_path() /
              ("burst-server-test-" + std::to_string(::getpid()) + "-" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~TempDocroot() { fs::remove_all(dir); }

    static int& counter() {
        static int n = 0;
        return n;
    }

    void write(const std::string& name, const std::string& bytes) const {
        std::ofstream out(dir / name, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
};

std::string random_bytes(std::mt19937& rng, std::size_t n) {
    std::string out(n, '\0');
    for (char& ch : out) ch = static_cast<char>(rng() & 0xff);
    return out;
}

net::HttpStream connect_to(const server::Server& server) {
    return net::HttpStream(
        net::connect_tcp("127.0.0.1", server.port(), net::deadline_after(5s)));
}

wire::Response get_once(net::HttpStream& stream, const std::string& path) {
    stream.write(wire::encode_get_request(wire::ObjectRef{path}, "t"),
                 net::deadline_after(5s));
    auto response = stream.read_response(net::deadline_after(5s));
    REQUIRE(response.has_value());
    return *response;
}

std::uint64_t stat_value(const std::string& body, const std::string& key) {
    const auto pos = body.find(key + "=");
    REQUIRE(pos != std::string::npos);
    return std::stoull(body.substr(pos + key.size() + 1));
}

std::pair<std::uint64_t, std::uint64_t> fetch_stats(const server::Server& server) {
    auto stream = connect_to(server);
    const auto response = get_once(stream, "/_stats");
    return {stat_value(response.body, "requests_total"),
            stat_value(response.body, "burst_requests")};
}

}  // namespace

TEST_CASE("GET serves files with the right type and length") {
    TempDocroot root;
    std::mt19937 rng(1);
    const std::string js = random_bytes(rng, 84 * 1024);
    root.write("app.js", js);
    root.write("page.html", "<html></html>");

    server::Server server({.docroot = root.dir});
    server.start();

    auto stream = connect_to(server);
    const auto response = get_once(stream, "/app.js");
    CHECK(response.status == 200);
    CHECK(response.body == js);
    CHECK(response.body.size() == 86016);
    CHECK(*response.headers.find("Content-Type") == "application/javascript");
    CHECK(*response.headers.find("Content-Length") == "86016");

    // keep-alive: same connection answers again
    const auto second = get_once(stream, "/page.html");
    CHECK(second.status == 200);
    CHECK(*second.headers.find("Content-Type") == "text/html");

    const auto missing = get_once(stream, "/nope.png");
    CHECK(missing.status == 404);

    server.stop();
}

TEST_CASE("path traversal is refused") {
    TempDocroot root;
    root.write("visible.txt", "ok");

    server::Server server({.docroot = root.dir});
    server.start();

    auto stream = connect_to(server);
    // crafted request: the client encoder would reject this path
    stream.write("GET /../secret HTTP/1.1\r\nHost: t\r\n\r\n", net::deadline_after(5s));
    auto response = stream.read_response(net::deadline_after(5s));
    REQUIRE(response.has_value());
    CHECK(response->status == 403);

    auto encoded = connect_to(server);
    encoded.write("GET /%2e%2e/secret HTTP/1.1\r\nHost: t\r\n\r\n",
                  net::deadline_after(5s));
    response = encoded.read_response(net::deadline_after(5s));
    REQUIRE(response.has_value());
    CHECK(response->status == 403);

    server.stop();
}

TEST_CASE("unknown methods get 405") {
    TempDocroot root;
    server::Server server({.docroot = root.dir});
    server.start();

    auto stream = connect_to(server);
    stream.write("FROB / HTTP/1.1\r\nHost: t\r\n\r\n", net::deadline_after(5s));
    const auto response = stream.read_response(net::deadline_after(5s));
    REQUIRE(response.has_value());
    CHECK(response->status == 405);
    server.stop();
}

TEST_CASE("BURST answers in request order, 404s included") {
    TempDocroot root;
    std::mt19937 rng(2);
    const std::string a = random_bytes(rng, 1000);
    const std::string b = random_bytes(rng, 2000);
    const std::string c = random_bytes(rng, 3000);
    root.write("a.bin", a);
    root.write("b.bin", b);
    root.write("c.bin", c);

    server::Server server({.docroot = root.dir});
    server.start();

    const wire::BurstRequest request{{wire::ObjectRef{"/a.bin"}, wire::ObjectRef{"/b.bin"},
                                      wire::ObjectRef{"/c.bin"},
                                      wire::ObjectRef{"/missing.bin"}}};
    auto stream = connect_to(server);
    stream.write(wire::encode_burst_request(request, "t"), net::deadline_after(5s));

    std::vector<wire::BurstPart> parts;
    for (std::size_t i = 0; i < request.paths.size(); ++i) {
        auto response = stream.read_response(net::deadline_after(5s));
        REQUIRE(response.has_value());
        parts.push_back(wire::part_from_response(*response));
    }
    REQUIRE(parts.size() == 4);
    CHECK(parts[0].status == 200);
    CHECK(parts[1].status == 200);
    CHECK(parts[2].status == 200);
    CHECK(parts[3].status == 404);
    CHECK(parts[0].body == a);
    CHECK(parts[1].body == b);
    CHECK(parts[2].body == c);
    for (std::size_t i = 0; i < 4; ++i) CHECK(parts[i].path == request.paths[i]);

    // body bytes identical to what GET serves
    auto get_stream = connect_to(server);
    CHECK(get_once(get_stream, "/a.bin").body == parts[0].body);
    CHECK(get_once(get_stream, "/b.bin").body == parts[1].body);

    server.stop();
}

TEST_CASE("a single-path burst matches GET byte for byte") {
    TempDocroot root;
    std::mt19937 rng(3);
    const std::string bytes = random_bytes(rng, 4096);
    root.write("one.png", bytes);

    server::Server server({.docroot = root.dir});
    server.start();

    const wire::BurstRequest request{{wire::ObjectRef{"/one.png"}}};
    auto stream = connect_to(server);
    stream.write(wire::encode_burst_request(request, "t"), net::deadline_after(5s));
    auto response = stream.read_response(net::deadline_after(5s));
    REQUIRE(response.has_value());
    const auto part = wire::part_from_response(*response);

    auto get_stream = connect_to(server);
    const auto get_response = get_once(get_stream, "/one.png");
    CHECK(part.body == get_response.body);
    CHECK(part.content_type == *get_response.headers.find("Content-Type"));

    server.stop();
}

TEST_CASE("burst limits and malformed bodies") {
    TempDocroot root;
    server::ServerConfig config{.docroot = root.dir};
    config.max_burst_paths = 4;
    server::Server server(config);
    server.start();

    wire::BurstRequest over;
    for (int i = 0; i < 5; ++i)
        over.paths.push_back(wire::ObjectRef{"/f" + std::to_string(i)});
    auto stream = connect_to(server);
    stream.write(wire::encode_burst_request(over, "t"), net::deadline_after(5s));
    auto response = stream.read_response(net::deadline_after(5s));
    REQUIRE(response.has_value());
    CHECK(response->status == 413);

    // count disagrees with the body: one 400, not parts
    auto bad = connect_to(server);
    bad.write("BURST / HTTP/1.1\r\nHost: t\r\nBurst-Count: 3\r\n"
              "Content-Length: 6\r\n\r\n/a\n/b\n",
              net::deadline_after(5s));
    response = bad.read_response(net::deadline_after(5s));
    REQUIRE(response.has_value());
    CHECK(response->status == 400);

    server.stop();
}

TEST_CASE("the default burst limit is 512 paths") {
    TempDocroot root;
    server::Server server({.docroot = root.dir});
    server.start();

    wire::BurstRequest at_limit;
    for (int i = 0; i < 512; ++i)
        at_limit.paths.push_back(wire::ObjectRef{"/f" + std::to_string(i)});

    auto stream = connect_to(server);
    stream.write(wire::encode_burst_request(at_limit, "t"), net::deadline_after(10s));
    for (int i = 0; i < 512; ++i) {
        const auto response = stream.read_response(net::deadline_after(10s));
        REQUIRE(response.has_value());
        CHECK(response->status == 404);  // none of the files exist
    }

    wire::BurstRequest over = at_limit;
    over.paths.push_back(wire::ObjectRef{"/f512"});
    auto rejected = connect_to(server);
    rejected.write(wire::encode_burst_request(over, "t"), net::deadline_after(10s));
    const auto response = rejected.read_response(net::deadline_after(10s));
    REQUIRE(response.has_value());
    CHECK(response->status == 413);

    server.stop();
}

TEST_CASE("the stats endpoint reports and is not counted") {
    TempDocroot root;
    root.write("x.txt", "x");
    server::Server server({.docroot = root.dir});
    server.start();

    auto [requests0, bursts0] = fetch_stats(server);
    CHECK(requests0 == 0);
    CHECK(bursts0 == 0);

    auto stream = connect_to(server);
    get_once(stream, "/x.txt");
    auto [requests1, bursts1] = fetch_stats(server);
    CHECK(requests1 == 1);
    CHECK(bursts1 == 0);

    // polling stats twice moves nothing
    fetch_stats(server);
    auto [requests2, bursts2] = fetch_stats(server);
    CHECK(requests2 == 1);
    CHECK(bursts2 == 0);

    const std::string body = get_once(stream, "/_stats").body;
    CHECK(body == "requests_total=1\nburst_requests=0\n");

    server.stop();
}

TEST_CASE("request accounting for whole page loads") {
    TempDocroot root;
    std::mt19937 rng(4);
    std::string page = "<html><body>";
    for (int i = 0; i < 4; ++i) {
        const std::string name = "img" + std::to_string(i) + ".jpg";
        root.write(name, random_bytes(rng, 512));
        page += "<img src=\"" + name + "\">";
    }
    page += "</body></html>";
    root.write("index.html", page);

    server::Server server({.docroot = root.dir});
    server.start();

    client::FetchPlan plan;
    plan.host = "127.0.0.1";
    plan.port = server.port();
    plan.page = wire::ObjectRef{"/index.html"};

    // one request per object plus the page
    plan.mode = Mode::Get;
    plan.connections = 2;
    {
        client::ObjectCache cache;
        const auto result = client::fetch_page(plan, cache);
        CHECK(result.request_count == 5);
        CHECK(server.stats().requests_total.load() == 5);
        CHECK(server.stats().burst_requests.load() == 0);
        CHECK(result.objects.size() == 4);
    }

    // one burst on one connection
    plan.mode = Mode::Burst;
    plan.connections = 1;
    {
        client::ObjectCache cache;
        const auto result = client::fetch_page(plan, cache);
        CHECK(result.request_count == 2);
        CHECK(server.stats().requests_total.load() == 5 + 2);
        CHECK(server.stats().burst_requests.load() == 1);
    }

    // two bursts of two objects each
    plan.connections = 2;
    {
        client::ObjectCache cache;
        const auto result = client::fetch_page(plan, cache);
        CHECK(result.request_count == 3);
        CHECK(server.stats().requests_total.load() == 5 + 2 + 3);
        CHECK(server.stats().burst_requests.load() == 1 + 2);
    }

    server.stop();
}

TEST_CASE("GET and BURST deliver identical object maps") {
    TempDocroot root;
    std::mt19937 rng(5);
    std::string page = "<html><head><link rel=\"stylesheet\" href=\"s.css\"></head><body>";
    root.write("s.css", random_bytes(rng, 2048));
    for (int i = 0; i < 7; ++i) {
        const std::string name = "o" + std::to_string(i) + ".bin";
        root.write(name, random_bytes(rng, 100 + static_cast<std::size_t>(rng() % 4000)));
        page += "<img src=\"" + name + "\">";
    }
    page += "<img src=\"gone.bin\"></body></html>";
    root.write("index.html", page);

    server::Server server({.docroot = root.dir});
    server.start();

    client::FetchPlan plan;
    plan.host = "127.0.0.1";
    plan.port = server.port();
    plan.page = wire::ObjectRef{"/index.html"};
    plan.connections = 3;

    plan.mode = Mode::Get;
    client::ObjectCache get_cache;
    const auto get_result = client::fetch_page(plan, get_cache);

    plan.mode = Mode::Burst;
    client::ObjectCache burst_cache;
    const auto burst_result = client::fetch_page(plan, burst_cache);

    CHECK(get_result.objects == burst_result.objects);
    CHECK(get_result.objects.size() == 9);  // css + 7 objects + the missing one
    CHECK(get_result.objects.at(wire::ObjectRef{"/gone.bin"}).status == 404);
    CHECK(get_result.html == burst_result.html);

    server.stop();
}

TEST_CASE("cache makes the second load a single request") {
    TempDocroot root;
    std::mt19937 rng(6);
    std::string page = "<html><body>";
    for (int i = 0; i < 3; ++i) {
        const std::string name = "c" + std::to_string(i) + ".bin";
        root.write(name, random_bytes(rng, 256));
        page += "<img src=\"" + name + "\">";
    }
    page += "</body></html>";
    root.write("index.html", page);

    server::Server server({.docroot = root.dir});
    server.start();

    client::FetchPlan plan;
    plan.host = "127.0.0.1";
    plan.port = server.port();
    plan.page = wire::ObjectRef{"/index.html"};
    plan.mode = Mode::Burst;
    plan.connections = 6;

    client::ObjectCache cache;
    const auto first = client::fetch_page(plan, cache);
    CHECK(first.request_count == 1 + 3);  // three objects over three connections
    CHECK(cache.size() == 3);

    const auto second = client::fetch_page(plan, cache);
    CHECK(second.request_count == 1);  // everything but the page came from cache
    CHECK(second.objects == first.objects);

    server.stop();
}

TEST_CASE("burst processing delay applies once per request") {
    TempDocroot root;
    std::mt19937 rng(7);
    for (int i = 0; i < 4; ++i)
        root.write("d" + std::to_string(i) + ".bin", random_bytes(rng, 64));

    server::ServerConfig config{.docroot = root.dir};
    config.processing_delay = 20ms;
    server::Server server(config);
    server.start();

    wire::BurstRequest request;
    for (int i = 0; i < 4; ++i)
        request.paths.push_back(wire::ObjectRef{"/d" + std::to_string(i) + ".bin"});

    auto stream = connect_to(server);
    const auto t0 = std::chrono::steady_clock::now();
    stream.write(wire::encode_burst_request(request, "t"), net::deadline_after(5s));
    for (std::size_t i = 0; i < request.paths.size(); ++i) {
        const auto response = stream.read_response(net::deadline_after(5s));
        REQUIRE(response.has_value());
    }
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    // one sleep for the whole four-path burst, nowhere near four of them
    CHECK(elapsed >= 20ms);
    CHECK(elapsed < 80ms);

    server.stop();
}

TEST_CASE("per-object delay mode sleeps per part") {
    TempDocroot root;
    std::mt19937 rng(8);
    for (int i = 0; i < 4; ++i)
        root.write("p" + std::to_string(i) + ".bin", random_bytes(rng, 64));

    server::ServerConfig config{.docroot = root.dir};
    config.processing_delay = 25ms;
    config.per_object_delay = true;
    server::Server server(config);
    server.start();

    wire::BurstRequest request;
    for (int i = 0; i < 4; ++i)
        request.paths.push_back(wire::ObjectRef{"/p" + std::to_string(i) + ".bin"});

    auto stream = connect_to(server);
    const auto t0 = std::chrono::steady_clock::now();
    stream.write(wire::encode_burst_request(request, "t"), net::deadline_after(5s));
    for (std::size_t i = 0; i < request.paths.size(); ++i) {
        const auto response = stream.read_response(net::deadline_after(5s));
        REQUIRE(response.has_value());
    }
    CHECK(std::chrono::steady_clock::now() - t0 >= 100ms);

    server.stop();
}

TEST_CASE("fetch failures surface as FetchError") {
    // nothing listens here
    client::FetchPlan refused;
    refused.host = "127.0.0.1";
    refused.port = 1;
    refused.page = wire::ObjectRef{"/index.html"};
    client::ObjectCache cache;
    CHECK_THROWS_AS(client::fetch_page(refused, cache), client::FetchError);

    TempDocroot root;
    server::ServerConfig config{.docroot = root.dir};
    config.processing_delay = 300ms;
    server::Server server(config);
    server.start();
    root.write("index.html", "<html></html>");

    client::FetchPlan slow;
    slow.host = "127.0.0.1";
    slow.port = server.port();
    slow.page = wire::ObjectRef{"/index.html"};
    slow.timeout = 50ms;
    CHECK_THROWS_AS(client::fetch_page(slow, cache), client::FetchError);

    // missing page
    client::FetchPlan missing = slow;
    missing.page = wire::ObjectRef{"/not-there.html"};
    missing.timeout = 5000ms;
    CHECK_THROWS_AS(client::fetch_page(missing, cache), client::FetchError);

    server.stop();
}

TEST_CASE("binding an occupied port fails loudly") {
    TempDocroot root;
    server::Server first({.docroot = root.dir});
    first.start();

    server::ServerConfig clash{.docroot = root.dir};
    clash.port = first.port();
    server::Server second(clash);
    CHECK_THROWS_AS(second.start(), net::SocketError);

    server::ServerConfig bad;
    bad.docroot = root.dir / "missing-subdir";
    server::Server third(bad);
    CHECK_THROWS_AS(third.start(), std::invalid_argument);

    first.stop();
}
