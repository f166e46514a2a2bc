#include "burst/model.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace burst::model {

void OverheadParams::validate() const {
    if (ip_header < 0 || tcp_header < 0 || http_header < 0)
        throw std::invalid_argument("header sizes must be >= 0");
}

std::int64_t ObjectSet::total_payload() const {
    std::int64_t total = 0;
    for (std::int64_t size : sizes) total += size;
    return total;
}

ObjectSet ObjectSet::uniform(std::size_t n, std::int64_t size) {
    return ObjectSet{std::vector<std::int64_t>(n, size)};
}

void ObjectSet::validate() const {
    for (std::int64_t size : sizes)
        if (size < 0) throw std::invalid_argument("object sizes must be >= 0");
}

void DelayParams::validate() const {
    if (client_to_server < 0 || server_to_client < 0 || processing_per_object < 0)
        throw std::invalid_argument("delays must be >= 0");
    if (connections < 1)
        throw std::invalid_argument("connections must be >= 1");
}

std::int64_t request_bytes(std::int64_t size, const OverheadParams& params) {
    params.validate();
    if (size < 0) throw std::invalid_argument("object size must be >= 0");
    return params.per_exchange_overhead() + size;
}

double get_efficiency(const ObjectSet& objects, const OverheadParams& params) {
    params.validate();
    objects.validate();
    if (objects.sizes.empty())
        throw std::invalid_argument("efficiency of an empty object set is undefined");
    std::int64_t payload = 0;
    std::int64_t wire = 0;
    for (std::int64_t size : objects.sizes) {
        payload += size;
        wire += request_bytes(size, params);
    }
    if (wire == 0)
        throw std::invalid_argument("total wire bytes are zero; ratio undefined");
    return static_cast<double>(payload) / static_cast<double>(wire);
}

double burst_efficiency(const ObjectSet& objects, const OverheadParams& params,
                        int connections) {
    params.validate();
    objects.validate();
    if (objects.sizes.empty())
        throw std::invalid_argument("efficiency of an empty object set is undefined");
    if (connections < 1)
        throw std::invalid_argument("connections must be >= 1");
    // A connection with no objects exchanges no messages, so overhead is paid
    // at most once per object.
    const std::int64_t used =
        std::min<std::int64_t>(connections, static_cast<std::int64_t>(objects.count()));
    const std::int64_t payload = objects.total_payload();
    const std::int64_t wire = used * params.per_exchange_overhead() + payload;
    if (wire == 0)
        throw std::invalid_argument("total wire bytes are zero; ratio undefined");
    return static_cast<double>(payload) / static_cast<double>(wire);
}

double get_delay(const ObjectSet& objects, const DelayParams& delay) {
    delay.validate();
    objects.validate();
    if (objects.sizes.empty())
        throw std::invalid_argument("delay of an empty object set is undefined");
    const double per_object =
        delay.client_to_server + delay.processing_per_object + delay.server_to_client;
    const double serial = static_cast<double>(objects.count()) * per_object;
    return serial / static_cast<double>(delay.connections);
}

double burst_delay(const std::vector<std::vector<std::size_t>>& partition,
                   const DelayParams& delay) {
    delay.validate();
    if (partition.empty())
        throw std::invalid_argument("partition must contain at least one group");
    if (partition.size() > static_cast<std::size_t>(delay.connections))
        throw std::invalid_argument("partition has more groups than connections");
    std::set<std::size_t> seen;
    double worst = 0.0;
    for (const auto& group : partition) {
        if (group.empty())
            throw std::invalid_argument("partition groups must be non-empty");
        for (std::size_t index : group)
            if (!seen.insert(index).second)
                throw std::invalid_argument("partition groups must be disjoint");
        const double group_delay = delay.client_to_server +
                                   static_cast<double>(group.size()) * delay.processing_per_object +
                                   delay.server_to_client;
        worst = std::max(worst, group_delay);
    }
    return worst;
}

std::vector<SweepRow> efficiency_sweep(std::int64_t payload, std::size_t max_n,
                                       const OverheadParams& params,
                                       const std::vector<int>& connection_counts) {
    params.validate();
    if (payload < 0) throw std::invalid_argument("payload must be >= 0");
    if (max_n < 1) throw std::invalid_argument("max_n must be >= 1");
    for (int c : connection_counts)
        if (c < 1) throw std::invalid_argument("connection counts must be >= 1");

    std::vector<SweepRow> rows;
    rows.reserve(max_n * (1 + connection_counts.size()));
    for (std::size_t n = 1; n <= max_n; ++n) {
        const ObjectSet objects = ObjectSet::uniform(n, payload);
        rows.push_back({n, Mode::Get, 0, get_efficiency(objects, params)});
        for (int c : connection_counts)
            rows.push_back({n, Mode::Burst, c, burst_efficiency(objects, params, c)});
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "n,mode,connections,efficiency\n";
    char line[96];
    for (const SweepRow& row : rows) {
        const std::string_view mode = to_string(row.mode);
        std::snprintf(line, sizeof(line), "%zu,%.*s,%d,%.9f\n", row.n,
                      static_cast<int>(mode.size()), mode.data(), row.connections,
                      row.efficiency);
        out += line;
    }
    return out;
}

}  // namespace burst::model
