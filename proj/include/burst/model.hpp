#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "burst/mode.hpp"

namespace burst::model {

/// Fixed per-message byte overheads of the transport stack. The TCP ACK that
/// confirms a response carries only IP and TCP headers, so its size is always
/// derived from those two fields.
struct OverheadParams {
    std::int64_t ip_header = 20;
    std::int64_t tcp_header = 20;
    std::int64_t http_header = 0;

    std::int64_t ack_total() const { return ip_header + tcp_header; }

    /// Bytes a single request/response exchange spends on headers: request
    /// and response each carry IP+TCP+HTTP, plus one ACK.
    std::int64_t per_exchange_overhead() const {
        return 2 * (ip_header + tcp_header + http_header) + ack_total();
    }

    void validate() const;  // throws std::invalid_argument on negative fields
};

/// The inlined objects of one page, by payload size in bytes.
struct ObjectSet {
    std::vector<std::int64_t> sizes;

    std::size_t count() const { return sizes.size(); }
    std::int64_t total_payload() const;
    static ObjectSet uniform(std::size_t n, std::int64_t size);

    void validate() const;
};

/// One-way latencies, per-object server processing time, and the number of
/// parallel connections the client may open.
struct DelayParams {
    double client_to_server = 0.0;      // seconds
    double server_to_client = 0.0;      // seconds
    double processing_per_object = 0.0; // seconds
    int connections = 1;

    void validate() const;
};

/// Total wire bytes of one GET exchange carrying a payload of `size` bytes.
std::int64_t request_bytes(std::int64_t size, const OverheadParams& params);

/// Payload-to-wire-bytes ratio when every object is fetched with its own GET.
/// Throws std::invalid_argument for an empty set or a zero denominator.
double get_efficiency(const ObjectSet& objects, const OverheadParams& params);

/// Payload-to-wire-bytes ratio when the objects are batched over up to
/// `connections` BURST exchanges. Header overhead is paid once per connection
/// that actually carries objects, so the effective connection count is capped
/// at the object count.
double burst_efficiency(const ObjectSet& objects, const OverheadParams& params,
                        int connections);

/// Page load time with per-object GETs: the full serial round-trip sum
/// divided evenly across the available connections.
double get_delay(const ObjectSet& objects, const DelayParams& delay);

/// Page load time with BURST: each group of object indices rides one
/// connection (one round trip plus the group's processing time); the page is
/// done when the slowest connection is.
double burst_delay(const std::vector<std::vector<std::size_t>>& partition,
                   const DelayParams& delay);

struct SweepRow {
    std::size_t n = 0;
    Mode mode = Mode::Get;
    int connections = 0;  // 0 on GET rows; GET efficiency has no connection term
    double efficiency = 0.0;
};

/// Efficiency of both strategies for every object count in 1..max_n, all
/// objects `payload` bytes: one GET row per n plus one BURST row per n per
/// requested connection count.
std::vector<SweepRow> efficiency_sweep(std::int64_t payload, std::size_t max_n,
                                       const OverheadParams& params,
                                       const std::vector<int>& connection_counts);

/// CSV with header `n,mode,connections,efficiency`, efficiency at nine
/// decimal places.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace burst::model
