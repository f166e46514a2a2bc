#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace burst::wire {

// Raw octets. std::string is used as the byte container throughout; bodies
// may hold arbitrary binary data including NUL and CRLF sequences.
using Bytes = std::string;

/// Malformed framing or header syntax.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structurally valid message whose content breaks a protocol rule (bad or
/// duplicate path, count mismatch). A server answers these with 400.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The byte stream ends before the current message does.
class IncompleteFrame : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Identity of one object on the serving host: a rooted, query-free path.
struct ObjectRef {
    std::string path;
    auto operator<=>(const ObjectRef&) const = default;
};

enum class DotSegments {
    Reject,       // a path that climbs above the root is invalid
    ClampToRoot,  // ".." at the root is dropped, as URL resolution does
};

/// Lexically resolves "." and ".." segments of a rooted path and collapses
/// repeated slashes. Returns nullopt under DotSegments::Reject when the path
/// escapes the root.
std::optional<std::string> lexical_normalize(std::string_view path,
                                             DotSegments policy = DotSegments::Reject);

/// True when `path` starts with '/', contains only printable ASCII without
/// spaces, and stays under the root after dot-segment resolution.
bool valid_path(std::string_view path);

/// The object paths one BURST request asks for. At least one path, no
/// duplicates.
struct BurstRequest {
    std::vector<ObjectRef> paths;
    bool operator==(const BurstRequest&) const = default;
};

/// One framed per-object message of a BURST response.
struct BurstPart {
    ObjectRef path;
    int status = 200;  // 200 or 404; a 404 part carries no body
    std::string content_type;
    Bytes body;
    bool operator==(const BurstPart&) const = default;
};

/// All parts of one BURST exchange, in the exact order of the request paths.
struct BurstResponse {
    std::vector<BurstPart> parts;
    bool operator==(const BurstResponse&) const = default;
};

void validate(const BurstRequest& request);  // throws ValidationError
void validate(const BurstPart& part);
void validate(const BurstResponse& response);

// ---------------------------------------------------------------------------
// Generic HTTP/1.1 messages. Content-Length is the only supported framing;
// transfer encodings are rejected.

struct Headers {
    std::vector<std::pair<std::string, std::string>> items;

    // Case-insensitive name lookup; first match wins.
    const std::string* find(std::string_view name) const;
    void add(std::string name, std::string value);
};

struct Request {
    std::string method;
    std::string target;
    Headers headers;
    Bytes body;
};

struct Response {
    int status = 0;
    std::string reason;
    Headers headers;
    Bytes body;
};

/// Incremental decode of one message from the front of `buf`. Returns nullopt
/// while the buffer does not yet hold a complete message; on success sets
/// `consumed` to the byte length of the decoded message. Throws ProtocolError
/// on malformed input. Safe to call repeatedly as bytes arrive; one buffer
/// per connection.
std::optional<Request> try_decode_request(std::string_view buf, std::size_t& consumed);
std::optional<Response> try_decode_response(std::string_view buf, std::size_t& consumed);

std::string_view reason_phrase(int status);

/// `GET <path> HTTP/1.1` with Host and Connection: keep-alive.
Bytes encode_get_request(const ObjectRef& path, std::string_view host);

/// Standalone response with Content-Length framing, used for GET responses
/// and top-level error responses.
Bytes encode_response(int status, std::string_view content_type, std::string_view body);

/// `BURST / HTTP/1.1` carrying one newline-terminated path per line, with
/// Burst-Count and Content-Length cross-checking the body. Byte-exact and
/// deterministic for a given request and host.
Bytes encode_burst_request(const BurstRequest& request, std::string_view host);

/// Inverse of encode_burst_request over a complete buffer. Throws
/// IncompleteFrame on truncation, ProtocolError on malformed framing or a
/// Burst-Count/line mismatch, ValidationError on invalid paths.
BurstRequest decode_burst_request(std::string_view bytes);

/// Interprets an already-decoded request as a BURST request (shared by the
/// server dispatch path).
BurstRequest burst_request_from(const Request& request);

/// One part as a complete HTTP/1.1 message: status line, Burst-Path,
/// Content-Type, Content-Length, blank line, body.
Bytes encode_burst_part(const BurstPart& part);

/// Concatenation of the encoded parts, in order, with no extra delimiters.
Bytes encode_burst_response(const BurstResponse& response);

/// Interprets one decoded HTTP response as a burst part (shared by the
/// streaming client).
BurstPart part_from_response(const Response& response);

/// Decodes exactly one part per expected path and verifies that part order
/// mirrors the request order. Throws IncompleteFrame when the stream is cut
/// short and ProtocolError on reordered or trailing data.
BurstResponse decode_burst_response(std::string_view bytes, const BurstRequest& expected);

}  // namespace burst::wire
