#include "burst/wire.hpp"

#include <algorithm>
#include <set>

#include "burst/util.hpp"

namespace burst::wire {

namespace {

constexpr std::size_t kMaxHeaderBytes = 64 * 1024;
constexpr std::int64_t kMaxBodyBytes = std::int64_t(1) << 30;
constexpr std::string_view kVersion = "HTTP/1.1";

bool token_char(unsigned char ch) {
    return ch > 0x20 && ch < 0x7f && ch != ':';
}

}  // namespace

std::optional<std::string> lexical_normalize(std::string_view path, DotSegments policy) {
    if (path.empty() || path[0] != '/') return std::nullopt;
    std::vector<std::string_view> stack;
    std::size_t pos = 1;
    while (pos <= path.size()) {
        std::size_t end = path.find('/', pos);
        if (end == std::string_view::npos) end = path.size();
        std::string_view segment = path.substr(pos, end - pos);
        if (segment.empty() || segment == ".") {
            // collapse "//" and drop "."
        } else if (segment == "..") {
            if (!stack.empty()) {
                stack.pop_back();
            } else if (policy == DotSegments::Reject) {
                return std::nullopt;
            }
        } else {
            stack.push_back(segment);
        }
        pos = end + 1;
    }
    std::string out = "/";
    for (std::size_t i = 0; i < stack.size(); ++i) {
        out += stack[i];
        if (i + 1 < stack.size()) out += '/';
    }
    return out;
}

bool valid_path(std::string_view path) {
    if (path.empty() || path[0] != '/') return false;
    for (unsigned char ch : path)
        if (ch <= 0x20 || ch >= 0x7f) return false;
    return lexical_normalize(path, DotSegments::Reject).has_value();
}

void validate(const BurstRequest& request) {
    if (request.paths.empty())
        throw ValidationError("a BURST request must name at least one path");
    std::set<std::string_view> seen;
    for (const ObjectRef& ref : request.paths) {
        if (!valid_path(ref.path))
            throw ValidationError("invalid object path: " + ref.path);
        if (!seen.insert(ref.path).second)
            throw ValidationError("duplicate object path: " + ref.path);
    }
}

void validate(const BurstPart& part) {
    if (part.status != 200 && part.status != 404)
        throw ValidationError("burst part status must be 200 or 404");
    if (part.status == 404 && !part.body.empty())
        throw ValidationError("a 404 part must have an empty body");
    if (!valid_path(part.path.path))
        throw ValidationError("invalid object path: " + part.path.path);
    if (part.content_type.find_first_of("\r\n") != std::string::npos)
        throw ValidationError("content type must not contain CR or LF");
}

void validate(const BurstResponse& response) {
    if (response.parts.empty())
        throw ValidationError("a BURST response must carry at least one part");
    for (const BurstPart& part : response.parts) validate(part);
}

const std::string* Headers::find(std::string_view name) const {
    for (const auto& [key, value] : items)
        if (iequals(key, name)) return &value;
    return nullptr;
}

void Headers::add(std::string name, std::string value) {
    items.emplace_back(std::move(name), std::move(value));
}

namespace {

struct MessageHead {
    std::string_view start_line;
    Headers headers;
    std::size_t body_offset = 0;       // just past the blank line
    std::int64_t content_length = -1;  // -1 when the header is absent
};

// Parses the start line and header block. Returns nullopt while the blank
// line has not arrived yet.
std::optional<MessageHead> parse_head(std::string_view buf) {
    const std::size_t terminator = buf.find("\r\n\r\n");
    if (terminator == std::string_view::npos) {
        if (buf.size() > kMaxHeaderBytes)
            throw ProtocolError("header block exceeds 64 KiB");
        return std::nullopt;
    }

    MessageHead head;
    head.body_offset = terminator + 4;

    const std::string_view block = buf.substr(0, terminator);
    std::size_t line_start = 0;
    bool first = true;
    while (line_start <= block.size()) {
        std::size_t line_end = block.find("\r\n", line_start);
        if (line_end == std::string_view::npos) line_end = block.size();
        const std::string_view line = block.substr(line_start, line_end - line_start);
        if (first) {
            if (line.empty()) throw ProtocolError("empty start line");
            head.start_line = line;
            first = false;
        } else {
            const std::size_t colon = line.find(':');
            if (colon == std::string_view::npos)
                throw ProtocolError("header line without ':'");
            const std::string_view name = line.substr(0, colon);
            if (name.empty())
                throw ProtocolError("empty header name");
            for (unsigned char ch : name)
                if (!token_char(ch)) throw ProtocolError("invalid header name");
            head.headers.add(std::string(name), std::string(trim(line.substr(colon + 1))));
        }
        line_start = line_end + 2;
    }

    if (head.headers.find("Transfer-Encoding") != nullptr)
        throw ProtocolError("transfer encodings are not supported");
    if (const std::string* raw = head.headers.find("Content-Length")) {
        const auto value = parse_uint(*raw);
        if (!value) throw ProtocolError("invalid Content-Length");
        if (*value > kMaxBodyBytes) throw ProtocolError("declared body too large");
        head.content_length = *value;
    }
    return head;
}

// Splits on single spaces; HTTP start lines use exactly one SP separator.
std::vector<std::string_view> split_start_line(std::string_view line, std::size_t max_parts) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (parts.size() + 1 < max_parts) {
        const std::size_t space = line.find(' ', start);
        if (space == std::string_view::npos) break;
        parts.push_back(line.substr(start, space - start));
        start = space + 1;
    }
    parts.push_back(line.substr(start));
    return parts;
}

}  // namespace

std::optional<Request> try_decode_request(std::string_view buf, std::size_t& consumed) {
    const auto head = parse_head(buf);
    if (!head) return std::nullopt;

    const auto parts = split_start_line(head->start_line, 3);
    if (parts.size() != 3 || parts[0].empty() || parts[1].empty())
        throw ProtocolError("malformed request line");
    if (parts[2] != kVersion)
        throw ProtocolError("unsupported protocol version");
    for (unsigned char ch : parts[0])
        if (ch < 'A' || ch > 'Z') throw ProtocolError("malformed request method");
    for (unsigned char ch : parts[1])
        if (ch <= 0x20 || ch >= 0x7f) throw ProtocolError("malformed request target");

    const std::int64_t body_len = std::max<std::int64_t>(head->content_length, 0);
    if (buf.size() < head->body_offset + static_cast<std::size_t>(body_len))
        return std::nullopt;

    Request request;
    request.method = std::string(parts[0]);
    request.target = std::string(parts[1]);
    request.headers = head->headers;
    request.body = Bytes(buf.substr(head->body_offset, static_cast<std::size_t>(body_len)));
    consumed = head->body_offset + static_cast<std::size_t>(body_len);
    return request;
}

std::optional<Response> try_decode_response(std::string_view buf, std::size_t& consumed) {
    const auto head = parse_head(buf);
    if (!head) return std::nullopt;

    const auto parts = split_start_line(head->start_line, 3);
    if (parts.size() < 2 || parts[0] != kVersion)
        throw ProtocolError("malformed status line");
    const auto status = parse_uint(parts[1]);
    if (!status || parts[1].size() != 3 || *status < 100 || *status > 599)
        throw ProtocolError("malformed status code");
    if (head->content_length < 0)
        throw ProtocolError("response without Content-Length");

    if (buf.size() < head->body_offset + static_cast<std::size_t>(head->content_length))
        return std::nullopt;

    Response response;
    response.status = static_cast<int>(*status);
    response.reason = parts.size() == 3 ? std::string(parts[2]) : std::string();
    response.headers = head->headers;
    response.body =
        Bytes(buf.substr(head->body_offset, static_cast<std::size_t>(head->content_length)));
    consumed = head->body_offset + static_cast<std::size_t>(head->content_length);
    return response;
}

std::string_view reason_phrase(int status) {
    switch (status) {
        case 200: return "OK";
        case 400: return "Bad Request";
        case 403: return "Forbidden";
        case 404: return "Not Found";
        case 405: return "Method Not Allowed";
        case 413: return "Payload Too Large";
        case 500: return "Internal Server Error";
        default: return "Unknown";
    }
}

Bytes encode_get_request(const ObjectRef& path, std::string_view host) {
    if (!valid_path(path.path))
        throw ValidationError("invalid request path: " + path.path);
    Bytes out;
    out.reserve(64 + path.path.size() + host.size());
    out += "GET ";
    out += path.path;
    out += " HTTP/1.1\r\nHost: ";
    out += host;
    out += "\r\nConnection: keep-alive\r\n\r\n";
    return out;
}

Bytes encode_response(int status, std::string_view content_type, std::string_view body) {
    Bytes out;
    out.reserve(96 + content_type.size() + body.size());
    out += "HTTP/1.1 ";
    out += std::to_string(status);
    out += ' ';
    out += reason_phrase(status);
    out += "\r\nContent-Type: ";
    out += content_type;
    out += "\r\nContent-Length: ";
    out += std::to_string(body.size());
    out += "\r\nConnection: keep-alive\r\n\r\n";
    out += body;
    return out;
}

Bytes encode_burst_request(const BurstRequest& request, std::string_view host) {
    validate(request);
    Bytes body;
    for (const ObjectRef& ref : request.paths) {
        body += ref.path;
        body += '\n';
    }
    Bytes out;
    out.reserve(80 + host.size() + body.size());
    out += "BURST / HTTP/1.1\r\nHost: ";
    out += host;
    out += "\r\nBurst-Count: ";
    out += std::to_string(request.paths.size());
    out += "\r\nContent-Length: ";
    out += std::to_string(body.size());
    out += "\r\n\r\n";
    out += body;
    return out;
}

BurstRequest burst_request_from(const Request& request) {
    if (request.method != "BURST")
        throw ProtocolError("not a BURST request");
    if (request.headers.find("Content-Length") == nullptr)
        throw ProtocolError("BURST request without Content-Length");
    const std::string* count_raw = request.headers.find("Burst-Count");
    if (count_raw == nullptr)
        throw ProtocolError("BURST request without Burst-Count");
    const auto count = parse_uint(*count_raw);
    if (!count) throw ProtocolError("invalid Burst-Count");

    if (!request.body.empty() && request.body.back() != '\n')
        throw ProtocolError("unterminated path line in BURST body");

    BurstRequest out;
    std::size_t start = 0;
    while (start < request.body.size()) {
        const std::size_t end = request.body.find('\n', start);
        out.paths.push_back(ObjectRef{request.body.substr(start, end - start)});
        start = end + 1;
    }
    if (static_cast<std::int64_t>(out.paths.size()) != *count)
        throw ProtocolError("Burst-Count does not match the number of path lines");
    validate(out);
    return out;
}

BurstRequest decode_burst_request(std::string_view bytes) {
    std::size_t consumed = 0;
    const auto request = try_decode_request(bytes, consumed);
    if (!request) throw IncompleteFrame("truncated BURST request");
    if (consumed != bytes.size())
        throw ProtocolError("trailing bytes after BURST request");
    return burst_request_from(*request);
}

Bytes encode_burst_part(const BurstPart& part) {
    validate(part);
    Bytes out;
    out.reserve(96 + part.path.path.size() + part.content_type.size() + part.body.size());
    out += "HTTP/1.1 ";
    out += std::to_string(part.status);
    out += ' ';
    out += reason_phrase(part.status);
    out += "\r\nBurst-Path: ";
    out += part.path.path;
    out += "\r\nContent-Type: ";
    out += part.content_type;
    out += "\r\nContent-Length: ";
    out += std::to_string(part.body.size());
    out += "\r\n\r\n";
    out += part.body;
    return out;
}

Bytes encode_burst_response(const BurstResponse& response) {
    validate(response);
    Bytes out;
    for (const BurstPart& part : response.parts) out += encode_burst_part(part);
    return out;
}

BurstPart part_from_response(const Response& response) {
    if (response.status != 200 && response.status != 404)
        throw ProtocolError("burst part with unexpected status " +
                            std::to_string(response.status));
    const std::string* path = response.headers.find("Burst-Path");
    if (path == nullptr)
        throw ProtocolError("burst part without Burst-Path");
    if (!valid_path(*path))
        throw ValidationError("invalid Burst-Path: " + *path);
    if (response.status == 404 && !response.body.empty())
        throw ProtocolError("404 part with a non-empty body");

    BurstPart part;
    part.path = ObjectRef{*path};
    part.status = response.status;
    if (const std::string* type = response.headers.find("Content-Type"))
        part.content_type = *type;
    part.body = response.body;
    return part;
}

BurstResponse decode_burst_response(std::string_view bytes, const BurstRequest& expected) {
    validate(expected);
    BurstResponse out;
    std::size_t offset = 0;
    for (const ObjectRef& ref : expected.paths) {
        std::size_t consumed = 0;
        const auto response = try_decode_response(bytes.substr(offset), consumed);
        if (!response)
            throw IncompleteFrame("burst response truncated after " +
                                  std::to_string(out.parts.size()) + " of " +
                                  std::to_string(expected.paths.size()) + " parts");
        BurstPart part = part_from_response(*response);
        if (part.path != ref)
            throw ProtocolError("burst part out of order: expected " + ref.path +
                                ", got " + part.path.path);
        out.parts.push_back(std::move(part));
        offset += consumed;
    }
    if (offset != bytes.size())
        throw ProtocolError("trailing bytes after the final burst part");
    return out;
}

}  // namespace burst::wire
