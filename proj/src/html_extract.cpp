#include "burst/html_extract.hpp"

#include <cctype>
#include <set>
#include <string>

#include "burst/util.hpp"

namespace burst::html {

namespace {

bool has_scheme(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const char ch = s[i];
        if (ch == ':') return true;
        const bool scheme_char = std::isalnum(static_cast<unsigned char>(ch)) ||
                                 ch == '+' || ch == '-' || ch == '.';
        if (!scheme_char) return false;
    }
    return false;
}

struct Tag {
    std::string name;  // lowercased
    bool closing = false;
    bool self_closing = false;
    std::vector<std::pair<std::string, std::string>> attrs;  // first wins

    const std::string* attr(std::string_view name_lc) const {
        for (const auto& [key, value] : attrs)
            if (key == name_lc) return &value;
        return nullptr;
    }
};

bool ws(char ch) {
    return ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == '\f';
}

// `pos` points just past '<'. Returns the index just past the closing '>'
// (or the end of input for an unterminated tag).
std::size_t parse_tag(std::string_view html, std::size_t pos, Tag& out) {
    const std::size_t size = html.size();
    if (pos < size && html[pos] == '/') {
        out.closing = true;
        ++pos;
        while (pos < size && ws(html[pos])) ++pos;
    }

    std::string name;
    while (pos < size) {
        const char ch = html[pos];
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == ':') {
            name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            ++pos;
        } else {
            break;
        }
    }
    out.name = std::move(name);

    // attribute loop
    while (pos < size) {
        while (pos < size && ws(html[pos])) ++pos;
        if (pos >= size) break;
        if (html[pos] == '>') {
            ++pos;
            break;
        }
        if (html[pos] == '/') {
            if (pos + 1 < size && html[pos + 1] == '>') {
                out.self_closing = true;
                pos += 2;
                break;
            }
            ++pos;
            continue;
        }

        std::string attr_name;
        while (pos < size) {
            const char ch = html[pos];
            if (ws(ch) || ch == '=' || ch == '>' || ch == '/') break;
            attr_name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            ++pos;
        }
        while (pos < size && ws(html[pos])) ++pos;

        std::string value;
        if (pos < size && html[pos] == '=') {
            ++pos;
            while (pos < size && ws(html[pos])) ++pos;
            if (pos < size && (html[pos] == '"' || html[pos] == '\'')) {
                const char quote = html[pos++];
                const std::size_t close = html.find(quote, pos);
                if (close == std::string_view::npos) {
                    value.assign(html.substr(pos));
                    pos = size;
                } else {
                    value.assign(html.substr(pos, close - pos));
                    pos = close + 1;
                }
            } else {
                while (pos < size && !ws(html[pos]) && html[pos] != '>') {
                    value.push_back(html[pos]);
                    ++pos;
                }
            }
        }
        if (!attr_name.empty()) {
            bool exists = false;
            for (const auto& [key, unused] : out.attrs)
                if (key == attr_name) { exists = true; break; }
            if (!exists) out.attrs.emplace_back(std::move(attr_name), std::move(value));
        }
    }
    return pos;
}

// Case-insensitive search for "</name", then to its '>'.
std::size_t skip_raw_text(std::string_view html, std::size_t pos, std::string_view name) {
    const std::string needle = "</" + std::string(name);
    while (pos < html.size()) {
        const std::size_t lt = html.find('<', pos);
        if (lt == std::string_view::npos) return html.size();
        if (lt + needle.size() <= html.size() &&
            iequals(html.substr(lt, needle.size()), needle)) {
            const std::size_t gt = html.find('>', lt);
            return gt == std::string_view::npos ? html.size() : gt + 1;
        }
        pos = lt + 1;
    }
    return html.size();
}

bool rel_contains(std::string_view rel, std::string_view token) {
    for (std::string_view part : split(rel, ' '))
        if (iequals(trim(part), token)) return true;
    return false;
}

}  // namespace

std::optional<wire::ObjectRef> resolve_ref(std::string_view raw,
                                           const wire::ObjectRef& base_path) {
    std::string_view s = trim(raw);
    const std::size_t cut = s.find_first_of("?#");
    if (cut != std::string_view::npos) s = s.substr(0, cut);
    if (s.empty()) return std::nullopt;
    if (s.size() >= 2 && s[0] == '/' && s[1] == '/') return std::nullopt;  // other host
    if (has_scheme(s)) return std::nullopt;

    std::string rooted;
    if (s[0] == '/') {
        rooted.assign(s);
    } else {
        std::string_view dir = base_path.path;
        const std::size_t slash = dir.rfind('/');
        dir = slash == std::string_view::npos ? std::string_view("/") : dir.substr(0, slash + 1);
        rooted.reserve(dir.size() + s.size());
        rooted.assign(dir);
        rooted.append(s);
    }

    const auto normalized = wire::lexical_normalize(rooted, wire::DotSegments::ClampToRoot);
    if (!normalized || !wire::valid_path(*normalized)) return std::nullopt;
    return wire::ObjectRef{*normalized};
}

PageManifest extract_manifest(std::string_view html_bytes,
                              const wire::ObjectRef& base_path) {
    PageManifest manifest{{}, base_path};
    std::set<std::string> seen;
    int noscript_depth = 0;

    const auto add = [&](const std::string* value) {
        if (value == nullptr || noscript_depth > 0) return;
        const auto ref = resolve_ref(*value, base_path);
        if (ref && seen.insert(ref->path).second) manifest.objects.push_back(*ref);
    };

    std::size_t pos = 0;
    const std::size_t size = html_bytes.size();
    while (pos < size) {
        const std::size_t lt = html_bytes.find('<', pos);
        if (lt == std::string_view::npos) break;
        if (lt + 1 >= size) break;
        const char next = html_bytes[lt + 1];

        if (next == '!' || next == '?') {
            if (html_bytes.compare(lt + 1, 3, "!--") == 0) {
                const std::size_t close = html_bytes.find("-->", lt + 4);
                pos = close == std::string_view::npos ? size : close + 3;
            } else {
                const std::size_t gt = html_bytes.find('>', lt + 1);
                pos = gt == std::string_view::npos ? size : gt + 1;
            }
            continue;
        }
        if (!std::isalpha(static_cast<unsigned char>(next)) && next != '/') {
            pos = lt + 1;  // stray '<'
            continue;
        }

        Tag tag;
        pos = parse_tag(html_bytes, lt + 1, tag);
        if (tag.name.empty()) continue;

        if (tag.closing) {
            if (tag.name == "noscript" && noscript_depth > 0) --noscript_depth;
            continue;
        }

        if (tag.name == "img" || tag.name == "source" || tag.name == "video" ||
            tag.name == "audio") {
            add(tag.attr("src"));
        } else if (tag.name == "script") {
            add(tag.attr("src"));
            if (!tag.self_closing) pos = skip_raw_text(html_bytes, pos, "script");
        } else if (tag.name == "style") {
            if (!tag.self_closing) pos = skip_raw_text(html_bytes, pos, "style");
        } else if (tag.name == "link") {
            if (const std::string* rel = tag.attr("rel")) {
                if (rel_contains(*rel, "stylesheet") || rel_contains(*rel, "preload"))
                    add(tag.attr("href"));
            }
        } else if (tag.name == "noscript") {
            if (!tag.self_closing) ++noscript_depth;
        }
    }
    return manifest;
}

}  // namespace burst::html
