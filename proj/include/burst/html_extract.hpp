#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "burst/wire.hpp"

namespace burst::html {

/// Ordered, deduplicated object references of one page. All entries are
/// rooted same-origin paths; first occurrence wins.
struct PageManifest {
    std::vector<wire::ObjectRef> objects;
    wire::ObjectRef source_path;
};

/// Resolves one attribute value against the directory of `base_path`.
/// Fragments and query strings are dropped; URLs naming another origin
/// (scheme or protocol-relative) and unusable values are excluded.
std::optional<wire::ObjectRef> resolve_ref(std::string_view raw,
                                           const wire::ObjectRef& base_path);

/// Scans the document for inlined-object references: img/source/video/audio
/// src, script src, stylesheet and preload link href. The input need not be
/// well-formed; unparseable regions are skipped. References inside comments
/// and <noscript> are ignored, as is raw text inside <script>/<style>.
PageManifest extract_manifest(std::string_view html_bytes,
                              const wire::ObjectRef& base_path);

}  // namespace burst::html
