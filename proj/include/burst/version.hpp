#pragma once

namespace burst {

inline constexpr const char* kVersion = "0.1.0";

// Revision of the BURST wire format implemented by this build. Bumped on any
// byte-visible change to the request or response framing.
inline constexpr int kWireRevision = 1;

}  // namespace burst
