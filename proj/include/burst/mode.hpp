#pragma once

#include <optional>
#include <string_view>

namespace burst {

// Page retrieval strategy: one GET per object versus batched BURST requests.
enum class Mode { Get, Burst };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);

}  // namespace burst
