#include "burst/mode.hpp"

namespace burst {

std::string_view to_string(Mode mode) {
    return mode == Mode::Get ? "get" : "burst";
}

std::optional<Mode> parse_mode(std::string_view name) {
    if (name == "get") return Mode::Get;
    if (name == "burst") return Mode::Burst;
    return std::nullopt;
}

}  // namespace burst
