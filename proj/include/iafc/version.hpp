#pragma once

namespace iafc {

inline constexpr const char* version = "0.1.0";

} // namespace iafc
