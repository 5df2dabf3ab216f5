#pragma once

namespace stj {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stj
