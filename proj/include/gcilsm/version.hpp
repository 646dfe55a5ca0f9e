#pragma once

namespace gcilsm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gcilsm
