#pragma once

namespace grpkmax {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace grpkmax
