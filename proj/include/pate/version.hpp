#pragma once

namespace pate {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pate
