#pragma once

namespace bekw {

inline constexpr const char* kToolName = "bekw";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace bekw
