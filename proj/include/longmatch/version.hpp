#pragma once

namespace longmatch {

inline constexpr const char* kToolName = "longmatch";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace longmatch
