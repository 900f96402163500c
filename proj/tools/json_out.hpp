#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "longmatch/version.hpp"

namespace longmatch::cli {

using Json = nlohmann::ordered_json;

/// Finite doubles stay numbers; infinities and NaN become strings so the
/// JSON stays valid and byte-stable.
inline Json jnum(double value) {
  if (std::isfinite(value)) return value;
  if (std::isnan(value)) return "nan";
  return value > 0 ? "inf" : "-inf";
}

inline Json tool_stamp() {
  Json j;
  j["name"] = kToolName;
  j["version"] = kToolVersion;
  return j;
}

/// Every report carries the tool version and the fully resolved config so
/// a run can be reproduced byte-for-byte from the file alone.
inline Json report_shell(const Json& config) {
  Json j;
  j["tool"] = tool_stamp();
  j["config"] = config;
  return j;
}

}  // namespace longmatch::cli
