#pragma once

namespace sgorder {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr const char* kPrngName = "Philox4x32-10";
inline constexpr int kReportSchemaVersion = 1;

}  // namespace sgorder
