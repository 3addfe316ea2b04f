#pragma once

namespace scatlab {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kCacheFormatVersion = 1;

}  // namespace scatlab
