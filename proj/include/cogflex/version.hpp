#pragma once

namespace cogflex {

inline constexpr const char* kCodeVersion = "cogflex 1.0.0";
inline constexpr int kSchemaVersion = 1;

}  // namespace cogflex
