#pragma once

namespace netident {

inline constexpr const char* kToolName = "netident";
inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchemaVersion = "1";

}  // namespace netident
