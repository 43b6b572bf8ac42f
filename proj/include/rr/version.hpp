#pragma once

namespace rr {

inline constexpr const char* kEngineVersion = "0.1.0";

} // namespace rr
