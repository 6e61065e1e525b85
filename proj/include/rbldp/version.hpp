#pragma once

namespace rbldp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rbldp
