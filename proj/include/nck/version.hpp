#pragma once

namespace nck {
inline constexpr const char* kVersion = "0.1.0";
}
