#pragma once

namespace ddcl {
inline constexpr const char* kVersion = "0.1.0";
}
