#pragma once

namespace qclab {
inline constexpr const char* kVersion = "0.1.0";
}
