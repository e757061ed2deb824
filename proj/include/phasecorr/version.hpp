#pragma once

namespace phasecorr {
inline constexpr const char* kVersion = "0.1.0";
}
