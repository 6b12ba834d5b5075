#pragma once

namespace ezddc {
inline constexpr const char* kVersion = "0.1.0";
}
