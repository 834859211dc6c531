#pragma once

namespace anpbbo {

inline constexpr const char* kVersion = "0.1.0";

} // namespace anpbbo
