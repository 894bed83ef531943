#pragma once

namespace pushdet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pushdet
