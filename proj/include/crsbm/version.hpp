#pragma once

namespace crsbm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace crsbm
