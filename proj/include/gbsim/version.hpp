#pragma once

namespace gbsim {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace gbsim
