#pragma once

namespace hiertopics {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hiertopics
