#pragma once

namespace metaeval {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace metaeval
