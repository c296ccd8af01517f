#pragma once

namespace specgraph {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace specgraph
