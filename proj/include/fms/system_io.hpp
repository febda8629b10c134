#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fms/model.hpp"

namespace fms {

// System file format (UTF-8, '#' starts a comment):
//
//   [domain]
//   lo = 0
//   hi = 1
//
//   [edge 0]
//   slope = 1/3
//   intercept = 0
//   prob = piecewise (0,1/9,1,1,0);(1/9,1,0,1,1/2)
//
//   [edge 1]
//   slope = 1/2
//   intercept = 1/2
//   prob = rationality
//   q_value = 3/4
//   irr_value = 2/3
//
// Each piece is (lo,hi,own_lo,own_hi,value); ownership flags are 0/1 or
// true/false. Unknown sections and keys are rejected.
SystemSpec parse_system(std::string_view text);
SystemSpec load_system(const std::filesystem::path& path);

// Inverse of parse_system up to whitespace and comments.
std::string format_system(const SystemSpec& spec);

}  // namespace fms
