#pragma once

#include <string>

#include "fms/model.hpp"
#include "fms/system_io.hpp"

namespace fms::testing {

inline SystemSpec example(const std::string& name) {
  return load_system(std::string(FMS_DATA_DIR) + "/" + name + ".sys");
}

inline Rational q(const char* text) { return parse_rational(text); }

inline Point pt(const char* text) { return parse_point(text); }

// Example 2 maps with the p0 step at `threshold` and level b.
inline SystemSpec example2_with(const Rational& b, const Rational& threshold) {
  const std::string bs = to_string(b);
  const std::string cs = to_string(Rational(1 - b));
  const std::string t = to_string(threshold);
  return parse_system("[domain]\nlo = 0\nhi = 1\n[edge 0]\nslope = 1/3\nintercept = 0\n"
                      "prob = piecewise (0," + t + ",1,1,0);(" + t + ",1,0,1," + bs + ")\n"
                      "[edge 1]\nslope = 1/3\nintercept = 1/3\n"
                      "prob = piecewise (0," + t + ",1,1,1);(" + t + ",1,0,1," + cs + ")\n");
}

}  // namespace fms::testing
