#pragma once

#include <vector>

namespace fw {

// Source taps for corner-aligned linear interpolation along one axis:
// output index o samples input position o * (in - 1) / (out - 1).
struct LinearTap {
  int lo = 0;
  int hi = 0;
  double frac = 0.0;  // weight of `hi`
};

inline std::vector<LinearTap> linear_taps(int in, int out) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(out));
  if (in == 1 || out == 1) return taps;
  const double scale = static_cast<double>(in - 1) / static_cast<double>(out - 1);
  for (int o = 0; o < out; ++o) {
    const double pos = o * scale;
    int lo = static_cast<int>(pos);
    if (lo >= in - 1) lo = in - 1;
    const int hi = lo + 1 < in ? lo + 1 : lo;
    taps[static_cast<std::size_t>(o)] = {lo, hi, pos - lo};
  }
  return taps;
}

}  // namespace fw
