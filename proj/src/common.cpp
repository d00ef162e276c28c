#include <cmath>

#include "qps/common.hpp"

namespace qps {

double wrap_phase(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod can return exactly 2π after the correction for tiny negatives.
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double wrap_signed(double theta) {
  double r = wrap_phase(theta);
  if (r > kPi) r -= kTwoPi;
  return r;
}

}  // namespace qps
