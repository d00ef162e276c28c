#pragma once

#include <cstdint>
#include <random>

#include "qps/common.hpp"

namespace qps {

/// Every stochastic operation takes one of these explicitly.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, so sequences do not
/// depend on the standard library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller (portable across standard libraries).
double standard_normal(Rng& rng);

/// Uniform index in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Samples index i with probability weights[i] / sum(weights).
std::size_t sample_discrete(Rng& rng, const std::vector<double>& weights);

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// R's diagonal moved into Q.
CMatrix haar_unitary(std::size_t dim, Rng& rng);

}  // namespace qps
