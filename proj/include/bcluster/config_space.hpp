#pragma once

#include <cstdint>
#include <vector>

#include "bcluster/errors.hpp"

namespace bcluster {

// A length-K selection vector for one column, packed into bits (bit k set
// means cluster k+1 uses its own distribution for the column). Vectors with
// exactly one zero are likelihood-equivalent to all-ones and are absorbed
// into it, leaving 2^K - K canonical configurations.
struct SjConfig {
  std::uint32_t bits = 0;
  int K = 0;

  bool selected(int k) const { return (bits >> k) & 1u; }
  int popcount() const { return __builtin_popcount(bits); }
  bool all_ones() const { return popcount() == K; }
};

inline std::uint32_t canonicalize_bits(std::uint32_t bits, int K) {
  int ones = __builtin_popcount(bits);
  if (ones == K - 1) return (K == 32) ? ~0u : ((1u << K) - 1u);
  return bits;
}

inline bool is_canonical(std::uint32_t bits, int K) {
  return __builtin_popcount(bits) != K - 1 || K == 1;
}

// All canonical configurations for K clusters, all-zeros first and all-ones
// last; size 2^K - K.
std::vector<SjConfig> sj_config_space(int K);

// Log prior mass of a canonical configuration; the all-ones class absorbs
// the K one-zero vectors.
double sj_log_prior(const SjConfig& config, double pi_s, int K);

}  // namespace bcluster
