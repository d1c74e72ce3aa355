#include "bcluster/config_space.hpp"

#include <cmath>

#include "bcluster/log_math.hpp"

namespace bcluster {

std::vector<SjConfig> sj_config_space(int K) {
  if (K < 1) throw UsageError("sj_config_space: K must be >= 1");
  if (K > 20) throw UsageError("sj_config_space: K too large to enumerate");
  std::vector<SjConfig> out;
  out.reserve((1u << K) - static_cast<unsigned>(K));
  const std::uint32_t full = (1u << K) - 1u;
  for (std::uint32_t bits = 0; bits < full; ++bits) {
    if (__builtin_popcount(bits) == K - 1) continue;
    out.push_back(SjConfig{bits, K});
  }
  out.push_back(SjConfig{full, K});
  return out;
}

double sj_log_prior(const SjConfig& config, double pi_s, int K) {
  if (config.K != K || !is_canonical(config.bits, K)) {
    throw UsageError("sj_log_prior: non-canonical configuration");
  }
  int ones = config.popcount();
  if (ones < K) {
    return ones * std::log(pi_s) + (K - ones) * std::log1p(-pi_s);
  }
  // all-ones class: pi^K + K pi^(K-1) (1-pi)
  double lp = (K - 1) * std::log(pi_s);
  return lp + std::log(pi_s + K * (1.0 - pi_s));
}

}  // namespace bcluster
