#include "bcluster/rng.hpp"

#include <algorithm>
#include <cmath>

#include "bcluster/log_math.hpp"

namespace bcluster {

int categorical_draw(RngStream& rng, std::span<const double> logits) {
  if (logits.empty()) {
    throw std::domain_error("categorical_draw: empty logit sequence");
  }
  double m = kNegInf;
  for (double v : logits) m = std::max(m, v);
  if (m == kNegInf) {
    throw std::domain_error("categorical_draw: all logits are -inf");
  }
  double total = 0.0;
  for (double v : logits) total += std::exp(v - m);
  double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < logits.size(); ++i) {
    acc += std::exp(logits[i] - m);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(logits.size()) - 1;
}

}  // namespace bcluster
