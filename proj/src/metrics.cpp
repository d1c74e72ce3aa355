#include "bcluster/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace bcluster {

namespace {

// Dense labels 0..m-1 in first-appearance order.
std::vector<int> densify(std::span<const int> labels, int& m) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  m = static_cast<int>(remap.size());
  return out;
}

double comb2(double x) { return 0.5 * x * (x - 1.0); }

// Min-cost assignment (square matrix), Jonker-style potentials.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) match[p[j] - 1] = j - 1;
  }
  return match;
}

}  // namespace

ContingencyTable contingency_table(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw UsageError("contingency_table: label vectors differ in length");
  }
  int ma = 0, mb = 0;
  auto da = densify(a, ma);
  auto db = densify(b, mb);
  ContingencyTable t(static_cast<std::size_t>(ma),
                     std::vector<long>(static_cast<std::size_t>(mb), 0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++t[static_cast<std::size_t>(da[i])][static_cast<std::size_t>(db[i])];
  }
  return t;
}

double ari_from_contingency(const ContingencyTable& table) {
  double n = 0.0, sum_ij = 0.0;
  std::vector<double> row_sums(table.size(), 0.0);
  std::vector<double> col_sums(table.empty() ? 0 : table[0].size(), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < table[i].size(); ++j) {
      double c = static_cast<double>(table[i][j]);
      n += c;
      row_sums[i] += c;
      col_sums[j] += c;
      sum_ij += comb2(c);
    }
  }
  double sum_i = 0.0, sum_j = 0.0;
  for (double r : row_sums) sum_i += comb2(r);
  for (double c : col_sums) sum_j += comb2(c);
  double expected = sum_i * sum_j / comb2(n);
  double maxidx = 0.5 * (sum_i + sum_j);
  if (maxidx == expected) return 0.0;
  return (sum_ij - expected) / (maxidx - expected);
}

double ari(std::span<const int> a, std::span<const int> b) {
  return ari_from_contingency(contingency_table(a, b));
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& w) {
  double wmax = 0.0;
  for (const auto& row : w) {
    for (double x : row) wmax = std::max(wmax, x);
  }
  std::vector<std::vector<double>> cost(w.size(),
                                        std::vector<double>(w.size(), 0.0));
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) cost[i][j] = wmax - w[i][j];
  }
  return min_cost_assignment(cost);
}

double clustering_error_from_contingency(const ContingencyTable& table) {
  std::size_t r = table.size();
  std::size_t c = table.empty() ? 0 : table[0].size();
  std::size_t m = std::max(r, c);
  std::vector<std::vector<double>> w(m, std::vector<double>(m, 0.0));
  double n = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      w[i][j] = static_cast<double>(table[i][j]);
      n += w[i][j];
    }
  }
  auto match = max_weight_assignment(w);
  double matched = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (match[i] >= 0) matched += w[i][static_cast<std::size_t>(match[i])];
  }
  return 1.0 - matched / n;
}

double clustering_error(std::span<const int> truth, std::span<const int> est) {
  return clustering_error_from_contingency(contingency_table(truth, est));
}

std::vector<int> align_labels(std::span<const int> truth, std::span<const int> est,
                              int k_truth, int k_est) {
  std::size_t m = static_cast<std::size_t>(std::max(k_truth, k_est));
  std::vector<std::vector<double>> w(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (est[i] >= 1 && est[i] <= k_est && truth[i] >= 1 && truth[i] <= k_truth) {
      w[static_cast<std::size_t>(est[i] - 1)]
       [static_cast<std::size_t>(truth[i] - 1)] += 1.0;
    }
  }
  auto match = max_weight_assignment(w);
  std::vector<int> perm(static_cast<std::size_t>(k_est), 0);
  for (int k = 0; k < k_est; ++k) {
    int t = match[static_cast<std::size_t>(k)];
    perm[static_cast<std::size_t>(k)] = (t >= 0 && t < k_truth) ? t + 1 : 0;
  }
  return perm;
}

double feature_recovery(std::span<const std::uint8_t> s_true,
                        std::span<const std::uint8_t> s_est) {
  if (s_true.size() != s_est.size()) {
    throw UsageError("feature_recovery: dimension mismatch");
  }
  long hits = 0;
  for (std::size_t j = 0; j < s_true.size(); ++j) {
    if (s_true[j] == s_est[j]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(s_true.size());
}

ConfusionRates confusion_rates(std::span<const std::uint8_t> s_true,
                               std::span<const std::uint8_t> s_est) {
  if (s_true.size() != s_est.size()) {
    throw UsageError("confusion_rates: dimension mismatch");
  }
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t j = 0; j < s_true.size(); ++j) {
    if (s_true[j]) {
      s_est[j] ? ++tp : ++fn;
    } else {
      s_est[j] ? ++fp : ++tn;
    }
  }
  ConfusionRates r;
  r.fpr = (fp + tn) ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0;
  r.fnr = (fn + tp) ? static_cast<double>(fn) / static_cast<double>(fn + tp) : 0.0;
  r.tnr = (fp + tn) ? static_cast<double>(tn) / static_cast<double>(fp + tn) : 1.0;
  return r;
}

namespace {

// Estimated configs with cluster bits permuted onto the truth labeling.
std::vector<SjConfig> permute_configs(const std::vector<SjConfig>& s_est,
                                      const std::vector<int>& perm, int K) {
  std::vector<SjConfig> out(s_est.size());
  for (std::size_t j = 0; j < s_est.size(); ++j) {
    std::uint32_t bits = 0;
    for (int k = 0; k < K; ++k) {
      if (s_est[j].selected(k) && perm[static_cast<std::size_t>(k)] >= 1) {
        bits |= 1u << (perm[static_cast<std::size_t>(k)] - 1);
      }
    }
    out[j] = SjConfig{canonicalize_bits(bits, K), K};
  }
  return out;
}

}  // namespace

double feature_recovery_configs(const std::vector<SjConfig>& s_true,
                                const std::vector<SjConfig>& s_est,
                                std::span<const int> c_true,
                                std::span<const int> c_est, int K) {
  if (s_true.size() != s_est.size()) {
    throw UsageError("feature_recovery_configs: dimension mismatch");
  }
  auto perm = align_labels(c_true, c_est, K, K);
  auto aligned = permute_configs(s_est, perm, K);
  long hits = 0;
  for (std::size_t j = 0; j < s_true.size(); ++j) {
    if (canonicalize_bits(s_true[j].bits, K) == aligned[j].bits) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(s_true.size());
}

ConfusionRates confusion_rates_configs(const std::vector<SjConfig>& s_true,
                                       const std::vector<SjConfig>& s_est,
                                       std::span<const int> c_true,
                                       std::span<const int> c_est, int K) {
  if (s_true.size() != s_est.size()) {
    throw UsageError("confusion_rates_configs: dimension mismatch");
  }
  auto perm = align_labels(c_true, c_est, K, K);
  auto aligned = permute_configs(s_est, perm, K);
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t j = 0; j < s_true.size(); ++j) {
    std::uint32_t tbits = canonicalize_bits(s_true[j].bits, K);
    for (int k = 0; k < K; ++k) {
      bool t = (tbits >> k) & 1u;
      bool e = aligned[j].selected(k);
      if (t) {
        e ? ++tp : ++fn;
      } else {
        e ? ++fp : ++tn;
      }
    }
  }
  ConfusionRates r;
  r.fpr = (fp + tn) ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0;
  r.fnr = (fn + tp) ? static_cast<double>(fn) / static_cast<double>(fn + tp) : 0.0;
  r.tnr = (fp + tn) ? static_cast<double>(tn) / static_cast<double>(fp + tn) : 1.0;
  return r;
}

}  // namespace bcluster
