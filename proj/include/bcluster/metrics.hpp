#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bcluster/config_space.hpp"
#include "bcluster/errors.hpp"

namespace bcluster {

// r x c overlap counts between two labelings (rows: first labeling).
using ContingencyTable = std::vector<std::vector<long>>;

ContingencyTable contingency_table(std::span<const int> a, std::span<const int> b);

// Hubert-Arabie adjusted Rand index.
double ari(std::span<const int> a, std::span<const int> b);
double ari_from_contingency(const ContingencyTable& table);

// Maximum-weight assignment on a square nonnegative matrix; returns the
// column matched to each row. O(n^3) Hungarian.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& w);

// Misclassification rate after optimal one-to-one alignment of cluster labels.
double clustering_error(std::span<const int> truth, std::span<const int> est);
double clustering_error_from_contingency(const ContingencyTable& table);

// Permutation est-cluster -> truth-cluster (labels 1..K, padded when the
// cluster counts differ). perm[k_est - 1] = matched truth label (1-based),
// or 0 when the estimated cluster matched a padding column.
std::vector<int> align_labels(std::span<const int> truth, std::span<const int> est,
                              int k_truth, int k_est);

struct ConfusionRates {
  double fpr = 0.0;
  double fnr = 0.0;
  double tnr = 0.0;
};

// BBC1-style length-p selection vectors.
double feature_recovery(std::span<const std::uint8_t> s_true,
                        std::span<const std::uint8_t> s_est);
ConfusionRates confusion_rates(std::span<const std::uint8_t> s_true,
                               std::span<const std::uint8_t> s_est);

// BBC2-style per-column canonical configurations, compared after aligning the
// estimated cluster labels to the truth.
double feature_recovery_configs(const std::vector<SjConfig>& s_true,
                                const std::vector<SjConfig>& s_est,
                                std::span<const int> c_true,
                                std::span<const int> c_est, int K);
ConfusionRates confusion_rates_configs(const std::vector<SjConfig>& s_true,
                                       const std::vector<SjConfig>& s_est,
                                       std::span<const int> c_true,
                                       std::span<const int> c_est, int K);

}  // namespace bcluster
