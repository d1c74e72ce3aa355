#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "bcluster/fit_result.hpp"
#include "bcluster/log_math.hpp"
#include "bcluster/rng.hpp"

namespace bcluster {

// Fisher z-transform; |r| >= 1 is clamped just inside the open interval.
double fisher_z(double r);

// Mean and population variance of the upper triangle of a full z-matrix.
struct BackgroundParams {
  double theta0 = 0.0;
  double sigma0_sq = 0.0;
};
BackgroundParams background_params(const Eigen::MatrixXd& layer);

// p dataset layers over the same n query genes, each an n x n symmetric
// Fisher-z matrix with its genome-wide background estimates.
struct CorrelationStack {
  std::vector<Eigen::MatrixXd> layers;
  std::vector<BackgroundParams> background;
  std::vector<long> sample_counts;
  std::vector<std::string> layer_ids;

  long num_genes() const { return layers.empty() ? 0 : layers[0].rows(); }
  long num_layers() const { return static_cast<long>(layers.size()); }
  void validate() const;
};

// Build one layer from a genes x samples expression matrix: pairwise sample
// correlations of the query rows, Fisher-transformed, with the background
// taken over all gene pairs. Layers with fewer than 10 samples are the
// caller's job to screen out.
struct LayerBuildResult {
  Eigen::MatrixXd z;  // queries x queries
  BackgroundParams background;
  long samples = 0;
};
LayerBuildResult build_layer(const Eigen::MatrixXd& expression,
                             std::span<const long> query_rows);

struct IntegrateHyper {
  double gamma0 = 0.5;  // prior mass of the null cluster
  double pi_s = 0.1;    // prior selection probability per (dataset, cluster)
  // beta_sigma = 0 means: resolve the NIG prior from the stack backgrounds
  // at fit time (see default_nig).
  NIGParams nig{0.0, 1.0, 2.0, 0.0};

  void validate() const {
    if (gamma0 < 0.0 || gamma0 >= 1.0) {
      throw UsageError("integrate: gamma0 must lie in [0,1)");
    }
    if (pi_s <= 0.0 || pi_s >= 1.0) {
      throw UsageError("integrate: pi_s must lie in (0,1)");
    }
  }
};

// Default NIG prior: mu = mean layer background + 0.5, kappa = 1, alpha = 2,
// beta = 0.5 * median of the background variances.
NIGParams default_nig(const CorrelationStack& stack);

// Marginal likelihood of cluster k's within-cluster pairs in layer d,
// under selection (NIG) or non-selection (background normal).
double block_logmarg(const CorrelationStack& stack, std::span<const int> C,
                     int k, long d, int selected, const NIGParams& prior);

// Full collapsed log marginal ln P(Y|C,K): S, theta, sigma integrated out;
// cross-cluster and null-involved pairs contribute background density.
double logmarg_C_integration(const CorrelationStack& stack,
                             std::span<const int> C, int K,
                             const IntegrateHyper& hyper);

class IntegrateSampler {
 public:
  IntegrateSampler(const CorrelationStack& stack, int K, IntegrateHyper hyper);

  void set_assignment(std::span<const int> C);
  void randomize(RngStream& rng);
  void update_C(RngStream& rng);

  const std::vector<int>& C() const { return c_; }
  // ln P(Y|C,K) + ln P(C|K), the quantity the MAP search maximizes.
  double logpost() const;
  double data_logmarg() const;
  // P(S_{d,k} = 1 | Y, C), flattened d-major: index d*K + (k-1).
  std::vector<double> selection_posterior() const;

  void refresh();

 private:
  struct Stats {
    double sum_y = 0.0, sum_ysq = 0.0, bg = 0.0;
    long m = 0;
  };
  double term(const Stats& st, long d) const;
  void touch(long i, int k, double sign);

  const CorrelationStack& stack_;
  int K_;
  IntegrateHyper h_;
  long n_ = 0, p_ = 0;
  std::vector<int> c_;
  std::vector<Stats> stats_;  // d*K + (k-1)
  double bg_total_ = 0.0;     // background log-density over all pairs/layers
  double log_pi_ = 0.0, log_1mpi_ = 0.0;
  std::vector<double> log_prior_c_;
};

FitResult fit_integration(const CorrelationStack& stack,
                          std::span<const int> k_range, IntegrateHyper hyper,
                          const McmcConfig& mcmc);

}  // namespace bcluster
