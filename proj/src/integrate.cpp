#include "bcluster/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace bcluster {

double fisher_z(double r) {
  const double cap = 1.0 - 1e-6;
  if (r >= 1.0) r = cap;
  if (r <= -1.0) r = -cap;
  return 0.5 * std::log((1.0 + r) / (1.0 - r));
}

BackgroundParams background_params(const Eigen::MatrixXd& layer) {
  long N = layer.rows();
  if (N < 3 || layer.cols() != N) {
    throw DataError("background_params: need a square matrix with N >= 3");
  }
  double sum = 0.0, sumsq = 0.0;
  long m = 0;
  for (long i = 0; i < N; ++i) {
    for (long j = i + 1; j < N; ++j) {
      double v = layer(i, j);
      sum += v;
      sumsq += v * v;
      ++m;
    }
  }
  BackgroundParams out;
  out.theta0 = sum / static_cast<double>(m);
  out.sigma0_sq = sumsq / static_cast<double>(m) - out.theta0 * out.theta0;
  if (out.sigma0_sq <= 0.0) {
    throw DataError("background_params: zero variance across gene pairs");
  }
  return out;
}

void CorrelationStack::validate() const {
  if (layers.empty()) throw DataError("correlation stack: no layers");
  long n = layers[0].rows();
  if (background.size() != layers.size()) {
    throw DataError("correlation stack: background count mismatch");
  }
  for (std::size_t d = 0; d < layers.size(); ++d) {
    if (layers[d].rows() != n || layers[d].cols() != n) {
      throw DataError("correlation stack: inconsistent layer shape");
    }
    if (background[d].sigma0_sq <= 0.0) {
      throw DataError("correlation stack: nonpositive background variance");
    }
  }
}

LayerBuildResult build_layer(const Eigen::MatrixXd& expression,
                             std::span<const long> query_rows) {
  long N = expression.rows(), samples = expression.cols();
  if (samples < 3) throw DataError("build_layer: fewer than 3 samples");
  Eigen::MatrixXd centered = expression;
  for (long g = 0; g < N; ++g) {
    double mean = expression.row(g).mean();
    centered.row(g).array() -= mean;
    double norm = centered.row(g).norm();
    if (norm > 0) centered.row(g) /= norm;
  }
  Eigen::MatrixXd corr = centered * centered.transpose();
  Eigen::MatrixXd zfull(N, N);
  for (long i = 0; i < N; ++i) {
    zfull(i, i) = 0.0;
    for (long j = i + 1; j < N; ++j) {
      double z = fisher_z(corr(i, j));
      zfull(i, j) = z;
      zfull(j, i) = z;
    }
  }
  LayerBuildResult out;
  out.background = background_params(zfull);
  out.samples = samples;
  long q = static_cast<long>(query_rows.size());
  out.z.resize(q, q);
  for (long a = 0; a < q; ++a) {
    for (long b = 0; b < q; ++b) {
      out.z(a, b) = zfull(query_rows[static_cast<std::size_t>(a)],
                          query_rows[static_cast<std::size_t>(b)]);
    }
  }
  return out;
}

NIGParams default_nig(const CorrelationStack& stack) {
  stack.validate();
  NIGParams prior;
  double mean_bg = 0.0;
  std::vector<double> vars;
  for (const auto& bg : stack.background) {
    mean_bg += bg.theta0;
    vars.push_back(bg.sigma0_sq);
  }
  mean_bg /= static_cast<double>(stack.background.size());
  std::sort(vars.begin(), vars.end());
  std::size_t h = vars.size() / 2;
  double med = vars.size() % 2 ? vars[h] : 0.5 * (vars[h - 1] + vars[h]);
  prior.mu_theta = mean_bg + 0.5;
  prior.kappa_theta = 1.0;
  prior.alpha_sigma = 2.0;
  prior.beta_sigma = 0.5 * med;
  return prior;
}

double block_logmarg(const CorrelationStack& stack, std::span<const int> C,
                     int k, long d, int selected, const NIGParams& prior) {
  if (k < 1) throw UsageError("block_logmarg: k must be >= 1");
  const auto& layer = stack.layers[static_cast<std::size_t>(d)];
  const auto& bg = stack.background[static_cast<std::size_t>(d)];
  double sum_y = 0.0, sum_ysq = 0.0, lbg = 0.0;
  long m = 0;
  long n = layer.rows();
  for (long i = 0; i < n; ++i) {
    if (C[static_cast<std::size_t>(i)] != k) continue;
    for (long j = i + 1; j < n; ++j) {
      if (C[static_cast<std::size_t>(j)] != k) continue;
      double y = layer(i, j);
      sum_y += y;
      sum_ysq += y * y;
      lbg += log_normal_pdf(y, bg.theta0, bg.sigma0_sq);
      ++m;
    }
  }
  return selected ? nig_logmarg(sum_y, sum_ysq, m, prior) : lbg;
}

double logmarg_C_integration(const CorrelationStack& stack,
                             std::span<const int> C, int K,
                             const IntegrateHyper& hyper) {
  IntegrateSampler s(stack, K, hyper);
  s.set_assignment(C);
  return s.data_logmarg();
}

IntegrateSampler::IntegrateSampler(const CorrelationStack& stack, int K,
                                   IntegrateHyper hyper)
    : stack_(stack), K_(K), h_(hyper) {
  stack_.validate();
  h_.validate();
  if (h_.nig.beta_sigma <= 0.0) h_.nig = default_nig(stack_);
  if (K_ < 1) throw UsageError("integrate: K must be >= 1");
  n_ = stack_.num_genes();
  p_ = stack_.num_layers();
  c_.assign(static_cast<std::size_t>(n_), 0);
  stats_.assign(static_cast<std::size_t>(p_ * K_), Stats{});
  log_pi_ = std::log(h_.pi_s);
  log_1mpi_ = std::log(1.0 - h_.pi_s);
  log_prior_c_.assign(static_cast<std::size_t>(K_) + 1, 0.0);
  log_prior_c_[0] = h_.gamma0 > 0 ? std::log(h_.gamma0) : kNegInf;
  for (int k = 1; k <= K_; ++k) {
    log_prior_c_[static_cast<std::size_t>(k)] = std::log((1.0 - h_.gamma0) / K_);
  }
  bg_total_ = 0.0;
  for (long d = 0; d < p_; ++d) {
    const auto& layer = stack_.layers[static_cast<std::size_t>(d)];
    const auto& bg = stack_.background[static_cast<std::size_t>(d)];
    for (long i = 0; i < n_; ++i) {
      for (long j = i + 1; j < n_; ++j) {
        bg_total_ += log_normal_pdf(layer(i, j), bg.theta0, bg.sigma0_sq);
      }
    }
  }
  refresh();
}

void IntegrateSampler::set_assignment(std::span<const int> C) {
  if (static_cast<long>(C.size()) != n_) {
    throw UsageError("integrate set_assignment: wrong length");
  }
  for (int c : C) {
    if (c < 0 || c > K_) {
      throw UsageError("integrate set_assignment: label out of range");
    }
  }
  std::copy(C.begin(), C.end(), c_.begin());
  refresh();
}

void IntegrateSampler::randomize(RngStream& rng) {
  for (long i = 0; i < n_; ++i) {
    c_[static_cast<std::size_t>(i)] = rng.bernoulli(h_.gamma0)
                                          ? 0
                                          : 1 + rng.uniform_int(K_);
  }
  refresh();
}

void IntegrateSampler::refresh() {
  std::fill(stats_.begin(), stats_.end(), Stats{});
  for (long d = 0; d < p_; ++d) {
    const auto& layer = stack_.layers[static_cast<std::size_t>(d)];
    const auto& bg = stack_.background[static_cast<std::size_t>(d)];
    for (long i = 0; i < n_; ++i) {
      int ci = c_[static_cast<std::size_t>(i)];
      if (ci == 0) continue;
      for (long j = i + 1; j < n_; ++j) {
        if (c_[static_cast<std::size_t>(j)] != ci) continue;
        double y = layer(i, j);
        auto& st = stats_[static_cast<std::size_t>(d * K_ + ci - 1)];
        st.sum_y += y;
        st.sum_ysq += y * y;
        st.bg += log_normal_pdf(y, bg.theta0, bg.sigma0_sq);
        ++st.m;
      }
    }
  }
}

double IntegrateSampler::term(const Stats& st, long) const {
  return log_add_exp(log_pi_ + nig_logmarg(st.sum_y, st.sum_ysq, st.m, h_.nig),
                     log_1mpi_ + st.bg);
}

double IntegrateSampler::data_logmarg() const {
  double total = bg_total_;
  for (long d = 0; d < p_; ++d) {
    for (int k = 1; k <= K_; ++k) {
      const auto& st = stats_[static_cast<std::size_t>(d * K_ + k - 1)];
      total += term(st, d) - st.bg;
    }
  }
  return total;
}

double IntegrateSampler::logpost() const {
  double lp = data_logmarg();
  for (long i = 0; i < n_; ++i) {
    lp += log_prior_c_[static_cast<std::size_t>(c_[static_cast<std::size_t>(i)])];
  }
  return lp;
}

void IntegrateSampler::touch(long i, int k, double sign) {
  for (long d = 0; d < p_; ++d) {
    const auto& layer = stack_.layers[static_cast<std::size_t>(d)];
    const auto& bg = stack_.background[static_cast<std::size_t>(d)];
    auto& st = stats_[static_cast<std::size_t>(d * K_ + k - 1)];
    for (long j = 0; j < n_; ++j) {
      if (j == i || c_[static_cast<std::size_t>(j)] != k) continue;
      double y = layer(i, j);
      st.sum_y += sign * y;
      st.sum_ysq += sign * y * y;
      st.bg += sign * log_normal_pdf(y, bg.theta0, bg.sigma0_sq);
      st.m += sign > 0 ? 1 : -1;
    }
  }
}

void IntegrateSampler::update_C(RngStream& rng) {
  std::vector<double> logw(static_cast<std::size_t>(K_) + 1);
  for (long i = 0; i < n_; ++i) {
    int old = c_[static_cast<std::size_t>(i)];
    if (old > 0) touch(i, old, -1.0);
    c_[static_cast<std::size_t>(i)] = 0;
    logw[0] = log_prior_c_[0];
    for (int k = 1; k <= K_; ++k) {
      double delta = 0.0;
      for (long d = 0; d < p_; ++d) {
        const auto& layer = stack_.layers[static_cast<std::size_t>(d)];
        const auto& bg = stack_.background[static_cast<std::size_t>(d)];
        Stats st = stats_[static_cast<std::size_t>(d * K_ + k - 1)];
        double before = term(st, d) - st.bg;
        for (long j = 0; j < n_; ++j) {
          if (c_[static_cast<std::size_t>(j)] != k) continue;
          double y = layer(i, j);
          st.sum_y += y;
          st.sum_ysq += y * y;
          st.bg += log_normal_pdf(y, bg.theta0, bg.sigma0_sq);
          ++st.m;
        }
        delta += term(st, d) - st.bg - before;
      }
      logw[static_cast<std::size_t>(k)] =
          log_prior_c_[static_cast<std::size_t>(k)] + delta;
    }
    int pick;
    if (h_.gamma0 > 0.0) {
      pick = categorical_draw(rng, logw);
    } else {
      pick = 1 + categorical_draw(
                     rng, std::span<const double>(logw.data() + 1,
                                                  static_cast<std::size_t>(K_)));
    }
    c_[static_cast<std::size_t>(i)] = pick;
    if (pick > 0) touch(i, pick, 1.0);
  }
}

std::vector<double> IntegrateSampler::selection_posterior() const {
  std::vector<double> out(static_cast<std::size_t>(p_ * K_));
  for (long d = 0; d < p_; ++d) {
    for (int k = 1; k <= K_; ++k) {
      const auto& st = stats_[static_cast<std::size_t>(d * K_ + k - 1)];
      double lsel = log_pi_ + nig_logmarg(st.sum_y, st.sum_ysq, st.m, h_.nig);
      double lbg = log_1mpi_ + st.bg;
      out[static_cast<std::size_t>(d * K_ + k - 1)] =
          1.0 / (1.0 + std::exp(lbg - lsel));
    }
  }
  return out;
}

FitResult fit_integration(const CorrelationStack& stack,
                          std::span<const int> k_range, IntegrateHyper hyper,
                          const McmcConfig& mcmc) {
  if (k_range.empty()) throw UsageError("fit_integration: empty K range");
  mcmc.validate();
  hyper.validate();
  if (hyper.nig.beta_sigma <= 0.0) hyper.nig = default_nig(stack);
  FitResult out;
  out.model = "integrate";
  for (int K : k_range) {
    RngStream rng(mcmc.seed, static_cast<std::uint64_t>(K));
    IntegrateSampler sampler(stack, K, hyper);
    sampler.randomize(rng);
    KFit fit;
    fit.K = K;
    fit.map_score = kNegInf;
    for (int it = 0; it < mcmc.iterations; ++it) {
      sampler.update_C(rng);
      if (it < mcmc.burn_in) continue;
      double lp = sampler.logpost();
      if (lp > fit.map_score) {
        fit.map_score = lp;
        fit.C = sampler.C();
      }
    }
    sampler.set_assignment(fit.C);
    fit.sel_prob = sampler.selection_posterior();
    fit.log_marg = fit.map_score;  // MAP comparison across K, uniform prior
    out.per_k.push_back(std::move(fit));
  }
  const KFit* best = &out.per_k.front();
  for (const auto& f : out.per_k) {
    if (f.map_score > best->map_score) best = &f;
  }
  out.K_hat = best->K;
  return out;
}

}  // namespace bcluster
