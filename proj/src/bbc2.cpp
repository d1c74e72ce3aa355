#include "bcluster/bbc2.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bcluster/metrics.hpp"

namespace bcluster {

double log_prior_K_bbc2(int K, double alpha) {
  if (K < 1) throw UsageError("log_prior_K_bbc2: K must be >= 1");
  return (K - 1) * std::log(alpha) - alpha - lgamma_safe(K);
}

double col_logmarg_bbc2(const std::vector<std::vector<long>>& counts,
                        const SjConfig& config, std::span<const double> gamma) {
  const int K = static_cast<int>(counts.size());
  if (config.K != K) throw UsageError("col_logmarg_bbc2: config/counts K mismatch");
  std::vector<long> pooled(gamma.size(), 0);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    if (counts[static_cast<std::size_t>(k)].size() != gamma.size()) {
      throw std::domain_error("col_logmarg_bbc2: count length mismatch");
    }
    if (config.selected(k)) {
      total += dirichlet_multinomial_logmarg(counts[static_cast<std::size_t>(k)],
                                             gamma);
    } else {
      for (std::size_t l = 0; l < gamma.size(); ++l) {
        pooled[l] += counts[static_cast<std::size_t>(k)][l];
      }
    }
  }
  total += dirichlet_multinomial_logmarg(pooled, gamma);
  return total;
}

Bbc2Sampler::Bbc2Sampler(const CategoricalMatrix& Y, const Bbc2Hyper& hyper)
    : y_(Y), h_(hyper) {
  n_ = Y.rows();
  p_ = Y.cols();
  L_ = Y.num_categories;
  if (h_.gamma.empty()) h_.gamma.assign(static_cast<std::size_t>(L_), 1.0);
  h_.validate();
  if (static_cast<int>(h_.gamma.size()) != L_) {
    throw UsageError("bbc2: gamma length must equal the category count");
  }
  if (h_.K > kMaxK) {
    throw UsageError(
        "bbc2: K exceeds the exact configuration-enumeration cap (" +
        std::to_string(kMaxK) + "); use the hierarchical model instead");
  }
  gsum_ = std::accumulate(h_.gamma.begin(), h_.gamma.end(), 0.0);
  space_ = sj_config_space(h_.K);
  space_log_prior_.resize(space_.size());
  for (std::size_t t = 0; t < space_.size(); ++t) {
    space_log_prior_[t] = sj_log_prior(space_[t], h_.pi_s, h_.K);
  }
  c_.assign(static_cast<std::size_t>(n_), 1);
  cfg_.assign(static_cast<std::size_t>(p_), 0);
  bits_.assign(static_cast<std::size_t>(p_), 0);
  cnt_.assign(static_cast<std::size_t>(h_.K) * p_ * L_, 0);
  pool_.assign(static_cast<std::size_t>(p_) * L_, 0);
  csize_.assign(static_cast<std::size_t>(h_.K), 0);
  poolsize_.assign(static_cast<std::size_t>(p_), 0);
  for (int l = 0; l < L_; ++l) {
    lt_g_.emplace_back(h_.gamma[static_cast<std::size_t>(l)], n_ + 1);
    lg_g_.emplace_back(h_.gamma[static_cast<std::size_t>(l)], n_ + 1);
  }
  lt_gs_ = LogShiftTable(gsum_, n_ + 1);
  lg_gs_ = LgammaShiftTable(gsum_, n_ + 1);
  refresh();
}

void Bbc2Sampler::set_state(std::span<const int> C,
                            std::span<const std::uint16_t> cfg) {
  if (static_cast<long>(C.size()) != n_ || static_cast<long>(cfg.size()) != p_) {
    throw UsageError("bbc2 set_state: wrong length");
  }
  for (int c : C) {
    if (c < 1 || c > h_.K) throw UsageError("bbc2 set_state: label out of range");
  }
  for (std::uint16_t t : cfg) {
    if (t >= space_.size()) throw UsageError("bbc2 set_state: config out of range");
  }
  std::copy(C.begin(), C.end(), c_.begin());
  std::copy(cfg.begin(), cfg.end(), cfg_.begin());
  refresh();
}

void Bbc2Sampler::randomize(RngStream& rng) {
  for (long i = 0; i < n_; ++i) {
    c_[static_cast<std::size_t>(i)] = 1 + rng.uniform_int(h_.K);
  }
  for (long j = 0; j < p_; ++j) {
    cfg_[static_cast<std::size_t>(j)] =
        static_cast<std::uint16_t>(categorical_draw(rng, space_log_prior_));
  }
  refresh();
}

void Bbc2Sampler::refresh() {
  std::fill(cnt_.begin(), cnt_.end(), 0);
  std::fill(csize_.begin(), csize_.end(), 0);
  for (long j = 0; j < p_; ++j) {
    bits_[static_cast<std::size_t>(j)] = space_[cfg_[static_cast<std::size_t>(j)]].bits;
  }
  for (long i = 0; i < n_; ++i) {
    int ci = c_[static_cast<std::size_t>(i)] - 1;
    ++csize_[static_cast<std::size_t>(ci)];
    const std::int8_t* row = y_.values.data() + i * p_;
    for (long j = 0; j < p_; ++j) {
      ++cnt_[(static_cast<std::size_t>(ci) * p_ + j) * L_ + row[j]];
    }
  }
  for (long j = 0; j < p_; ++j) {
    std::uint32_t b = bits_[static_cast<std::size_t>(j)];
    long ps = 0;
    for (int l = 0; l < L_; ++l) pool_[static_cast<std::size_t>(j) * L_ + l] = 0;
    for (int k = 0; k < h_.K; ++k) {
      if ((b >> k) & 1u) continue;
      ps += csize_[static_cast<std::size_t>(k)];
      for (int l = 0; l < L_; ++l) {
        pool_[static_cast<std::size_t>(j) * L_ + l] +=
            cnt_[(static_cast<std::size_t>(k) * p_ + j) * L_ + l];
      }
    }
    poolsize_[static_cast<std::size_t>(j)] = ps;
  }
}

void Bbc2Sampler::remove_row(long i) {
  int ci = c_[static_cast<std::size_t>(i)] - 1;
  --csize_[static_cast<std::size_t>(ci)];
  const std::int8_t* row = y_.values.data() + i * p_;
  int* cnt = cnt_.data() + static_cast<std::size_t>(ci) * p_ * L_;
  for (long j = 0; j < p_; ++j) {
    int y = row[j];
    --cnt[j * L_ + y];
    if (!((bits_[static_cast<std::size_t>(j)] >> ci) & 1u)) {
      --pool_[static_cast<std::size_t>(j) * L_ + y];
      --poolsize_[static_cast<std::size_t>(j)];
    }
  }
}

void Bbc2Sampler::add_row(long i, int k) {
  int ki = k - 1;
  const std::int8_t* row = y_.values.data() + i * p_;
  int* cnt = cnt_.data() + static_cast<std::size_t>(ki) * p_ * L_;
  for (long j = 0; j < p_; ++j) {
    int y = row[j];
    ++cnt[j * L_ + y];
    if (!((bits_[static_cast<std::size_t>(j)] >> ki) & 1u)) {
      ++pool_[static_cast<std::size_t>(j) * L_ + y];
      ++poolsize_[static_cast<std::size_t>(j)];
    }
  }
  ++csize_[static_cast<std::size_t>(ki)];
  c_[static_cast<std::size_t>(i)] = k;
}

void Bbc2Sampler::update_C(RngStream& rng) {
  std::vector<double> logw(static_cast<std::size_t>(h_.K));
  for (long i = 0; i < n_; ++i) {
    remove_row(i);
    const std::int8_t* row = y_.values.data() + i * p_;
    for (int k = 0; k < h_.K; ++k) {
      const int* cnt = cnt_.data() + static_cast<std::size_t>(k) * p_ * L_;
      double lgs_k = lt_gs_[csize_[static_cast<std::size_t>(k)]];
      double lw = 0.0;
      for (long j = 0; j < p_; ++j) {
        int y = row[j];
        if ((bits_[static_cast<std::size_t>(j)] >> k) & 1u) {
          lw += lt_g_[static_cast<std::size_t>(y)][cnt[j * L_ + y]] - lgs_k;
        } else {
          lw += lt_g_[static_cast<std::size_t>(y)]
                     [pool_[static_cast<std::size_t>(j) * L_ + y]] -
                lt_gs_[poolsize_[static_cast<std::size_t>(j)]];
        }
      }
      logw[static_cast<std::size_t>(k)] = lw;
    }
    add_row(i, 1 + categorical_draw(rng, logw));
  }
}

void Bbc2Sampler::update_S(RngStream& rng) {
  std::vector<double> a(static_cast<std::size_t>(h_.K));
  std::vector<double> scores(space_.size());
  std::vector<long> pl(static_cast<std::size_t>(L_));
  std::vector<long> coltot(static_cast<std::size_t>(L_));
  for (long j = 0; j < p_; ++j) {
    for (int l = 0; l < L_; ++l) coltot[static_cast<std::size_t>(l)] = 0;
    for (int k = 0; k < h_.K; ++k) {
      const int* cnt = cnt_.data() + (static_cast<std::size_t>(k) * p_ + j) * L_;
      double v = -lg_gs_[csize_[static_cast<std::size_t>(k)]];
      for (int l = 0; l < L_; ++l) {
        v += lg_g_[static_cast<std::size_t>(l)][cnt[l]];
        coltot[static_cast<std::size_t>(l)] += cnt[l];
      }
      a[static_cast<std::size_t>(k)] = v;
    }
    for (std::size_t t = 0; t < space_.size(); ++t) {
      std::uint32_t b = space_[t].bits;
      double sc = space_log_prior_[t];
      for (int l = 0; l < L_; ++l) pl[static_cast<std::size_t>(l)] = coltot[static_cast<std::size_t>(l)];
      long pm = n_;
      for (int k = 0; k < h_.K; ++k) {
        if (!((b >> k) & 1u)) continue;
        sc += a[static_cast<std::size_t>(k)];
        pm -= csize_[static_cast<std::size_t>(k)];
        const int* cnt = cnt_.data() + (static_cast<std::size_t>(k) * p_ + j) * L_;
        for (int l = 0; l < L_; ++l) pl[static_cast<std::size_t>(l)] -= cnt[l];
      }
      sc -= lg_gs_[pm];
      for (int l = 0; l < L_; ++l) {
        sc += lg_g_[static_cast<std::size_t>(l)][pl[static_cast<std::size_t>(l)]];
      }
      scores[t] = sc;
    }
    auto pick = static_cast<std::uint16_t>(categorical_draw(rng, scores));
    cfg_[static_cast<std::size_t>(j)] = pick;
    std::uint32_t b = space_[pick].bits;
    bits_[static_cast<std::size_t>(j)] = b;
    long pm = 0;
    for (int l = 0; l < L_; ++l) pl[static_cast<std::size_t>(l)] = 0;
    for (int k = 0; k < h_.K; ++k) {
      if ((b >> k) & 1u) continue;
      pm += csize_[static_cast<std::size_t>(k)];
      const int* cnt = cnt_.data() + (static_cast<std::size_t>(k) * p_ + j) * L_;
      for (int l = 0; l < L_; ++l) pl[static_cast<std::size_t>(l)] += cnt[l];
    }
    poolsize_[static_cast<std::size_t>(j)] = pm;
    for (int l = 0; l < L_; ++l) {
      pool_[static_cast<std::size_t>(j) * L_ + l] =
          static_cast<int>(pl[static_cast<std::size_t>(l)]);
    }
  }
}

double Bbc2Sampler::column_logmarg_at(long j, const SjConfig& cfg) const {
  double total = 0.0;
  std::vector<long> pl(static_cast<std::size_t>(L_), 0);
  long pm = 0;
  for (int k = 0; k < h_.K; ++k) {
    const int* cnt = cnt_.data() + (static_cast<std::size_t>(k) * p_ + j) * L_;
    if (cfg.selected(k)) {
      double v = -lg_gs_[csize_[static_cast<std::size_t>(k)]];
      for (int l = 0; l < L_; ++l) v += lg_g_[static_cast<std::size_t>(l)][cnt[l]];
      total += v;
    } else {
      pm += csize_[static_cast<std::size_t>(k)];
      for (int l = 0; l < L_; ++l) pl[static_cast<std::size_t>(l)] += cnt[l];
    }
  }
  total -= lg_gs_[pm];
  for (int l = 0; l < L_; ++l) {
    total += lg_g_[static_cast<std::size_t>(l)][pl[static_cast<std::size_t>(l)]];
  }
  return total;
}

double Bbc2Sampler::data_logmarg() const {
  double total = 0.0;
  for (long j = 0; j < p_; ++j) {
    total += column_logmarg_at(j, space_[cfg_[static_cast<std::size_t>(j)]]);
  }
  return total;
}

double Bbc2Sampler::logpost() const {
  double lp = -static_cast<double>(n_) * std::log(static_cast<double>(h_.K));
  for (long j = 0; j < p_; ++j) {
    lp += space_log_prior_[cfg_[static_cast<std::size_t>(j)]] +
          column_logmarg_at(j, space_[cfg_[static_cast<std::size_t>(j)]]);
  }
  return lp;
}

std::vector<double> Bbc2Sampler::config_log_posterior(long j) const {
  std::vector<double> scores(space_.size());
  for (std::size_t t = 0; t < space_.size(); ++t) {
    scores[t] = space_log_prior_[t] + column_logmarg_at(j, space_[t]);
  }
  double norm = log_sum_exp(scores);
  for (double& s : scores) s -= norm;
  return scores;
}

std::vector<SjConfig> Bbc2Sampler::configs() const {
  std::vector<SjConfig> out(static_cast<std::size_t>(p_));
  for (long j = 0; j < p_; ++j) {
    out[static_cast<std::size_t>(j)] = space_[cfg_[static_cast<std::size_t>(j)]];
  }
  return out;
}

double chib_log_PY_given_K(const std::vector<Bbc2Sample>& samples,
                           const CategoricalMatrix& Y, const Bbc2Hyper& hyper,
                           RngStream& rng, std::size_t max_samples) {
  if (samples.empty()) {
    throw EstimationError("chib_log_PY_given_K: no posterior samples");
  }
  std::size_t map_idx = 0;
  for (std::size_t m = 1; m < samples.size(); ++m) {
    if (samples[m].logpost > samples[map_idx].logpost) map_idx = m;
  }
  const auto& star = samples[map_idx];
  Bbc2Sampler s(Y, hyper);
  const int K = s.h_.K;
  const long n = s.n_, p = s.p_;
  const int L = s.L_;
  s.set_state(star.C, star.cfg);

  double num = s.data_logmarg() -
               static_cast<double>(n) * std::log(static_cast<double>(K));
  for (long j = 0; j < p; ++j) {
    num += s.space_log_prior_[star.cfg[static_cast<std::size_t>(j)]];
  }
  double log_ps_given = 0.0;
  for (long j = 0; j < p; ++j) {
    log_ps_given += s.config_log_posterior(j)[star.cfg[static_cast<std::size_t>(j)]];
  }
  std::vector<char> seen(static_cast<std::size_t>(K) + 1, 0);
  int used = 0;
  for (int c : star.C) {
    if (!seen[static_cast<std::size_t>(c)]) {
      seen[static_cast<std::size_t>(c)] = 1;
      ++used;
    }
  }
  double log_versions = lgamma_safe(K + 1.0) - lgamma_safe(K - used + 1.0);
  double log_dup = lgamma_safe(K - used + 1.0);

  std::vector<std::size_t> use;
  std::size_t M = samples.size();
  if (max_samples == 0 || M <= max_samples) {
    use.resize(M);
    for (std::size_t m = 0; m < M; ++m) use[m] = m;
  } else {
    for (std::size_t t = 0; t < max_samples; ++t) use.push_back(t * M / max_samples);
  }

  // ln theta for every (cluster, column, category), unselected clusters
  // pointing at the pooled background draw; then row-normalized assignment
  // probabilities under each retained sample's (Theta, S).
  std::vector<double> lth(static_cast<std::size_t>(K) * p * L);
  std::vector<double> draw(static_cast<std::size_t>(L)), dalpha(static_cast<std::size_t>(L));
  std::vector<double> logM(static_cast<std::size_t>(n) * K);
  std::vector<double> T(static_cast<std::size_t>(K) * K);
  std::vector<double> ells;
  Bbc2Sampler s2(Y, hyper);
  for (std::size_t m : use) {
    s2.set_state(samples[m].C, samples[m].cfg);
    for (long j = 0; j < p; ++j) {
      std::uint32_t b = s2.bits_[static_cast<std::size_t>(j)];
      double lbg[127];
      for (int l = 0; l < L; ++l) {
        dalpha[static_cast<std::size_t>(l)] =
            s2.h_.gamma[static_cast<std::size_t>(l)] +
            s2.pool_[static_cast<std::size_t>(j) * L + l];
      }
      rng.dirichlet(dalpha, draw);
      for (int l = 0; l < L; ++l) lbg[l] = std::log(draw[static_cast<std::size_t>(l)]);
      for (int k = 0; k < K; ++k) {
        double* dst = lth.data() + (static_cast<std::size_t>(k) * p + j) * L;
        if ((b >> k) & 1u) {
          const int* cnt =
              s2.cnt_.data() + (static_cast<std::size_t>(k) * p + j) * L;
          for (int l = 0; l < L; ++l) {
            dalpha[static_cast<std::size_t>(l)] =
                s2.h_.gamma[static_cast<std::size_t>(l)] + cnt[l];
          }
          rng.dirichlet(dalpha, draw);
          for (int l = 0; l < L; ++l) dst[l] = std::log(draw[static_cast<std::size_t>(l)]);
        } else {
          for (int l = 0; l < L; ++l) dst[l] = lbg[l];
        }
      }
    }
    for (long i = 0; i < n; ++i) {
      const std::int8_t* row = Y.values.data() + i * p;
      for (int k = 0; k < K; ++k) {
        const double* lt = lth.data() + static_cast<std::size_t>(k) * p * L;
        double v = 0.0;
        for (long j = 0; j < p; ++j) v += lt[j * L + row[j]];
        logM[static_cast<std::size_t>(i) * K + k] = v;
      }
      double* mrow = logM.data() + static_cast<std::size_t>(i) * K;
      double norm = log_sum_exp(std::span<const double>(mrow, static_cast<std::size_t>(K)));
      for (int k = 0; k < K; ++k) mrow[k] -= norm;
    }
    std::fill(T.begin(), T.end(), 0.0);
    for (long i = 0; i < n; ++i) {
      int a = star.C[static_cast<std::size_t>(i)] - 1;
      for (int k = 0; k < K; ++k) {
        T[static_cast<std::size_t>(a) * K + k] +=
            logM[static_cast<std::size_t>(i) * K + k];
      }
    }
    if (K <= 8) {
      std::vector<int> perm(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) perm[static_cast<std::size_t>(k)] = k;
      std::vector<double> vals;
      do {
        double v = 0.0;
        for (int a = 0; a < K; ++a) {
          v += T[static_cast<std::size_t>(a) * K + perm[static_cast<std::size_t>(a)]];
        }
        vals.push_back(v);
      } while (std::next_permutation(perm.begin(), perm.end()));
      ells.push_back(log_sum_exp(vals) - log_dup);
    } else {
      // Too many relabelings to enumerate: keep only the best-overlap one.
      std::vector<std::vector<double>> overlap(
          static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(K), 0.0));
      for (long i = 0; i < n; ++i) {
        ++overlap[static_cast<std::size_t>(samples[m].C[static_cast<std::size_t>(i)] - 1)]
                 [static_cast<std::size_t>(star.C[static_cast<std::size_t>(i)] - 1)];
      }
      auto match = max_weight_assignment(overlap);
      std::vector<int> inv(static_cast<std::size_t>(K), 0);
      for (int k = 0; k < K; ++k) inv[static_cast<std::size_t>(match[static_cast<std::size_t>(k)])] = k;
      double v = 0.0;
      for (int a = 0; a < K; ++a) {
        v += T[static_cast<std::size_t>(a) * K + inv[static_cast<std::size_t>(a)]];
      }
      ells.push_back(v);
    }
  }
  double log_post_c = log_sum_exp(ells) - std::log(static_cast<double>(use.size()));
  if (!std::isfinite(log_post_c)) {
    throw EstimationError("chib_log_PY_given_K: zero posterior ordinate");
  }
  return num + log_versions - log_post_c - log_ps_given;
}

FitResult fit_bbc2(const CategoricalMatrix& Y, std::span<const int> k_range,
                   Bbc2Hyper base, const McmcConfig& mcmc,
                   std::size_t chib_max_samples) {
  if (k_range.empty()) throw UsageError("fit_bbc2: empty K range");
  mcmc.validate();
  FitResult out;
  out.model = "bbc2";
  for (int K : k_range) {
    Bbc2Hyper h = base;
    h.K = K;
    RngStream rng(mcmc.seed, static_cast<std::uint64_t>(K));
    Bbc2Sampler sampler(Y, h);
    sampler.randomize(rng);
    std::vector<Bbc2Sample> samples;
    samples.reserve(static_cast<std::size_t>(mcmc.iterations - mcmc.burn_in));
    for (int it = 0; it < mcmc.iterations; ++it) {
      sampler.sweep(rng);
      if (it >= mcmc.burn_in) {
        samples.push_back({sampler.C(), sampler.cfg_ids(), sampler.logpost()});
      }
    }
    RngStream chib_rng = rng.derive(0x43484942ULL);
    KFit fit;
    fit.K = K;
    fit.log_prior_K = log_prior_K_bbc2(K, h.alpha);
    fit.log_marg = chib_log_PY_given_K(samples, Y, h, chib_rng, chib_max_samples);
    std::size_t best = 0;
    for (std::size_t m = 1; m < samples.size(); ++m) {
      if (samples[m].logpost > samples[best].logpost) best = m;
    }
    fit.map_score = samples[best].logpost;
    fit.C = samples[best].C;
    sampler.set_state(samples[best].C, samples[best].cfg);
    fit.S_cfg = sampler.configs();
    const auto& space = sampler.config_space();
    fit.sel_prob.assign(static_cast<std::size_t>(Y.cols()) * K, 0.0);
    for (long j = 0; j < Y.cols(); ++j) {
      auto lp = sampler.config_log_posterior(j);
      for (std::size_t t = 0; t < space.size(); ++t) {
        double pr = std::exp(lp[t]);
        for (int k = 0; k < K; ++k) {
          if (space[t].selected(k)) {
            fit.sel_prob[static_cast<std::size_t>(j) * K + k] += pr;
          }
        }
      }
    }
    out.per_k.push_back(std::move(fit));
  }
  const KFit* best = &out.per_k.front();
  for (const auto& f : out.per_k) {
    if (f.log_marg + f.log_prior_K > best->log_marg + best->log_prior_K) best = &f;
  }
  out.K_hat = best->K;
  return out;
}

}  // namespace bcluster
