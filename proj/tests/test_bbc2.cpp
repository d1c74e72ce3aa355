#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "bcluster/bbc2.hpp"
#include "bcluster/log_math.hpp"
#include "bcluster/metrics.hpp"
#include "bcluster/simgen.hpp"

using namespace bcluster;

namespace {

CategoricalMatrix tiny_matrix() {
  CategoricalMatrix Y;
  Y.values.resize(4, 2);
  Y.values << 1, 0,
              1, 0,
              0, 1,
              0, 1;
  Y.num_categories = 2;
  return Y;
}

std::vector<std::vector<long>> column_counts(const CategoricalMatrix& Y,
                                             const std::vector<int>& C, long j,
                                             int K, int L) {
  std::vector<std::vector<long>> counts(
      static_cast<std::size_t>(K), std::vector<long>(static_cast<std::size_t>(L), 0));
  for (long i = 0; i < Y.values.rows(); ++i) {
    int k = C[static_cast<std::size_t>(i)];
    ++counts[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(Y.values(i, j))];
  }
  return counts;
}

double state_logpost(const CategoricalMatrix& Y, const Bbc2Hyper& h,
                     const std::vector<int>& C,
                     const std::vector<std::uint16_t>& cfg) {
  Bbc2Sampler scratch(Y, h);
  scratch.set_state(C, cfg);
  return scratch.logpost();
}

std::string state_key(const std::vector<int>& C,
                      const std::vector<std::uint16_t>& cfg) {
  std::string key;
  for (int v : C) key += static_cast<char>('0' + v);
  key += '|';
  for (auto v : cfg) key += static_cast<char>('0' + v);
  return key;
}

template <typename F>
void for_all_states(long n, long p, int K, std::size_t n_cfg, F&& f) {
  long nc = 1;
  for (long i = 0; i < n; ++i) nc *= K;
  long ns = 1;
  for (long j = 0; j < p; ++j) ns *= static_cast<long>(n_cfg);
  for (long code_c = 0; code_c < nc; ++code_c) {
    std::vector<int> C(static_cast<std::size_t>(n));
    long r = code_c;
    for (long i = 0; i < n; ++i) {
      C[static_cast<std::size_t>(i)] = 1 + static_cast<int>(r % K);
      r /= K;
    }
    for (long code_s = 0; code_s < ns; ++code_s) {
      std::vector<std::uint16_t> cfg(static_cast<std::size_t>(p));
      long s = code_s;
      for (long j = 0; j < p; ++j) {
        cfg[static_cast<std::size_t>(j)] = static_cast<std::uint16_t>(s % n_cfg);
        s /= static_cast<long>(n_cfg);
      }
      f(C, cfg);
    }
  }
}

}  // namespace

TEST_CASE("truncated-Poisson prior over K") {
  double alpha = 0.05;
  // Successive ratios follow a Poisson(alpha) law on K-1.
  CHECK(log_prior_K_bbc2(2, alpha) - log_prior_K_bbc2(1, alpha) ==
        doctest::Approx(std::log(alpha)));
  CHECK(log_prior_K_bbc2(3, alpha) - log_prior_K_bbc2(2, alpha) ==
        doctest::Approx(std::log(alpha / 2.0)));
  CHECK(log_prior_K_bbc2(5, alpha) - log_prior_K_bbc2(4, alpha) ==
        doctest::Approx(std::log(alpha / 4.0)));
}

TEST_CASE("col_logmarg_bbc2 pools unselected clusters") {
  std::vector<double> gamma{1.0, 1.0, 1.0};
  // Three clusters, three categories.
  std::vector<std::vector<long>> counts{{4, 1, 0}, {0, 5, 1}, {2, 2, 2}};
  // Select cluster 1 only: own term for cluster 1, pooled term for 2+3.
  SjConfig sel1{0b001, 3};
  std::vector<long> pooled{2, 7, 3};
  double expect = dirichlet_multinomial_logmarg(counts[0], gamma) +
                  dirichlet_multinomial_logmarg(pooled, gamma);
  CHECK(col_logmarg_bbc2(counts, sel1, gamma) ==
        doctest::Approx(expect).epsilon(1e-12));
  // Empty config: one pooled term over everything.
  SjConfig none{0, 3};
  std::vector<long> all{6, 8, 3};
  CHECK(col_logmarg_bbc2(counts, none, gamma) ==
        doctest::Approx(dirichlet_multinomial_logmarg(all, gamma)).epsilon(1e-12));
  // All-ones: one term per cluster.
  SjConfig full{0b111, 3};
  double sep = 0.0;
  for (const auto& row : counts) sep += dirichlet_multinomial_logmarg(row, gamma);
  CHECK(col_logmarg_bbc2(counts, full, gamma) == doctest::Approx(sep).epsilon(1e-12));
  // A K-1-selection is the same partition of clusters as all-ones.
  SjConfig twob{0b011, 3};
  CHECK(col_logmarg_bbc2(counts, SjConfig{canonicalize_bits(0b011, 3), 3}, gamma) ==
        doctest::Approx(sep).epsilon(1e-12));
  CHECK(canonicalize_bits(twob.bits, 3) == 0b111u);
}

TEST_CASE("incremental state matches from-scratch recomputation") {
  RngStream rng(21, 0);
  auto truth = gen_bbc2(25, 15, 3, 3, 0.4, {}, rng);
  Bbc2Hyper h;
  h.K = 3;
  Bbc2Sampler sampler(truth.Y, h);
  RngStream chain(4, 0);
  sampler.randomize(chain);
  for (int sweep = 0; sweep < 15; ++sweep) {
    sampler.sweep(chain);
    double incremental = sampler.logpost();
    Bbc2Sampler fresh(truth.Y, h);
    fresh.set_state(sampler.C(), sampler.cfg_ids());
    CHECK(incremental == doctest::Approx(fresh.logpost()).epsilon(1e-10));
    // Direct column-by-column data marginal.
    double direct = 0.0;
    for (long j = 0; j < 15; ++j) {
      auto counts = column_counts(truth.Y, sampler.C(), j, 3, 3);
      direct += col_logmarg_bbc2(
          counts, sampler.config_space()[sampler.cfg_ids()[static_cast<std::size_t>(j)]],
          h.gamma.empty() ? std::vector<double>(3, 1.0) : h.gamma);
    }
    CHECK(sampler.data_logmarg() == doctest::Approx(direct).epsilon(1e-10));
  }
  double before = sampler.logpost();
  sampler.refresh();
  CHECK(sampler.logpost() == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("per-column configuration posterior is normalized and exact") {
  RngStream rng(6, 0);
  auto truth = gen_bbc2(12, 4, 2, 2, 0.5, {}, rng);
  Bbc2Hyper h;
  h.K = 2;
  Bbc2Sampler sampler(truth.Y, h);
  RngStream chain(9, 0);
  sampler.randomize(chain);
  sampler.sweep(chain);
  for (long j = 0; j < 4; ++j) {
    auto lp = sampler.config_log_posterior(j);
    REQUIRE(lp.size() == sampler.config_space().size());
    double total = 0.0;
    for (double v : lp) total += std::exp(v);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("tiny-instance Gibbs frequencies match the exhaustive posterior") {
  auto Y = tiny_matrix();
  Bbc2Hyper h;
  h.K = 2;
  h.pi_s = 0.3;
  Bbc2Sampler probe(Y, h);
  std::size_t n_cfg = probe.config_space().size();
  CHECK(n_cfg == 2u);  // 2^K - K canonical classes at K=2

  std::map<std::string, double> exact;
  std::vector<double> lps;
  std::vector<std::string> keys;
  for_all_states(4, 2, 2, n_cfg, [&](const std::vector<int>& C,
                                     const std::vector<std::uint16_t>& cfg) {
    lps.push_back(state_logpost(Y, h, C, cfg));
    keys.push_back(state_key(C, cfg));
  });
  double z = log_sum_exp(lps);
  for (std::size_t t = 0; t < lps.size(); ++t) exact[keys[t]] = std::exp(lps[t] - z);

  Bbc2Sampler sampler(Y, h);
  RngStream chain(31415, 0);
  sampler.randomize(chain);
  const int M = 100000;
  std::map<std::string, long> freq;
  for (int sweep = 0; sweep < M; ++sweep) {
    sampler.sweep(chain);
    ++freq[state_key(sampler.C(), sampler.cfg_ids())];
  }
  double tv = 0.0;
  for (const auto& [key, prob] : exact) {
    auto it = freq.find(key);
    double emp = it == freq.end() ? 0.0 : static_cast<double>(it->second) / M;
    tv += std::abs(prob - emp);
  }
  CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("Chib estimate matches exhaustive enumeration on a tiny instance") {
  auto Y = tiny_matrix();
  Bbc2Hyper h;
  h.K = 2;
  std::vector<double> lps;
  Bbc2Sampler probe(Y, h);
  std::size_t n_cfg = probe.config_space().size();
  for_all_states(4, 2, 2, n_cfg, [&](const std::vector<int>& C,
                                     const std::vector<std::uint16_t>& cfg) {
    lps.push_back(state_logpost(Y, h, C, cfg));
  });
  double exact = log_sum_exp(lps);

  Bbc2Sampler sampler(Y, h);
  RngStream chain(7, 0);
  sampler.randomize(chain);
  std::vector<Bbc2Sample> samples;
  for (int sweep = 0; sweep < 4000; ++sweep) {
    sampler.sweep(chain);
    if (sweep >= 500) {
      samples.push_back({sampler.C(), sampler.cfg_ids(), sampler.logpost()});
    }
  }
  RngStream chib_rng(17, 0);
  double est = chib_log_PY_given_K(samples, Y, h, chib_rng, 400);
  CHECK(std::abs(est - exact) / std::abs(exact) < 0.05);

  // Invariance (up to Monte-Carlo error) under cluster relabeling.
  std::vector<Bbc2Sample> relabeled = samples;
  for (auto& s : relabeled) {
    for (int& c : s.C) c = 3 - c;
  }
  RngStream chib_rng2(17, 0);
  double est2 = chib_log_PY_given_K(relabeled, Y, h, chib_rng2, 400);
  CHECK(std::abs(est2 - est) < 0.15);
}

TEST_CASE("fit_bbc2 recovers an easy planted bi-clustering deterministically") {
  RngStream rng(44, 0);
  auto truth = gen_bbc2(80, 120, 3, 3, 0.3, {}, rng);
  std::vector<int> ks{2, 3, 4};
  McmcConfig mcmc{150, 50, 13};
  auto fit = fit_bbc2(truth.Y, ks, Bbc2Hyper{}, mcmc, 60);
  CHECK(fit.model == "bbc2");
  CHECK(fit.K_hat == 3);
  CHECK(ari(truth.C, fit.best().C) > 0.95);
  REQUIRE(fit.best().sel_prob.size() == 120u * 3u);
  auto fit2 = fit_bbc2(truth.Y, ks, Bbc2Hyper{}, mcmc, 60);
  CHECK(fit2.best().C == fit.best().C);
  CHECK(fit2.best().log_marg == doctest::Approx(fit.best().log_marg).epsilon(1e-15));
}

TEST_CASE("single-cluster data prefers K=1") {
  RngStream rng(61, 0);
  auto truth = gen_bbc2(40, 60, 1, 3, 0.3, {}, rng);
  std::vector<int> ks{1, 2, 3};
  McmcConfig mcmc{200, 50, 3};
  auto fit = fit_bbc2(truth.Y, ks, Bbc2Hyper{}, mcmc, 60);
  CHECK(fit.K_hat == 1);
}
