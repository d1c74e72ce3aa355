#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "bcluster/bbc1.hpp"
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

// All (C, S) states for gamma0 = 0 (labels 1..K) and a global binary S.
template <typename F>
void for_all_states(long n, long p, int K, F&& f) {
  long nc = 1;
  for (long i = 0; i < n; ++i) nc *= K;
  for (long code_c = 0; code_c < nc; ++code_c) {
    std::vector<int> C(static_cast<std::size_t>(n));
    long r = code_c;
    for (long i = 0; i < n; ++i) {
      C[static_cast<std::size_t>(i)] = 1 + static_cast<int>(r % K);
      r /= K;
    }
    for (long code_s = 0; code_s < (1L << p); ++code_s) {
      std::vector<std::uint8_t> S(static_cast<std::size_t>(p));
      for (long j = 0; j < p; ++j) {
        S[static_cast<std::size_t>(j)] = (code_s >> j) & 1;
      }
      f(C, S);
    }
  }
}

std::string state_key(const std::vector<int>& C,
                      const std::vector<std::uint8_t>& S) {
  std::string key;
  for (int v : C) key += static_cast<char>('0' + v);
  key += '|';
  for (auto v : S) key += static_cast<char>('0' + v);
  return key;
}

}  // namespace

TEST_CASE("col_logmarg_bbc1 equals the direct two-term computation") {
  auto Y = tiny_matrix();
  Bbc1Hyper h;
  h.K = 2;
  std::vector<int> C{1, 1, 2, 2};
  for (long j = 0; j < 2; ++j) {
    std::vector<std::int8_t> col(4);
    for (long i = 0; i < 4; ++i) col[static_cast<std::size_t>(i)] = Y.values(i, j);
    // s=0: one pooled background Beta-Bernoulli term over all rows.
    long n1 = 0;
    for (auto v : col) n1 += v;
    double bg = beta_bernoulli_logmarg(n1, 4 - n1, h.a_w1, h.a_w2);
    CHECK(col_logmarg_bbc1(col, C, 0, h) == doctest::Approx(bg).epsilon(1e-12));
    // s=1: one biomarker term per cluster.
    double fg = 0.0;
    for (int k = 1; k <= 2; ++k) {
      long k1 = 0, km = 0;
      for (long i = 0; i < 4; ++i) {
        if (C[static_cast<std::size_t>(i)] != k) continue;
        k1 += col[static_cast<std::size_t>(i)];
        ++km;
      }
      fg += beta_bernoulli_logmarg(k1, km - k1, h.a_theta1, h.a_theta2);
    }
    CHECK(col_logmarg_bbc1(col, C, 1, h) == doctest::Approx(fg).epsilon(1e-12));
  }
}

TEST_CASE("incremental bookkeeping matches from-scratch recomputation") {
  RngStream rng(77, 0);
  auto truth = gen_bbc1(30, 25, 3, 8, rng);
  Bbc1Hyper h;
  h.K = 3;
  Bbc1Sampler sampler(truth.Y, h);
  RngStream chain(123, 0);
  sampler.randomize(chain);
  for (int sweep = 0; sweep < 20; ++sweep) {
    sampler.sweep(chain);
    double incremental = sampler.logpost();
    double direct = logpost_bbc1(sampler.C(), sampler.S(), truth.Y, h);
    CHECK(incremental == doctest::Approx(direct).epsilon(1e-10));
    Bbc1Sampler fresh(truth.Y, h);
    fresh.set_assignment(sampler.C());
    CHECK(fresh.collapsed_logmarg() ==
          doctest::Approx(sampler.collapsed_logmarg()).epsilon(1e-10));
  }
  // refresh() must be a no-op on a consistent state.
  double before = sampler.logpost();
  sampler.refresh();
  CHECK(sampler.logpost() == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("gamma0 = 0 never assigns the null label") {
  RngStream rng(3, 0);
  auto truth = gen_bbc1(20, 10, 2, 4, rng);
  Bbc1Hyper h;
  h.K = 2;
  h.gamma0 = 0.0;
  Bbc1Sampler sampler(truth.Y, h);
  RngStream chain(5, 0);
  sampler.randomize(chain);
  for (int sweep = 0; sweep < 50; ++sweep) {
    sampler.sweep(chain);
    for (int c : sampler.C()) CHECK(c != 0);
  }
}

TEST_CASE("tiny-instance Gibbs frequencies match the exhaustive posterior") {
  auto Y = tiny_matrix();
  Bbc1Hyper h;
  h.K = 2;
  h.pi_s = 0.3;

  std::map<std::string, double> exact;
  std::vector<double> lps;
  std::vector<std::string> keys;
  for_all_states(4, 2, 2, [&](const std::vector<int>& C,
                              const std::vector<std::uint8_t>& S) {
    lps.push_back(logpost_bbc1(C, S, Y, h));
    keys.push_back(state_key(C, S));
  });
  double z = log_sum_exp(lps);
  for (std::size_t t = 0; t < lps.size(); ++t) exact[keys[t]] = std::exp(lps[t] - z);

  Bbc1Sampler sampler(Y, h);
  RngStream chain(2024, 0);
  sampler.randomize(chain);
  const int M = 100000;
  std::map<std::string, long> freq;
  for (int sweep = 0; sweep < M; ++sweep) {
    sampler.sweep(chain);
    ++freq[state_key(sampler.C(), sampler.S())];
  }
  double tv = 0.0;
  for (const auto& [key, prob] : exact) {
    auto it = freq.find(key);
    double emp = it == freq.end() ? 0.0 : static_cast<double>(it->second) / M;
    tv += std::abs(prob - emp);
  }
  CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("K=1 frequency estimator equals the closed form") {
  RngStream rng(8, 0);
  auto truth = gen_bbc1(12, 6, 1, 3, rng);
  Bbc1Hyper h;
  h.K = 1;
  // Closed form: independent two-component mixtures per column.
  double expect = 0.0;
  for (long j = 0; j < 6; ++j) {
    long n1 = 0;
    for (long i = 0; i < 12; ++i) n1 += truth.Y.values(i, j);
    double bg = beta_bernoulli_logmarg(n1, 12 - n1, h.a_w1, h.a_w2);
    double fg = beta_bernoulli_logmarg(n1, 12 - n1, h.a_theta1, h.a_theta2);
    expect += log_add_exp(std::log(1.0 - h.pi_s) + bg, std::log(h.pi_s) + fg);
  }
  Bbc1Sampler sampler(truth.Y, h);
  RngStream chain(1, 0);
  sampler.randomize(chain);
  std::vector<Bbc1Sample> samples;
  for (int sweep = 0; sweep < 50; ++sweep) {
    sampler.sweep(chain);
    samples.push_back({sampler.C(), sampler.S(), sampler.logpost()});
  }
  CHECK(log_PY_given_K_bbc1(samples, truth.Y, h) ==
        doctest::Approx(expect).epsilon(1e-8));
  CHECK(sampler.collapsed_logmarg() == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("frequency estimator approximates the exhaustive marginal likelihood") {
  auto Y = tiny_matrix();
  Bbc1Hyper h;
  h.K = 2;
  std::vector<double> lps;
  for_all_states(4, 2, 2, [&](const std::vector<int>& C,
                              const std::vector<std::uint8_t>& S) {
    lps.push_back(logpost_bbc1(C, S, Y, h));
  });
  double exact = log_sum_exp(lps);

  Bbc1Sampler sampler(Y, h);
  RngStream chain(42, 0);
  sampler.randomize(chain);
  std::vector<Bbc1Sample> samples;
  for (int sweep = 0; sweep < 20000; ++sweep) {
    sampler.sweep(chain);
    if (sweep >= 1000) samples.push_back({sampler.C(), sampler.S(), sampler.logpost()});
  }
  double est = log_PY_given_K_bbc1(samples, Y, h);
  CHECK(std::abs(est - exact) / std::abs(exact) < 0.05);

  // Invariance under relabeling of the chain's clusters.
  std::vector<Bbc1Sample> relabeled = samples;
  for (auto& s : relabeled) {
    for (int& c : s.C) c = 3 - c;
  }
  CHECK(log_PY_given_K_bbc1(relabeled, Y, h) == doctest::Approx(est).epsilon(1e-12));
}

TEST_CASE("map_extract takes the top-scoring sample, first on ties") {
  std::vector<Bbc1Sample> samples{{{1}, {0}, -5.0}, {{2}, {1}, -3.0}, {{1}, {1}, -3.0}};
  CHECK(map_extract(samples) == 1);
  std::vector<Bbc1Sample> one{{{1}, {0}, -5.0}};
  CHECK(map_extract(one) == 0);
  CHECK_THROWS(map_extract({}));
}

TEST_CASE("canonical_labels relabels by first appearance") {
  std::vector<int> c{3, 3, 1, 2, 1, 0};
  CHECK(canonical_labels(c) == std::vector<int>{1, 1, 2, 3, 2, 0});
}

TEST_CASE("fit_bbc1 recovers an easy planted clustering deterministically") {
  RngStream rng(99, 0);
  auto truth = gen_bbc1(60, 80, 3, 30, rng);
  std::vector<int> ks{2, 3, 4};
  McmcConfig mcmc{200, 50, 7};
  auto fit = fit_bbc1(truth.Y, ks, Bbc1Hyper{}, mcmc);
  CHECK(fit.model == "bbc1");
  CHECK(fit.per_k.size() == 3);
  CHECK(ari(truth.C, fit.best().C) > 0.9);
  auto fit2 = fit_bbc1(truth.Y, ks, Bbc1Hyper{}, mcmc);
  CHECK(fit2.K_hat == fit.K_hat);
  CHECK(fit2.best().C == fit.best().C);
  CHECK(fit2.best().log_marg == doctest::Approx(fit.best().log_marg).epsilon(1e-15));
}

TEST_CASE("pure-noise data prefers a single cluster") {
  RngStream rng(100, 0);
  auto truth = gen_bbc1(50, 100, 1, 0, rng);
  std::vector<int> ks{1, 2, 3};
  McmcConfig mcmc{900, 200, 0};
  auto fit = fit_bbc1(truth.Y, ks, Bbc1Hyper{}, mcmc);
  CHECK(fit.K_hat == 1);
}
