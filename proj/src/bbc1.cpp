#include "bcluster/bbc1.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace bcluster {

namespace {

double sigmoid_of_neg(double d) {
  // 1 / (1 + exp(d)) with cheap saturation far from 0.
  if (d > 30.0) return 0.0;
  if (d < -30.0) return 1.0;
  return 1.0 / (1.0 + std::exp(d));
}

}  // namespace

double col_logmarg_bbc1(std::span<const std::int8_t> column,
                        std::span<const int> C, int s, const Bbc1Hyper& hyper) {
  hyper.validate();
  if (column.size() != C.size()) {
    throw UsageError("col_logmarg_bbc1: column/C length mismatch");
  }
  const int K = hyper.K;
  std::vector<long> ones(static_cast<std::size_t>(K) + 1, 0);
  std::vector<long> size(static_cast<std::size_t>(K) + 1, 0);
  long all_ones = 0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    int v = column[i];
    if (v != 0 && v != 1) {
      throw DataError("col_logmarg_bbc1: non-binary entry at row " +
                      std::to_string(i));
    }
    int c = C[i];
    if (c < 0 || c > K) throw UsageError("col_logmarg_bbc1: label out of range");
    ++size[static_cast<std::size_t>(c)];
    ones[static_cast<std::size_t>(c)] += v;
    all_ones += v;
  }
  if (s == 0) {
    long n = static_cast<long>(column.size());
    return beta_bernoulli_logmarg(all_ones, n - all_ones, hyper.a_w1, hyper.a_w2);
  }
  double total = beta_bernoulli_logmarg(ones[0], size[0] - ones[0], hyper.a_w1,
                                        hyper.a_w2);
  for (int k = 1; k <= K; ++k) {
    auto ku = static_cast<std::size_t>(k);
    total += beta_bernoulli_logmarg(ones[ku], size[ku] - ones[ku],
                                    hyper.a_theta1, hyper.a_theta2);
  }
  return total;
}

double logpost_bbc1(std::span<const int> C, std::span<const std::uint8_t> S,
                    const CategoricalMatrix& Y, const Bbc1Hyper& hyper) {
  hyper.validate();
  double lp = 0.0;
  double log_null = hyper.gamma0 > 0 ? std::log(hyper.gamma0) : kNegInf;
  double log_k = std::log((1.0 - hyper.gamma0) / hyper.K);
  for (int c : C) lp += c == 0 ? log_null : log_k;
  double log_pi = std::log(hyper.pi_s), log_1mpi = std::log(1.0 - hyper.pi_s);
  std::vector<std::int8_t> col(static_cast<std::size_t>(Y.rows()));
  for (long j = 0; j < Y.cols(); ++j) {
    for (long i = 0; i < Y.rows(); ++i) col[static_cast<std::size_t>(i)] = Y.values(i, j);
    int s = S[static_cast<std::size_t>(j)];
    lp += (s ? log_pi : log_1mpi) + col_logmarg_bbc1(col, C, s, hyper);
  }
  return lp;
}

Bbc1Sampler::Bbc1Sampler(const CategoricalMatrix& Y, const Bbc1Hyper& hyper)
    : y_(Y), h_(hyper) {
  h_.validate();
  if (Y.num_categories != 2) throw DataError("bbc1 requires binary data");
  n_ = Y.rows();
  p_ = Y.cols();
  c_.assign(static_cast<std::size_t>(n_), 1);
  s_.assign(static_cast<std::size_t>(p_), 0);
  n1_.assign(static_cast<std::size_t>((h_.K + 1) * p_), 0);
  csize_.assign(static_cast<std::size_t>(h_.K) + 1, 0);
  sumfg_.assign(static_cast<std::size_t>(p_), 0.0);
  bg_all_.assign(static_cast<std::size_t>(p_), 0.0);
  wbuf_.assign(static_cast<std::size_t>(p_), 0.0);
  log_pi_ = std::log(h_.pi_s);
  log_1mpi_ = std::log(1.0 - h_.pi_s);
  log_prior_c_.assign(static_cast<std::size_t>(h_.K) + 1, 0.0);
  log_prior_c_[0] = h_.gamma0 > 0 ? std::log(h_.gamma0) : kNegInf;
  for (int k = 1; k <= h_.K; ++k) {
    log_prior_c_[static_cast<std::size_t>(k)] =
        std::log((1.0 - h_.gamma0) / h_.K);
  }
  lt_t1_ = LogShiftTable(h_.a_theta1, n_ + 1);
  lt_t2_ = LogShiftTable(h_.a_theta2, n_ + 1);
  lt_ts_ = LogShiftTable(h_.a_theta1 + h_.a_theta2, n_ + 1);
  lt_w1_ = LogShiftTable(h_.a_w1, n_ + 1);
  lt_w2_ = LogShiftTable(h_.a_w2, n_ + 1);
  lt_ws_ = LogShiftTable(h_.a_w1 + h_.a_w2, n_ + 1);
  for (long j = 0; j < p_; ++j) {
    long tot = 0;
    for (long i = 0; i < n_; ++i) tot += y_.values(i, j);
    bg_all_[static_cast<std::size_t>(j)] =
        beta_bernoulli_logmarg(tot, n_ - tot, h_.a_w1, h_.a_w2);
  }
  refresh();
}

void Bbc1Sampler::set_assignment(std::span<const int> C) {
  if (static_cast<long>(C.size()) != n_) {
    throw UsageError("bbc1 set_assignment: wrong length");
  }
  for (int c : C) {
    if (c < 0 || c > h_.K || (c == 0 && h_.gamma0 <= 0.0)) {
      throw UsageError("bbc1 set_assignment: label out of range");
    }
  }
  std::copy(C.begin(), C.end(), c_.begin());
  refresh();
}

void Bbc1Sampler::randomize(RngStream& rng) {
  for (long i = 0; i < n_; ++i) {
    if (h_.gamma0 > 0.0 && rng.bernoulli(h_.gamma0)) {
      c_[static_cast<std::size_t>(i)] = 0;
    } else {
      c_[static_cast<std::size_t>(i)] = 1 + rng.uniform_int(h_.K);
    }
  }
  for (long j = 0; j < p_; ++j) {
    s_[static_cast<std::size_t>(j)] = rng.bernoulli(h_.pi_s) ? 1 : 0;
  }
  refresh();
}

void Bbc1Sampler::refresh() {
  std::fill(n1_.begin(), n1_.end(), 0);
  std::fill(csize_.begin(), csize_.end(), 0);
  for (long i = 0; i < n_; ++i) {
    int c = c_[static_cast<std::size_t>(i)];
    ++csize_[static_cast<std::size_t>(c)];
    const std::int8_t* row = y_.values.data() + i * p_;
    int* cnt = n1_.data() + static_cast<long>(c) * p_;
    for (long j = 0; j < p_; ++j) cnt[j] += row[j];
  }
  for (long j = 0; j < p_; ++j) sumfg_[static_cast<std::size_t>(j)] = column_fg_sum(j);
}

double Bbc1Sampler::column_fg_sum(long j) const {
  double total = beta_bernoulli_logmarg(
      n1_[static_cast<std::size_t>(j)],
      csize_[0] - n1_[static_cast<std::size_t>(j)], h_.a_w1, h_.a_w2);
  for (int k = 1; k <= h_.K; ++k) {
    long o = n1_[static_cast<std::size_t>(static_cast<long>(k) * p_ + j)];
    total += beta_bernoulli_logmarg(o, csize_[static_cast<std::size_t>(k)] - o,
                                    h_.a_theta1, h_.a_theta2);
  }
  return total;
}

void Bbc1Sampler::remove_row(long i) {
  int c = c_[static_cast<std::size_t>(i)];
  --csize_[static_cast<std::size_t>(c)];
  long m = csize_[static_cast<std::size_t>(c)];
  const std::int8_t* row = y_.values.data() + i * p_;
  int* cnt = n1_.data() + static_cast<long>(c) * p_;
  const LogShiftTable& l1 = c == 0 ? lt_w1_ : lt_t1_;
  const LogShiftTable& l2 = c == 0 ? lt_w2_ : lt_t2_;
  const LogShiftTable& ls = c == 0 ? lt_ws_ : lt_ts_;
  double lsv = ls[m];
  for (long j = 0; j < p_; ++j) {
    long o = cnt[j] - row[j];
    cnt[j] = static_cast<int>(o);
    sumfg_[static_cast<std::size_t>(j)] -= (row[j] ? l1[o] : l2[m - o]) - lsv;
  }
}

void Bbc1Sampler::add_row(long i, int k) {
  long m = csize_[static_cast<std::size_t>(k)];
  const std::int8_t* row = y_.values.data() + i * p_;
  int* cnt = n1_.data() + static_cast<long>(k) * p_;
  const LogShiftTable& l1 = k == 0 ? lt_w1_ : lt_t1_;
  const LogShiftTable& l2 = k == 0 ? lt_w2_ : lt_t2_;
  const LogShiftTable& ls = k == 0 ? lt_ws_ : lt_ts_;
  double lsv = ls[m];
  for (long j = 0; j < p_; ++j) {
    long o = cnt[j];
    sumfg_[static_cast<std::size_t>(j)] += (row[j] ? l1[o] : l2[m - o]) - lsv;
    cnt[j] = static_cast<int>(o + row[j]);
  }
  ++csize_[static_cast<std::size_t>(k)];
  c_[static_cast<std::size_t>(i)] = k;
}

void Bbc1Sampler::update_C(RngStream& rng) {
  const int k_lo = h_.gamma0 > 0.0 ? 0 : 1;
  std::vector<double> logw(static_cast<std::size_t>(h_.K - k_lo) + 1);
  for (long i = 0; i < n_; ++i) {
    remove_row(i);
    const std::int8_t* row = y_.values.data() + i * p_;
    for (long j = 0; j < p_; ++j) {
      double d = log_1mpi_ + bg_all_[static_cast<std::size_t>(j)] -
                 (log_pi_ + sumfg_[static_cast<std::size_t>(j)]);
      wbuf_[static_cast<std::size_t>(j)] = sigmoid_of_neg(d);
    }
    for (int k = k_lo; k <= h_.K; ++k) {
      double a1 = k == 0 ? h_.a_w1 : h_.a_theta1;
      double a2 = k == 0 ? h_.a_w2 : h_.a_theta2;
      double inv = 1.0 / (a1 + a2 + static_cast<double>(csize_[static_cast<std::size_t>(k)]));
      const int* cnt = n1_.data() + static_cast<long>(k) * p_;
      long msize = csize_[static_cast<std::size_t>(k)];
      double lw = log_prior_c_[static_cast<std::size_t>(k)];
      double acc = 1.0;
      for (long j = 0; j < p_; ++j) {
        double pk = row[j] ? (a1 + cnt[j]) * inv : (a2 + (msize - cnt[j])) * inv;
        acc *= 1.0 + wbuf_[static_cast<std::size_t>(j)] * (pk - 1.0);
        if ((j & 63) == 63 && acc < 1e-240) {
          lw += std::log(acc);
          acc = 1.0;
        }
      }
      logw[static_cast<std::size_t>(k - k_lo)] = lw + std::log(acc);
    }
    int pick = k_lo + categorical_draw(rng, logw);
    add_row(i, pick);
  }
}

void Bbc1Sampler::update_S(RngStream& rng) {
  for (long j = 0; j < p_; ++j) {
    double d = log_1mpi_ + bg_all_[static_cast<std::size_t>(j)] -
               (log_pi_ + sumfg_[static_cast<std::size_t>(j)]);
    s_[static_cast<std::size_t>(j)] = rng.bernoulli(sigmoid_of_neg(d)) ? 1 : 0;
  }
}

double Bbc1Sampler::logpost() const {
  double lp = 0.0;
  for (long i = 0; i < n_; ++i) {
    lp += log_prior_c_[static_cast<std::size_t>(c_[static_cast<std::size_t>(i)])];
  }
  for (long j = 0; j < p_; ++j) {
    lp += s_[static_cast<std::size_t>(j)]
              ? log_pi_ + sumfg_[static_cast<std::size_t>(j)]
              : log_1mpi_ + bg_all_[static_cast<std::size_t>(j)];
  }
  return lp;
}

double Bbc1Sampler::collapsed_logmarg() const {
  double lp = 0.0;
  for (long j = 0; j < p_; ++j) {
    lp += log_add_exp(log_1mpi_ + bg_all_[static_cast<std::size_t>(j)],
                      log_pi_ + sumfg_[static_cast<std::size_t>(j)]);
  }
  return lp;
}

std::vector<double> Bbc1Sampler::selection_prob() const {
  std::vector<double> out(static_cast<std::size_t>(p_));
  for (long j = 0; j < p_; ++j) {
    double d = log_1mpi_ + bg_all_[static_cast<std::size_t>(j)] -
               (log_pi_ + sumfg_[static_cast<std::size_t>(j)]);
    out[static_cast<std::size_t>(j)] = sigmoid_of_neg(d);
  }
  return out;
}

std::vector<int> canonical_labels(std::span<const int> C) {
  std::vector<int> out(C.size());
  std::vector<int> remap;
  for (std::size_t i = 0; i < C.size(); ++i) {
    if (C[i] == 0) {
      out[i] = 0;
      continue;
    }
    int found = 0;
    for (std::size_t r = 0; r < remap.size(); ++r) {
      if (remap[r] == C[i]) {
        found = static_cast<int>(r) + 1;
        break;
      }
    }
    if (!found) {
      remap.push_back(C[i]);
      found = static_cast<int>(remap.size());
    }
    out[i] = found;
  }
  return out;
}

namespace {

std::string label_key(const std::vector<int>& c) {
  std::string key;
  key.reserve(c.size() * 2);
  for (int v : c) {
    key.push_back(static_cast<char>('0' + (v & 63)));
    key.push_back(',');
  }
  return key;
}

}  // namespace

std::size_t map_extract(const std::vector<Bbc1Sample>& samples) {
  if (samples.empty()) throw UsageError("map_extract: no samples");
  std::size_t best = 0;
  for (std::size_t m = 1; m < samples.size(); ++m) {
    if (samples[m].logpost > samples[best].logpost) best = m;
  }
  return best;
}

double log_PY_given_K_bbc1(const std::vector<Bbc1Sample>& samples,
                           const CategoricalMatrix& Y, const Bbc1Hyper& hyper) {
  if (samples.empty()) {
    throw EstimationError("log_PY_given_K_bbc1: no posterior samples");
  }
  const auto M = samples.size();
  std::unordered_map<std::string, long> counts;
  std::vector<int> mode;
  long mode_count = 0;
  for (const auto& s : samples) {
    auto canon = canonical_labels(s.C);
    long c = ++counts[label_key(canon)];
    if (c > mode_count) {
      mode_count = c;
      mode = std::move(canon);
    }
  }
  int used = *std::max_element(mode.begin(), mode.end());
  if (used > hyper.K) {
    throw EstimationError("log_PY_given_K_bbc1: sample uses more labels than K");
  }
  Bbc1Sampler sampler(Y, hyper);
  sampler.set_assignment(mode);
  double num = sampler.collapsed_logmarg();
  double log_null = hyper.gamma0 > 0 ? std::log(hyper.gamma0) : kNegInf;
  double log_k = std::log((1.0 - hyper.gamma0) / hyper.K);
  for (int c : mode) num += c == 0 ? log_null : log_k;
  // The sample frequency estimates the posterior mass of the whole
  // relabeling class of the mode; the labeled prior above is offset by the
  // number of distinct labeled representatives, K!/(K-used)!.
  double log_versions =
      lgamma_safe(hyper.K + 1.0) - lgamma_safe(hyper.K - used + 1.0);
  return num + log_versions -
         (std::log(static_cast<double>(mode_count)) -
          std::log(static_cast<double>(M)));
}

FitResult fit_bbc1(const CategoricalMatrix& Y, std::span<const int> k_range,
                   Bbc1Hyper base, const McmcConfig& mcmc) {
  if (k_range.empty()) throw UsageError("fit_bbc1: empty K range");
  mcmc.validate();
  FitResult out;
  out.model = "bbc1";
  for (int K : k_range) {
    Bbc1Hyper h = base;
    h.K = K;
    h.validate();
    RngStream rng(mcmc.seed, static_cast<std::uint64_t>(K));
    Bbc1Sampler sampler(Y, h);
    sampler.randomize(rng);
    std::vector<Bbc1Sample> samples;
    samples.reserve(static_cast<std::size_t>(mcmc.iterations - mcmc.burn_in));
    for (int it = 0; it < mcmc.iterations; ++it) {
      sampler.sweep(rng);
      if (it >= mcmc.burn_in) {
        samples.push_back({sampler.C(), sampler.S(), sampler.logpost()});
      }
    }
    KFit fit;
    fit.K = K;
    fit.log_marg = log_PY_given_K_bbc1(samples, Y, h);
    std::size_t map_idx = map_extract(samples);
    fit.map_score = samples[map_idx].logpost;
    fit.C = samples[map_idx].C;
    fit.S_vec = samples[map_idx].S;
    sampler.set_assignment(fit.C);
    fit.sel_prob = sampler.selection_prob();
    out.per_k.push_back(std::move(fit));
  }
  const KFit* best = &out.per_k.front();
  for (const auto& f : out.per_k) {
    if (f.log_marg > best->log_marg) best = &f;
  }
  out.K_hat = best->K;
  return out;
}

}  // namespace bcluster
