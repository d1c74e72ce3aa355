#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "bcluster/simgen.hpp"

using namespace bcluster;

TEST_CASE("gen_bbc1 shapes, determinism, and biomarker count") {
  RngStream rng(5, 0);
  auto t = gen_bbc1(60, 40, 3, 10, rng);
  CHECK(t.Y.values.rows() == 60);
  CHECK(t.Y.values.cols() == 40);
  CHECK(t.Y.num_categories == 2);
  CHECK(t.C.size() == 60);
  CHECK(t.S.size() == 40);
  long ns = std::count(t.S.begin(), t.S.end(), std::uint8_t{1});
  CHECK(ns == 10);
  std::set<int> labels(t.C.begin(), t.C.end());
  CHECK(*labels.begin() >= 1);
  CHECK(*labels.rbegin() <= 3);
  for (long i = 0; i < 60; ++i) {
    for (long j = 0; j < 40; ++j) {
      CHECK((t.Y.values(i, j) == 0 || t.Y.values(i, j) == 1));
    }
  }
  auto t2 = gen_bbc1(60, 40, 3, 10, RngStream(5, 0));
  CHECK(t2.Y.values == t.Y.values);
  CHECK(t2.C == t.C);
  auto t3 = gen_bbc1(60, 40, 3, 10, RngStream(6, 0));
  CHECK(t3.Y.values != t.Y.values);
}

TEST_CASE("gen_bbc2 canonical configurations and category range") {
  RngStream rng(9, 0);
  auto t = gen_bbc2(50, 30, 3, 4, 0.3, {}, rng);
  CHECK(t.Y.num_categories == 4);
  CHECK(t.S.size() == 30);
  for (const auto& cfg : t.S) {
    CHECK(cfg.K == 3);
    CHECK(is_canonical(cfg.bits, 3));
  }
  int mx = 0;
  for (long i = 0; i < 50; ++i) {
    for (long j = 0; j < 30; ++j) mx = std::max<int>(mx, t.Y.values(i, j));
  }
  CHECK(mx <= 3);
  // With pi_s = 0 every configuration is empty (all-background data).
  auto t0 = gen_bbc2(20, 15, 3, 2, 1e-12, {}, RngStream(1, 0));
  for (const auto& cfg : t0.S) CHECK(cfg.bits == 0u);
}

TEST_CASE("gen_semisynthetic_noise appends labeled noise columns") {
  RngStream rng(3, 0);
  auto base = gen_bbc2(30, 10, 2, 3, 0.4, {}, rng);
  auto wide = gen_semisynthetic_noise(base.Y, 20, rng.derive(1));
  CHECK(wide.values.cols() == 30);
  CHECK(wide.values.rows() == 30);
  // Original block untouched.
  CHECK(wide.values.leftCols(10) == base.Y.values);
  CHECK(wide.col_ids[10].substr(0, 5) == "noise");
  auto same = gen_semisynthetic_noise(base.Y, 0, rng);
  CHECK(same.values == base.Y.values);
}

TEST_CASE("shuffle_features permutes exactly the reported columns") {
  RngStream rng(17, 0);
  auto base = gen_bbc2(40, 20, 2, 3, 0.5, {}, rng);
  auto sh = shuffle_features(base.Y, 0.5, rng.derive(2));
  CHECK(sh.shuffled_cols.size() == 10);
  CHECK(std::is_sorted(sh.shuffled_cols.begin(), sh.shuffled_cols.end()));
  std::set<long> touched(sh.shuffled_cols.begin(), sh.shuffled_cols.end());
  for (long j = 0; j < 20; ++j) {
    std::vector<int> a, b;
    for (long i = 0; i < 40; ++i) {
      a.push_back(base.Y.values(i, j));
      b.push_back(sh.Y.values(i, j));
    }
    if (!touched.count(j)) {
      CHECK(a == b);
    } else {
      // A permutation preserves the multiset of values.
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      CHECK(a == b);
    }
  }
  auto none = shuffle_features(base.Y, 0.0, rng);
  CHECK(none.shuffled_cols.empty());
  CHECK(none.Y.values == base.Y.values);
}

TEST_CASE("gen_hierarchy plants four equal leaves under two super-groups") {
  RngStream rng(23, 0);
  auto t = gen_hierarchy(25, 200, 0.1, 0.1, 0.2, 0.4, rng);
  CHECK(t.Y.values.rows() == 100);
  CHECK(t.Y.values.cols() == 200);
  CHECK(t.Y.num_categories == 2);
  std::vector<long> leaf_counts(5, 0);
  for (std::size_t i = 0; i < t.leaf.size(); ++i) {
    REQUIRE(t.leaf[i] >= 1);
    REQUIRE(t.leaf[i] <= 4);
    ++leaf_counts[static_cast<std::size_t>(t.leaf[i])];
    // Leaves 1,2 belong to super-group 1; leaves 3,4 to super-group 2.
    CHECK(t.super[i] == (t.leaf[i] <= 2 ? 1 : 2));
  }
  for (int k = 1; k <= 4; ++k) CHECK(leaf_counts[static_cast<std::size_t>(k)] == 25);
}

TEST_CASE("gen_integration layout and module structure") {
  RngStream rng(31, 0);
  auto t = gen_integration(20, 12, {6, 5}, 4, 0.6, rng);
  CHECK(t.K == 2);
  CHECK(t.stack.num_genes() == 20);
  CHECK(t.stack.num_layers() == 12);
  t.stack.validate();
  CHECK(t.C.size() == 20);
  CHECK(std::count(t.C.begin(), t.C.end(), 1) == 6);
  CHECK(std::count(t.C.begin(), t.C.end(), 2) == 5);
  CHECK(std::count(t.C.begin(), t.C.end(), 0) == 9);
  // Support layout is layer-major with K slots per layer; 4 supporters each.
  REQUIRE(t.S.size() == 12u * 2u);
  long sup1 = 0, sup2 = 0;
  for (long d = 0; d < 12; ++d) {
    sup1 += t.S[static_cast<std::size_t>(d * 2)];
    sup2 += t.S[static_cast<std::size_t>(d * 2 + 1)];
  }
  CHECK(sup1 == 4);
  CHECK(sup2 == 4);
  // Supporting layers show an elevated within-module mean.
  for (long d = 0; d < 12; ++d) {
    for (int k = 1; k <= 2; ++k) {
      double sum = 0.0;
      long m = 0;
      for (long i = 0; i < 20; ++i) {
        for (long j = i + 1; j < 20; ++j) {
          if (t.C[static_cast<std::size_t>(i)] != k) continue;
          if (t.C[static_cast<std::size_t>(j)] != k) continue;
          sum += t.stack.layers[static_cast<std::size_t>(d)](i, j);
          ++m;
        }
      }
      double mean = sum / static_cast<double>(m) -
                    t.stack.background[static_cast<std::size_t>(d)].theta0;
      if (t.S[static_cast<std::size_t>(d * 2 + k - 1)]) {
        CHECK(mean > 0.25);
      } else {
        CHECK(std::abs(mean) < 0.25);
      }
    }
  }
  // Determinism.
  auto t2 = gen_integration(20, 12, {6, 5}, 4, 0.6, RngStream(31, 0));
  CHECK(t2.stack.layers[3] == t.stack.layers[3]);
}
