#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bcluster/errors.hpp"

namespace bcluster {

// n x p observation matrix with entries in {0 .. L-1} (0-based internally;
// files use 1-based categories, or {0,1} for binary).
struct CategoricalMatrix {
  using Data =
      Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Data values;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  int num_categories = 2;

  long rows() const { return values.rows(); }
  long cols() const { return values.cols(); }

  void validate() const {
    for (long i = 0; i < values.rows(); ++i) {
      for (long j = 0; j < values.cols(); ++j) {
        int v = values(i, j);
        if (v < 0 || v >= num_categories) {
          throw DataError("matrix entry out of range at row " +
                          std::to_string(i) + ", col " + std::to_string(j));
        }
      }
    }
  }

  static CategoricalMatrix zeros(long n, long p, int L) {
    CategoricalMatrix m;
    m.values = Data::Zero(n, p);
    m.num_categories = L;
    m.row_ids.resize(static_cast<std::size_t>(n));
    m.col_ids.resize(static_cast<std::size_t>(p));
    for (long i = 0; i < n; ++i) m.row_ids[static_cast<std::size_t>(i)] = "r" + std::to_string(i + 1);
    for (long j = 0; j < p; ++j) m.col_ids[static_cast<std::size_t>(j)] = "c" + std::to_string(j + 1);
    return m;
  }

  CategoricalMatrix take_rows(const std::vector<int>& idx) const {
    CategoricalMatrix out;
    out.num_categories = num_categories;
    out.values.resize(static_cast<long>(idx.size()), values.cols());
    out.col_ids = col_ids;
    out.row_ids.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.values.row(static_cast<long>(r)) = values.row(idx[r]);
      out.row_ids.push_back(row_ids[static_cast<std::size_t>(idx[r])]);
    }
    return out;
  }
};

}  // namespace bcluster
