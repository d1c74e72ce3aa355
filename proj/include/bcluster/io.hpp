#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bcluster/errors.hpp"
#include "bcluster/fit_result.hpp"
#include "bcluster/hbbc.hpp"
#include "bcluster/integrate.hpp"
#include "bcluster/matrix.hpp"

namespace bcluster {

// TSV: first row = column ids, first column = row ids, cells in {1..L}
// (stored 0-based) or already-{0,1} binary.
CategoricalMatrix read_matrix(const std::string& path);
void write_matrix(const std::string& path, const CategoricalMatrix& m);

// Real-valued TSV with the same id layout.
struct RealMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
};
RealMatrix read_real_matrix(const std::string& path);

enum class BinarizeRule { Nonzero, ColumnMedian, Threshold };

BinarizeRule parse_binarize_rule(const std::string& name);
CategoricalMatrix binarize(const RealMatrix& m, BinarizeRule rule,
                           double threshold = 0.0);

// Simulation bundle: data plus the generating ground truth, round-trippable.
struct GroundTruth {
  std::vector<int> C;                // labels 1..K
  std::vector<std::uint8_t> S_vec;   // BBC1 selection vector
  std::vector<SjConfig> S_cfg;       // BBC2 canonical configurations
  int K = 0;
};

struct Bundle {
  std::string model;  // bbc1 | bbc2 | hierarchy
  CategoricalMatrix data;
  std::optional<GroundTruth> truth;
};

void write_bundle(const std::string& path, const Bundle& b);
Bundle read_bundle(const std::string& path);

// Correlation-stack bundle: layers plus optional planted truth (C labels,
// flattened (layer, module) support bits in S_vec).
struct StackBundle {
  CorrelationStack stack;
  std::optional<GroundTruth> truth;
};

void write_stack(const std::string& path, const StackBundle& b);
StackBundle read_stack(const std::string& path);

// Provenance block embedded in every result file; deliberately excludes
// timestamps so reruns are byte-identical.
struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string version = "0.1.0";
};

std::string hash_hex(const std::string& text);

// Optional metric block: ordered (name, value) pairs appended verbatim.
using MetricBlock = std::vector<std::pair<std::string, double>>;

void write_fit(const std::string& path, const FitResult& fit,
               const Provenance& prov, const MetricBlock& metrics = {});

void write_tree(const std::string& path, const HbbcTree& tree,
                const Provenance& prov);

void write_error_json(const std::string& path, const std::string& kind,
                      const std::string& message);

}  // namespace bcluster
