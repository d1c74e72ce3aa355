#include "bcluster/io.hpp"

#include "bcluster/integrate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace bcluster {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

long parse_int_cell(const std::string& cell, long row, std::size_t col) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw DataError("non-integer cell '" + cell + "' at data row " +
                    std::to_string(row + 1) + ", column " + std::to_string(col));
  }
  return v;
}

double parse_real_cell(const std::string& cell, long row, std::size_t col) {
  try {
    std::size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw DataError("non-numeric cell '" + cell + "' at data row " +
                    std::to_string(row + 1) + ", column " + std::to_string(col));
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  return out;
}

}  // namespace

CategoricalMatrix read_matrix(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = split_tabs(strip_cr(line));
  if (header.size() < 2) throw DataError(path + ": header has no column ids");

  CategoricalMatrix m;
  m.col_ids.assign(header.begin() + 1, header.end());
  const std::size_t p = m.col_ids.size();

  std::vector<std::vector<long>> raw;
  long row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != p + 1) {
      throw DataError(path + ": ragged row " + std::to_string(row + 1) +
                      " (expected " + std::to_string(p + 1) + " fields, got " +
                      std::to_string(cells.size()) + ")");
    }
    m.row_ids.push_back(cells[0]);
    std::vector<long> vals(p);
    for (std::size_t j = 0; j < p; ++j) {
      vals[j] = parse_int_cell(cells[j + 1], row, j + 1);
    }
    raw.push_back(std::move(vals));
    ++row;
  }
  if (raw.empty()) throw DataError(path + ": no data rows");

  long lo = raw[0][0], hi = raw[0][0];
  for (const auto& r : raw) {
    for (long v : r) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  // {0,1} cells are taken as-is; 1-based categories are shifted down.
  long offset;
  if (lo == 0) {
    if (hi > 1) throw DataError(path + ": categories must be {0,1} or {1..L}");
    offset = 0;
  } else if (lo >= 1) {
    offset = 1;
  } else {
    throw DataError(path + ": negative category value " + std::to_string(lo));
  }
  long L = hi - offset + 1;
  if (L < 2) throw DataError(path + ": fewer than 2 observed categories");
  if (L > 127) throw DataError(path + ": more than 127 categories");

  m.num_categories = static_cast<int>(L);
  m.values.resize(static_cast<long>(raw.size()), static_cast<long>(p));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      m.values(static_cast<long>(i), static_cast<long>(j)) =
          static_cast<std::int8_t>(raw[i][j] - offset);
    }
  }
  return m;
}

void write_matrix(const std::string& path, const CategoricalMatrix& m) {
  auto out = open_out(path);
  out << "id";
  for (const auto& c : m.col_ids) out << '\t' << c;
  out << '\n';
  // Binary data keeps {0,1} coding; L>2 data is written 1-based.
  int offset = m.num_categories == 2 ? 0 : 1;
  for (long i = 0; i < m.rows(); ++i) {
    out << m.row_ids[static_cast<std::size_t>(i)];
    for (long j = 0; j < m.cols(); ++j) {
      out << '\t' << static_cast<int>(m.values(i, j)) + offset;
    }
    out << '\n';
  }
}

RealMatrix read_real_matrix(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = split_tabs(strip_cr(line));
  if (header.size() < 2) throw DataError(path + ": header has no column ids");

  RealMatrix m;
  m.col_ids.assign(header.begin() + 1, header.end());
  const std::size_t p = m.col_ids.size();

  std::vector<std::vector<double>> raw;
  long row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != p + 1) {
      throw DataError(path + ": ragged row " + std::to_string(row + 1));
    }
    m.row_ids.push_back(cells[0]);
    std::vector<double> vals(p);
    for (std::size_t j = 0; j < p; ++j) {
      vals[j] = parse_real_cell(cells[j + 1], row, j + 1);
    }
    raw.push_back(std::move(vals));
    ++row;
  }
  if (raw.empty()) throw DataError(path + ": no data rows");
  m.values.resize(static_cast<long>(raw.size()), static_cast<long>(p));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      m.values(static_cast<long>(i), static_cast<long>(j)) = raw[i][j];
    }
  }
  return m;
}

BinarizeRule parse_binarize_rule(const std::string& name) {
  if (name == "nonzero") return BinarizeRule::Nonzero;
  if (name == "column-median") return BinarizeRule::ColumnMedian;
  if (name == "threshold") return BinarizeRule::Threshold;
  throw UsageError("unknown binarize rule: " + name +
                   " (expected nonzero | column-median | threshold)");
}

CategoricalMatrix binarize(const RealMatrix& m, BinarizeRule rule,
                           double threshold) {
  CategoricalMatrix out;
  out.num_categories = 2;
  out.row_ids = m.row_ids;
  out.col_ids = m.col_ids;
  long n = m.values.rows(), p = m.values.cols();
  out.values.resize(n, p);
  for (long j = 0; j < p; ++j) {
    double cut;
    switch (rule) {
      case BinarizeRule::Nonzero:
        for (long i = 0; i < n; ++i) {
          out.values(i, j) = m.values(i, j) != 0.0 ? 1 : 0;
        }
        continue;
      case BinarizeRule::Threshold:
        cut = threshold;
        break;
      case BinarizeRule::ColumnMedian: {
        std::vector<double> col(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = m.values(i, j);
        std::sort(col.begin(), col.end());
        std::size_t h = col.size() / 2;
        cut = col.size() % 2 ? col[h] : 0.5 * (col[h - 1] + col[h]);
        break;
      }
      default:
        throw UsageError("invalid binarize rule");
    }
    // Strictly-above cut maps to 1, so a constant column is all zeros.
    for (long i = 0; i < n; ++i) {
      out.values(i, j) = m.values(i, j) > cut ? 1 : 0;
    }
  }
  return out;
}

namespace {

ordered_json matrix_to_json(const CategoricalMatrix& m) {
  ordered_json jm;
  jm["num_categories"] = m.num_categories;
  jm["row_ids"] = m.row_ids;
  jm["col_ids"] = m.col_ids;
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(m.rows()));
  for (long i = 0; i < m.rows(); ++i) {
    auto& r = rows[static_cast<std::size_t>(i)];
    r.resize(static_cast<std::size_t>(m.cols()));
    for (long j = 0; j < m.cols(); ++j) {
      r[static_cast<std::size_t>(j)] = m.values(i, j);
    }
  }
  jm["values"] = rows;
  return jm;
}

CategoricalMatrix matrix_from_json(const json& jm) {
  CategoricalMatrix m;
  m.num_categories = jm.at("num_categories").get<int>();
  m.row_ids = jm.at("row_ids").get<std::vector<std::string>>();
  m.col_ids = jm.at("col_ids").get<std::vector<std::string>>();
  auto rows = jm.at("values").get<std::vector<std::vector<int>>>();
  if (rows.empty()) throw DataError("bundle matrix has no rows");
  m.values.resize(static_cast<long>(rows.size()),
                  static_cast<long>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw DataError("bundle matrix is ragged at row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m.values(static_cast<long>(i), static_cast<long>(j)) =
          static_cast<std::int8_t>(rows[i][j]);
    }
  }
  m.validate();
  return m;
}

std::vector<std::vector<int>> configs_to_json(const std::vector<SjConfig>& cfgs) {
  std::vector<std::vector<int>> out(cfgs.size());
  for (std::size_t j = 0; j < cfgs.size(); ++j) {
    out[j].resize(static_cast<std::size_t>(cfgs[j].K));
    for (int k = 0; k < cfgs[j].K; ++k) {
      out[j][static_cast<std::size_t>(k)] = cfgs[j].selected(k) ? 1 : 0;
    }
  }
  return out;
}

std::vector<SjConfig> configs_from_json(const json& arr) {
  std::vector<SjConfig> out;
  for (const auto& row : arr) {
    SjConfig c;
    c.K = static_cast<int>(row.size());
    for (int k = 0; k < c.K; ++k) {
      if (row[static_cast<std::size_t>(k)].get<int>()) c.bits |= 1u << k;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

void write_bundle(const std::string& path, const Bundle& b) {
  ordered_json j;
  j["model"] = b.model;
  j["data"] = matrix_to_json(b.data);
  if (b.truth) {
    ordered_json t;
    t["K"] = b.truth->K;
    t["C"] = b.truth->C;
    if (!b.truth->S_vec.empty()) {
      t["S"] = std::vector<int>(b.truth->S_vec.begin(), b.truth->S_vec.end());
    }
    if (!b.truth->S_cfg.empty()) t["S_configs"] = configs_to_json(b.truth->S_cfg);
    j["truth"] = t;
  }
  open_out(path) << j.dump(1) << '\n';
}

Bundle read_bundle(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  Bundle b;
  b.model = j.at("model").get<std::string>();
  b.data = matrix_from_json(j.at("data"));
  if (j.contains("truth")) {
    GroundTruth t;
    const auto& jt = j.at("truth");
    t.K = jt.at("K").get<int>();
    t.C = jt.at("C").get<std::vector<int>>();
    if (jt.contains("S")) {
      auto s = jt.at("S").get<std::vector<int>>();
      t.S_vec.assign(s.begin(), s.end());
    }
    if (jt.contains("S_configs")) t.S_cfg = configs_from_json(jt.at("S_configs"));
    b.truth = std::move(t);
  }
  return b;
}

std::string hash_hex(const std::string& text) {
  // FNV-1a 64-bit; provenance fingerprint, not cryptographic.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_stack(const std::string& path, const StackBundle& b) {
  ordered_json j;
  ordered_json layers = ordered_json::array();
  for (std::size_t d = 0; d < b.stack.layers.size(); ++d) {
    ordered_json jl;
    jl["id"] = b.stack.layer_ids[d];
    jl["samples"] = b.stack.sample_counts[d];
    jl["theta0"] = b.stack.background[d].theta0;
    jl["sigma0_sq"] = b.stack.background[d].sigma0_sq;
    const auto& z = b.stack.layers[d];
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(z.rows()));
    for (long i = 0; i < z.rows(); ++i) {
      rows[static_cast<std::size_t>(i)].assign(z.row(i).begin(), z.row(i).end());
    }
    jl["z"] = rows;
    layers.push_back(std::move(jl));
  }
  j["layers"] = layers;
  if (b.truth) {
    ordered_json t;
    t["K"] = b.truth->K;
    t["C"] = b.truth->C;
    t["S"] = std::vector<int>(b.truth->S_vec.begin(), b.truth->S_vec.end());
    j["truth"] = t;
  }
  open_out(path) << j.dump(1) << '\n';
}

StackBundle read_stack(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  StackBundle b;
  for (const auto& jl : j.at("layers")) {
    b.stack.layer_ids.push_back(jl.at("id").get<std::string>());
    b.stack.sample_counts.push_back(jl.at("samples").get<long>());
    b.stack.background.push_back(
        {jl.at("theta0").get<double>(), jl.at("sigma0_sq").get<double>()});
    auto rows = jl.at("z").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw DataError(path + ": empty layer matrix");
    Eigen::MatrixXd z(static_cast<long>(rows.size()),
                      static_cast<long>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) {
        throw DataError(path + ": ragged layer matrix");
      }
      for (std::size_t c = 0; c < rows[i].size(); ++c) {
        z(static_cast<long>(i), static_cast<long>(c)) = rows[i][c];
      }
    }
    b.stack.layers.push_back(std::move(z));
  }
  b.stack.validate();
  if (j.contains("truth")) {
    GroundTruth t;
    const auto& jt = j.at("truth");
    t.K = jt.at("K").get<int>();
    t.C = jt.at("C").get<std::vector<int>>();
    auto s = jt.at("S").get<std::vector<int>>();
    t.S_vec.assign(s.begin(), s.end());
    b.truth = std::move(t);
  }
  return b;
}

void write_fit(const std::string& path, const FitResult& fit,
               const Provenance& prov, const MetricBlock& metrics) {
  ordered_json j;
  j["model"] = fit.model;
  j["K_hat"] = fit.K_hat;
  ordered_json per_k = ordered_json::array();
  for (const auto& f : fit.per_k) {
    ordered_json jk;
    jk["K"] = f.K;
    jk["log_marg"] = f.log_marg;
    jk["log_prior_K"] = f.log_prior_K;
    jk["map_score"] = f.map_score;
    jk["C"] = f.C;
    if (!f.S_vec.empty()) {
      jk["S"] = std::vector<int>(f.S_vec.begin(), f.S_vec.end());
    }
    if (!f.S_cfg.empty()) jk["S_configs"] = configs_to_json(f.S_cfg);
    if (!f.sel_prob.empty()) jk["selection_prob"] = f.sel_prob;
    per_k.push_back(std::move(jk));
  }
  j["per_k"] = per_k;
  if (!metrics.empty()) {
    ordered_json jm;
    for (const auto& [name, value] : metrics) jm[name] = value;
    j["metrics"] = jm;
  }
  ordered_json jp;
  jp["seed"] = prov.seed;
  jp["config_hash"] = prov.config_hash;
  jp["version"] = prov.version;
  j["provenance"] = jp;
  open_out(path) << j.dump(1) << '\n';
}

void write_tree(const std::string& path, const HbbcTree& tree,
                const Provenance& prov) {
  ordered_json j;
  ordered_json nodes = ordered_json::array();
  for (const auto& node : tree.nodes) {
    ordered_json jn;
    jn["id"] = node.id;
    jn["parent"] = node.parent;
    jn["left"] = node.left;
    jn["right"] = node.right;
    jn["members"] = node.members;
    jn["split_step"] = node.split_step;
    jn["log_w"] = std::isfinite(node.log_w) ? node.log_w : -1e308;
    jn["size_blocked"] = node.size_blocked;
    if (node.left >= 0) {
      jn["selected_features"] = node.selected_features;
      jn["selection_posterior"] = node.selection_posterior;
    }
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = nodes;
  ordered_json jp;
  jp["seed"] = prov.seed;
  jp["config_hash"] = prov.config_hash;
  jp["version"] = prov.version;
  j["provenance"] = jp;
  open_out(path) << j.dump(1) << '\n';
}

void write_error_json(const std::string& path, const std::string& kind,
                      const std::string& message) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  open_out(path) << j.dump(1) << '\n';
}

}  // namespace bcluster
