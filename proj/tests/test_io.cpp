#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>

#include "bcluster/errors.hpp"
#include "bcluster/io.hpp"

using namespace bcluster;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("bcio_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("read_matrix: binary kept as-is, categorical shifted to 0-based") {
  TempDir tmp;
  write_text(tmp.file("bin.tsv"),
             "id\tf1\tf2\tf3\nr1\t0\t1\t1\nr2\t1\t0\t1\nr3\t0\t0\t0\n");
  auto m = read_matrix(tmp.file("bin.tsv"));
  CHECK(m.values.rows() == 3);
  CHECK(m.values.cols() == 3);
  CHECK(m.num_categories == 2);
  CHECK(m.values(0, 1) == 1);
  CHECK(m.values(2, 2) == 0);
  CHECK(m.row_ids[1] == "r2");
  CHECK(m.col_ids[2] == "f3");

  write_text(tmp.file("cat.tsv"),
             "id\ta\tb\nr1\t1\t3\nr2\t2\t1\nr3\t3\t2\n");
  auto c = read_matrix(tmp.file("cat.tsv"));
  CHECK(c.num_categories == 3);
  CHECK(c.values(0, 0) == 0);  // categories stored 0-based internally
  CHECK(c.values(0, 1) == 2);
}

TEST_CASE("read_matrix rejects malformed input with data errors") {
  TempDir tmp;
  write_text(tmp.file("frac.tsv"), "id\ta\nr1\t0.5\nr2\t1\n");
  CHECK_THROWS_AS(read_matrix(tmp.file("frac.tsv")), DataError);
  write_text(tmp.file("ragged.tsv"), "id\ta\tb\nr1\t1\t2\nr2\t1\n");
  CHECK_THROWS_AS(read_matrix(tmp.file("ragged.tsv")), DataError);
  write_text(tmp.file("const.tsv"), "id\ta\nr1\t1\nr2\t1\n");
  CHECK_THROWS_AS(read_matrix(tmp.file("const.tsv")), DataError);
  CHECK_THROWS_AS(read_matrix(tmp.file("missing.tsv")), DataError);
  write_text(tmp.file("text.tsv"), "id\ta\nr1\tx\nr2\t1\n");
  CHECK_THROWS_AS(read_matrix(tmp.file("text.tsv")), DataError);
}

TEST_CASE("matrix write/read round trip") {
  TempDir tmp;
  CategoricalMatrix m;
  m.values.resize(2, 3);
  m.values << 0, 2, 1, 1, 0, 2;
  m.num_categories = 3;
  m.row_ids = {"x", "y"};
  m.col_ids = {"c1", "c2", "c3"};
  write_matrix(tmp.file("m.tsv"), m);
  auto back = read_matrix(tmp.file("m.tsv"));
  CHECK(back.values == m.values);
  CHECK(back.row_ids == m.row_ids);
  CHECK(back.col_ids == m.col_ids);
  CHECK(back.num_categories == 3);
  // Categorical values are written 1-based on disk.
  auto text = read_text(tmp.file("m.tsv"));
  CHECK(text.find("\t3") != std::string::npos);
}

TEST_CASE("binarize rules") {
  RealMatrix m;
  m.values.resize(3, 2);
  m.values << 0.0, 5.0, 2.0, 1.0, 4.0, 3.0;
  m.row_ids = {"a", "b", "c"};
  m.col_ids = {"u", "v"};

  auto nz = binarize(m, BinarizeRule::Nonzero);
  CHECK(nz.values(0, 0) == 0);
  CHECK(nz.values(1, 0) == 1);

  // Strictly above the column median.
  auto med = binarize(m, BinarizeRule::ColumnMedian);
  CHECK(med.values(0, 0) == 0);
  CHECK(med.values(2, 0) == 1);
  CHECK(med.values(0, 1) == 1);

  auto thr = binarize(m, BinarizeRule::Threshold, 2.5);
  CHECK(thr.values(1, 0) == 0);
  CHECK(thr.values(2, 0) == 1);

  CHECK(parse_binarize_rule("nonzero") == BinarizeRule::Nonzero);
  CHECK_THROWS(parse_binarize_rule("bogus"));
}

TEST_CASE("bundle round trip with ground truth") {
  TempDir tmp;
  Bundle b;
  b.model = "bbc2";
  b.data.values.resize(2, 2);
  b.data.values << 0, 1, 1, 0;
  b.data.num_categories = 2;
  b.data.row_ids = {"r1", "r2"};
  b.data.col_ids = {"c1", "c2"};
  GroundTruth t;
  t.C = {1, 2};
  t.K = 2;
  t.S_cfg = {{0b11, 2}, {0, 2}};
  b.truth = t;
  write_bundle(tmp.file("b.json"), b);
  auto back = read_bundle(tmp.file("b.json"));
  CHECK(back.model == "bbc2");
  CHECK(back.data.values == b.data.values);
  REQUIRE(back.truth.has_value());
  CHECK(back.truth->C == t.C);
  CHECK(back.truth->K == 2);
  REQUIRE(back.truth->S_cfg.size() == 2);
  CHECK(back.truth->S_cfg[0].bits == 0b11);
  CHECK(back.truth->S_cfg[1].bits == 0u);
}

TEST_CASE("correlation stack round trip") {
  TempDir tmp;
  StackBundle b;
  Eigen::MatrixXd z(2, 2);
  z << 0.0, 0.4, 0.4, 0.0;
  b.stack.layers = {z, 0.5 * z};
  b.stack.background = {{0.01, 0.04}, {-0.02, 0.05}};
  b.stack.sample_counts = {30, 45};
  b.stack.layer_ids = {"d1", "d2"};
  GroundTruth t;
  t.C = {1, 1};
  t.K = 1;
  t.S_vec = {1, 0};
  b.truth = t;
  write_stack(tmp.file("s.json"), b);
  auto back = read_stack(tmp.file("s.json"));
  CHECK(back.stack.num_layers() == 2);
  CHECK(back.stack.layers[1](0, 1) == doctest::Approx(0.2));
  CHECK(back.stack.background[0].sigma0_sq == doctest::Approx(0.04));
  CHECK(back.stack.sample_counts[1] == 45);
  REQUIRE(back.truth.has_value());
  CHECK(back.truth->S_vec == t.S_vec);
}

TEST_CASE("hash_hex is stable and input-sensitive") {
  CHECK(hash_hex("abc") == hash_hex("abc"));
  CHECK(hash_hex("abc") != hash_hex("abd"));
  CHECK(hash_hex("").size() == 16);
}

TEST_CASE("write_fit emits parseable JSON with stable structure") {
  TempDir tmp;
  FitResult fit;
  fit.model = "bbc1";
  fit.K_hat = 2;
  KFit f;
  f.K = 2;
  f.log_marg = -12.5;
  f.C = {1, 2, 1};
  f.S_vec = {1, 0};
  f.sel_prob = {0.9, 0.1};
  fit.per_k.push_back(f);
  Provenance prov;
  prov.seed = 7;
  prov.config_hash = hash_hex("cfg");
  write_fit(tmp.file("fit.json"), fit, prov, {{"ari", 1.0}});
  auto j = nlohmann::json::parse(read_text(tmp.file("fit.json")));
  CHECK(j["model"] == "bbc1");
  CHECK(j["K_hat"] == 2);
  CHECK(j["per_k"][0]["C"] == nlohmann::json({1, 2, 1}));
  CHECK(j["per_k"][0]["S"] == nlohmann::json({1, 0}));
  CHECK(j["metrics"]["ari"] == 1.0);
  CHECK(j["provenance"]["seed"] == 7);
  // Identical rerun produces byte-identical output.
  write_fit(tmp.file("fit2.json"), fit, prov, {{"ari", 1.0}});
  CHECK(read_text(tmp.file("fit.json")) == read_text(tmp.file("fit2.json")));
}

TEST_CASE("error JSON carries kind and message") {
  TempDir tmp;
  write_error_json(tmp.file("err.json"), "data", "bad column");
  auto j = nlohmann::json::parse(read_text(tmp.file("err.json")));
  CHECK(j["error"] == "data");
  CHECK(j["message"] == "bad column");
}
