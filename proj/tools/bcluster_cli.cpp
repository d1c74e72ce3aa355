// Command-line surface: simulate / fit / select-k / evaluate / tree /
// integrate-prep, exchanging TSV matrices and JSON bundles.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>

#include "bcluster/bbc1.hpp"
#include "bcluster/bbc2.hpp"
#include "bcluster/hbbc.hpp"
#include "bcluster/integrate.hpp"
#include "bcluster/io.hpp"
#include "bcluster/metrics.hpp"
#include "bcluster/simgen.hpp"

namespace bc = bcluster;
using nlohmann::json;

namespace {

constexpr int kExitData = 2;
constexpr int kExitUsage = 3;
constexpr int kExitEstimation = 4;

void print_error(const std::string& kind, const std::string& message) {
  json j;
  j["error"] = kind;
  j["message"] = message;
  std::cout << j.dump() << std::endl;
}

std::vector<int> parse_k_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

std::vector<long> parse_long_list(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stol(tok));
  }
  return out;
}

bc::MetricBlock evaluate_against_truth(const std::string& model,
                                       const bc::KFit& fit,
                                       const bc::GroundTruth& truth) {
  bc::MetricBlock out;
  out.emplace_back("ari", bc::ari(truth.C, fit.C));
  out.emplace_back("clustering_error", bc::clustering_error(truth.C, fit.C));
  if (model == "bbc1" && !truth.S_vec.empty() && !fit.S_vec.empty()) {
    out.emplace_back("feature_recovery",
                     bc::feature_recovery(truth.S_vec, fit.S_vec));
    auto cr = bc::confusion_rates(truth.S_vec, fit.S_vec);
    out.emplace_back("fpr", cr.fpr);
    out.emplace_back("fnr", cr.fnr);
    out.emplace_back("tnr", cr.tnr);
  }
  if (model == "bbc2" && !truth.S_cfg.empty() && !fit.S_cfg.empty() &&
      truth.K == fit.K) {
    out.emplace_back("feature_recovery",
                     bc::feature_recovery_configs(truth.S_cfg, fit.S_cfg,
                                                  truth.C, fit.C, truth.K));
    auto cr = bc::confusion_rates_configs(truth.S_cfg, fit.S_cfg, truth.C,
                                          fit.C, truth.K);
    out.emplace_back("fpr", cr.fpr);
    out.emplace_back("fnr", cr.fnr);
    out.emplace_back("tnr", cr.tnr);
  }
  if (model == "integrate" && !truth.S_vec.empty() && truth.K == fit.K) {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t t = 0; t < truth.S_vec.size() && t < fit.sel_prob.size();
         ++t) {
      bool est = fit.sel_prob[t] > 0.5;
      if (truth.S_vec[t]) {
        est ? ++tp : ++fn;
      } else {
        est ? ++fp : ++tn;
      }
    }
    if (fp + tn > 0) {
      out.emplace_back("selection_fpr",
                       static_cast<double>(fp) / static_cast<double>(fp + tn));
      out.emplace_back("selection_tnr",
                       static_cast<double>(tn) / static_cast<double>(fp + tn));
    }
    if (fn + tp > 0) {
      out.emplace_back("selection_fnr",
                       static_cast<double>(fn) / static_cast<double>(fn + tp));
    }
  }
  return out;
}

struct FitOptions {
  std::string model;
  std::string input;
  std::string output;
  std::string config_path;
  int k = 0, k_min = 0, k_max = 0;
  int iterations = 0, burn_in = -1;
  std::uint64_t seed = 0;
  double pi_s = 0.1, gamma0 = -1.0, alpha = 0.05;
  std::size_t chib_samples = 150;
};

std::string fit_config_string(const FitOptions& opt,
                              const std::vector<int>& k_range) {
  std::ostringstream ss;
  ss << "model=" << opt.model << ";k=";
  for (int k : k_range) ss << k << ",";
  ss << ";iters=" << opt.iterations << ";burn=" << opt.burn_in
     << ";seed=" << opt.seed << ";pi_s=" << opt.pi_s << ";gamma0=" << opt.gamma0
     << ";alpha=" << opt.alpha << ";chib=" << opt.chib_samples;
  return ss.str();
}

void apply_config_file(CLI::App* cmd, FitOptions& opt) {
  if (opt.config_path.empty()) return;
  std::ifstream in(opt.config_path);
  if (!in) throw bc::UsageError("cannot open config file: " + opt.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw bc::UsageError("config file is not valid JSON: " + std::string(e.what()));
  }
  auto unset = [&](const std::string& flag) {
    auto* o = cmd->get_option("--" + flag);
    return o->count() == 0;
  };
  if (j.contains("model") && unset("model")) opt.model = j["model"];
  if (j.contains("k") && unset("k")) opt.k = j["k"];
  if (j.contains("k_min") && unset("k-min")) opt.k_min = j["k_min"];
  if (j.contains("k_max") && unset("k-max")) opt.k_max = j["k_max"];
  if (j.contains("iterations") && unset("iterations")) opt.iterations = j["iterations"];
  if (j.contains("burn_in") && unset("burn-in")) opt.burn_in = j["burn_in"];
  if (j.contains("seed") && unset("seed")) opt.seed = j["seed"];
  if (j.contains("pi_s") && unset("pi-s")) opt.pi_s = j["pi_s"];
  if (j.contains("gamma0") && unset("gamma0")) opt.gamma0 = j["gamma0"];
  if (j.contains("alpha") && unset("alpha")) opt.alpha = j["alpha"];
}

std::vector<int> resolve_k_range(const FitOptions& opt,
                                 std::pair<int, int> defaults) {
  std::vector<int> ks;
  if (opt.k > 0) {
    ks.push_back(opt.k);
  } else {
    int lo = opt.k_min > 0 ? opt.k_min : defaults.first;
    int hi = opt.k_max > 0 ? opt.k_max : defaults.second;
    if (hi < lo) throw bc::UsageError("fit: empty K range");
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
  }
  return ks;
}

bc::FitResult run_fit(const FitOptions& opt, const std::vector<int>& ks,
                      const bc::Bundle* bundle, const bc::StackBundle* stackb) {
  bc::McmcConfig mcmc;
  mcmc.iterations = opt.iterations;
  mcmc.burn_in = opt.burn_in;
  mcmc.seed = opt.seed;
  if (opt.model == "bbc1") {
    bc::Bbc1Hyper h;
    h.pi_s = opt.pi_s;
    if (opt.gamma0 >= 0) h.gamma0 = opt.gamma0;
    return bc::fit_bbc1(bundle->data, ks, h, mcmc);
  }
  if (opt.model == "bbc2") {
    bc::Bbc2Hyper h;
    h.pi_s = opt.pi_s;
    h.alpha = opt.alpha;
    return bc::fit_bbc2(bundle->data, ks, h, mcmc, opt.chib_samples);
  }
  if (opt.model == "integrate") {
    bc::IntegrateHyper h;
    h.pi_s = opt.pi_s;
    if (opt.gamma0 >= 0) h.gamma0 = opt.gamma0;
    return bc::fit_integration(stackb->stack, ks, h, mcmc);
  }
  throw bc::UsageError("fit: unknown model " + opt.model);
}

int do_fit(CLI::App* cmd, FitOptions& opt, bool bracket_search,
           const std::string& grid_text) {
  apply_config_file(cmd, opt);
  if (opt.iterations == 0) opt.iterations = opt.model == "bbc1" ? 900 : 500;
  if (opt.burn_in < 0) opt.burn_in = 200;

  bc::Bundle bundle;
  bc::StackBundle stackb;
  const bc::GroundTruth* truth = nullptr;
  if (opt.model == "integrate") {
    stackb = bc::read_stack(opt.input);
    if (stackb.truth) truth = &*stackb.truth;
  } else {
    bundle = bc::read_bundle(opt.input);
    bundle.data.validate();
    if (bundle.truth) truth = &*bundle.truth;
  }

  bc::FitResult result;
  std::vector<int> ks;
  if (!bracket_search) {
    ks = resolve_k_range(opt, {2, opt.model == "bbc1" ? 9 : 6});
    result = run_fit(opt, ks, &bundle, &stackb);
  } else {
    // Coarse grid first, then a dense scan of the bracket around the best.
    std::vector<int> grid = parse_k_list(grid_text);
    if (grid.empty()) throw bc::UsageError("select-k: empty grid");
    std::sort(grid.begin(), grid.end());
    result = run_fit(opt, grid, &bundle, &stackb);
    auto score = [](const bc::KFit& f) { return f.log_marg + f.log_prior_K; };
    std::size_t best = 0;
    for (std::size_t t = 1; t < result.per_k.size(); ++t) {
      if (score(result.per_k[t]) > score(result.per_k[best])) best = t;
    }
    int lo = best > 0 ? grid[best - 1] + 1 : std::max(1, grid[best] - 1);
    int hi = best + 1 < grid.size() ? grid[best + 1] - 1 : grid[best];
    std::vector<int> refine;
    for (int k = lo; k <= hi; ++k) {
      if (std::find(grid.begin(), grid.end(), k) == grid.end()) refine.push_back(k);
    }
    if (!refine.empty()) {
      bc::FitResult extra = run_fit(opt, refine, &bundle, &stackb);
      for (auto& f : extra.per_k) result.per_k.push_back(std::move(f));
    }
    std::sort(result.per_k.begin(), result.per_k.end(),
              [](const bc::KFit& a, const bc::KFit& b) { return a.K < b.K; });
    std::size_t overall = 0;
    for (std::size_t t = 1; t < result.per_k.size(); ++t) {
      if (score(result.per_k[t]) > score(result.per_k[overall])) overall = t;
    }
    result.K_hat = result.per_k[overall].K;
    ks = grid;
  }

  bc::MetricBlock metrics;
  if (truth) {
    metrics = evaluate_against_truth(result.model, result.best(), *truth);
  }
  bc::Provenance prov;
  prov.seed = opt.seed;
  prov.config_hash = bc::hash_hex(fit_config_string(opt, ks));
  bc::write_fit(opt.output, result, prov, metrics);
  return 0;
}

void add_fit_flags(CLI::App* cmd, FitOptions& opt) {
  cmd->add_option("--model", opt.model, "bbc1 | bbc2 | integrate")->required();
  cmd->add_option("--in", opt.input, "input bundle (or stack) JSON")->required();
  cmd->add_option("--out", opt.output, "result JSON path")->required();
  cmd->add_option("--config", opt.config_path, "JSON config file; flags override");
  cmd->add_option("--k", opt.k, "single K");
  cmd->add_option("--k-min", opt.k_min, "K range lower bound");
  cmd->add_option("--k-max", opt.k_max, "K range upper bound");
  cmd->add_option("--iterations", opt.iterations, "MCMC iterations");
  cmd->add_option("--burn-in", opt.burn_in, "burn-in iterations");
  cmd->add_option("--seed", opt.seed, "RNG seed");
  cmd->add_option("--pi-s", opt.pi_s, "selection prior");
  cmd->add_option("--gamma0", opt.gamma0, "null-cluster prior");
  cmd->add_option("--alpha", opt.alpha, "truncated-Poisson rate (bbc2)");
  cmd->add_option("--chib-samples", opt.chib_samples,
                  "max samples for the Chib estimator (0 = all)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian bi-clustering engine"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate synthetic data bundles");
  std::string sim_model, sim_out, sim_modules = "10,10";
  long sim_n = 200, sim_p = 1000, sim_ns = 40, sim_extra = 0, sim_nleaf = 50,
       sim_supporters = 12;
  int sim_k = 5, sim_l = 2;
  double sim_pis = 0.15, sim_shuffle = 0.0, sim_frac_super = 0.1,
         sim_frac_sub = 0.1, sim_shift = 0.6, sim_super_beta = 0.2,
         sim_sub_beta = 0.4;
  std::uint64_t sim_seed = 1;
  sim->add_option("--model", sim_model, "bbc1 | bbc2 | hierarchy | integration")
      ->required();
  sim->add_option("--out", sim_out)->required();
  sim->add_option("--n", sim_n);
  sim->add_option("--p", sim_p);
  sim->add_option("--K", sim_k);
  sim->add_option("--L", sim_l);
  sim->add_option("--Ns", sim_ns, "biomarker column count (bbc1)");
  sim->add_option("--pi-s", sim_pis, "generator selection probability (bbc2)");
  sim->add_option("--extra-noise", sim_extra, "append noise columns");
  sim->add_option("--shuffle-fraction", sim_shuffle);
  sim->add_option("--n-per-leaf", sim_nleaf);
  sim->add_option("--frac-super", sim_frac_super);
  sim->add_option("--frac-sub", sim_frac_sub);
  sim->add_option("--super-beta", sim_super_beta);
  sim->add_option("--sub-beta", sim_sub_beta);
  sim->add_option("--modules", sim_modules, "module sizes, comma-separated");
  sim->add_option("--supporters", sim_supporters, "supporting layers per module");
  sim->add_option("--shift", sim_shift, "within-module mean shift");
  sim->add_option("--seed", sim_seed);

  // fit / select-k
  auto* fit = app.add_subcommand("fit", "fit one model over a K range");
  FitOptions fit_opt;
  add_fit_flags(fit, fit_opt);

  auto* selk = app.add_subcommand("select-k", "coarse K grid, then bracket scan");
  FitOptions selk_opt;
  std::string selk_grid = "2,4,6,8";
  add_fit_flags(selk, selk_opt);
  selk->add_option("--grid", selk_grid, "coarse K grid, comma-separated");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score a result against a truth bundle");
  std::string ev_result, ev_truth, ev_out;
  ev->add_option("--result", ev_result)->required();
  ev->add_option("--truth", ev_truth)->required();
  ev->add_option("--out", ev_out)->required();

  // tree
  auto* tr = app.add_subcommand("tree", "grow a hierarchical bi-clustering tree");
  std::string tr_in, tr_out;
  double tr_q = 0.05, tr_threshold = -1.0;
  long tr_mns = 0;
  int tr_iters = 500, tr_burn = 200;
  std::uint64_t tr_seed = 0;
  tr->add_option("--in", tr_in)->required();
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--q", tr_q);
  tr->add_option("--min-node-size", tr_mns, "0 = max(5, n/20)");
  tr->add_option("--threshold", tr_threshold, "fixed threshold; default = leaf count");
  tr->add_option("--iterations", tr_iters);
  tr->add_option("--burn-in", tr_burn);
  tr->add_option("--seed", tr_seed);

  // integrate-prep
  auto* prep = app.add_subcommand("integrate-prep",
                                  "build a correlation stack from expression TSVs");
  std::vector<std::string> prep_inputs;
  std::string prep_queries, prep_out;
  long prep_min_samples = 10;
  prep->add_option("--expression", prep_inputs, "genes x samples TSV, repeatable")
      ->required();
  prep->add_option("--queries", prep_queries, "newline-delimited gene ids")
      ->required();
  prep->add_option("--out", prep_out)->required();
  prep->add_option("--min-samples", prep_min_samples,
                   "screen out layers with fewer samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what());
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      bc::RngStream rng(sim_seed, 0);
      if (sim_model == "bbc1") {
        auto truth = bc::gen_bbc1(sim_n, sim_p, sim_k, sim_ns, rng);
        bc::Bundle b{"bbc1", std::move(truth.Y),
                     bc::GroundTruth{truth.C, truth.S, {}, sim_k}};
        bc::write_bundle(sim_out, b);
      } else if (sim_model == "bbc2") {
        auto truth = bc::gen_bbc2(sim_n, sim_p, sim_k, sim_l, sim_pis, {}, rng);
        if (sim_extra > 0) {
          truth.Y = bc::gen_semisynthetic_noise(truth.Y, sim_extra,
                                                rng.derive(0x4e4f495345ULL));
          for (long t = 0; t < sim_extra; ++t) {
            truth.S.push_back(bc::SjConfig{0, sim_k});
          }
        }
        if (sim_shuffle > 0.0) {
          auto sh = bc::shuffle_features(truth.Y, sim_shuffle,
                                         rng.derive(0x53485546ULL));
          truth.Y = std::move(sh.Y);
        }
        bc::Bundle b{"bbc2", std::move(truth.Y),
                     bc::GroundTruth{truth.C, {}, truth.S, sim_k}};
        bc::write_bundle(sim_out, b);
      } else if (sim_model == "hierarchy") {
        auto truth = bc::gen_hierarchy(sim_nleaf, sim_p, sim_frac_super,
                                       sim_frac_sub, sim_super_beta,
                                       sim_sub_beta, rng);
        bc::Bundle b{"hierarchy", std::move(truth.Y),
                     bc::GroundTruth{truth.leaf, {}, {}, 4}};
        bc::write_bundle(sim_out, b);
      } else if (sim_model == "integration") {
        auto truth = bc::gen_integration(sim_n, sim_p,
                                         parse_long_list(sim_modules),
                                         sim_supporters, sim_shift, rng);
        bc::StackBundle b{std::move(truth.stack),
                          bc::GroundTruth{truth.C, truth.S, {}, truth.K}};
        bc::write_stack(sim_out, b);
      } else {
        throw bc::UsageError("simulate: unknown model " + sim_model);
      }
      return 0;
    }
    if (fit->parsed()) return do_fit(fit, fit_opt, false, "");
    if (selk->parsed()) return do_fit(selk, selk_opt, true, selk_grid);
    if (ev->parsed()) {
      json jr;
      std::ifstream in(ev_result);
      if (!in) throw bc::DataError("cannot open result file: " + ev_result);
      try {
        in >> jr;
      } catch (const json::exception& e) {
        throw bc::DataError("result file is not valid JSON: " + std::string(e.what()));
      }
      bc::KFit fit_k;
      fit_k.K = jr.at("K_hat").get<int>();
      std::string model = jr.at("model").get<std::string>();
      for (const auto& jk : jr.at("per_k")) {
        if (jk.at("K").get<int>() != fit_k.K) continue;
        fit_k.C = jk.at("C").get<std::vector<int>>();
        if (jk.contains("S")) {
          auto s = jk.at("S").get<std::vector<int>>();
          fit_k.S_vec.assign(s.begin(), s.end());
        }
        if (jk.contains("S_configs")) {
          for (const auto& row : jk.at("S_configs")) {
            bc::SjConfig c;
            c.K = static_cast<int>(row.size());
            for (int k = 0; k < c.K; ++k) {
              if (row[static_cast<std::size_t>(k)].get<int>()) c.bits |= 1u << k;
            }
            fit_k.S_cfg.push_back(c);
          }
        }
        if (jk.contains("selection_prob")) {
          fit_k.sel_prob = jk.at("selection_prob").get<std::vector<double>>();
        }
      }
      if (fit_k.C.empty()) {
        throw bc::DataError("result file has no per-K entry for K_hat");
      }
      const bc::GroundTruth* truth = nullptr;
      bc::Bundle bundle;
      bc::StackBundle stackb;
      if (model == "integrate") {
        stackb = bc::read_stack(ev_truth);
        truth = stackb.truth ? &*stackb.truth : nullptr;
      } else {
        bundle = bc::read_bundle(ev_truth);
        truth = bundle.truth ? &*bundle.truth : nullptr;
      }
      if (!truth) throw bc::DataError("truth bundle carries no ground truth");
      auto metrics = evaluate_against_truth(model, fit_k, *truth);
      nlohmann::ordered_json jm;
      for (const auto& [name, value] : metrics) jm[name] = value;
      std::ofstream out(ev_out);
      if (!out) throw bc::DataError("cannot write " + ev_out);
      out << jm.dump(1) << '\n';
      return 0;
    }
    if (tr->parsed()) {
      auto bundle = bc::read_bundle(tr_in);
      bundle.data.validate();
      bc::HbbcConfig cfg;
      cfg.q = tr_q;
      cfg.min_node_size = tr_mns;
      cfg.threshold_override = tr_threshold;
      cfg.node_mcmc = {tr_iters, tr_burn, 0};
      auto tree = bc::grow_tree(bundle.data, cfg, tr_seed);
      bc::Provenance prov;
      prov.seed = tr_seed;
      std::ostringstream ss;
      ss << "tree;q=" << tr_q << ";mns=" << tr_mns << ";thr=" << tr_threshold
         << ";iters=" << tr_iters << ";burn=" << tr_burn << ";seed=" << tr_seed;
      prov.config_hash = bc::hash_hex(ss.str());
      bc::write_tree(tr_out, tree, prov);
      return 0;
    }
    if (prep->parsed()) {
      std::ifstream qin(prep_queries);
      if (!qin) throw bc::DataError("cannot open query list: " + prep_queries);
      std::vector<std::string> queries;
      std::string line;
      while (std::getline(qin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) queries.push_back(line);
      }
      if (queries.empty()) throw bc::DataError("empty query list");
      bc::StackBundle b;
      for (const auto& path : prep_inputs) {
        auto mat = bc::read_real_matrix(path);
        if (mat.values.cols() < prep_min_samples) continue;  // screened out
        std::vector<long> rows;
        for (const auto& q : queries) {
          auto it = std::find(mat.row_ids.begin(), mat.row_ids.end(), q);
          if (it == mat.row_ids.end()) {
            throw bc::DataError(path + ": query gene not found: " + q);
          }
          rows.push_back(it - mat.row_ids.begin());
        }
        auto layer = bc::build_layer(mat.values, rows);
        b.stack.layers.push_back(std::move(layer.z));
        b.stack.background.push_back(layer.background);
        b.stack.sample_counts.push_back(layer.samples);
        b.stack.layer_ids.push_back(path);
      }
      if (b.stack.layers.empty()) {
        throw bc::DataError("all layers screened out (too few samples)");
      }
      bc::write_stack(prep_out, b);
      return 0;
    }
  } catch (const bc::DataError& e) {
    print_error("data", e.what());
    return kExitData;
  } catch (const bc::UsageError& e) {
    print_error("usage", e.what());
    return kExitUsage;
  } catch (const bc::EstimationError& e) {
    print_error("estimation", e.what());
    return kExitEstimation;
  } catch (const std::domain_error& e) {
    print_error("usage", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
