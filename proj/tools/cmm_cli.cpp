// Command-line front end: fit | select | simulate | bench-modes | evaluate.
// Every command with --seed is end-to-end deterministic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmm/bayes.hpp"
#include "cmm/em.hpp"
#include "cmm/encode.hpp"
#include "cmm/eval.hpp"
#include "cmm/likelihood.hpp"
#include "cmm/model_io.hpp"
#include "cmm/rng.hpp"
#include "cmm/search.hpp"
#include "cmm/sim.hpp"
#include "cmm/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cmm;

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << text;
}

std::string join_ints(const std::vector<int>& xs, char sep) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(xs[i]);
  }
  return s;
}

std::vector<int> map_labels(const CategoricalDataset& ds, const ModelRecord& rec,
                            Matrix* resp_out = nullptr) {
  const ModelSpec spec = rec.to_spec();
  const auto enc = encode_blocks(ds, spec.partition);
  const auto r = e_step(enc, rec.params, spec);
  std::vector<int> labels(ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    const auto row = r.row(i);
    labels[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  if (resp_out) *resp_out = r;
  return labels;
}

void write_partition_csv(const fs::path& path, const CategoricalDataset& ds,
                         std::span<const int> labels, const Matrix& resp) {
  std::ostringstream out;
  out << "row,map_class";
  for (std::size_t k = 0; k < resp.cols(); ++k) out << ",r" << (k + 1);
  out << "\n";
  for (int i = 0; i < ds.n(); ++i) {
    out << (i + 1) << ',' << (labels[i] + 1);
    for (std::size_t k = 0; k < resp.cols(); ++k) out << ',' << fmt(resp(i, k));
    out << "\n";
  }
  write_text(path, out.str());
}

ModelRecord make_record(const CategoricalDataset& ds, const ModelSpec& spec,
                        const EmResult& fit, std::uint64_t seed) {
  ModelRecord rec;
  rec.var_names = ds.var_names;
  rec.levels = ds.levels;
  rec.g = spec.g;
  rec.sigma_blocks = spec.partition.blocks();
  rec.modes = spec.modes;
  rec.params = fit.params;
  rec.loglik = fit.loglik;
  rec.nu = spec.nu();
  rec.bic = bic(fit.loglik, rec.nu, ds.n());
  rec.seed = seed;
  return rec;
}

std::string report_text(const CategoricalDataset& ds, const ModelRecord& rec) {
  const ModelSpec spec = rec.to_spec();
  const auto tab = summaries(rec.params, spec);
  std::ostringstream out;
  out << "classes: " << rec.g << "\n";
  out << "partition: " << spec.partition.to_string() << "\n";
  out << "log-likelihood: " << fmt(rec.loglik) << "\n";
  out << "free parameters: " << rec.nu << "\n";
  out << "BIC: " << fmt(rec.bic) << "\n";
  out << "mixing proportions:";
  for (double p : rec.params.pi) out << ' ' << fmt(p);
  out << "\n\nper (class, block) summaries:\n";
  out << "class,block,vars,modes,kappa,rho\n";
  for (int k = 0; k < rec.g; ++k)
    for (int j = 0; j < spec.num_blocks(); ++j) {
      out << (k + 1) << ',' << (j + 1) << ',';
      const auto& vars = spec.partition.block(j);
      for (std::size_t t = 0; t < vars.size(); ++t)
        out << (t ? "|" : "") << ds.var_names[vars[t]];
      out << ',' << spec.modes[k][j] << ',' << fmt(tab.kappa(k, j)) << ','
          << fmt(tab.rho(k, j)) << "\n";
    }
  return out.str();
}

// ---- fit ----------------------------------------------------------------

struct FitArgs {
  std::string data_path;
  std::string spec_path;
  int classes = 0;
  int starts = 25;
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = ".";
};

int cmd_fit(const FitArgs& a) {
  auto ds = CategoricalDataset::load_csv(a.data_path);

  ModelSpec spec = ModelSpec::cim(1, var_modalities(ds));
  if (!a.spec_path.empty()) {
    const auto ref = load_model_json(a.spec_path);
    ds = aligned_to_schema(ds, ref.var_names, ref.levels);
    spec = ref.to_spec();
  } else if (a.classes >= 1) {
    const auto mods = var_modalities(ds);
    spec = ModelSpec::cim(a.classes, mods);
  } else {
    throw DataError("fit: pass --classes or --spec");
  }

  EmOptions opts;
  opts.starts = a.starts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  opts.seed = a.seed;
  opts.threads = a.threads;
  const auto enc = encode_blocks(ds, spec.partition);
  const auto fit = em_fit(enc, spec, opts);

  const auto rec = make_record(ds, spec, fit, a.seed);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  save_model_json((dir / "model.json").string(), rec);

  std::vector<int> labels(ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    const auto row = fit.responsibilities.row(i);
    labels[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  write_partition_csv(dir / "partition.csv", ds, labels, fit.responsibilities);
  write_text(dir / "report.txt", report_text(ds, rec));
  std::cout << report_text(ds, rec);
  return 0;
}

// ---- select ----------------------------------------------------------------

struct SelectArgs {
  std::string data_path;
  int g_min = 1;
  int g_max = 4;
  int chains = 25;
  long iters = 3000;
  long burnin = 1000;
  long max_block_crossings = 512;
  bool no_sweep_correction = false;
  bool trace = false;
  int starts = 25;
  double tol = 1e-6;
  int max_iter = 500;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = ".";
};

void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& rows) {
  std::ostringstream out;
  out << "iteration,sigma,modes,log_evidence,accepted\n";
  for (const auto& r : rows)
    out << r.iteration << ',' << csv_escape(r.sigma) << ','
        << join_ints(r.modes_flat, ':') << ',' << fmt(r.log_evidence) << ','
        << (r.accepted ? 1 : 0) << "\n";
  write_text(path, out.str());
}

int cmd_select(const SelectArgs& a) {
  const auto ds = CategoricalDataset::load_csv(a.data_path);

  SelectOptions opts;
  opts.g_min = a.g_min;
  opts.g_max = a.g_max;
  opts.chains = a.chains;
  opts.chain.iterations = a.iters;
  opts.chain.burnin = a.burnin;
  opts.chain.seed = a.seed;
  opts.chain.max_block_crossings = a.max_block_crossings;
  opts.chain.metropolize_sweep = !a.no_sweep_correction;
  opts.chain.record_trace = a.trace;
  opts.em.starts = a.starts;
  opts.em.tol = a.tol;
  opts.em.max_iter = a.max_iter;
  opts.em.seed = a.seed;
  opts.threads = a.threads;

  const auto sel = select_model(ds, opts);

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  std::ostringstream table;
  table << "g,sigma,modes,loglik,nu,bic,best\n";
  for (std::size_t i = 0; i < sel.per_g.size(); ++i) {
    const auto& gr = sel.per_g[i];
    const ModelSpec spec(gr.g, gr.sigma, gr.modes, var_modalities(ds));
    std::vector<int> flat;
    for (const auto& row : gr.modes) flat.insert(flat.end(), row.begin(), row.end());
    table << gr.g << ',' << csv_escape(gr.sigma.to_string()) << ','
          << join_ints(flat, ':') << ',' << fmt(gr.fit.loglik) << ',' << gr.nu << ','
          << fmt(gr.bic) << ',' << (static_cast<int>(i) == sel.best_index ? 1 : 0) << "\n";
    const auto rec = make_record(ds, spec, gr.fit, a.seed);
    save_model_json((dir / ("model_g" + std::to_string(gr.g) + ".json")).string(), rec);
    for (std::size_t c = 0; c < gr.traces.size(); ++c)
      write_trace_csv(dir / ("trace_g" + std::to_string(gr.g) + "_chain" +
                             std::to_string(c + 1) + ".csv"),
                      gr.traces[c]);
  }
  write_text(dir / "bic_table.csv", table.str());

  const auto& best = sel.per_g[sel.best_index];
  const ModelSpec best_spec(best.g, best.sigma, best.modes, var_modalities(ds));
  const auto best_rec = make_record(ds, best_spec, best.fit, a.seed);
  save_model_json((dir / "best_model.json").string(), best_rec);

  Matrix resp;
  const auto labels = map_labels(ds, best_rec, &resp);
  write_partition_csv(dir / "partition.csv", ds, labels, resp);
  write_text(dir / "report.txt", report_text(ds, best_rec));
  std::cout << table.str();
  return 0;
}

// ---- simulate ----------------------------------------------------------------

struct SimArgs {
  std::string design;
  int n = 100;
  int reps = 1;
  int s = 9;
  double r = 0.3;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

json record_to_json_fragment(const ModelRecord& rec) {
  std::ostringstream os;
  write_model_json(os, rec);
  return json::parse(os.str());
}

int cmd_simulate(const SimArgs& a) {
  if (a.reps < 1 || a.n < 1) throw DataError("simulate: n and reps must be positive");
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  for (int rep = 0; rep < a.reps; ++rep) {
    const std::uint64_t rep_seed = derive_seed(a.seed, 0x53494d /*SIM*/, rep);
    std::string suffix;
    if (a.reps > 1) {
      std::ostringstream os;
      os << '_' << std::setw(3) << std::setfill('0') << (rep + 1);
      suffix = os.str();
    }
    json truth;
    truth["design"] = a.design;
    truth["n"] = a.n;
    truth["seed"] = rep_seed;
    CategoricalDataset ds;
    if (a.design == "modes") {
      const auto draws = gen_modes_multinomial(a.n, a.s, a.r, rep_seed);
      ds.var_names = {"v1"};
      ds.levels.resize(1);
      for (int c = 0; c < a.s; ++c) ds.levels[0].push_back("m" + std::to_string(c + 1));
      for (auto d : draws) ds.cells.push_back({d});
      truth["s"] = a.s;
      truth["r"] = a.r;
    } else if (a.design == "cmm") {
      const auto bench = benchmark_cmm();
      const auto lab = gen_cmm(bench.spec, bench.params, bench.var_mods, a.n, rep_seed);
      ds = lab.data;
      ModelRecord rec;
      rec.var_names = ds.var_names;
      rec.levels = ds.levels;
      rec.g = bench.spec.g;
      rec.sigma_blocks = bench.spec.partition.blocks();
      rec.modes = bench.spec.modes;
      rec.params = bench.params;
      rec.seed = rep_seed;
      truth["model"] = record_to_json_fragment(rec);
      truth["labels"] = lab.labels;
    } else if (a.design == "misspec") {
      const auto lab = gen_misspecified(a.n, a.lambda, rep_seed);
      ds = lab.data;
      truth["lambda"] = a.lambda;
      truth["labels"] = lab.labels;
    } else {
      throw DataError("simulate: unknown design (use modes | cmm | misspec)");
    }
    ds.save_csv((dir / ("data" + suffix + ".csv")).string());
    write_text(dir / ("truth" + suffix + ".json"), truth.dump(2) + "\n");
  }
  return 0;
}

// ---- bench-modes ----------------------------------------------------------------

struct BenchArgs {
  int s = 9;
  double r = 0.3;
  std::vector<long> n_grid = {50, 100, 200, 400, 800};
  int reps = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = ".";
};

int cmd_bench_modes(const BenchArgs& a) {
  fs::create_directories(a.out_dir);
  std::ostringstream out;
  out << "n,criterion,p_correct,p_over,p_under\n";
  const int true_ell = 3;
  for (long n : a.n_grid) {
    std::vector<int> pick_int(a.reps), pick_bic(a.reps);
    parallel_for(static_cast<std::size_t>(a.reps), a.threads, [&](std::size_t rep) {
      const auto draws =
          gen_modes_multinomial(static_cast<int>(n), a.s, a.r,
                                derive_seed(a.seed, 0x424d /*BM*/, n, rep));
      std::vector<double> counts(a.s, 0.0);
      for (auto d : draws) counts[d] += 1.0;
      const auto bc = make_block_counts(std::move(counts));
      pick_int[rep] = select_mode_count_integrated(bc, static_cast<double>(n), a.s);
      pick_bic[rep] = select_mode_count_bic(bc, static_cast<double>(n), a.s);
    });
    const auto emit = [&](const char* name, const std::vector<int>& picks) {
      int correct = 0, over = 0;
      for (int p : picks) {
        correct += p == true_ell;
        over += p > true_ell;
      }
      out << n << ',' << name << ',' << fmt(double(correct) / a.reps) << ','
          << fmt(double(over) / a.reps) << ','
          << fmt(double(a.reps - correct - over) / a.reps) << "\n";
    };
    emit("integrated", pick_int);
    emit("bic", pick_bic);
  }
  write_text(fs::path(a.out_dir) / "mode_selection.csv", out.str());
  std::cout << out.str();
  return 0;
}

// ---- evaluate ----------------------------------------------------------------

struct EvalArgs {
  std::string model_path;
  std::string data_path;
  std::string truth_path;
  int bootstrap_reps = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = ".";
};

int cmd_evaluate(const EvalArgs& a) {
  const auto rec = load_model_json(a.model_path);
  const auto ds = aligned_to_schema(CategoricalDataset::load_csv(a.data_path),
                                    rec.var_names, rec.levels);

  Matrix resp;
  const auto labels = map_labels(ds, rec, &resp);

  json report;
  report["model"] = a.model_path;
  report["data"] = a.data_path;

  const CmmDistribution fitted(rec.to_spec(), rec.params, rec.var_mods());
  if (!a.truth_path.empty()) {
    std::ifstream in(a.truth_path);
    if (!in) throw DataError("cannot open truth file: " + a.truth_path);
    json truth;
    try {
      in >> truth;
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed truth JSON: ") + e.what());
    }
    const std::string design = truth.value("design", "cmm");
    std::unique_ptr<JointDistribution> true_dist;
    if (design == "cmm") {
      std::istringstream ms(truth.at("model").dump());
      const auto true_rec = align_record(read_model_json(ms), rec.var_names, rec.levels);
      true_dist = std::make_unique<CmmDistribution>(true_rec.to_spec(), true_rec.params,
                                                    true_rec.var_mods());
    } else if (design == "misspec") {
      // The generator's canonical level names are m1, m2, ...; remap the
      // model schema's level indexing onto them.
      std::vector<std::vector<std::uint32_t>> to_inner(rec.levels.size());
      for (std::size_t b = 0; b < rec.levels.size(); ++b)
        for (const auto& name : rec.levels[b]) {
          if (name.size() < 2 || name[0] != 'm')
            throw DataError("evaluate: unexpected level name for a misspec truth: " + name);
          to_inner[b].push_back(static_cast<std::uint32_t>(std::stoul(name.substr(1)) - 1));
        }
      true_dist = std::make_unique<RelabeledDistribution>(
          std::make_unique<MisspecifiedDistribution>(truth.at("lambda").get<double>()),
          std::move(to_inner));
    } else {
      throw DataError("evaluate: truth design has no joint distribution: " + design);
    }
    const auto kl = kl_divergence(*true_dist, fitted, 1000000, 100000, a.seed);
    report["kl"] = {{"value", kl.value},
                    {"std_error", kl.std_error},
                    {"exhaustive", kl.exhaustive}};
    if (truth.contains("labels")) {
      const auto true_labels = truth.at("labels").get<std::vector<int>>();
      if (static_cast<int>(true_labels.size()) != ds.n())
        throw DataError("evaluate: truth labels length does not match the data");
      const auto table = confusion(true_labels, labels);
      json jt = json::array();
      for (std::size_t i = 0; i < table.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < table.cols(); ++j) row.push_back(table(i, j));
        jt.push_back(row);
      }
      report["confusion"] = jt;
    }
  }

  const auto vmats = cramers_v_by_class(ds, labels, rec.g);
  json jv = json::array();
  for (const auto& mat : vmats) {
    json jm = json::array();
    for (std::size_t i = 0; i < mat.rows(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
      jm.push_back(row);
    }
    jv.push_back(jm);
  }
  report["cramers_v"] = jv;

  report["bootstrap_independence_pvalue"] =
      bootstrap_independence_test(ds, labels, rec.g, a.bootstrap_reps, a.seed, a.threads);

  const auto ident = identifiability_check(rec.to_spec());
  report["identifiability"] = {{"identifiable", ident.identifiable},
                               {"message", ident.message}};

  fs::create_directories(a.out_dir);
  const std::string text = report.dump(2) + "\n";
  write_text(fs::path(a.out_dir) / "evaluation.json", text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional-modes mixture models for categorical data"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a fixed model structure by EM");
  fit->add_option("data", fa.data_path, "input CSV")->required();
  fit->add_option("--spec", fa.spec_path, "model JSON giving the structure to fit");
  fit->add_option("--classes", fa.classes, "class count for the latent-class baseline");
  fit->add_option("--starts", fa.starts);
  fit->add_option("--tol", fa.tol);
  fit->add_option("--max-iter", fa.max_iter);
  fit->add_option("--seed", fa.seed);
  fit->add_option("--threads", fa.threads);
  fit->add_option("--out-dir", fa.out_dir);

  SelectArgs sa;
  auto* sel = app.add_subcommand("select", "Search model structures and class counts");
  sel->add_option("data", sa.data_path, "input CSV")->required();
  sel->add_option("--gmin", sa.g_min);
  sel->add_option("--gmax", sa.g_max);
  sel->add_option("--chains", sa.chains);
  sel->add_option("--iters", sa.iters);
  sel->add_option("--burnin", sa.burnin);
  sel->add_option("--max-block-crossings", sa.max_block_crossings);
  sel->add_flag("--no-sweep-correction", sa.no_sweep_correction);
  sel->add_flag("--trace", sa.trace, "write per-chain trace CSVs");
  sel->add_option("--starts", sa.starts);
  sel->add_option("--tol", sa.tol);
  sel->add_option("--max-iter", sa.max_iter);
  sel->add_option("--seed", sa.seed);
  sel->add_option("--threads", sa.threads);
  sel->add_option("--out-dir", sa.out_dir);

  SimArgs ma;
  auto* sim = app.add_subcommand("simulate", "Generate synthetic datasets");
  sim->add_option("design", ma.design, "modes | cmm | misspec")->required();
  sim->add_option("--n", ma.n);
  sim->add_option("--reps", ma.reps);
  sim->add_option("--s", ma.s, "category count (modes design)");
  sim->add_option("--r", ma.r, "mode mass (modes design)");
  sim->add_option("--lambda", ma.lambda, "pair coupling (misspec design)");
  sim->add_option("--seed", ma.seed);
  sim->add_option("--out-dir", ma.out_dir);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench-modes",
                                   "Mode-count selection curves for two criteria");
  bench->add_option("--s", ba.s);
  bench->add_option("--r", ba.r);
  bench->add_option("--n-grid", ba.n_grid)->delimiter(',');
  bench->add_option("--reps", ba.reps);
  bench->add_option("--seed", ba.seed);
  bench->add_option("--threads", ba.threads);
  bench->add_option("--out-dir", ba.out_dir);

  EvalArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Score a fitted model against data/truth");
  ev->add_option("model", ea.model_path, "model JSON")->required();
  ev->add_option("data", ea.data_path, "input CSV")->required();
  ev->add_option("--truth", ea.truth_path, "truth JSON from simulate");
  ev->add_option("--bootstrap-reps", ea.bootstrap_reps);
  ev->add_option("--seed", ea.seed);
  ev->add_option("--threads", ea.threads);
  ev->add_option("--out-dir", ea.out_dir);

  try {
    app.parse(argc, argv);
    if (fit->parsed()) return cmd_fit(fa);
    if (sel->parsed()) return cmd_select(sa);
    if (sim->parsed()) return cmd_simulate(ma);
    if (bench->parsed()) return cmd_bench_modes(ba);
    if (ev->parsed()) return cmd_evaluate(ea);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
