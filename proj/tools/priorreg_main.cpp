// priorreg: penalized regression with structured non-zero priors.
//
// Three subcommands cover the three benchmark tasks:
//   decide    paired-comparison sweeps on a CSV of items with a criterion
//   classify  binary classification sweeps on a CSV of labeled items
//   fmri      simulated BOLD estimation with LSA / LSS / LSS-prior models
//
// Every run writes a manifest with the resolved configuration, seed, and
// input digests before any computation starts. Outputs are plain CSV/JSON.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "priorreg/csv.hpp"
#include "priorreg/dataset.hpp"
#include "priorreg/errors.hpp"
#include "priorreg/fmri.hpp"
#include "priorreg/manifest.hpp"
#include "priorreg/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace priorreg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int iterations = 0;
  bool iterations_set = false;
  std::string theta_grid_spec;
  std::string out_dir = ".";
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON configuration file");
  cmd->add_option("--seed", opt.seed, "random seed")
      ->each([&](const std::string&) { opt.seed_set = true; });
  cmd->add_option("--iterations", opt.iterations, "train/test iterations")
      ->each([&](const std::string&) { opt.iterations_set = true; });
  cmd->add_option("--theta-grid", opt.theta_grid_spec,
                  "'default' or a comma-separated ascending list starting at 0");
  cmd->add_option("--out-dir", opt.out_dir, "output directory");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("config parse error: " + std::string(e.what()));
  }
  if (!j.is_object()) throw config_error("config root must be an object");
  return j;
}

std::vector<double> parse_theta_grid(const std::string& spec) {
  if (spec.empty() || spec == "default") return default_theta_grid();
  std::vector<double> grid;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      grid.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw config_error("bad theta grid entry: '" + item + "'");
    }
  }
  if (grid.empty() || grid.front() != 0.0) {
    throw config_error("theta grid must start at 0");
  }
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) {
      throw config_error("theta grid must be strictly ascending");
    }
  }
  return grid;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << content;
}

// Shared implementation of decide/classify: both are penalty sweeps and
// differ only in preprocessing and defaults.
int run_sweep_command(const std::string& name, const CommonOptions& opt,
                      const std::string& data_path,
                      const std::string& column_flag, int train_size_flag,
                      const std::string& solver_flag) {
  json cfg_json = load_config(opt.config_path);

  std::string column = column_flag;
  if (column.empty()) {
    column = cfg_json.value(name == "decide" ? "criterion" : "label", "");
  }
  if (column.empty()) {
    throw config_error(name == "decide" ? "no criterion column configured"
                                        : "no label column configured");
  }

  SweepConfig cfg;
  cfg.train_size = name == "decide" ? 50 : 100;
  cfg.iterations = 1000;
  if (cfg_json.contains("train_size")) cfg.train_size = cfg_json["train_size"];
  if (cfg_json.contains("iterations")) cfg.iterations = cfg_json["iterations"];
  if (cfg_json.contains("seed")) cfg.seed = cfg_json["seed"];
  if (cfg_json.contains("model_set")) {
    cfg.model_set = cfg_json["model_set"].get<std::vector<std::string>>();
  }
  std::string solver =
      solver_flag.empty() ? cfg_json.value("solver", "logistic") : solver_flag;
  if (solver == "logistic") {
    cfg.solver = SolverFamily::logistic;
  } else if (solver == "linear") {
    cfg.solver = SolverFamily::linear;
  } else {
    throw config_error("solver must be 'logistic' or 'linear'");
  }
  std::string grid_spec =
      opt.theta_grid_spec.empty() ? cfg_json.value("theta_grid", "default")
                                  : opt.theta_grid_spec;
  cfg.theta_grid = parse_theta_grid(grid_spec);
  if (train_size_flag > 0) cfg.train_size = train_size_flag;
  if (opt.iterations_set) cfg.iterations = opt.iterations;
  if (opt.seed_set) cfg.seed = opt.seed;

  fs::create_directories(opt.out_dir);
  std::string sweep_path = (fs::path(opt.out_dir) / "sweep.csv").string();
  std::string summary_path = (fs::path(opt.out_dir) / "summary.json").string();

  RunManifest manifest;
  manifest.subcommand = name;
  manifest.seed = cfg.seed;
  manifest.resolved_config = {
      {"data", data_path},
      {"column", column},
      {"train_size", cfg.train_size},
      {"iterations", cfg.iterations},
      {"theta_grid", cfg.theta_grid},
      {"model_set", cfg.model_set},
      {"solver", to_string(cfg.solver)},
  };
  manifest.add_input(data_path);
  manifest.outputs = {sweep_path, summary_path};
  manifest.write((fs::path(opt.out_dir) / "manifest.json").string());

  ItemTable table = load_item_table(data_path, column);
  TernaryDataset data;
  if (name == "decide") {
    Rng encode_rng(cfg.seed, {7});
    data = make_paired_dataset(table, encode_rng);
  } else {
    data = make_classification_dataset(table);
  }
  std::cerr << name << ": " << table.values.rows() << " items ("
            << table.rows_dropped_missing << " dropped), " << data.size()
            << " rows, " << data.cue_count() << " cues\n";

  PenaltySweepResult result = run_sweep(data, cfg);

  std::ostringstream csv;
  write_sweep_csv(result, csv);
  write_text_file(sweep_path, csv.str());

  json summary = sweep_summary_json(result);
  summary["data"] = {{"path", data_path},
                     {"items", table.values.rows()},
                     {"rows_dropped_missing", table.rows_dropped_missing}};
  write_text_file(summary_path, summary.dump(2) + "\n");
  std::cerr << name << ": wrote " << sweep_path << "\n";
  return kExitOk;
}

struct FmriOptions {
  std::vector<double> isi_levels;
  std::vector<double> snr_levels;
  bool per_iteration = false;
  bool dump_scene = false;
};

int run_fmri_command(const CommonOptions& opt, const FmriOptions& fopt) {
  json cfg_json = load_config(opt.config_path);

  SimConfig base;
  auto get = [&](const char* key, auto& field) {
    if (cfg_json.contains(key)) {
      field = cfg_json[key].template get<std::decay_t<decltype(field)>>();
    }
  };
  get("d", base.d);
  get("reps_per_stim", base.reps_per_stim);
  get("n_stimuli", base.n_stimuli);
  get("runs", base.runs);
  get("tr", base.tr);
  get("ed", base.ed);
  get("isi", base.isi);
  get("sigma2_psi", base.sigma2_psi);
  get("sigma2_scanner", base.sigma2_scanner);
  get("fwhm_mm", base.fwhm_mm);
  get("fwhm_s", base.fwhm_s);
  get("t_end", base.t_end);
  get("v_offdiag", base.v_offdiag);
  get("seed", base.seed);
  if (cfg_json.contains("voxel_mm")) {
    auto v = cfg_json["voxel_mm"].get<std::vector<double>>();
    if (v.size() != 3) throw config_error("voxel_mm must have 3 entries");
    base.voxel_mm = {v[0], v[1], v[2]};
  }
  if (opt.seed_set) base.seed = opt.seed;

  int iterations = cfg_json.value("iterations", 100);
  if (opt.iterations_set) iterations = opt.iterations;
  if (iterations < 1) throw config_error("iterations must be at least 1");

  std::string grid_spec = opt.theta_grid_spec.empty()
                              ? cfg_json.value("theta_grid", "default")
                              : opt.theta_grid_spec;
  std::vector<double> theta_grid = parse_theta_grid(grid_spec);

  std::vector<double> isi_levels = fopt.isi_levels;
  if (isi_levels.empty() && cfg_json.contains("isi_levels")) {
    isi_levels = cfg_json["isi_levels"].get<std::vector<double>>();
  }
  if (isi_levels.empty()) isi_levels = {2.0, 3.0, 4.0};
  std::vector<double> snr_levels = fopt.snr_levels;
  if (snr_levels.empty() && cfg_json.contains("snr_levels")) {
    snr_levels = cfg_json["snr_levels"].get<std::vector<double>>();
  }
  if (snr_levels.empty()) snr_levels = {10.0, 15.0, 20.0};

  fs::create_directories(opt.out_dir);
  std::string report_path = (fs::path(opt.out_dir) / "fmri_report.csv").string();
  std::string per_iter_path =
      (fs::path(opt.out_dir) / "fmri_iterations.csv").string();

  RunManifest manifest;
  manifest.subcommand = "fmri";
  manifest.seed = base.seed;
  manifest.resolved_config = {
      {"d", base.d},
      {"reps_per_stim", base.reps_per_stim},
      {"n_stimuli", base.n_stimuli},
      {"runs", base.runs},
      {"tr", base.tr},
      {"ed", base.ed},
      {"isi_levels", isi_levels},
      {"snr_levels", snr_levels},
      {"sigma2_scanner", base.sigma2_scanner},
      {"fwhm_mm", base.fwhm_mm},
      {"fwhm_s", base.fwhm_s},
      {"voxel_mm", base.voxel_mm},
      {"t_end", base.t_end},
      {"v_offdiag", base.v_offdiag},
      {"iterations", iterations},
      {"theta_grid", theta_grid},
  };
  manifest.outputs = {report_path};
  if (fopt.per_iteration) manifest.outputs.push_back(per_iter_path);
  manifest.write((fs::path(opt.out_dir) / "manifest.json").string());

  std::ostringstream csv, per_iter_csv;
  csv << "isi,sigma2_psi,estimator,theta,mean_rmse,sd_rmse\n";
  per_iter_csv << "isi,sigma2_psi,estimator,theta,iteration,rmse\n";

  for (double isi : isi_levels) {
    for (double snr : snr_levels) {
      SimConfig cfg = base;
      cfg.isi = isi;
      cfg.sigma2_psi = snr;
      std::cerr << "fmri: isi=" << isi << " sigma2_psi=" << snr << " ("
                << iterations << " iterations)\n";
      EstimatorReport report = run_fmri_cell(cfg, theta_grid, iterations);
      for (const auto& row : report.rows) {
        csv << format_double(isi) << ',' << format_double(snr) << ','
            << row.estimator << ',' << format_double(row.theta) << ','
            << format_double(row.mean_rmse) << ','
            << format_double(row.sd_rmse) << '\n';
        if (fopt.per_iteration) {
          for (std::size_t i = 0; i < row.per_iteration.size(); ++i) {
            per_iter_csv << format_double(isi) << ',' << format_double(snr)
                         << ',' << row.estimator << ','
                         << format_double(row.theta) << ',' << i << ','
                         << format_double(row.per_iteration[i]) << '\n';
          }
        }
      }
      if (fopt.dump_scene) {
        Rng rng(cfg.seed, {3, 0});
        std::vector<FmriScene> scenes = simulate(cfg, rng);
        for (std::size_t r = 0; r < scenes.size(); ++r) {
          std::ostringstream prefix;
          prefix << "scene_isi" << isi << "_snr" << snr << "_run" << r;
          dump_scene(scenes[r],
                     (fs::path(opt.out_dir) / prefix.str()).string());
        }
      }
    }
  }

  write_text_file(report_path, csv.str());
  if (fopt.per_iteration) write_text_file(per_iter_path, per_iter_csv.str());
  std::cerr << "fmri: wrote " << report_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized regression with structured non-zero priors"};
  app.require_subcommand(1);

  CommonOptions decide_opt, classify_opt, fmri_opt_common;
  std::string decide_data, decide_criterion, decide_solver;
  std::string classify_data, classify_label, classify_solver;
  int decide_train = 0, classify_train = 0;
  FmriOptions fmri_opt;

  CLI::App* decide =
      app.add_subcommand("decide", "paired-comparison penalty sweep");
  decide->add_option("--data", decide_data, "items CSV")->required();
  decide->add_option("--criterion", decide_criterion,
                     "criterion column name (or set in --config)");
  decide->add_option("--train-size", decide_train, "training pairs per split");
  decide->add_option("--solver", decide_solver, "logistic (default) or linear");
  add_common_flags(decide, decide_opt);

  CLI::App* classify =
      app.add_subcommand("classify", "binary classification penalty sweep");
  classify->add_option("--data", classify_data, "items CSV")->required();
  classify->add_option("--label", classify_label,
                       "label column name (or set in --config)");
  classify->add_option("--train-size", classify_train,
                       "training items per split");
  classify->add_option("--solver", classify_solver,
                       "logistic (default) or linear");
  add_common_flags(classify, classify_opt);

  CLI::App* fmri = app.add_subcommand("fmri", "simulated BOLD estimation");
  fmri->add_option("--isi", fmri_opt.isi_levels,
                   "interstimulus intervals in seconds")
      ->delimiter(',');
  fmri->add_option("--snr", fmri_opt.snr_levels,
                   "ground-truth weight variances")
      ->delimiter(',');
  fmri->add_flag("--per-iteration", fmri_opt.per_iteration,
                 "also write per-iteration RMSE rows");
  fmri->add_flag("--dump-scene", fmri_opt.dump_scene,
                 "dump first-iteration scenes as flat binary arrays");
  add_common_flags(fmri, fmri_opt_common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (decide->parsed()) {
      return run_sweep_command("decide", decide_opt, decide_data,
                               decide_criterion, decide_train, decide_solver);
    }
    if (classify->parsed()) {
      return run_sweep_command("classify", classify_opt, classify_data,
                               classify_label, classify_train,
                               classify_solver);
    }
    if (fmri->parsed()) {
      return run_fmri_command(fmri_opt_common, fmri_opt);
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const input_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
