#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpvp/baselines.hpp"
#include "gpvp/bench.hpp"
#include "gpvp/errors.hpp"
#include "gpvp/fluidsim.hpp"
#include "gpvp/gp_train.hpp"
#include "gpvp/rollout.hpp"
#include "gpvp/tensorio.hpp"

namespace fs = std::filesystem;
using namespace gpvp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

// Flags shared by the experiment subcommands. Precedence: preset, config file,
// --set pairs, then dedicated flags.
struct ExperimentFlags {
  std::string config;
  bool small = false;
  std::vector<std::string> sets;
  std::string seeds;
  std::string data;
  std::string out_dir;
  bool pgm = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "key = value config file");
    app->add_flag("--small", small, "16x16 preset with p=7, b=3 (not paper scale)");
    app->add_option("--set", sets, "override one config key (key=value); repeatable");
    app->add_option("--seeds", seeds, "comma-separated seed list");
    app->add_option("--data", data, "ground-truth .gpvs file instead of simulating");
    app->add_option("--out-dir", out_dir, "directory for CSV and provenance output");
    app->add_flag("--pgm", pgm, "also write PGM strips");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = small ? ExperimentConfig::small_preset() : ExperimentConfig{};
    if (!config.empty()) cfg = parse_config(read_text_file(config), cfg);
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seeds.empty()) cfg.set("seeds", seeds);
    if (!data.empty()) cfg.set("data", data);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (pgm) cfg.write_pgm = true;
    cfg.validate();
    return cfg;
  }
};

void print_report(const EvalReport& r) {
  std::printf("%-6s %-22s %-22s %s\n", "t", "re", "stde", "mean_var");
  for (const MetricRow& row : r.rows) {
    std::printf("%-6zu %-22s %-22s %s\n", row.t, format_real(row.re).c_str(), format_real(row.stde).c_str(),
                format_real(row.mean_var).c_str());
  }
  std::printf("mean re %s, mean stde %s, config %s\n", format_real(r.mean_re).c_str(), format_real(r.mean_stde).c_str(),
              r.config_hash.c_str());
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patch-based Gaussian-process video prediction with moment-matched rollouts"};
  app.require_subcommand(1);

  // simulate
  SimConfig sim;
  std::string sim_config, sim_out, sim_forcing = "on";
  std::optional<int> sim_restrict;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate a Navier-Stokes vorticity sequence");
  simulate_cmd->add_option("--config", sim_config, "key = value config file");
  auto* sim_seed = simulate_cmd->add_option("--seed", sim.seed, "initial-condition seed");
  auto* sim_frames = simulate_cmd->add_option("--frames", sim.n_frames, "number of recorded frames");
  auto* sim_nu = simulate_cmd->add_option("--nu", sim.viscosity, "viscosity");
  auto* sim_n = simulate_cmd->add_option("--n", sim.resolution, "grid resolution (power of two)");
  auto* sim_dt = simulate_cmd->add_option("--dt", sim.dt, "solver time step");
  auto* sim_rec = simulate_cmd->add_option("--record-every", sim.record_every, "simulated seconds per frame");
  auto* sim_force = simulate_cmd->add_option("--forcing", sim_forcing, "on or off")->check(CLI::IsMember({"on", "off"}));
  simulate_cmd->add_option("--restrict", sim_restrict, "subsample frames to this resolution");
  simulate_cmd->add_option("--out", sim_out, "output .gpvs file")->required();

  // train
  std::string train_data, train_out, train_config;
  std::optional<int> train_frames, train_patch, train_boundary, train_stride, train_iters;
  bool train_iso = false;
  auto* train_cmd = app.add_subcommand("train", "fit one GP per output pixel of the patch");
  train_cmd->add_option("--data", train_data, "training .gpvs file")->required();
  train_cmd->add_option("--frames", train_frames, "use only the first N frames");
  train_cmd->add_option("--config", train_config, "key = value config file");
  train_cmd->add_option("--patch", train_patch, "input patch side p");
  train_cmd->add_option("--boundary", train_boundary, "patch boundary b");
  train_cmd->add_option("--stride", train_stride, "training stride s");
  train_cmd->add_option("--max-iters", train_iters, "optimizer iterations per output dimension");
  train_cmd->add_flag("--isotropic", train_iso, "share one lengthscale across input dimensions");
  train_cmd->add_option("--out", train_out, "output .gpm model")->required();

  // predict
  std::string pred_model, pred_data, pred_mean, pred_var, pred_pgm;
  std::size_t pred_start = 0;
  int pred_horizon = 15;
  auto* predict_cmd = app.add_subcommand("predict", "recursive mean/variance rollout");
  predict_cmd->add_option("--model", pred_model, ".gpm model")->required();
  predict_cmd->add_option("--data", pred_data, ".gpvs file holding the start window")->required();
  predict_cmd->add_option("--start", pred_start, "index of the first of three start frames");
  predict_cmd->add_option("--horizon", pred_horizon, "frames to predict");
  predict_cmd->add_option("--out-mean", pred_mean, "mean frames .gpvs")->required();
  predict_cmd->add_option("--out-var", pred_var, "variance frames .gpvs")->required();
  predict_cmd->add_option("--pgm-dir", pred_pgm, "write mean/variance PGM strips here");

  // experiments
  ExperimentFlags eval_flags, cmp_flags, seq_flags;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "forward prediction experiment");
  eval_flags.attach(evaluate_cmd);
  auto* compare_cmd = app.add_subcommand("compare", "GP vs KNN vs persistence over seeds");
  cmp_flags.attach(compare_cmd);
  std::vector<int> seq_t0{5, 10, 15};
  auto* sequential_cmd = app.add_subcommand("sequential", "models trained on growing prefixes");
  seq_flags.attach(sequential_cmd);
  sequential_cmd->add_option("--t0-list", seq_t0, "training frame counts")->delimiter(',');

  // baseline
  std::string base_method, base_model, base_data, base_out, base_metrics;
  std::size_t base_start = 0;
  int base_horizon = 15, base_k = 20;
  auto* baseline_cmd = app.add_subcommand("baseline", "point-prediction baselines");
  baseline_cmd->add_option("--method", base_method, "knn or persistence")
      ->required()
      ->check(CLI::IsMember({"knn", "persistence"}));
  baseline_cmd->add_option("--model", base_model, ".gpm model supplying training set and kernel (knn)");
  baseline_cmd->add_option("--data", base_data, ".gpvs file holding the start window")->required();
  baseline_cmd->add_option("--start", base_start, "index of the first of three start frames");
  baseline_cmd->add_option("--horizon", base_horizon, "frames to predict");
  baseline_cmd->add_option("--k", base_k, "neighbors");
  baseline_cmd->add_option("--out", base_out, "predicted frames .gpvs")->required();
  baseline_cmd->add_option("--metrics", base_metrics, "CSV of t,re against frames in --data");

  // export
  std::string exp_data, exp_dir;
  std::optional<double> exp_lo, exp_hi;
  bool exp_strip = false;
  auto* export_cmd = app.add_subcommand("export", "write frames of a .gpvs file as PGM images");
  export_cmd->add_option("--data", exp_data, ".gpvs file")->required();
  export_cmd->add_option("--out-dir", exp_dir, "output directory")->required();
  export_cmd->add_option("--lo", exp_lo, "value mapped to black (default: sequence min)");
  export_cmd->add_option("--hi", exp_hi, "value mapped to white (default: sequence max)");
  export_cmd->add_flag("--strip", exp_strip, "one horizontal strip instead of one file per frame");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate_cmd) {
      SimConfig cfg;
      if (!sim_config.empty()) cfg = parse_config(read_text_file(sim_config)).sim;
      if (*sim_seed) cfg.seed = sim.seed;
      if (*sim_frames) cfg.n_frames = sim.n_frames;
      if (*sim_nu) cfg.viscosity = sim.viscosity;
      if (*sim_n) cfg.resolution = sim.resolution;
      if (*sim_dt) cfg.dt = sim.dt;
      if (*sim_rec) cfg.record_every = sim.record_every;
      if (*sim_force) cfg.forcing = sim_forcing == "on";
      FrameSequence seq = simulate(cfg);
      if (sim_restrict) seq = restrict_grid(seq, *sim_restrict);
      ensure_parent(sim_out);
      write_sequence(seq, sim_out);
      std::printf("wrote %zu frames of %ldx%ld to %s\n", seq.size(), static_cast<long>(seq.height()),
                  static_cast<long>(seq.width()), sim_out.c_str());
    } else if (*train_cmd) {
      ExperimentConfig cfg;
      if (!train_config.empty()) cfg = parse_config(read_text_file(train_config));
      if (train_patch) cfg.patch.patch = *train_patch;
      if (train_boundary) cfg.patch.boundary = *train_boundary;
      if (train_stride) cfg.patch.train_stride = *train_stride;
      if (train_iters) cfg.train.max_iters = *train_iters;
      if (train_iso) cfg.train.isotropic = true;
      FrameSequence seq = read_sequence(train_data);
      if (train_frames) {
        if (*train_frames < 1 || static_cast<std::size_t>(*train_frames) > seq.size()) {
          throw ArgumentError("--frames must be between 1 and " + std::to_string(seq.size()));
        }
        seq = seq.slice(0, static_cast<std::size_t>(*train_frames));
      }
      const TrainingSet ts = build_training_set(seq, cfg.patch);
      std::vector<FitTrace> traces;
      const GpModel model = train(ts, cfg.train, std::nullopt, &traces);
      ensure_parent(train_out);
      save_model(model, train_out);
      for (std::size_t a = 0; a < traces.size(); ++a) {
        std::printf("output %zu: lml %s after %d iterations%s\n", a, format_real(traces[a].lml.back()).c_str(),
                    traces[a].iterations, traces[a].converged ? " (converged)" : "");
      }
      std::printf("wrote model with n=%ld, D=%ld, O=%ld to %s\n", static_cast<long>(model.size()),
                  static_cast<long>(model.input_dim()), static_cast<long>(model.output_dim()), train_out.c_str());
    } else if (*predict_cmd) {
      const GpModel model = load_model(pred_model);
      const FrameSequence seq = read_sequence(pred_data);
      const RolloutPlan plan = RolloutPlan::from_sequence(seq, pred_start, pred_horizon, model.patch_config());
      const MeanVarSequence mv = rollout(model, plan);
      ensure_parent(pred_mean);
      ensure_parent(pred_var);
      write_sequence(FrameSequence(mv.means(), seq.dt_meta()), pred_mean);
      write_sequence(FrameSequence(mv.variances(), seq.dt_meta()), pred_var);
      if (!pred_pgm.empty()) {
        fs::create_directories(pred_pgm);
        const Image m = hstack(mv.means(), 0.0);
        const Image v = hstack(mv.variances(), 0.0);
        export_pgm(m, fs::path(pred_pgm) / "mean.pgm", m.minCoeff(), std::max(m.maxCoeff(), m.minCoeff() + 1e-12));
        export_pgm(v, fs::path(pred_pgm) / "variance.pgm", v.minCoeff(), std::max(v.maxCoeff(), v.minCoeff() + 1e-12));
      }
      std::printf("predicted frames %zu..%zu\n", mv.start_index(), mv.start_index() + mv.size() - 1);
    } else if (*evaluate_cmd) {
      print_report(run_forward_prediction(eval_flags.resolve()));
    } else if (*compare_cmd) {
      const ComparisonReport r = run_comparison(cmp_flags.resolve());
      std::printf("%-6s %-22s %-22s %s\n", "t", "gp", "knn", "persistence");
      const auto& gp = r.curve("gp");
      for (std::size_t s = 0; s < gp.t.size(); ++s) {
        std::printf("%-6zu %-22s %-22s %s\n", gp.t[s], format_real(gp.mean_re[s]).c_str(),
                    format_real(r.curve("knn").mean_re[s]).c_str(),
                    format_real(r.curve("persistence").mean_re[s]).c_str());
      }
    } else if (*sequential_cmd) {
      const SequentialReport r = run_sequential(seq_flags.resolve(), seq_t0);
      for (std::size_t i = 0; i < r.t0_values.size(); ++i) {
        std::printf("t0=%d: mean re %s (own start), %s (start at %zu)\n", r.t0_values[i],
                    format_real(r.own_start[i].mean_re).c_str(), format_real(r.fair_start[i].mean_re).c_str(),
                    r.fair_first_index);
      }
    } else if (*baseline_cmd) {
      const FrameSequence seq = read_sequence(base_data);
      FrameSequence pred;
      if (base_method == "knn") {
        if (base_model.empty()) throw ArgumentError("--method knn requires --model");
        const GpModel model = load_model(base_model);
        const RolloutPlan plan = RolloutPlan::from_sequence(seq, base_start, base_horizon, model.patch_config());
        const TrainingSet ts{model.inputs(), model.outputs(), model.patch_config()};
        pred = knn_rollout(ts, model.params(), plan, base_k);
      } else {
        pred = persistence_predict(RolloutPlan::from_sequence(seq, base_start, base_horizon, PatchConfig{}));
      }
      ensure_parent(base_out);
      write_sequence(pred, base_out);
      if (!base_metrics.empty()) {
        std::string csv = "t,re\n";
        for (std::size_t s = 0; s < pred.size(); ++s) {
          const std::size_t t = base_start + 3 + s;
          if (t >= seq.size()) break;
          csv += std::to_string(t) + "," + format_real(relative_error(seq[t], pred[s])) + "\n";
        }
        ensure_parent(base_metrics);
        write_text_file(base_metrics, csv);
      }
      std::printf("wrote %zu %s frames to %s\n", pred.size(), base_method.c_str(), base_out.c_str());
    } else if (*export_cmd) {
      const FrameSequence seq = read_sequence(exp_data);
      double lo = seq[0].minCoeff(), hi = seq[0].maxCoeff();
      for (const Image& f : seq.frames()) {
        lo = std::min(lo, f.minCoeff());
        hi = std::max(hi, f.maxCoeff());
      }
      if (exp_lo) lo = *exp_lo;
      if (exp_hi) hi = *exp_hi;
      if (!exp_lo && !exp_hi && !(hi > lo)) hi = lo + 1.0;
      fs::create_directories(exp_dir);
      if (exp_strip) {
        export_pgm(hstack(seq.frames(), lo), fs::path(exp_dir) / "strip.pgm", lo, hi);
      } else {
        for (std::size_t i = 0; i < seq.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof name, "frame_%04zu.pgm", i);
          export_pgm(seq[i], fs::path(exp_dir) / name, lo, hi);
        }
      }
      std::printf("exported %zu frames to %s\n", seq.size(), exp_dir.c_str());
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOk;
}
