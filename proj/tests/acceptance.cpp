// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Defaults to the small experiment preset; --full uses the 32 x 32, p = 15 setup.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gpvp/baselines.hpp"
#include "gpvp/bench.hpp"
#include "gpvp/errors.hpp"
#include "gpvp/fluidsim.hpp"
#include "gpvp/gp_predict.hpp"
#include "gpvp/gp_train.hpp"
#include "gpvp/mm_predict.hpp"
#include "gpvp/rollout.hpp"
#include "support.hpp"

using namespace gpvp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double clock_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome degeneracy() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 4 + trial % 17;
    const int d = 1 + trial % 6;
    const auto prob = testing::random_problem(rng, n, d);
    const GpModel model = testing::make_model(prob);
    TestInput in = testing::random_input(rng, d, 0.0, 0.0);
    const PredictedPixel mm = mm_predict_random(model, in)[0];
    const auto ref = testing::naive_posterior(prob.x, prob.y.col(0), prob.params[0], in.mean);
    const Prediction det = predict_deterministic(model, in.mean);
    worst = std::max({worst, testing::rel_diff(mm.mean, ref.mean), testing::rel_diff(mm.var, ref.var),
                      testing::rel_diff(mm.mean, det.mean(0)), testing::rel_diff(mm.var, det.var(0))});
  }
  return {worst <= 1e-8, "120 models, max rel diff " + fmt("%.3g", worst)};
}

Outcome monte_carlo() {
  std::mt19937_64 rng(202);
  double worst_z = 0.0, worst_var = 0.0;
  int hybrid = 0;
  for (int trial = 0; trial < 32; ++trial) {
    const int n = 6 + trial % 10;
    const int d = 1 + trial % 5;
    const auto prob = testing::random_problem(rng, n, d);
    const GpModel model = testing::make_model(prob);
    const TestInput in = testing::random_input(rng, d, 0.3, trial % 2 ? 0.4 : 0.0);
    if (in.known_count() > 0 && in.known_count() < d) ++hybrid;
    const PredictedPixel mm = mm_predict_hybrid(model, in)[0];
    const McEstimate mc = mc_oracle(model, in, 200000, 5000 + static_cast<std::uint64_t>(trial));
    const double se = std::max(mc.mean_se(0), 1e-300);
    worst_z = std::max(worst_z, std::abs(mm.mean - mc.mean(0)) / se);
    worst_var = std::max(worst_var, std::abs(mm.var - mc.var(0)) / mc.var(0));
  }
  return {worst_z <= 4.0 && worst_var <= 0.02, "32 models (" + std::to_string(hybrid) + " hybrid), max |mean| " +
                                                   fmt("%.2f", worst_z) + " SE, max var rel " + fmt("%.4f", worst_var)};
}

Outcome hybrid_consistency() {
  std::mt19937_64 rng(303);
  double known = 0.0, random = 0.0, swap = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 2 + trial % 5;
    const auto prob = testing::random_problem(rng, 5 + trial % 12, d);
    const GpModel model = testing::make_model(prob);

    TestInput all_known = testing::random_input(rng, d, 0.0, 1.0);
    const Prediction det = predict_deterministic(model, all_known.mean);
    const PredictedPixel h = mm_predict_hybrid(model, all_known)[0];
    known = std::max({known, testing::rel_diff(h.mean, det.mean(0)), testing::rel_diff(h.var, det.var(0))});

    const TestInput all_random = testing::random_input(rng, d, 0.4, 0.0);
    const PredictedPixel a = mm_predict_hybrid(model, all_random)[0];
    const PredictedPixel b = mm_predict_random(model, all_random)[0];
    random = std::max({random, testing::rel_diff(a.mean, b.mean), testing::rel_diff(a.var, b.var)});

    TestInput mixed = testing::random_input(rng, d, 0.4, 0.5);
    const auto j = static_cast<std::size_t>(trial % d);
    mixed.var(static_cast<Eigen::Index>(j)) = 0.0;
    mixed.known_mask[j] = true;
    const PredictedPixel before = mm_predict_hybrid(model, mixed)[0];
    const PredictedPixel closed_known = moment_match(model, 0, mixed, DimSplit::from_mask(mixed.known_mask));
    mixed.known_mask[j] = false;
    const PredictedPixel after = mm_predict_hybrid(model, mixed)[0];
    const PredictedPixel closed_random = moment_match(model, 0, mixed, DimSplit::from_mask(mixed.known_mask));
    swap = std::max({swap, testing::rel_diff(before.mean, after.mean), testing::rel_diff(before.var, after.var),
                     testing::rel_diff(closed_known.mean, closed_random.mean),
                     testing::rel_diff(closed_known.var, closed_random.var)});
  }
  return {known <= 1e-10 && random <= 1e-12 && swap <= 1e-10, "all-known " + fmt("%.3g", known) + ", all-random " +
                                                                   fmt("%.3g", random) + ", reclassify " +
                                                                   fmt("%.3g", swap)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto prob = testing::random_problem(rng, 4 + trial % 12, 1 + trial % 5);
    const Eigen::VectorXd y = prob.y.col(0);
    const LmlResult r = log_marginal_likelihood(prob.x, y, prob.params[0]);
    const Eigen::VectorXd theta = prob.params[0].pack();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd up = theta, dn = theta;
      up(i) += 1e-5;
      dn(i) -= 1e-5;
      const double fd = (log_marginal_likelihood(prob.x, y, KernelParams::unpack(up)).value -
                         log_marginal_likelihood(prob.x, y, KernelParams::unpack(dn)).value) /
                        2e-5;
      worst = std::max(worst, std::abs(fd - r.gradient(i)) / std::max(std::abs(fd), 1e-3));
    }
  }
  return {worst <= 1e-4, "60 problems, max rel err " + fmt("%.3g", worst)};
}

Outcome fluid_solver() {
  SimConfig cfg;
  cfg.forcing = false;
  cfg.n_frames = 25;
  const Image w0 = initial_vorticity(cfg.resolution, cfg.seed, cfg.grf_tau, cfg.grf_exponent);
  const FrameSequence free = simulate(cfg);
  double drift = 0.0;
  bool monotone = true;
  double prev = enstrophy(w0);
  for (const Image& f : free.frames()) {
    drift = std::max(drift, std::abs(mean_value(f) - mean_value(w0)));
    monotone = monotone && enstrophy(f) <= prev;
    prev = enstrophy(f);
  }

  SimConfig coarse;
  coarse.n_frames = 10;
  SimConfig fine = coarse;
  fine.resolution = 64;
  const FrameSequence c = simulate(coarse);
  const FrameSequence f = restrict_grid(simulate(fine), 32);
  const double re = relative_error(f[9], c[9]);
  return {drift <= 1e-10 && monotone && re <= 0.05, "mean drift " + fmt("%.2g", drift) + ", enstrophy " +
                                                        (monotone ? "monotone" : "NOT monotone") +
                                                        ", 32 vs 64 RE at frame 10 " + fmt("%.3g", re)};
}

Outcome forward_prediction(const ExperimentConfig& cfg) {
  const FrameSequence truth = ground_truth(cfg, cfg.seeds.front(), cfg.t0 + cfg.horizon);
  const ForwardRun run = forward_run(cfg, truth);
  const FrameSequence persistence =
      persistence_predict(RolloutPlan::from_sequence(truth, static_cast<std::size_t>(cfg.t0 - 3), cfg.horizon, cfg.patch));
  const double pers_re = relative_error(run.targets.front(), persistence[0]);

  bool finite = true;
  int non_decreasing = 0;
  double prev_var = 0.0;
  for (const MetricRow& r : run.report.rows) {
    finite = finite && std::isfinite(r.re) && std::isfinite(r.stde);
    if (r.mean_var >= prev_var) ++non_decreasing;
    prev_var = r.mean_var;
  }
  const double re0 = run.report.rows.front().re;
  const bool pass = finite && re0 < pers_re && non_decreasing >= 12;
  return {pass, "RE(t0) " + fmt("%.4g", re0) + " vs persistence " + fmt("%.4g", pers_re) + ", variance non-decreasing " +
                    std::to_string(non_decreasing) + "/" + std::to_string(run.report.rows.size()) + ", StdE " +
                    (finite ? "finite" : "NOT finite")};
}

Outcome comparison(const ExperimentConfig& cfg) {
  const ComparisonReport rep = run_comparison(cfg);
  const MethodCurve& gp = rep.curve("gp");
  const MethodCurve& knn = rep.curve("knn");
  int wins = 0;
  for (std::size_t s = 0; s < gp.mean_re.size(); ++s) wins += gp.mean_re[s] < knn.mean_re[s] ? 1 : 0;
  const auto steps = static_cast<int>(gp.mean_re.size());
  return {2 * wins > steps && cfg.seeds.size() >= 5,
          std::to_string(cfg.seeds.size()) + " seeds, GP below KNN-" + std::to_string(cfg.knn_k) + " at " +
              std::to_string(wins) + "/" + std::to_string(steps) + " steps"};
}

int run(const std::string& command) {
  const int status = std::system((command + " > /dev/null 2>&1").c_str());
  return status == -1 ? -1 : WEXITSTATUS(status);
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  return fs::exists(a) && fs::exists(b) && read_text_file(a) == read_text_file(b);
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "gpvp_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = GPVP_CLI_PATH;
  std::vector<std::string> failures;

  const std::string data = (root / "truth.gpvs").string();
  const std::string sim = cli + " simulate --seed 3 --frames 9 --record-every 0.5 --restrict 16 --out ";
  if (run(sim + data) != 0 || run(sim + (root / "truth2.gpvs").string()) != 0) failures.push_back("simulate failed");
  if (!same_bytes(data, root / "truth2.gpvs")) failures.push_back("simulate output differs");

  const std::string exp = " --small --data " + data + " --set t0=5 --set horizon=4 --set max_iters=30 --seeds 0,1";
  for (const char* sub : {"evaluate", "compare", "sequential"}) {
    const fs::path a = root / (std::string(sub) + "_a"), b = root / (std::string(sub) + "_b");
    const std::string extra = std::string(sub) == "sequential" ? " --t0-list 4,5" : "";
    if (run(cli + " " + sub + exp + extra + " --out-dir " + a.string()) != 0 ||
        run(cli + " " + sub + exp + extra + " --out-dir " + b.string()) != 0) {
      failures.push_back(std::string(sub) + " failed");
      continue;
    }
    int csvs = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      ++csvs;
      if (!same_bytes(entry.path(), b / entry.path().filename())) failures.push_back(entry.path().filename().string());
    }
    if (csvs == 0) failures.push_back(std::string(sub) + " wrote no CSV");
  }

  const FrameSequence truth = read_sequence(data);
  const PatchConfig patch{7, 3, 2, 1};
  TrainOptions opts;
  opts.max_iters = 30;
  const GpModel model = train(build_training_set(truth.slice(0, 5), patch), opts);
  save_model(model, root / "model.gpm");
  const GpModel loaded = load_model(root / "model.gpm");
  const RolloutPlan plan = RolloutPlan::from_sequence(truth, 2, 4, patch);
  const MeanVarSequence p = rollout(model, plan), q = rollout(loaded, plan);
  double worst = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    const Eigen::ArrayXXd dm = (p.means()[s] - q.means()[s]).array().abs();
    const Eigen::ArrayXXd dv = (p.variances()[s] - q.variances()[s]).array().abs();
    worst = std::max({worst, (dm / p.means()[s].array().abs().max(1e-300)).maxCoeff(),
                      (dv / p.variances()[s].array().abs().max(1e-300)).maxCoeff()});
  }
  if (worst > 1e-12) failures.push_back("save/load rel diff " + fmt("%.3g", worst));

  std::string detail = "simulate/evaluate/compare/sequential CSVs byte-identical, save/load rel diff " + fmt("%.3g", worst);
  if (!failures.empty()) {
    detail = "failures:";
    for (const auto& f : failures) detail += " " + f + ";";
  }
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--full") {
      full = true;
    } else if (arg == "--only" && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--full] [--only N]...\n", argv[0]);
      return 2;
    }
  }
  const ExperimentConfig exp = full ? ExperimentConfig{} : ExperimentConfig::small_preset();
  const double forward_budget = full ? 45.0 * 60.0 : 5.0 * 60.0;

  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> body;
    std::function<double()> budget;
  };
  const std::vector<Criterion> criteria = {
      {1, "moment-matching degeneracy", degeneracy, [] { return 10.0; }},
      {2, "Monte-Carlo oracle equivalence", monte_carlo, [] { return 300.0; }},
      {3, "hybrid consistency", hybrid_consistency, [] { return 1e9; }},
      {4, "LML gradient check", gradient_check, [] { return 30.0; }},
      {5, "fluid solver conservation", fluid_solver, [] { return 120.0; }},
      {6, std::string("forward prediction (") + (full ? "full" : "small preset") + ")",
       [&] { return forward_prediction(exp); }, [&] { return forward_budget; }},
      {7, "comparison ordering", [&] { return comparison(exp); },
       [&] { return 5.0 * forward_budget; }},
      {8, "determinism and persistence", determinism, [] { return 1e9; }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const double start = clock_seconds();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = clock_seconds() - start;
    const double budget = c.budget();
    const bool in_time = elapsed <= budget;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %d %s: %s  %s; %.1f s%s\n", c.id, c.name.c_str(), pass ? "PASS" : "FAIL", out.detail.c_str(),
                elapsed, in_time ? "" : " (over budget)");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
