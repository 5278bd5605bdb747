#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpvp/fluidsim.hpp"
#include "gpvp/gp_train.hpp"
#include "gpvp/patches.hpp"
#include "gpvp/rollout.hpp"
#include "gpvp/tensorio.hpp"

namespace gpvp {

// ||z - z_hat||_2 / ||z||_2 over all pixels.
double relative_error(const Image& z, const Image& z_hat);

// Mean over pixels of |z - m| / sqrt(v).
double mean_std_off(const Image& z, const Image& m, const Image& v);

struct ExperimentConfig {
  SimConfig sim;
  int frame_resolution = 32;  // simulated fields are subsampled to this side
  PatchConfig patch;
  TrainOptions train;
  int t0 = 10;  // training frames
  int horizon = 15;
  int knn_k = 20;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  bool center = false;  // subtract the training-frame mean before fitting
  std::optional<std::filesystem::path> data;  // ground truth file instead of simulating
  std::filesystem::path out_dir;              // empty: write nothing
  bool write_pgm = false;

  // 16 x 16 frames (simulated at 32 and subsampled), p = 7, b = 3, s = 2.
  // Not paper scale.
  static ExperimentConfig small_preset();

  void validate() const;
  // Assigns one documented key; unknown keys and bad values are validation errors.
  void set(const std::string& key, const std::string& value);
  // Sorted "key = value" lines of every field that affects results.
  std::string canonical() const;
  std::string hash() const;  // FNV-1a 64 over canonical(), 16 hex digits
  static std::vector<std::string> keys();
};

// Flat "key = value" text; '#' starts a comment. Applied on top of base.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});

struct EvalReport {
  std::string method;
  std::vector<MetricRow> rows;  // one per predicted frame, t = ground-truth index
  double mean_re = 0.0;
  double mean_stde = 0.0;
  double mean_var = 0.0;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;

  void summarize();
};

// Ground truth for one seed: simulated (and subsampled) or read from cfg.data.
FrameSequence ground_truth(const ExperimentConfig& cfg, std::uint64_t seed, int n_frames);

struct ForwardRun {
  EvalReport report;
  MeanVarSequence prediction;  // in the original (uncentered) units
  std::vector<Image> targets;
  std::optional<GpModel> model;
  TrainingSet training;  // centered when cfg.center is set
  RolloutPlan plan;      // centered start window
  double offset = 0.0;   // value subtracted before fitting
};

// Train on frames [0, t0), roll out horizon steps from the last three, and score.
ForwardRun forward_run(const ExperimentConfig& cfg, const FrameSequence& truth);

// Uses the first seed; writes forward.csv, provenance.txt and optional PGM strips.
EvalReport run_forward_prediction(const ExperimentConfig& cfg);

struct MethodCurve {
  std::string method;
  std::vector<std::size_t> t;
  std::vector<double> mean_re;               // averaged over seeds
  std::vector<std::vector<double>> per_seed;  // [seed][step]
};

struct ComparisonReport {
  std::vector<MethodCurve> curves;  // gp, knn, persistence
  std::string config_hash;
  std::vector<std::uint64_t> seeds;

  const MethodCurve& curve(const std::string& method) const;
};

// Writes comparison.csv (method,t,re) and comparison_seeds.csv (seed,method,t,re).
ComparisonReport run_comparison(const ExperimentConfig& cfg);
std::string format_comparison_csv(const ComparisonReport& report);
std::string format_comparison_seeds_csv(const ComparisonReport& report);

struct SequentialReport {
  std::vector<EvalReport> own_start;   // model t0 rolled out from its last training frames
  std::vector<EvalReport> fair_start;  // every model rolled out from the largest t0's window
  std::vector<int> t0_values;
  std::size_t fair_first_index = 0;
};

// Models trained on the first t0 in t0_values frames of the first seed; one CSV per model and start.
SequentialReport run_sequential(const ExperimentConfig& cfg, const std::vector<int>& t0_values = {5, 10, 15});

// Writes ground truth, mean, |error| and variance strips as forward_*.pgm.
void write_forward_pgm(const std::filesystem::path& dir, const ForwardRun& run);

void write_provenance(const std::filesystem::path& dir, const ExperimentConfig& cfg);

}  // namespace gpvp
