#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpvp/kernel.hpp"
#include "gpvp/patches.hpp"
#include "gpvp/tensorio.hpp"

namespace gpvp {

struct LmlResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  // d value / d packed log-params
};

// Log marginal likelihood of y under a zero-mean GP with RBF-ARD kernel,
// and its gradient with respect to [log_alpha, log_lengthscales..., log_noise].
LmlResult log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelParams& params,
                                  const JitterPolicy& jitter = {});

struct TrainOptions {
  int max_iters = 300;
  double rel_tol = 1e-6;
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_backtracks = 8;
  bool isotropic = false;  // one lengthscale shared by every input dimension
  JitterPolicy jitter;
};

struct FitTrace {
  std::vector<double> lml;  // accepted objective values, starting at the initial point
  int iterations = 0;
  bool converged = false;
};

// Data-scaled starting point: alpha = std(y), lambda_d = var(x_d), sigma_n = 0.1 std(y).
KernelParams initial_params(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Deterministic ascent on the log marginal likelihood for one output dimension.
KernelParams fit_output_dim(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelParams& start,
                            const TrainOptions& options, FitTrace* trace = nullptr);

// Per-output-dimension posterior caches.
struct OutputGp {
  KernelParams params;
  PsdFactor factor;                //  K + sigma_n^2 I (+ recorded jitter)
  Eigen::VectorXd beta;            // (K + sigma_n^2 I)^-1 y
  Eigen::MatrixXd moment_weights;  // beta beta^T - (K + sigma_n^2 I)^-1
};

class GpModel {
 public:
  GpModel(Eigen::MatrixXd inputs, Eigen::MatrixXd outputs, std::vector<KernelParams> params,
          const JitterPolicy& jitter = {});

  Eigen::Index size() const { return inputs_.rows(); }
  Eigen::Index input_dim() const { return inputs_.cols(); }
  Eigen::Index output_dim() const { return outputs_.cols(); }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& outputs() const { return outputs_; }
  const OutputGp& dim(Eigen::Index a) const { return dims_[static_cast<std::size_t>(a)]; }
  std::vector<KernelParams> params() const;

  // Patch geometry the model was trained with (inferred from D and O after load).
  const PatchConfig& patch_config() const { return patch_config_; }
  void set_patch_config(const PatchConfig& cfg);

  // Frames the training set was built from, when known; required to incorporate new frames.
  const std::shared_ptr<const FrameSequence>& source() const { return source_; }
  void set_source(std::shared_ptr<const FrameSequence> source) { source_ = std::move(source); }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd outputs_;
  std::vector<OutputGp> dims_;
  PatchConfig patch_config_;
  std::shared_ptr<const FrameSequence> source_;
};

// Fits every output dimension independently. `start` warm-starts the optimizer.
GpModel train(const TrainingSet& ts, const TrainOptions& options,
              const std::optional<std::vector<KernelParams>>& start = std::nullopt,
              std::vector<FitTrace>* traces = nullptr);

// ".gpm": "GPM1", u32 D, u32 O, u32 n, per-dim (f64 log_alpha, D x f64, f64 log_noise),
// then X (n x D) and Y (n x O), f64 little-endian, row-major. Caches are rebuilt on load.
std::string encode_model(const GpModel& model);
GpModel decode_model(const std::string& bytes, const JitterPolicy& jitter = {});
void save_model(const GpModel& model, const std::filesystem::path& path);
GpModel load_model(const std::filesystem::path& path, const JitterPolicy& jitter = {});

}  // namespace gpvp
