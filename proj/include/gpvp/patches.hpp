#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gpvp/tensorio.hpp"

namespace gpvp {

// Patch geometry shared by training-set construction and test-input assembly.
struct PatchConfig {
  int patch = 15;        // p: input patch side
  int boundary = 7;      // b: crop on each side of the output patch
  int train_stride = 2;  // s
  int test_stride = 1;

  void validate() const;
  int output_side() const { return patch - 2 * boundary; }
  Eigen::Index patch_area() const { return static_cast<Eigen::Index>(patch) * patch; }
  Eigen::Index input_dim() const { return 3 * patch_area(); }
  Eigen::Index output_dim() const { return static_cast<Eigen::Index>(output_side()) * output_side(); }
};

// Recovers (p, b) from model dimensions D = 3p^2 and O = (p - 2b)^2.
std::optional<PatchConfig> infer_patch_config(Eigen::Index input_dim, Eigen::Index output_dim);

struct TrainingSet {
  Eigen::MatrixXd inputs;   // n x 3p^2
  Eigen::MatrixXd outputs;  // n x (p - 2b)^2
  PatchConfig config;

  Eigen::Index size() const { return inputs.rows(); }
};

// i mod extent, mapped into [0, extent).
inline Eigen::Index wrap_index(Eigen::Index i, Eigen::Index extent) {
  const Eigen::Index r = i % extent;
  return r < 0 ? r + extent : r;
}

// Row-major p x p patch with its origin at (row, col), wrapping toroidally.
Eigen::VectorXd extract_patch(const Image& frame, Eigen::Index row, Eigen::Index col, int p);

// Writes the patch into out[0 .. p^2) without allocating.
void extract_patch_into(const Image& frame, Eigen::Index row, Eigen::Index col, int p, double* out);

// Training anchors enumerate the stride grid from (0,0), rows first.
TrainingSet build_training_set(const FrameSequence& seq, const PatchConfig& cfg);

// One slot of the three-frame input window: an observed frame, or a predicted
// (mean, variance) pair.
struct WindowFrame {
  Image mean;
  std::optional<Image> variance;

  static WindowFrame observed(Image frame) { return {std::move(frame), std::nullopt}; }
  static WindowFrame predicted(Image mean, Image variance) { return {std::move(mean), std::move(variance)}; }
  bool known() const { return !variance.has_value(); }
};

// Gaussian test input with a diagonal covariance and per-dimension provenance.
struct TestInput {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  std::vector<bool> known_mask;
  Eigen::Index row = 0;  // patch origin in the target image
  Eigen::Index col = 0;

  Eigen::Index dim() const { return mean.size(); }
  Eigen::Index known_count() const;
};

// One input per output tile: anchors are (r*ts - b, c*ts - b) for the test
// stride ts, so predictions land on pixels anchor + b .. anchor + p - b - 1.
std::vector<TestInput> build_test_inputs(std::span<const WindowFrame> window, const PatchConfig& cfg);

}  // namespace gpvp
