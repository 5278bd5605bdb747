#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gpvp/gp_train.hpp"
#include "gpvp/patches.hpp"
#include "gpvp/tensorio.hpp"

namespace gpvp {

struct RolloutPlan {
  std::array<Image, 3> start_frames;  // z_i, z_{i+1}, z_{i+2}
  int horizon = 1;
  PatchConfig cfg;
  std::size_t first_index = 0;  // i; the first prediction is frame i + 3

  // Plan starting from frames [first, first + 3) of seq.
  static RolloutPlan from_sequence(const FrameSequence& seq, std::size_t first, int horizon, const PatchConfig& cfg);
};

// Checks horizon, frame shapes and that the output tiles cover the frame exactly;
// returns cfg with the test stride set to the output side.
PatchConfig rollout_geometry(const RolloutPlan& plan);

// Incremental rollout: each step() appends one (mean, variance) frame and slides
// the window, so stepping T then S times equals a single T + S rollout.
class Rollout {
 public:
  Rollout(const GpModel& model, const RolloutPlan& plan);

  void step();
  void run(int steps);

  const MeanVarSequence& output() const { return output_; }
  // Known input dimensions per test input at each completed step.
  const std::vector<Eigen::Index>& known_counts() const { return known_counts_; }

 private:
  const GpModel& model_;
  PatchConfig cfg_;
  std::vector<WindowFrame> window_;
  MeanVarSequence output_;
  std::vector<Eigen::Index> known_counts_;
};

MeanVarSequence rollout(const GpModel& model, const RolloutPlan& plan);

// New model trained on the source sequence extended by new_frames, which must
// start at index first_index == source size. Warm-started from model's parameters.
GpModel incorporate_frames(const GpModel& model, const FrameSequence& new_frames, std::size_t first_index,
                           const TrainOptions& options = {});

}  // namespace gpvp
