#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gpvp/kernel.hpp"
#include "gpvp/patches.hpp"
#include "gpvp/rollout.hpp"
#include "gpvp/tensorio.hpp"

namespace gpvp {

// Kernel-weighted mean of the outputs of the k training inputs most similar to
// x_star under the RBF kernel; ties go to the lower training index.
Eigen::VectorXd knn_predict(const TrainingSet& ts, const KernelParams& params, const Eigen::VectorXd& x_star, int k);

// One row per row of x_star (m x O).
Eigen::MatrixXd knn_predict_batch(const TrainingSet& ts, const KernelParams& params, const Eigen::MatrixXd& x_star,
                                  int k);

// Sliding-window point rollout; output dimension a ranks neighbors with params[a].
FrameSequence knn_rollout(const TrainingSet& ts, const std::vector<KernelParams>& params, const RolloutPlan& plan,
                          int k);

// Repeats the last start frame for the whole horizon.
FrameSequence persistence_predict(const RolloutPlan& plan);

}  // namespace gpvp
