#pragma once

#include <Eigen/Dense>

#include "gpvp/gp_train.hpp"

namespace gpvp {

// Lower bound applied to every predicted variance so that sqrt(var) stays finite.
inline constexpr double kVarianceFloor = 1e-12;

struct Prediction {
  Eigen::VectorXd mean;  // one entry per output dimension
  Eigen::VectorXd var;
};

// Standard GP posterior at a fully observed input.
Prediction predict_deterministic(const GpModel& model, const Eigen::VectorXd& x);

struct BatchPrediction {
  Eigen::MatrixXd mean;  // m x O
  Eigen::MatrixXd var;
};

BatchPrediction predict_deterministic_batch(const GpModel& model, const Eigen::MatrixXd& x);

}  // namespace gpvp
