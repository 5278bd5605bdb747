#include "gpvp/gp_predict.hpp"

#include <algorithm>
#include <cmath>

#include "gpvp/errors.hpp"

namespace gpvp {

Prediction predict_deterministic(const GpModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.input_dim()) throw ArgumentError("test input dimension does not match the model");
  if (!x.allFinite()) throw ArgumentError("test input must be finite");
  Prediction out{Eigen::VectorXd(model.output_dim()), Eigen::VectorXd(model.output_dim())};
  Eigen::VectorXd kstar;
  for (Eigen::Index a = 0; a < model.output_dim(); ++a) {
    const OutputGp& gp = model.dim(a);
    const Eigen::VectorXd inv_lambda = (-2.0 * gp.params.log_lengthscales.array()).exp().matrix();
    const Eigen::VectorXd q = (model.inputs().rowwise() - x.transpose()).array().square().matrix() * inv_lambda;
    kstar = (2.0 * gp.params.log_alpha - 0.5 * q.array()).exp().matrix();
    out.mean(a) = kstar.dot(gp.beta);
    const Eigen::VectorXd v = gp.factor.lower.triangularView<Eigen::Lower>().solve(kstar);
    out.var(a) = std::max(gp.params.alpha_sq() - v.squaredNorm(), kVarianceFloor);
  }
  return out;
}

BatchPrediction predict_deterministic_batch(const GpModel& model, const Eigen::MatrixXd& x) {
  BatchPrediction out{Eigen::MatrixXd(x.rows(), model.output_dim()), Eigen::MatrixXd(x.rows(), model.output_dim())};
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    const Prediction p = predict_deterministic(model, x.row(j).transpose());
    out.mean.row(j) = p.mean.transpose();
    out.var.row(j) = p.var.transpose();
  }
  return out;
}

}  // namespace gpvp
