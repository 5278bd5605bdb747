#include "gpvp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gpvp/errors.hpp"

namespace gpvp {

namespace {

void check(const TrainingSet& ts, const KernelParams& params, Eigen::Index dim, int k) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (k > ts.size()) {
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the training set size " + std::to_string(ts.size()));
  }
  if (params.dim() != ts.inputs.cols()) throw ArgumentError("kernel dimension does not match the training inputs");
  if (dim != ts.inputs.cols()) throw ArgumentError("query dimension does not match the training inputs");
}

}  // namespace

Eigen::MatrixXd knn_predict_batch(const TrainingSet& ts, const KernelParams& params, const Eigen::MatrixXd& x_star,
                                  int k) {
  check(ts, params, x_star.cols(), k);
  if (!x_star.allFinite()) throw ArgumentError("query must be finite");
  const Eigen::Index n = ts.size();
  const Eigen::VectorXd inv_lambda = (-2.0 * params.log_lengthscales.array()).exp().matrix();
  Eigen::MatrixXd out(x_star.rows(), ts.outputs.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < x_star.rows(); ++j) {
    const Eigen::VectorXd dist = (ts.inputs.rowwise() - x_star.row(j)).array().square().matrix() * inv_lambda;
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return dist(a) < dist(b) || (dist(a) == dist(b) && a < b);
    });
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(ts.outputs.cols());
    double total = 0.0;
    for (int r = 0; r < k; ++r) {
      const Eigen::Index i = order[static_cast<std::size_t>(r)];
      const double w = std::exp(2.0 * params.log_alpha - 0.5 * dist(i));
      acc += w * ts.outputs.row(i);
      total += w;
    }
    if (total > 0.0 && std::isfinite(total)) {
      out.row(j) = acc / total;
    } else {
      acc.setZero();
      for (int r = 0; r < k; ++r) acc += ts.outputs.row(order[static_cast<std::size_t>(r)]);
      out.row(j) = acc / static_cast<double>(k);
    }
  }
  return out;
}

Eigen::VectorXd knn_predict(const TrainingSet& ts, const KernelParams& params, const Eigen::VectorXd& x_star, int k) {
  return knn_predict_batch(ts, params, x_star.transpose(), k).row(0).transpose();
}

FrameSequence knn_rollout(const TrainingSet& ts, const std::vector<KernelParams>& params, const RolloutPlan& plan,
                          int k) {
  const PatchConfig cfg = rollout_geometry(plan);
  if (cfg.patch != ts.config.patch || cfg.boundary != ts.config.boundary || cfg.input_dim() != ts.inputs.cols() ||
      cfg.output_dim() != ts.outputs.cols()) {
    throw ArgumentError("rollout patch geometry does not match the training set");
  }
  if (static_cast<Eigen::Index>(params.size()) != ts.outputs.cols()) {
    throw ArgumentError("need one kernel parameter set per output dimension");
  }
  const Eigen::Index h = plan.start_frames[0].rows();
  const Eigen::Index w = plan.start_frames[0].cols();
  const int side = cfg.output_side();

  std::vector<WindowFrame> window;
  for (const Image& f : plan.start_frames) window.push_back(WindowFrame::observed(f));
  std::vector<Image> predicted;
  for (int t = 0; t < plan.horizon; ++t) {
    const std::vector<TestInput> inputs = build_test_inputs(window, cfg);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(inputs.size()), cfg.input_dim());
    for (std::size_t j = 0; j < inputs.size(); ++j) x.row(static_cast<Eigen::Index>(j)) = inputs[j].mean.transpose();
    Eigen::MatrixXd y(x.rows(), ts.outputs.cols());
    for (Eigen::Index a = 0; a < ts.outputs.cols(); ++a) {
      y.col(a) = knn_predict_batch(ts, params[static_cast<std::size_t>(a)], x, k).col(a);
    }
    Image frame(h, w);
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      for (int r = 0; r < side; ++r) {
        const Eigen::Index rr = wrap_index(inputs[j].row + cfg.boundary + r, h);
        for (int c = 0; c < side; ++c) {
          frame(rr, wrap_index(inputs[j].col + cfg.boundary + c, w)) =
              y(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r) * side + c);
        }
      }
    }
    window.erase(window.begin());
    window.push_back(WindowFrame::observed(frame));
    predicted.push_back(std::move(frame));
  }
  return FrameSequence(std::move(predicted));
}

FrameSequence persistence_predict(const RolloutPlan& plan) {
  if (plan.horizon < 1) throw ArgumentError("rollout horizon must be >= 1");
  return FrameSequence(std::vector<Image>(static_cast<std::size_t>(plan.horizon), plan.start_frames[2]));
}

}  // namespace gpvp
