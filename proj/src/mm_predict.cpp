#include "gpvp/mm_predict.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gpvp/errors.hpp"
#include "gpvp/gp_predict.hpp"

namespace gpvp {

namespace {

void check_input(const GpModel& model, const TestInput& input) {
  if (input.dim() != model.input_dim() || input.var.size() != model.input_dim() ||
      static_cast<Eigen::Index>(input.known_mask.size()) != model.input_dim()) {
    throw ArgumentError("test input dimension does not match the model");
  }
  if (!input.mean.allFinite() || !input.var.allFinite()) throw ArgumentError("test input must be finite");
  if ((input.var.array() < 0.0).any()) throw ArgumentError("test input variance must be non-negative");
}

// Reused across calls; the n x n scratch is the dominant allocation.
struct Workspace {
  Eigen::MatrixXd cross;  // B[i,k] = sum_d w_d v_id v_kd  (lower triangle)
  Eigen::MatrixXd scaled;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

}  // namespace

PredictedPixel moment_match(const GpModel& model, Eigen::Index output, const TestInput& input,
                            const DimSplit& split) {
  const OutputGp& gp = model.dim(output);
  const Eigen::MatrixXd& x = model.inputs();
  const Eigen::Index n = model.size();

  if (split.random.empty()) {
    const Prediction p = predict_deterministic(model, input.mean);
    return {p.mean(output), p.var(output)};
  }

  const Eigen::VectorXd lambda = gp.params.sq_lengthscales();
  const double log_alpha_sq = 2.0 * gp.params.log_alpha;

  // Known factor k_K(x_i, mu_K) with alpha_K = 1.
  Eigen::ArrayXd log_known = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index d : split.known) {
    if (input.var(d) != 0.0) throw ArgumentError("known input dimension has non-zero variance");
    log_known -= 0.5 * (input.mean(d) - x.col(d).array()).square() / lambda(d);
  }

  // Random factor. det terms and inverses are products / ratios over the diagonal.
  Eigen::ArrayXd log_mean_r = Eigen::ArrayXd::Zero(n);  // -1/2 v^T (S + L)^-1 v
  Eigen::ArrayXd log_k_r = Eigen::ArrayXd::Zero(n);     // -1/2 v^T L^-1 v
  Eigen::ArrayXd quad_w = Eigen::ArrayXd::Zero(n);      // sum_d w_d v_d^2
  double log_det_mean = 0.0;                            // log |S L^-1 + I|
  double log_det_r = 0.0;                               // log |2 S L^-1 + I|

  std::vector<Eigen::Index> active;
  std::vector<double> active_w;
  for (Eigen::Index d : split.random) {
    const double s = input.var(d);
    const double l = lambda(d);
    const Eigen::ArrayXd v = input.mean(d) - x.col(d).array();
    const Eigen::ArrayXd v2 = v.square();
    log_mean_r -= 0.5 * v2 / (s + l);
    log_k_r -= 0.5 * v2 / l;
    if (s > 0.0) {
      const double r = 1.0 + 2.0 * s / l;
      const double w = s / (r * l * l);
      quad_w += w * v2;
      log_det_mean += std::log1p(s / l);
      log_det_r += std::log(r);
      active.push_back(d);
      active_w.push_back(w);
    }
  }

  const Eigen::ArrayXd log_d = log_alpha_sq + log_known + log_mean_r - 0.5 * log_det_mean;
  const double mean = (log_d.exp() * gp.beta.array()).sum();

  // log Q[i,k] = g_i + g_k + B[i,k] - 1/2 log|R|, with
  // g_i = log k(x_i, mu) + 1/2 sum_d w_d v_id^2.
  const Eigen::ArrayXd g = log_alpha_sq + log_known + log_k_r + 0.5 * quad_w;
  const double shift = -0.5 * log_det_r;

  Workspace& ws = workspace();
  const auto n_active = static_cast<Eigen::Index>(active.size());
  ws.cross.resize(n, n);
  if (n_active > 0) {
    ws.scaled.resize(n, n_active);
    for (Eigen::Index j = 0; j < n_active; ++j) {
      const Eigen::Index d = active[static_cast<std::size_t>(j)];
      ws.scaled.col(j) = std::sqrt(active_w[static_cast<std::size_t>(j)]) * (input.mean(d) - x.col(d).array()).matrix();
    }
    ws.cross.triangularView<Eigen::Lower>().setZero();
    ws.cross.selfadjointView<Eigen::Lower>().rankUpdate(ws.scaled);
  } else {
    ws.cross.triangularView<Eigen::Lower>().setZero();
  }

  // sum_{i,k} W[i,k] Q[i,k] with W = beta beta^T - (K + sigma^2 I)^-1, over the lower triangle.
  const Eigen::MatrixXd& w = gp.moment_weights;
  double weighted = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index len = n - k;
    const auto q = (g.segment(k, len) + ws.cross.col(k).segment(k, len).array() + (g(k) + shift)).exp();
    const double col_sum = (q * w.col(k).segment(k, len).array()).sum();
    const double diag = q(0) * w(k, k);
    weighted += 2.0 * col_sum - diag;
  }

  const double var = gp.params.alpha_sq() + weighted - mean * mean;
  return {mean, std::max(var, kVarianceFloor)};
}

std::vector<PredictedPixel> mm_predict_random(const GpModel& model, const TestInput& input) {
  check_input(model, input);
  const DimSplit split = DimSplit::all_random(model.input_dim());
  std::vector<PredictedPixel> out;
  for (Eigen::Index a = 0; a < model.output_dim(); ++a) out.push_back(moment_match(model, a, input, split));
  return out;
}

std::vector<PredictedPixel> mm_predict_hybrid(const GpModel& model, const TestInput& input) {
  check_input(model, input);
  DimSplit split = DimSplit::from_mask(input.known_mask);
  for (Eigen::Index d : split.known) {
    if (input.var(d) != 0.0) throw ArgumentError("known input dimension has non-zero variance");
  }
  // Zero-variance random dimensions are evaluated as known.
  std::vector<bool> effective = input.known_mask;
  for (Eigen::Index d : split.random) {
    if (input.var(d) == 0.0) effective[static_cast<std::size_t>(d)] = true;
  }
  if (effective != input.known_mask) split = DimSplit::from_mask(effective);
  std::vector<PredictedPixel> out;
  if (split.random.empty()) {
    const Prediction p = predict_deterministic(model, input.mean);
    for (Eigen::Index a = 0; a < model.output_dim(); ++a) out.push_back({p.mean(a), p.var(a)});
    return out;
  }
  for (Eigen::Index a = 0; a < model.output_dim(); ++a) out.push_back(moment_match(model, a, input, split));
  return out;
}

McEstimate mc_oracle(const GpModel& model, const TestInput& input, std::size_t n_samples, std::uint64_t seed) {
  check_input(model, input);
  if (n_samples < 1000) throw ArgumentError("Monte-Carlo oracle needs at least 1000 samples");
  const Eigen::Index o = model.output_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::VectorXd sd = input.var.cwiseSqrt();

  // Welford accumulators: identical samples leave the running moments exact.
  Eigen::VectorXd mu_mean = Eigen::VectorXd::Zero(o);
  Eigen::VectorXd mu_m2 = Eigen::VectorXd::Zero(o);
  Eigen::VectorXd var_mean = Eigen::VectorXd::Zero(o);
  std::vector<Eigen::VectorXd> mus;
  std::vector<Eigen::VectorXd> vars;
  mus.reserve(n_samples);
  vars.reserve(n_samples);

  Eigen::VectorXd x = input.mean;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      if (!input.known_mask[static_cast<std::size_t>(d)] && sd(d) > 0.0) x(d) = input.mean(d) + sd(d) * normal(rng);
    }
    Prediction p = predict_deterministic(model, x);
    const double k = static_cast<double>(s + 1);
    const Eigen::VectorXd delta = p.mean - mu_mean;
    mu_mean += delta / k;
    mu_m2 += delta.cwiseProduct(p.mean - mu_mean);
    var_mean += (p.var - var_mean) / k;
    mus.push_back(std::move(p.mean));
    vars.push_back(std::move(p.var));
  }

  const double count = static_cast<double>(n_samples);
  McEstimate est;
  est.mean = mu_mean;
  est.var = var_mean + mu_m2 / count;
  est.mean_se = (mu_m2 / count).cwiseSqrt() / std::sqrt(count);

  // Standard error of the total variance via t_s = sigma^2_s + (mu_s - mean)^2.
  Eigen::VectorXd t_mean = Eigen::VectorXd::Zero(o);
  Eigen::VectorXd t_m2 = Eigen::VectorXd::Zero(o);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd t = vars[s] + (mus[s] - mu_mean).cwiseAbs2();
    const Eigen::VectorXd delta = t - t_mean;
    t_mean += delta / static_cast<double>(s + 1);
    t_m2 += delta.cwiseProduct(t - t_mean);
  }
  est.var_se = (t_m2 / count).cwiseSqrt() / std::sqrt(count);
  return est;
}

}  // namespace gpvp
