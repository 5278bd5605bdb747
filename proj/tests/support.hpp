#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gpvp/gp_train.hpp"
#include "gpvp/kernel.hpp"
#include "gpvp/patches.hpp"

namespace testing {

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

struct SmallProblem {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  std::vector<gpvp::KernelParams> params;
};

// Random inputs in [-1, 1], smooth targets, and moderately scaled parameters.
inline SmallProblem random_problem(std::mt19937_64& rng, int n, int d, int o = 1) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> log_ls(-0.5, 0.7);
  std::uniform_real_distribution<double> log_alpha(-0.5, 0.5);
  std::uniform_real_distribution<double> log_noise(-3.0, -1.0);
  SmallProblem p;
  p.x.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) p.x(i, j) = unit(rng);
  }
  p.y.resize(n, o);
  for (int a = 0; a < o; ++a) {
    for (int i = 0; i < n; ++i) p.y(i, a) = std::sin(2.0 * p.x.row(i).sum() + a) + 0.1 * unit(rng);
    gpvp::KernelParams kp;
    kp.log_alpha = log_alpha(rng);
    kp.log_lengthscales.resize(d);
    for (int j = 0; j < d; ++j) kp.log_lengthscales(j) = log_ls(rng);
    kp.log_noise = log_noise(rng);
    p.params.push_back(kp);
  }
  return p;
}

// Gaussian input; each dimension is known (zero variance) with probability known_prob.
inline gpvp::TestInput random_input(std::mt19937_64& rng, int d, double var_scale, double known_prob) {
  std::normal_distribution<double> n(0.0, 0.6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  gpvp::TestInput in;
  in.mean = Eigen::VectorXd::NullaryExpr(d, [&] { return n(rng); });
  in.var = Eigen::VectorXd::Zero(d);
  in.known_mask.assign(static_cast<std::size_t>(d), false);
  for (int j = 0; j < d; ++j) {
    if (u(rng) < known_prob) {
      in.known_mask[static_cast<std::size_t>(j)] = true;
    } else {
      in.var(j) = var_scale * u(rng);
    }
  }
  return in;
}

inline gpvp::GpModel make_model(const SmallProblem& p) { return gpvp::GpModel(p.x, p.y, p.params); }

// Entrywise kernel by direct summation; no shared code with the library kernels.
inline double naive_rbf(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const gpvp::KernelParams& kp) {
  double q = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double l = std::exp(2.0 * kp.log_lengthscales(d));
    q += (x(d) - y(d)) * (x(d) - y(d)) / l;
  }
  return std::exp(2.0 * kp.log_alpha) * std::exp(-0.5 * q);
}

inline Eigen::MatrixXd naive_gram(const Eigen::MatrixXd& x, const gpvp::KernelParams& kp) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = naive_rbf(x.row(i).transpose(), x.row(j).transpose(), kp);
  }
  return k;
}

struct NaivePosterior {
  double mean;
  double var;
};

// Standard posterior with an LU inverse.
inline NaivePosterior naive_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const gpvp::KernelParams& kp,
                                      const Eigen::VectorXd& x_star) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k = naive_gram(x, kp);
  k.diagonal().array() += std::exp(2.0 * kp.log_noise);
  const Eigen::MatrixXd inv = k.fullPivLu().inverse();
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks(i) = naive_rbf(x_star, x.row(i).transpose(), kp);
  return {ks.dot(inv * y), std::exp(2.0 * kp.log_alpha) - ks.dot(inv * ks)};
}

// Dense moment-matching reference: full D x D matrices, determinants and
// inverses, with known dimensions at zero variance handled by the kernel split.
inline NaivePosterior naive_moment_match(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                         const gpvp::KernelParams& kp, const Eigen::VectorXd& mu,
                                         const Eigen::VectorXd& var, const std::vector<bool>& known) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  std::vector<Eigen::Index> kn, rn;
  for (Eigen::Index j = 0; j < d; ++j) (known[static_cast<std::size_t>(j)] ? kn : rn).push_back(j);
  const auto nr = static_cast<Eigen::Index>(rn.size());
  const double a2 = std::exp(2.0 * kp.log_alpha);

  Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(nr, nr), sig = Eigen::MatrixXd::Zero(nr, nr);
  for (Eigen::Index r = 0; r < nr; ++r) {
    lam(r, r) = std::exp(2.0 * kp.log_lengthscales(rn[static_cast<std::size_t>(r)]));
    sig(r, r) = var(rn[static_cast<std::size_t>(r)]);
  }
  const Eigen::MatrixXd lam_inv = lam.inverse();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(nr, nr);

  auto known_k = [&](Eigen::Index i) {
    double q = 0.0;
    for (Eigen::Index j : kn) {
      const double l = std::exp(2.0 * kp.log_lengthscales(j));
      q += (mu(j) - x(i, j)) * (mu(j) - x(i, j)) / l;
    }
    return std::exp(-0.5 * q);
  };
  auto v_r = [&](Eigen::Index i) {
    Eigen::VectorXd v(nr);
    for (Eigen::Index r = 0; r < nr; ++r) v(r) = mu(rn[static_cast<std::size_t>(r)]) - x(i, rn[static_cast<std::size_t>(r)]);
    return v;
  };

  Eigen::MatrixXd k = naive_gram(x, kp);
  k.diagonal().array() += std::exp(2.0 * kp.log_noise);
  const Eigen::MatrixXd inv = k.fullPivLu().inverse();
  const Eigen::VectorXd beta = inv * y;

  const double det_mean = (sig * lam_inv + eye).determinant();
  const Eigen::MatrixXd s_plus_l_inv = (sig + lam).inverse();
  Eigen::VectorXd dvec(n), kmu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd v = v_r(i);
    dvec(i) = known_k(i) * a2 / std::sqrt(det_mean) * std::exp(-0.5 * v.dot(s_plus_l_inv * v));
    kmu(i) = known_k(i) * a2 * std::exp(-0.5 * v.dot(lam_inv * v));
  }
  const double mean = dvec.dot(beta);

  const Eigen::MatrixXd r_mat = 2.0 * sig * lam_inv + eye;
  const Eigen::MatrixXd r_inv_s = r_mat.inverse() * sig;
  const double det_r = r_mat.determinant();
  Eigen::MatrixXd q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::VectorXd z = lam_inv * v_r(i) + lam_inv * v_r(j);
      q(i, j) = kmu(i) * kmu(j) / std::sqrt(det_r) * std::exp(0.5 * z.dot(r_inv_s * z));
    }
  }
  const double v = a2 - (inv * q).trace() + beta.dot(q * beta) - mean * mean;
  return {mean, v};
}

}  // namespace testing
