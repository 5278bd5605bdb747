#include "gpvp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "gpvp/errors.hpp"

namespace gpvp {

double KernelParams::alpha_sq() const { return std::exp(2.0 * log_alpha); }

double KernelParams::noise_var() const { return std::exp(2.0 * log_noise); }

Eigen::VectorXd KernelParams::sq_lengthscales() const { return (2.0 * log_lengthscales.array()).exp().matrix(); }

Eigen::VectorXd KernelParams::pack() const {
  Eigen::VectorXd p(dim() + 2);
  p(0) = log_alpha;
  p.segment(1, dim()) = log_lengthscales;
  p(dim() + 1) = log_noise;
  return p;
}

KernelParams KernelParams::unpack(const Eigen::VectorXd& packed) {
  if (packed.size() < 3) throw ArgumentError("packed kernel parameters need at least 3 entries");
  KernelParams p;
  p.log_alpha = packed(0);
  p.log_lengthscales = packed.segment(1, packed.size() - 2);
  p.log_noise = packed(packed.size() - 1);
  return p;
}

DimSplit DimSplit::from_mask(const std::vector<bool>& known_mask) {
  DimSplit s;
  for (std::size_t d = 0; d < known_mask.size(); ++d) {
    (known_mask[d] ? s.known : s.random).push_back(static_cast<Eigen::Index>(d));
  }
  return s;
}

DimSplit DimSplit::all_known(Eigen::Index dim) {
  DimSplit s;
  for (Eigen::Index d = 0; d < dim; ++d) s.known.push_back(d);
  return s;
}

DimSplit DimSplit::all_random(Eigen::Index dim) {
  DimSplit s;
  for (Eigen::Index d = 0; d < dim; ++d) s.random.push_back(d);
  return s;
}

void DimSplit::validate(Eigen::Index dim) const {
  if (static_cast<Eigen::Index>(known.size() + random.size()) != dim) {
    throw ArgumentError("dimension split does not cover all " + std::to_string(dim) + " dimensions");
  }
  std::vector<char> seen(static_cast<std::size_t>(dim), 0);
  auto mark = [&](const std::vector<Eigen::Index>& idx) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= dim) throw ArgumentError("dimension split index out of range");
      if (i > 0 && idx[i] <= idx[i - 1]) throw ArgumentError("dimension split indices must be sorted ascending");
      if (seen[static_cast<std::size_t>(idx[i])]++) throw ArgumentError("dimension split sets overlap");
    }
  };
  mark(known);
  mark(random);
}

double log_rbf(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
               const KernelParams& params) {
  const auto inv_lambda = (-2.0 * params.log_lengthscales.array()).exp();
  const double q = ((x - y).array().square() * inv_lambda).sum();
  return 2.0 * params.log_alpha - 0.5 * q;
}

double rbf(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
           const KernelParams& params) {
  return std::exp(log_rbf(x, y, params));
}

std::pair<double, double> rbf_split(const Eigen::VectorXd& x_known, const Eigen::VectorXd& y_known,
                                    const Eigen::VectorXd& x_random, const Eigen::VectorXd& y_random,
                                    const KernelParams& params, const DimSplit& split) {
  split.validate(params.dim());
  const auto nk = static_cast<Eigen::Index>(split.known.size());
  const auto nr = static_cast<Eigen::Index>(split.random.size());
  if (x_known.size() != nk || y_known.size() != nk || x_random.size() != nr || y_random.size() != nr) {
    throw ArgumentError("rbf_split input sizes do not match the dimension split");
  }
  auto partial = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<Eigen::Index>& idx) {
    double q = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double diff = a(static_cast<Eigen::Index>(i)) - b(static_cast<Eigen::Index>(i));
      q += diff * diff * std::exp(-2.0 * params.log_lengthscales(idx[i]));
    }
    return q;
  };
  const double k_known = std::exp(-0.5 * partial(x_known, y_known, split.known));
  const double k_random = params.alpha_sq() * std::exp(-0.5 * partial(x_random, y_random, split.random));
  return {k_known, k_random};
}

Eigen::MatrixXd scaled_sq_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                    const KernelParams& params) {
  if (a.cols() != params.dim() || b.cols() != params.dim()) {
    throw ArgumentError("kernel inputs do not match the parameter dimension");
  }
  const Eigen::VectorXd inv_ls = (-params.log_lengthscales.array()).exp().matrix();
  const Eigen::MatrixXd as = a * inv_ls.asDiagonal();
  const Eigen::MatrixXd bs = b * inv_ls.asDiagonal();
  const Eigen::VectorXd ra = as.rowwise().squaredNorm();
  const Eigen::VectorXd rb = bs.rowwise().squaredNorm();
  Eigen::MatrixXd d = -2.0 * as * bs.transpose();
  d.colwise() += ra;
  d.rowwise() += rb.transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& params) {
  return (params.alpha_sq() * (-0.5 * scaled_sq_distances(a, b, params).array()).exp()).matrix();
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const KernelParams& params) {
  if (a.cols() != params.dim()) throw ArgumentError("kernel inputs do not match the parameter dimension");
  const Eigen::VectorXd inv_ls = (-params.log_lengthscales.array()).exp().matrix();
  const Eigen::MatrixXd as = a * inv_ls.asDiagonal();
  const Eigen::VectorXd r = as.rowwise().squaredNorm();
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  k.selfadjointView<Eigen::Lower>().rankUpdate(as, -2.0);
  const double a2 = params.alpha_sq();
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = a2;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d = std::max(k(i, j) + r(i) + r(j), 0.0);
      k(i, j) = a2 * std::exp(-0.5 * d);
      k(j, i) = k(i, j);
    }
  }
  return k;
}

Eigen::MatrixXd PsdFactor::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd s = lower.triangularView<Eigen::Lower>().solve(rhs);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(s);
  return s;
}

Eigen::VectorXd PsdFactor::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd s = lower.triangularView<Eigen::Lower>().solve(rhs);
  lower.triangularView<Eigen::Lower>().transpose().solveInPlace(s);
  return s;
}

Eigen::MatrixXd PsdFactor::inverse() const {
  const Eigen::Index n = lower.rows();
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
  lower.triangularView<Eigen::Lower>().solveInPlace(linv);
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(n, n);
  inv.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
  return inv.selfadjointView<Eigen::Lower>();
}

PsdFactor factorize_psd(const Eigen::MatrixXd& k, const JitterPolicy& policy) {
  if (k.rows() != k.cols()) throw ArgumentError("psd factorization needs a square matrix");
  const Eigen::Index n = k.rows();
  const double diag_mean = n > 0 ? k.diagonal().mean() : 1.0;
  const double scale = diag_mean > 0.0 && std::isfinite(diag_mean) ? diag_mean : 1.0;

  std::vector<double> jitters{0.0};
  for (double j : policy.ladder) jitters.push_back(j * scale);

  Eigen::MatrixXd work(n, n);
  for (double jitter : jitters) {
    work = k;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(work);
    if (llt.info() != Eigen::Success) continue;
    const auto diag = work.diagonal().array();
    if (!diag.allFinite() || (diag <= 0.0).any()) continue;
    PsdFactor f;
    f.lower = work.triangularView<Eigen::Lower>();
    f.jitter = jitter;
    f.log_det = 2.0 * diag.log().sum();
    return f;
  }
  std::ostringstream msg;
  msg << "cholesky factorization failed up to jitter " << jitters.back();
  throw NumericalError(msg.str());
}

PsdSolution psd_solve(const Eigen::MatrixXd& k, const Eigen::MatrixXd& rhs, const JitterPolicy& policy) {
  if (rhs.rows() != k.rows()) throw ArgumentError("right-hand side row count does not match matrix");
  const PsdFactor f = factorize_psd(k, policy);
  return PsdSolution{f.solve(rhs), f.log_det, f.jitter};
}

}  // namespace gpvp
