#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gpvp {

// RBF kernel parameters in log space.
//   alpha^2   = exp(2 * log_alpha)
//   lambda_d  = exp(2 * log_lengthscales[d])   (squared lengthscale, diagonal of Lambda)
//   sigma_n^2 = exp(2 * log_noise)
struct KernelParams {
  double log_alpha = 0.0;
  Eigen::VectorXd log_lengthscales;
  double log_noise = 0.0;

  Eigen::Index dim() const { return log_lengthscales.size(); }
  double alpha_sq() const;
  double noise_var() const;
  Eigen::VectorXd sq_lengthscales() const;

  // Packed as [log_alpha, log_lengthscales..., log_noise].
  Eigen::VectorXd pack() const;
  static KernelParams unpack(const Eigen::VectorXd& packed);
};

// Partition of input dimensions into known (observed) and random (predicted).
struct DimSplit {
  std::vector<Eigen::Index> known;
  std::vector<Eigen::Index> random;

  static DimSplit from_mask(const std::vector<bool>& known_mask);
  static DimSplit all_known(Eigen::Index dim);
  static DimSplit all_random(Eigen::Index dim);
  // Throws ArgumentError unless known and random are sorted and partition [0, dim).
  void validate(Eigen::Index dim) const;
};

double rbf(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
           const KernelParams& params);

// log rbf(x, y); avoids underflow for distant high-dimensional inputs.
double log_rbf(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
               const KernelParams& params);

// Factorized kernel k = k_known * k_random. x_known/y_known hold the values on
// split.known (in order), x_random/y_random those on split.random. The whole
// signal scale alpha^2 is carried by the random factor (alpha_known = 1).
std::pair<double, double> rbf_split(const Eigen::VectorXd& x_known, const Eigen::VectorXd& y_known,
                                    const Eigen::VectorXd& x_random, const Eigen::VectorXd& y_random,
                                    const KernelParams& params, const DimSplit& split);

// Pairwise squared Mahalanobis distances sum_d (a_d - b_d)^2 / lambda_d between rows.
Eigen::MatrixXd scaled_sq_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                    const KernelParams& params);

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& params);

// Symmetric self-kernel: exact alpha^2 diagonal and exact symmetry.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const KernelParams& params);

// Jitter added to the diagonal on factorization failure, as multiples of
// mean(diag K). Zero is always tried first.
struct JitterPolicy {
  std::vector<double> ladder{1e-10, 1e-8, 1e-6, 1e-4};
};

// Cholesky factor of K + jitter * I.
struct PsdFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
  double log_det = 0.0;

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd inverse() const;
};

PsdFactor factorize_psd(const Eigen::MatrixXd& k, const JitterPolicy& policy = {});

struct PsdSolution {
  Eigen::MatrixXd solution;
  double log_det = 0.0;
  double jitter = 0.0;
};

PsdSolution psd_solve(const Eigen::MatrixXd& k, const Eigen::MatrixXd& rhs, const JitterPolicy& policy = {});

}  // namespace gpvp
