#include <doctest.h>

#include <cmath>
#include <random>

#include "gpvp/errors.hpp"
#include "gpvp/kernel.hpp"
#include "support.hpp"

using namespace gpvp;

namespace {

KernelParams params_1d(double alpha, double lambda) {
  KernelParams p;
  p.log_alpha = std::log(alpha);
  p.log_lengthscales = Eigen::VectorXd::Constant(1, 0.5 * std::log(lambda));
  p.log_noise = -3.0;
  return p;
}

KernelParams random_params(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  KernelParams p;
  p.log_alpha = 0.5 * u(rng);
  p.log_lengthscales = Eigen::VectorXd::NullaryExpr(d, [&] { return 0.5 * u(rng); });
  p.log_noise = -2.0;
  return p;
}

}  // namespace

TEST_CASE("rbf hand values") {
  KernelParams p = params_1d(2.0, 1.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3);
  CHECK(rbf(x, x, p) == doctest::Approx(4.0).epsilon(1e-15));
  p = params_1d(1.0, 1.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.3 + std::sqrt(2.0));
  CHECK(rbf(x, y, p) == doctest::Approx(0.367879441171442).epsilon(1e-13));
}

TEST_CASE("rbf is symmetric and bounded by alpha squared") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const KernelParams p = random_params(rng, 5);
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(5, [&] { return n(rng); });
    const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(5, [&] { return n(rng); });
    CHECK(rbf(x, y, p) == rbf(y, x, p));
    CHECK(rbf(x, y, p) > 0.0);
    CHECK(rbf(x, y, p) <= p.alpha_sq());
    CHECK(testing::rel_diff(rbf(x, y, p), testing::naive_rbf(x, y, p)) < 1e-13);
  }
}

TEST_CASE("split factors multiply back to the full kernel") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const int d = 6;
  for (int trial = 0; trial < 1000; ++trial) {
    const KernelParams p = random_params(rng, d);
    const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(d, [&] { return n(rng); });
    const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(d, [&] { return n(rng); });
    std::vector<bool> mask(d);
    for (int j = 0; j < d; ++j) mask[static_cast<std::size_t>(j)] = coin(rng);
    const DimSplit split = DimSplit::from_mask(mask);
    auto pick = [](const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
      Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
      return out;
    };
    const auto [kk, kr] = rbf_split(pick(x, split.known), pick(y, split.known), pick(x, split.random),
                                    pick(y, split.random), p, split);
    CHECK(testing::rel_diff(kk * kr, rbf(x, y, p)) < 1e-12);
  }
}

TEST_CASE("degenerate splits") {
  std::mt19937_64 rng(3);
  const KernelParams p = random_params(rng, 3);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(3, 1.0, -1.0);
  const Eigen::VectorXd none(0);
  const auto [k_all, r_all] = rbf_split(x, y, none, none, p, DimSplit::all_known(3));
  CHECK(testing::rel_diff(k_all * r_all, rbf(x, y, p)) < 1e-14);
  const auto [k_none, r_none] = rbf_split(none, none, x, y, p, DimSplit::all_random(3));
  CHECK(k_none == 1.0);
  CHECK(testing::rel_diff(r_none, rbf(x, y, p)) < 1e-14);
}

TEST_CASE("invalid splits are argument errors") {
  DimSplit overlap{{0, 1}, {1, 2}};
  CHECK_THROWS_AS(overlap.validate(3), ArgumentError);
  DimSplit incomplete{{0}, {2}};
  CHECK_THROWS_AS(incomplete.validate(3), ArgumentError);
  DimSplit unsorted{{1, 0}, {2}};
  CHECK_THROWS_AS(unsorted.validate(3), ArgumentError);
  DimSplit ok{{0, 2}, {1}};
  CHECK_NOTHROW(ok.validate(3));
}

TEST_CASE("kernel matrix entries and structure") {
  std::mt19937_64 rng(4);
  const KernelParams p = random_params(rng, 2);
  Eigen::MatrixXd a(3, 2), b(2, 2);
  a << 0.1, 0.2, -0.5, 1.0, 2.0, 0.0;
  b << 0.0, 0.0, 1.0, -1.0;
  const Eigen::MatrixXd k = kernel_matrix(a, b, p);
  REQUIRE(k.rows() == 3);
  REQUIRE(k.cols() == 2);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(testing::rel_diff(k(i, j), testing::naive_rbf(a.row(i).transpose(), b.row(j).transpose(), p)) < 1e-12);
    }
  }
  const Eigen::MatrixXd single = kernel_matrix(a.topRows(1), p);
  CHECK(single(0, 0) == p.alpha_sq());
  Eigen::MatrixXd dup(2, 2);
  dup << 0.3, 0.4, 0.3, 0.4;
  const Eigen::MatrixXd kd = kernel_matrix(dup, p);
  CHECK((kd.array() == p.alpha_sq()).all());
}

TEST_CASE("self kernel matrices are symmetric and positive semidefinite") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const KernelParams p = random_params(rng, 4);
    const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(25, 4, [&] { return 0.3 * n(rng); });
    const Eigen::MatrixXd k = kernel_matrix(a, p);
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((k.diagonal().array() == p.alpha_sq()).all());
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff();
    CHECK(min_eig >= -1e-8 * p.alpha_sq());
  }
}

TEST_CASE("psd_solve hand cases") {
  const PsdSolution id = psd_solve(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Unit(3, 0));
  CHECK(id.solution(0, 0) == 1.0);
  CHECK(id.solution(1, 0) == 0.0);
  CHECK(id.log_det == 0.0);
  Eigen::MatrixXd k(2, 2);
  k << 4.0, 0.0, 0.0, 1.0;
  Eigen::VectorXd rhs(2);
  rhs << 2.0, 3.0;
  const PsdSolution s = psd_solve(k, rhs);
  CHECK(s.solution(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.solution(1, 0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(s.log_det == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(s.jitter == 0.0);
}

TEST_CASE("psd_solve residual on random SPD matrices") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(12, 12, [&] { return n(rng); });
    const Eigen::MatrixXd k = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(12, 12);
    const Eigen::MatrixXd r = Eigen::MatrixXd::NullaryExpr(12, 3, [&] { return n(rng); });
    const PsdSolution s = psd_solve(k, r);
    CHECK((k * s.solution - r).norm() / r.norm() < 1e-10);
    CHECK(s.log_det == doctest::Approx(std::log(k.determinant())).epsilon(1e-10));
  }
}

TEST_CASE("jitter rescues singular matrices and failure names the last jitter") {
  const Eigen::MatrixXd dup = Eigen::MatrixXd::Constant(2, 2, 1.0);
  const PsdFactor f = factorize_psd(dup);
  CHECK(f.jitter > 0.0);
  CHECK(f.jitter <= 1e-4);
  Eigen::MatrixXd neg(2, 2);
  neg << -1.0, 0.0, 0.0, -1.0;
  try {
    factorize_psd(neg);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("jitter") != std::string::npos);
  }
}

TEST_CASE("parameter packing round-trips") {
  std::mt19937_64 rng(7);
  const KernelParams p = random_params(rng, 4);
  const KernelParams q = KernelParams::unpack(p.pack());
  CHECK(q.log_alpha == p.log_alpha);
  CHECK(q.log_noise == p.log_noise);
  CHECK(q.log_lengthscales == p.log_lengthscales);
  CHECK(p.pack().size() == 6);
  CHECK(p.sq_lengthscales()(1) == doctest::Approx(std::exp(2.0 * p.log_lengthscales(1))));
}
