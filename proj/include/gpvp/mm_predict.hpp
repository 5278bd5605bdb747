#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gpvp/gp_train.hpp"
#include "gpvp/patches.hpp"

namespace gpvp {

// Gaussian approximation of one predicted output pixel.
struct PredictedPixel {
  double mean = 0.0;
  double var = 0.0;
};

// Exact first and second moments of the GP output when every input dimension
// is Gaussian with the given diagonal variance; one entry per output dimension.
std::vector<PredictedPixel> mm_predict_random(const GpModel& model, const TestInput& input);

// Same moments with observed dimensions treated as point masses; the kernel is
// split into a known factor and a random factor over input.known_mask. With no
// random dimensions this reduces to the standard GP posterior. Random dimensions
// with zero variance are treated as known.
std::vector<PredictedPixel> mm_predict_hybrid(const GpModel& model, const TestInput& input);

// Moments for an explicit dimension split (known dims must have zero variance).
PredictedPixel moment_match(const GpModel& model, Eigen::Index output, const TestInput& input,
                            const DimSplit& split);

struct McEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;  // E[sigma^2(x)] + Var[mu(x)]
  Eigen::VectorXd mean_se;
  Eigen::VectorXd var_se;
};

// Monte-Carlo reference: samples the random dimensions, keeps known ones at
// their means, and pushes each sample through the standard GP posterior.
McEstimate mc_oracle(const GpModel& model, const TestInput& input, std::size_t n_samples, std::uint64_t seed);

}  // namespace gpvp
