#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "gpvp/gp_train.hpp"
#include "gpvp/patches.hpp"
#include "gpvp/tensorio.hpp"

namespace testing {

// Smooth periodic pattern drifting diagonally, one pixel-ish per frame.
inline gpvp::FrameSequence drifting_waves(int t, int side, double speed = 0.6) {
  std::vector<gpvp::Image> frames;
  const double k = 2.0 * std::numbers::pi / side;
  for (int f = 0; f < t; ++f) {
    gpvp::Image img(side, side);
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        img(r, c) = std::sin(k * (r + speed * f)) + 0.5 * std::cos(k * (c - 0.5 * speed * f) + 1.0);
      }
    }
    frames.push_back(img);
  }
  return gpvp::FrameSequence(frames);
}

inline gpvp::TrainOptions quick_options(int iters = 40) {
  gpvp::TrainOptions o;
  o.max_iters = iters;
  return o;
}

}  // namespace testing
