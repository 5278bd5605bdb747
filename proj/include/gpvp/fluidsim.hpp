#pragma once

#include <cstdint>

#include "gpvp/tensorio.hpp"

namespace gpvp {

// 2D incompressible Navier-Stokes in vorticity form on the unit torus.
struct SimConfig {
  int resolution = 32;        // N, grid is N x N
  double viscosity = 1e-3;    // nu
  double dt = 1e-4;           // solver step, simulated seconds
  double record_every = 1.0;  // simulated seconds between recorded frames
  int n_frames = 25;
  bool forcing = true;  // f = amplitude * (sin 2pi(x+y) + cos 2pi(x+y))
  double forcing_amplitude = 0.1;
  double grf_tau = 7.0;  // initial field envelope (4pi^2|k|^2 + tau^2)^(-exponent/2)
  double grf_exponent = 2.5;
  std::uint64_t seed = 0;

  void validate() const;
  long steps_per_frame() const;
};

// Zero-mean Gaussian random field sample. Each Fourier mode is drawn from its own
// generator keyed on (seed, kx, ky), so a finer grid only adds high modes.
Image initial_vorticity(int resolution, std::uint64_t seed, double tau = 7.0, double exponent = 2.5);

// Pseudo-spectral solver: 2/3-rule dealiased explicit advection, Crank-Nicolson
// viscosity. Frame i holds the vorticity at time (i + 1) * record_every.
// Throws StabilityError when max|u| dt N exceeds 0.5.
FrameSequence simulate(const SimConfig& cfg);

double enstrophy(const Image& w);  // 1/2 sum of squares
double mean_value(const Image& w);

// Point subsampling onto a coarser grid whose side divides the current one.
Image restrict_grid(const Image& w, int target);
FrameSequence restrict_grid(const FrameSequence& seq, int target);

}  // namespace gpvp
