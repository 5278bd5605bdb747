#include "gpvp/fluidsim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fftw3.h>

#include "gpvp/errors.hpp"

namespace gpvp {

namespace {

using cplx = std::complex<double>;

template <typename T>
class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t n) : n_(n), data_(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (!data_) throw std::bad_alloc();
    std::fill(data_, data_ + n_, T{});
  }
  ~FftwBuffer() { fftw_free(data_); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  T* data() { return data_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  T* data_;
};

class Plan {
 public:
  explicit Plan(fftw_plan p) : p_(p) {
    if (!p_) throw Error("FFTW planning failed");
  }
  ~Plan() { fftw_destroy_plan(p_); }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  fftw_plan get() const { return p_; }

 private:
  fftw_plan p_;
};

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

int signed_freq(int i, int n) { return i <= n / 2 - (n % 2 == 0 ? 1 : 0) ? i : i - n; }

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void SimConfig::validate() const {
  if (resolution < 8 || !is_power_of_two(resolution)) {
    throw ArgumentError("resolution must be a power of two >= 8, got " + std::to_string(resolution));
  }
  if (!(viscosity > 0.0)) throw ArgumentError("viscosity must be positive");
  if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
  if (!(record_every >= dt)) throw ArgumentError("record_every must be >= dt");
  if (n_frames < 1) throw ArgumentError("n_frames must be >= 1");
  if (!std::isfinite(forcing_amplitude)) throw ArgumentError("forcing amplitude must be finite");
  if (!(grf_tau > 0.0) || !(grf_exponent > 0.0)) throw ArgumentError("GRF tau and exponent must be positive");
}

long SimConfig::steps_per_frame() const { return std::max(1L, std::lround(record_every / dt)); }

Image initial_vorticity(int resolution, std::uint64_t seed, double tau, double exponent) {
  if (resolution < 2) throw ArgumentError("resolution must be >= 2");
  const int n = resolution;
  const double pi = std::numbers::pi;
  const double sigma = std::pow(tau, 0.5 * (2.0 * exponent - 2.0));
  const auto seed_lo = static_cast<std::uint32_t>(seed & 0xffffffffu);
  const auto seed_hi = static_cast<std::uint32_t>(seed >> 32);

  FftwBuffer<cplx> spec(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const int kx = signed_freq(i, n);
    for (int j = 0; j < n; ++j) {
      const int ky = signed_freq(j, n);
      if ((kx == 0 && ky == 0) || 2 * std::abs(kx) >= n || 2 * std::abs(ky) >= n) continue;
      std::seed_seq seq{seed_lo, seed_hi, static_cast<std::uint32_t>(kx), static_cast<std::uint32_t>(ky)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      const double re = normal(rng);
      const double im = normal(rng);
      const double k2 = static_cast<double>(kx * kx + ky * ky);
      const double amp = std::sqrt(2.0) * sigma * std::pow(4.0 * pi * pi * k2 + tau * tau, -0.5 * exponent);
      spec[static_cast<std::size_t>(i) * n + j] = amp * cplx(re, im);
    }
  }
  FftwBuffer<cplx> field(spec.size());
  const Plan plan(fftw_plan_dft_2d(n, n, as_fftw(spec.data()), as_fftw(field.data()), FFTW_BACKWARD, FFTW_ESTIMATE));
  fftw_execute(plan.get());
  Image out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = field[static_cast<std::size_t>(i) * n + j].real();
  }
  return out;
}

FrameSequence simulate(const SimConfig& cfg) {
  cfg.validate();
  const int n = cfg.resolution;
  const int nk = n / 2 + 1;
  const std::size_t real_size = static_cast<std::size_t>(n) * n;
  const std::size_t spec_size = static_cast<std::size_t>(n) * nk;
  const double pi = std::numbers::pi;
  const double two_pi = 2.0 * pi;
  const double norm = 1.0 / static_cast<double>(real_size);
  const double dt = cfg.dt;
  const double nu = cfg.viscosity;

  FftwBuffer<double> real(real_size);
  FftwBuffer<cplx> spec(spec_size);
  const Plan forward(fftw_plan_dft_r2c_2d(n, n, real.data(), as_fftw(spec.data()), FFTW_ESTIMATE));
  const Plan backward(fftw_plan_dft_c2r_2d(n, n, as_fftw(spec.data()), real.data(), FFTW_ESTIMATE));

  // Wavenumbers: kx along rows, ky along the half-spectrum columns. The
  // derivative operators drop the unpaired Nyquist modes.
  std::vector<double> kx_d(spec_size), ky_d(spec_size), lap(spec_size), inv_lap(spec_size), mask(spec_size);
  const double k_cut = (2.0 / 3.0) * (n / 2);
  for (int i = 0; i < n; ++i) {
    const int kx = signed_freq(i, n);
    for (int j = 0; j < nk; ++j) {
      const int ky = j;
      const std::size_t idx = static_cast<std::size_t>(i) * nk + j;
      kx_d[idx] = (2 * i == n) ? 0.0 : kx;
      ky_d[idx] = (2 * j == n) ? 0.0 : ky;
      lap[idx] = 4.0 * pi * pi * static_cast<double>(kx * kx + ky * ky);
      inv_lap[idx] = idx == 0 ? 0.0 : 1.0 / lap[idx];
      mask[idx] = (std::abs(kx) <= k_cut && std::abs(ky) <= k_cut) ? 1.0 : 0.0;
    }
  }

  auto to_spectrum = [&](const Image& w, std::vector<cplx>& out) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) real[static_cast<std::size_t>(i) * n + j] = w(i, j);
    }
    fftw_execute(forward.get());
    out.assign(spec.data(), spec.data() + spec_size);
  };
  auto to_physical = [&](const std::vector<cplx>& in, std::vector<double>& out) {
    std::copy(in.begin(), in.end(), spec.data());
    fftw_execute(backward.get());
    out.resize(real_size);
    for (std::size_t k = 0; k < real_size; ++k) out[k] = real[k] * norm;
  };

  std::vector<cplx> w_h, f_h(spec_size, cplx{});
  to_spectrum(initial_vorticity(n, cfg.seed, cfg.grf_tau, cfg.grf_exponent), w_h);
  w_h[0] = 0.0;
  if (cfg.forcing) {
    Image f(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double s = two_pi * (static_cast<double>(i) + j) / n;
        f(i, j) = cfg.forcing_amplitude * (std::sin(s) + std::cos(s));
      }
    }
    to_spectrum(f, f_h);
    f_h[0] = 0.0;
  }

  std::vector<cplx> u_h(spec_size), v_h(spec_size), wx_h(spec_size), wy_h(spec_size), nl_h(spec_size);
  std::vector<double> u, v, wx, wy, frame;
  const cplx i2pi(0.0, two_pi);
  const long per_frame = cfg.steps_per_frame();
  std::vector<Image> frames;
  frames.reserve(static_cast<std::size_t>(cfg.n_frames));

  for (int fr = 0; fr < cfg.n_frames; ++fr) {
    for (long step = 0; step < per_frame; ++step) {
      for (std::size_t k = 0; k < spec_size; ++k) {
        const cplx psi = w_h[k] * inv_lap[k];
        u_h[k] = i2pi * ky_d[k] * psi;
        v_h[k] = -i2pi * kx_d[k] * psi;
        wx_h[k] = i2pi * kx_d[k] * w_h[k];
        wy_h[k] = i2pi * ky_d[k] * w_h[k];
      }
      to_physical(u_h, u);
      to_physical(v_h, v);
      to_physical(wx_h, wx);
      to_physical(wy_h, wy);

      double umax = 0.0;
      for (std::size_t k = 0; k < real_size; ++k) {
        umax = std::max(umax, u[k] * u[k] + v[k] * v[k]);
        real[k] = u[k] * wx[k] + v[k] * wy[k];
      }
      umax = std::sqrt(umax);
      if (!std::isfinite(umax) || umax * dt * n > 0.5) {
        throw StabilityError("CFL condition violated (max|u| dt N = " + std::to_string(umax * dt * n) +
                             " > 0.5); use a smaller dt");
      }
      fftw_execute(forward.get());
      for (std::size_t k = 0; k < spec_size; ++k) {
        const cplx adv = spec[k] * mask[k];
        const double half = 0.5 * dt * nu * lap[k];
        w_h[k] = (-dt * adv + dt * f_h[k] + (1.0 - half) * w_h[k]) / (1.0 + half);
      }
      w_h[0] = 0.0;
    }
    to_physical(w_h, frame);
    Image img(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) img(i, j) = frame[static_cast<std::size_t>(i) * n + j];
    }
    if (!img.allFinite()) throw StabilityError("vorticity became non-finite; use a smaller dt");
    frames.push_back(std::move(img));
  }
  return FrameSequence(std::move(frames), cfg.record_every);
}

double enstrophy(const Image& w) { return 0.5 * w.squaredNorm(); }

double mean_value(const Image& w) { return w.mean(); }

Image restrict_grid(const Image& w, int target) {
  if (target < 1 || w.rows() % target != 0 || w.cols() % target != 0 || w.rows() != w.cols()) {
    throw ArgumentError("target resolution must divide a square frame");
  }
  const Eigen::Index f = w.rows() / target;
  Image out(target, target);
  for (int i = 0; i < target; ++i) {
    for (int j = 0; j < target; ++j) out(i, j) = w(i * f, j * f);
  }
  return out;
}

FrameSequence restrict_grid(const FrameSequence& seq, int target) {
  std::vector<Image> frames;
  for (const Image& f : seq.frames()) frames.push_back(restrict_grid(f, target));
  return FrameSequence(std::move(frames), seq.dt_meta());
}

}  // namespace gpvp
