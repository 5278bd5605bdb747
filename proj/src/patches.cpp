#include "gpvp/patches.hpp"

#include <cmath>
#include <string>

#include "gpvp/errors.hpp"

namespace gpvp {

void PatchConfig::validate() const {
  if (patch < 1) throw ArgumentError("patch size must be >= 1");
  if (boundary < 0 || 2 * boundary >= patch) throw ArgumentError("patch boundary must satisfy 0 <= 2b < p");
  if (train_stride < 1 || test_stride < 1) throw ArgumentError("strides must be >= 1");
}

std::optional<PatchConfig> infer_patch_config(Eigen::Index input_dim, Eigen::Index output_dim) {
  if (input_dim % 3 != 0) return std::nullopt;
  const auto area = input_dim / 3;
  const auto p = static_cast<int>(std::lround(std::sqrt(static_cast<double>(area))));
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(output_dim))));
  if (static_cast<Eigen::Index>(p) * p != area || static_cast<Eigen::Index>(side) * side != output_dim) {
    return std::nullopt;
  }
  if ((p - side) % 2 != 0 || side < 1 || side > p) return std::nullopt;
  PatchConfig cfg;
  cfg.patch = p;
  cfg.boundary = (p - side) / 2;
  cfg.test_stride = side;
  return cfg;
}

void extract_patch_into(const Image& frame, Eigen::Index row, Eigen::Index col, int p, double* out) {
  const Eigen::Index h = frame.rows();
  const Eigen::Index w = frame.cols();
  for (int r = 0; r < p; ++r) {
    const Eigen::Index rr = wrap_index(row + r, h);
    for (int c = 0; c < p; ++c) *out++ = frame(rr, wrap_index(col + c, w));
  }
}

Eigen::VectorXd extract_patch(const Image& frame, Eigen::Index row, Eigen::Index col, int p) {
  if (p < 1) throw ArgumentError("patch size must be >= 1");
  Eigen::VectorXd out(static_cast<Eigen::Index>(p) * p);
  extract_patch_into(frame, row, col, p, out.data());
  return out;
}

TrainingSet build_training_set(const FrameSequence& seq, const PatchConfig& cfg) {
  cfg.validate();
  if (seq.size() < 4) {
    throw InsufficientDataError("need at least 4 frames to build a training set, got " + std::to_string(seq.size()));
  }
  const Eigen::Index h = seq.height();
  const Eigen::Index w = seq.width();
  const Eigen::Index s = cfg.train_stride;
  const Eigen::Index rows_per_frame = (h + s - 1) / s;
  const Eigen::Index cols_per_frame = (w + s - 1) / s;
  const Eigen::Index windows = static_cast<Eigen::Index>(seq.size()) - 3;
  const Eigen::Index n = windows * rows_per_frame * cols_per_frame;
  const Eigen::Index area = cfg.patch_area();
  const int out_side = cfg.output_side();

  // Filled row-major then transposed into place: rows of X are contiguous here.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(n, cfg.input_dim());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> y(n, cfg.output_dim());
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < windows; ++i) {
    const auto u = static_cast<std::size_t>(i);
    for (Eigen::Index k = 0; k < h; k += s) {
      for (Eigen::Index l = 0; l < w; l += s) {
        double* row = x.row(j).data();
        extract_patch_into(seq[u], k, l, cfg.patch, row);
        extract_patch_into(seq[u + 1], k, l, cfg.patch, row + area);
        extract_patch_into(seq[u + 2], k, l, cfg.patch, row + 2 * area);
        extract_patch_into(seq[u + 3], k + cfg.boundary, l + cfg.boundary, out_side, y.row(j).data());
        ++j;
      }
    }
  }
  return TrainingSet{x, y, cfg};
}

Eigen::Index TestInput::known_count() const {
  Eigen::Index c = 0;
  for (bool k : known_mask) c += k ? 1 : 0;
  return c;
}

std::vector<TestInput> build_test_inputs(std::span<const WindowFrame> window, const PatchConfig& cfg) {
  cfg.validate();
  if (window.size() != 3) {
    throw ArgumentError("test window must hold exactly 3 frames, got " + std::to_string(window.size()));
  }
  const Eigen::Index h = window[0].mean.rows();
  const Eigen::Index w = window[0].mean.cols();
  for (const auto& f : window) {
    if (f.mean.rows() != h || f.mean.cols() != w) throw ArgumentError("window frames must share a shape");
    if (f.variance && (f.variance->rows() != h || f.variance->cols() != w)) {
      throw ArgumentError("variance image shape does not match its mean");
    }
  }
  const Eigen::Index area = cfg.patch_area();
  const Eigen::Index ts = cfg.test_stride;
  std::vector<TestInput> inputs;
  inputs.reserve(static_cast<std::size_t>(((h + ts - 1) / ts) * ((w + ts - 1) / ts)));
  for (Eigen::Index r = 0; r < h; r += ts) {
    for (Eigen::Index c = 0; c < w; c += ts) {
      TestInput in;
      in.row = r - cfg.boundary;
      in.col = c - cfg.boundary;
      in.mean.resize(cfg.input_dim());
      in.var = Eigen::VectorXd::Zero(cfg.input_dim());
      in.known_mask.assign(static_cast<std::size_t>(cfg.input_dim()), false);
      for (std::size_t f = 0; f < 3; ++f) {
        const Eigen::Index offset = static_cast<Eigen::Index>(f) * area;
        extract_patch_into(window[f].mean, in.row, in.col, cfg.patch, in.mean.data() + offset);
        if (window[f].variance) {
          extract_patch_into(*window[f].variance, in.row, in.col, cfg.patch, in.var.data() + offset);
        } else {
          std::fill(in.known_mask.begin() + offset, in.known_mask.begin() + offset + area, true);
        }
      }
      inputs.push_back(std::move(in));
    }
  }
  return inputs;
}

}  // namespace gpvp
