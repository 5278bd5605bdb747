#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gpvp {

// One H x W frame, row-major so that flattening matches the on-disk layout.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Ordered stack of equally sized, finite frames.
class FrameSequence {
 public:
  FrameSequence() = default;
  explicit FrameSequence(std::vector<Image> frames, std::optional<double> dt_meta = std::nullopt);

  std::size_t size() const { return frames_.size(); }
  Eigen::Index height() const { return frames_.empty() ? 0 : frames_.front().rows(); }
  Eigen::Index width() const { return frames_.empty() ? 0 : frames_.front().cols(); }
  const Image& operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<Image>& frames() const { return frames_; }
  std::optional<double> dt_meta() const { return dt_meta_; }

  // Frames [first, first + count).
  FrameSequence slice(std::size_t first, std::size_t count) const;

 private:
  std::vector<Image> frames_;
  std::optional<double> dt_meta_;
};

// Bitwise comparison of dimensions, payload and dt metadata.
bool bitwise_equal(const FrameSequence& a, const FrameSequence& b);

// Paired mean / variance images produced by a probabilistic rollout.
class MeanVarSequence {
 public:
  MeanVarSequence() = default;
  explicit MeanVarSequence(std::size_t start_index) : start_index_(start_index) {}

  void push_back(Image mean, Image variance);

  std::size_t size() const { return means_.size(); }
  std::size_t start_index() const { return start_index_; }
  const std::vector<Image>& means() const { return means_; }
  const std::vector<Image>& variances() const { return variances_; }

 private:
  std::vector<Image> means_;
  std::vector<Image> variances_;
  std::size_t start_index_ = 0;
};

// ".gpvs" container: "GPVS", u32 version, u32 T/H/W, u8 dt flag, [f64 dt],
// then T*H*W little-endian f64 values.
inline constexpr std::uint32_t kSequenceFormatVersion = 1;

std::string encode_sequence(const FrameSequence& seq);
FrameSequence decode_sequence(std::span<const char> bytes);

void write_sequence(const FrameSequence& seq, const std::filesystem::path& path);
FrameSequence read_sequence(const std::filesystem::path& path);

// 8-bit binary PGM; pixel = round(255 * clamp((v - lo) / (hi - lo), 0, 1)).
std::string encode_pgm(const Image& frame, double lo, double hi);
void export_pgm(const Image& frame, const std::filesystem::path& path, double lo, double hi);

// Horizontal strip of frames separated by a one-pixel gap, for quick looks.
Image hstack(std::span<const Image> frames, double gap_value);

struct MetricRow {
  std::size_t t = 0;
  double re = 0.0;
  double stde = 0.0;
  double mean_var = 0.0;
};

// Header "t,re,stde,mean_var"; reals printed with 17 significant digits.
std::string format_metrics_csv(std::span<const MetricRow> rows);
void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

// Shortest round-trippable decimal representation used by every CSV writer.
std::string format_real(double v);

}  // namespace gpvp
