#include "gpvp/tensorio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gpvp/errors.hpp"

namespace gpvp {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'V', 'S'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 12 + 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

double get_f64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(v);
}

void check_finite(const Image& img, std::size_t index) {
  if (!img.allFinite()) {
    throw ValidationError("frame " + std::to_string(index) + " contains non-finite values");
  }
}

}  // namespace

FrameSequence::FrameSequence(std::vector<Image> frames, std::optional<double> dt_meta)
    : frames_(std::move(frames)), dt_meta_(dt_meta) {
  if (frames_.empty()) throw ValidationError("frame sequence must hold at least one frame");
  const auto h = frames_.front().rows();
  const auto w = frames_.front().cols();
  if (h < 1 || w < 1) throw ValidationError("frames must be at least 1x1");
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    if (frames_[i].rows() != h || frames_[i].cols() != w) {
      throw ValidationError("frame " + std::to_string(i) + " has mismatched shape");
    }
    check_finite(frames_[i], i);
  }
  if (dt_meta_ && !std::isfinite(*dt_meta_)) throw ValidationError("dt_meta must be finite");
}

FrameSequence FrameSequence::slice(std::size_t first, std::size_t count) const {
  if (first + count > frames_.size() || count == 0) {
    throw ArgumentError("slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                        ") out of range for " + std::to_string(frames_.size()) + " frames");
  }
  return FrameSequence(std::vector<Image>(frames_.begin() + static_cast<std::ptrdiff_t>(first),
                                          frames_.begin() + static_cast<std::ptrdiff_t>(first + count)),
                       dt_meta_);
}

bool bitwise_equal(const FrameSequence& a, const FrameSequence& b) {
  if (a.size() != b.size() || a.height() != b.height() || a.width() != b.width()) return false;
  if (a.dt_meta().has_value() != b.dt_meta().has_value()) return false;
  if (a.dt_meta() && std::bit_cast<std::uint64_t>(*a.dt_meta()) != std::bit_cast<std::uint64_t>(*b.dt_meta())) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::memcmp(a[i].data(), b[i].data(), sizeof(double) * static_cast<std::size_t>(a[i].size())) != 0) {
      return false;
    }
  }
  return true;
}

void MeanVarSequence::push_back(Image mean, Image variance) {
  if (mean.rows() != variance.rows() || mean.cols() != variance.cols()) {
    throw ValidationError("mean and variance images must share a shape");
  }
  if (!means_.empty() && (mean.rows() != means_.front().rows() || mean.cols() != means_.front().cols())) {
    throw ValidationError("all predicted frames must share a shape");
  }
  if (!mean.allFinite() || !variance.allFinite()) throw ValidationError("predicted frame is not finite");
  if ((variance.array() < 0.0).any()) throw ValidationError("variance image has negative pixels");
  means_.push_back(std::move(mean));
  variances_.push_back(std::move(variance));
}

std::string encode_sequence(const FrameSequence& seq) {
  if (seq.size() == 0) throw ValidationError("cannot encode an empty sequence");
  for (std::size_t i = 0; i < seq.size(); ++i) check_finite(seq[i], i);

  std::string out;
  const std::size_t values = seq.size() * static_cast<std::size_t>(seq.height() * seq.width());
  out.reserve(kHeaderBytes + 8 + 8 * values);
  out.append(kMagic, 4);
  put_u32(out, kSequenceFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(seq.size()));
  put_u32(out, static_cast<std::uint32_t>(seq.height()));
  put_u32(out, static_cast<std::uint32_t>(seq.width()));
  out.push_back(seq.dt_meta() ? '\x01' : '\x00');
  if (seq.dt_meta()) put_f64(out, *seq.dt_meta());
  for (const auto& frame : seq.frames()) {
    for (Eigen::Index k = 0; k < frame.size(); ++k) put_f64(out, frame.data()[k]);
  }
  return out;
}

FrameSequence decode_sequence(std::span<const char> bytes) {
  if (bytes.size() < kHeaderBytes) throw LengthError("sequence file shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic: expected GPVS");
  const auto version = get_u32(bytes.data() + 4);
  if (version != kSequenceFormatVersion) {
    throw FormatError("unsupported sequence version " + std::to_string(version));
  }
  const auto t = get_u32(bytes.data() + 8);
  const auto h = get_u32(bytes.data() + 12);
  const auto w = get_u32(bytes.data() + 16);
  const auto flag = static_cast<unsigned char>(bytes[20]);
  if (flag > 1) throw FormatError("bad dt flag");
  if (t == 0 || h == 0 || w == 0) throw FormatError("sequence dimensions must be positive");

  std::size_t offset = kHeaderBytes;
  std::optional<double> dt;
  if (flag == 1) {
    if (bytes.size() < offset + 8) throw LengthError("truncated dt field");
    dt = get_f64(bytes.data() + offset);
    offset += 8;
  }
  const std::size_t per_frame = static_cast<std::size_t>(h) * w;
  const std::size_t expected = offset + 8 * per_frame * t;
  if (bytes.size() < expected) throw LengthError("truncated payload");
  if (bytes.size() > expected) throw LengthError("trailing bytes after payload");

  std::vector<Image> frames;
  frames.reserve(t);
  for (std::uint32_t f = 0; f < t; ++f) {
    Image img(h, w);
    for (std::size_t k = 0; k < per_frame; ++k) {
      img.data()[k] = get_f64(bytes.data() + offset);
      offset += 8;
    }
    frames.push_back(std::move(img));
  }
  return FrameSequence(std::move(frames), dt);
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_sequence(const FrameSequence& seq, const std::filesystem::path& path) {
  write_text_file(path, encode_sequence(seq));
}

FrameSequence read_sequence(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  return decode_sequence(std::span<const char>(bytes.data(), bytes.size()));
}

std::string encode_pgm(const Image& frame, double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("export_pgm requires lo < hi");
  std::string out = "P5\n" + std::to_string(frame.cols()) + " " + std::to_string(frame.rows()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(frame.size()));
  for (Eigen::Index k = 0; k < frame.size(); ++k) {
    const double u = std::clamp((frame.data()[k] - lo) / (hi - lo), 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * u))));
  }
  return out;
}

void export_pgm(const Image& frame, const std::filesystem::path& path, double lo, double hi) {
  write_text_file(path, encode_pgm(frame, lo, hi));
}

Image hstack(std::span<const Image> frames, double gap_value) {
  if (frames.empty()) return Image();
  const auto h = frames.front().rows();
  Eigen::Index w = 0;
  for (const auto& f : frames) {
    if (f.rows() != h) throw ArgumentError("hstack frames must share a height");
    w += f.cols();
  }
  w += static_cast<Eigen::Index>(frames.size()) - 1;
  Image strip = Image::Constant(h, w, gap_value);
  Eigen::Index col = 0;
  for (const auto& f : frames) {
    strip.block(0, col, h, f.cols()) = f;
    col += f.cols() + 1;
  }
  return strip;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_metrics_csv(std::span<const MetricRow> rows) {
  std::string out = "t,re,stde,mean_var\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t) + "," + format_real(r.re) + "," + format_real(r.stde) + "," +
           format_real(r.mean_var) + "\n";
  }
  return out;
}

}  // namespace gpvp
