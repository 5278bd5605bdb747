#include "gpvp/gp_train.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "gpvp/errors.hpp"

namespace gpvp {

namespace {

struct Posterior {
  Eigen::MatrixXd k;  // noise-free kernel matrix
  PsdFactor factor;
  Eigen::VectorXd beta;
};

Posterior posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelParams& params,
                    const JitterPolicy& jitter) {
  Posterior post;
  post.k = kernel_matrix(x, params);
  Eigen::MatrixXd ky = post.k;
  ky.diagonal().array() += params.noise_var();
  post.factor = factorize_psd(ky, jitter);
  post.beta = post.factor.solve(y);
  return post;
}

double column_std(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

// Packed parameters of the optimizer: full ARD or one shared lengthscale.
Eigen::VectorXd to_theta(const KernelParams& p, bool isotropic) {
  if (!isotropic) return p.pack();
  Eigen::VectorXd t(3);
  t << p.log_alpha, p.log_lengthscales.mean(), p.log_noise;
  return t;
}

KernelParams from_theta(const Eigen::VectorXd& t, Eigen::Index dim, bool isotropic) {
  if (!isotropic) return KernelParams::unpack(t);
  KernelParams p;
  p.log_alpha = t(0);
  p.log_lengthscales = Eigen::VectorXd::Constant(dim, t(1));
  p.log_noise = t(2);
  return p;
}

Eigen::VectorXd theta_gradient(const Eigen::VectorXd& full, bool isotropic) {
  if (!isotropic) return full;
  Eigen::VectorXd g(3);
  g << full(0), full.segment(1, full.size() - 2).sum(), full(full.size() - 1);
  return g;
}

std::string describe(const KernelParams& p) {
  std::ostringstream s;
  s << "log_alpha=" << p.log_alpha << " log_noise=" << p.log_noise << " log_lengthscales[min,max]=["
    << p.log_lengthscales.minCoeff() << "," << p.log_lengthscales.maxCoeff() << "]";
  return s.str();
}

}  // namespace

LmlResult log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelParams& params,
                                  const JitterPolicy& jitter) {
  const Eigen::Index n = x.rows();
  const Eigen::Index dim = x.cols();
  if (n < 1) throw ArgumentError("log marginal likelihood needs at least one point");
  if (y.size() != n) throw ArgumentError("target length does not match the number of inputs");
  if (params.dim() != dim) throw ArgumentError("kernel dimension does not match the inputs");

  // Distances are translation invariant; centering limits cancellation below.
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Posterior post = posterior(xc, y, params, jitter);

  LmlResult out;
  out.value = -0.5 * y.dot(post.beta) - 0.5 * post.factor.log_det -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // d/dtheta = 1/2 tr(W dK/dtheta) with W = beta beta^T - K_y^-1.
  Eigen::MatrixXd w = post.beta * post.beta.transpose() - post.factor.inverse();
  const double noise_grad = params.noise_var() * w.trace();
  w.array() *= post.k.array();  // W o K

  out.gradient.resize(dim + 2);
  out.gradient(0) = w.sum();
  out.gradient(dim + 1) = noise_grad;

  const Eigen::VectorXd row_sums = w.rowwise().sum();
  const Eigen::MatrixXd wx = w * xc;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double quad = xc.col(d).dot(wx.col(d));
    const double diag = xc.col(d).array().square().matrix().dot(row_sums);
    out.gradient(d + 1) = (diag - quad) * std::exp(-2.0 * params.log_lengthscales(d));
  }
  return out;
}

KernelParams initial_params(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  KernelParams p;
  const double sy = column_std(y);
  p.log_alpha = sy > 0.0 ? std::log(sy) : 0.0;
  p.log_lengthscales.resize(x.cols());
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const double sd = column_std(x.col(d));
    p.log_lengthscales(d) = 0.5 * std::log(std::max(sd * sd, 1e-6));
  }
  p.log_noise = std::log(0.1 * sy + 1e-8);
  return p;
}

KernelParams fit_output_dim(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KernelParams& start,
                            const TrainOptions& options, FitTrace* trace) {
  const Eigen::Index dim = x.cols();
  const bool iso = options.isotropic;

  auto evaluate = [&](const Eigen::VectorXd& theta, LmlResult& out) {
    try {
      out = log_marginal_likelihood(x, y, from_theta(theta, dim, iso), options.jitter);
    } catch (const NumericalError&) {
      return false;
    }
    return std::isfinite(out.value) && out.gradient.allFinite();
  };

  Eigen::VectorXd theta = to_theta(start, iso);
  LmlResult current;
  if (!evaluate(theta, current)) {
    throw TrainingError("non-finite log marginal likelihood at iteration 0 (" + describe(start) + ")");
  }
  FitTrace local;
  FitTrace& tr = trace ? *trace : local;
  tr = FitTrace{};
  tr.lml.push_back(current.value);

  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  double b1t = 1.0;
  double b2t = 1.0;

  for (int it = 1; it <= options.max_iters; ++it) {
    tr.iterations = it;
    const Eigen::VectorXd g = theta_gradient(current.gradient, iso);
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g.cwiseAbs2();
    b1t *= options.beta1;
    b2t *= options.beta2;
    const Eigen::VectorXd m_hat = m / (1.0 - b1t);
    const Eigen::VectorXd v_hat = v / (1.0 - b2t);
    const Eigen::VectorXd step =
        (options.learning_rate * m_hat.array() / (v_hat.array().sqrt() + options.epsilon)).matrix();

    // Backtrack until the objective does not decrease.
    double scale = 1.0;
    bool accepted = false;
    bool saw_finite = false;
    LmlResult trial;
    Eigen::VectorXd candidate;
    for (int bt = 0; bt <= options.max_backtracks; ++bt, scale *= 0.5) {
      candidate = theta + scale * step;
      if (!evaluate(candidate, trial)) continue;
      saw_finite = true;
      if (trial.value >= current.value) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!saw_finite) {
        throw TrainingError("non-finite log marginal likelihood at iteration " + std::to_string(it) + " (" +
                            describe(from_theta(candidate, dim, iso)) + ")");
      }
      tr.converged = true;
      break;
    }
    const double change = std::abs(trial.value - current.value) / std::max(std::abs(current.value), 1e-300);
    theta = candidate;
    current = std::move(trial);
    tr.lml.push_back(current.value);
    // A shortened step says little about convergence; only full steps count.
    if (scale == 1.0 && change < options.rel_tol) {
      tr.converged = true;
      break;
    }
  }
  return from_theta(theta, dim, iso);
}

GpModel::GpModel(Eigen::MatrixXd inputs, Eigen::MatrixXd outputs, std::vector<KernelParams> params,
                 const JitterPolicy& jitter)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
  if (inputs_.rows() != outputs_.rows()) throw ArgumentError("inputs and outputs must have the same row count");
  if (inputs_.rows() < 1) throw ArgumentError("a GP model needs at least one training point");
  if (static_cast<Eigen::Index>(params.size()) != outputs_.cols()) {
    throw ArgumentError("need one kernel parameter set per output dimension");
  }
  if (!inputs_.allFinite() || !outputs_.allFinite()) throw ValidationError("training data must be finite");
  for (auto& p : params) {
    if (p.dim() != inputs_.cols()) throw ArgumentError("kernel dimension does not match the inputs");
    if (!std::isfinite(p.log_alpha) || !std::isfinite(p.log_noise) || !p.log_lengthscales.allFinite()) {
      throw ValidationError("kernel parameters must be finite");
    }
    Posterior post = posterior(inputs_, outputs_.col(static_cast<Eigen::Index>(dims_.size())), p, jitter);
    OutputGp gp;
    gp.params = std::move(p);
    gp.factor = std::move(post.factor);
    gp.beta = std::move(post.beta);
    gp.moment_weights = gp.beta * gp.beta.transpose() - gp.factor.inverse();
    dims_.push_back(std::move(gp));
  }
  if (auto cfg = infer_patch_config(input_dim(), output_dim())) patch_config_ = *cfg;
}

std::vector<KernelParams> GpModel::params() const {
  std::vector<KernelParams> out;
  for (const auto& d : dims_) out.push_back(d.params);
  return out;
}

void GpModel::set_patch_config(const PatchConfig& cfg) {
  cfg.validate();
  if (cfg.input_dim() != input_dim() || cfg.output_dim() != output_dim()) {
    throw ArgumentError("patch configuration does not match the model dimensions");
  }
  patch_config_ = cfg;
}

GpModel train(const TrainingSet& ts, const TrainOptions& options, const std::optional<std::vector<KernelParams>>& start,
              std::vector<FitTrace>* traces) {
  if (ts.size() < 2) throw InsufficientDataError("training needs at least 2 points");
  if (start && static_cast<Eigen::Index>(start->size()) != ts.outputs.cols()) {
    throw ArgumentError("warm start needs one parameter set per output dimension");
  }
  std::vector<KernelParams> fitted;
  if (traces) traces->assign(static_cast<std::size_t>(ts.outputs.cols()), FitTrace{});
  for (Eigen::Index a = 0; a < ts.outputs.cols(); ++a) {
    const Eigen::VectorXd y = ts.outputs.col(a);
    const KernelParams init = start ? (*start)[static_cast<std::size_t>(a)] : initial_params(ts.inputs, y);
    fitted.push_back(
        fit_output_dim(ts.inputs, y, init, options, traces ? &(*traces)[static_cast<std::size_t>(a)] : nullptr));
  }
  GpModel model(ts.inputs, ts.outputs, std::move(fitted), options.jitter);
  model.set_patch_config(ts.config);
  return model;
}

namespace {

constexpr char kModelMagic[4] = {'G', 'P', 'M', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t offset) : bytes_(bytes), pos_(offset) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > bytes_.size()) throw LengthError("truncated model file");
  }
  const std::string& bytes_;
  std::size_t pos_;
};

}  // namespace

std::string encode_model(const GpModel& model) {
  std::string out(kModelMagic, 4);
  const auto dim = model.input_dim();
  put_u32(out, static_cast<std::uint32_t>(dim));
  put_u32(out, static_cast<std::uint32_t>(model.output_dim()));
  put_u32(out, static_cast<std::uint32_t>(model.size()));
  for (Eigen::Index a = 0; a < model.output_dim(); ++a) {
    const auto& p = model.dim(a).params;
    put_f64(out, p.log_alpha);
    for (Eigen::Index d = 0; d < dim; ++d) put_f64(out, p.log_lengthscales(d));
    put_f64(out, p.log_noise);
  }
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    for (Eigen::Index d = 0; d < dim; ++d) put_f64(out, model.inputs()(i, d));
  }
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    for (Eigen::Index a = 0; a < model.output_dim(); ++a) put_f64(out, model.outputs()(i, a));
  }
  return out;
}

GpModel decode_model(const std::string& bytes, const JitterPolicy& jitter) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    throw FormatError("bad magic: expected GPM1");
  }
  Reader r(bytes, 4);
  const auto dim = r.u32();
  const auto out_dim = r.u32();
  const auto n = r.u32();
  if (dim == 0 || out_dim == 0 || n == 0) throw FormatError("model dimensions must be positive");
  std::vector<KernelParams> params(out_dim);
  for (auto& p : params) {
    p.log_alpha = r.f64();
    p.log_lengthscales.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) p.log_lengthscales(d) = r.f64();
    p.log_noise = r.f64();
  }
  Eigen::MatrixXd x(n, dim);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t d = 0; d < dim; ++d) x(i, d) = r.f64();
  Eigen::MatrixXd y(n, out_dim);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t a = 0; a < out_dim; ++a) y(i, a) = r.f64();
  if (!r.done()) throw LengthError("trailing bytes after model payload");
  return GpModel(std::move(x), std::move(y), std::move(params), jitter);
}

void save_model(const GpModel& model, const std::filesystem::path& path) { write_text_file(path, encode_model(model)); }

GpModel load_model(const std::filesystem::path& path, const JitterPolicy& jitter) {
  return decode_model(read_text_file(path), jitter);
}

}  // namespace gpvp
