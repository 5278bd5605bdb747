#include "gpvp/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "gpvp/baselines.hpp"
#include "gpvp/errors.hpp"

namespace gpvp {

double relative_error(const Image& z, const Image& z_hat) {
  if (z.rows() != z_hat.rows() || z.cols() != z_hat.cols()) throw ArgumentError("relative_error: shape mismatch");
  const double denom = z.norm();
  if (denom == 0.0) throw UndefinedMetricError("relative error is undefined for an all-zero reference frame");
  return (z - z_hat).norm() / denom;
}

double mean_std_off(const Image& z, const Image& m, const Image& v) {
  if (z.rows() != m.rows() || z.cols() != m.cols() || z.rows() != v.rows() || z.cols() != v.cols()) {
    throw ArgumentError("mean_std_off: shape mismatch");
  }
  if ((v.array() < 0.0).any()) throw ArgumentError("mean_std_off: variance must be non-negative");
  return ((z - m).array().abs() / v.array().sqrt()).mean();
}

namespace {

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ArgumentError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ArgumentError("config key '" + key + "' expects a finite real, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ArgumentError("config key '" + key + "' expects a boolean, got '" + value + "'");
}

std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ArgumentError("config key '" + key + "' has an empty entry");
    item = item.substr(first, last - first + 1);
    std::uint64_t s = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), s);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ArgumentError("config key '" + key + "' expects non-negative integers, got '" + item + "'");
    }
    seeds.push_back(s);
  }
  if (seeds.empty()) throw ArgumentError("config key '" + key + "' needs at least one seed");
  return seeds;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(seeds[i]);
  }
  return out;
}

const char* bool_str(bool b) { return b ? "true" : "false"; }

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;  // empty: not part of canonical()
};

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  using S = std::string;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"resolution", {[](C& c, const S& k, const S& v) { c.sim.resolution = parse_int(k, v); },
                      [](const C& c) { return std::to_string(c.sim.resolution); }}},
      {"viscosity", {[](C& c, const S& k, const S& v) { c.sim.viscosity = parse_double(k, v); },
                     [](const C& c) { return format_real(c.sim.viscosity); }}},
      {"dt", {[](C& c, const S& k, const S& v) { c.sim.dt = parse_double(k, v); },
              [](const C& c) { return format_real(c.sim.dt); }}},
      {"record_every", {[](C& c, const S& k, const S& v) { c.sim.record_every = parse_double(k, v); },
                        [](const C& c) { return format_real(c.sim.record_every); }}},
      {"n_frames", {[](C& c, const S& k, const S& v) { c.sim.n_frames = parse_int(k, v); }, nullptr}},
      {"seed", {[](C& c, const S& k, const S& v) { c.sim.seed = parse_seeds(k, v).front(); }, nullptr}},
      {"forcing", {[](C& c, const S& k, const S& v) { c.sim.forcing = parse_bool(k, v); },
                   [](const C& c) { return S(bool_str(c.sim.forcing)); }}},
      {"forcing_amplitude", {[](C& c, const S& k, const S& v) { c.sim.forcing_amplitude = parse_double(k, v); },
                             [](const C& c) { return format_real(c.sim.forcing_amplitude); }}},
      {"grf_tau", {[](C& c, const S& k, const S& v) { c.sim.grf_tau = parse_double(k, v); },
                   [](const C& c) { return format_real(c.sim.grf_tau); }}},
      {"grf_exponent", {[](C& c, const S& k, const S& v) { c.sim.grf_exponent = parse_double(k, v); },
                        [](const C& c) { return format_real(c.sim.grf_exponent); }}},
      {"frame_resolution", {[](C& c, const S& k, const S& v) { c.frame_resolution = parse_int(k, v); },
                            [](const C& c) { return std::to_string(c.frame_resolution); }}},
      {"patch", {[](C& c, const S& k, const S& v) { c.patch.patch = parse_int(k, v); },
                 [](const C& c) { return std::to_string(c.patch.patch); }}},
      {"boundary", {[](C& c, const S& k, const S& v) { c.patch.boundary = parse_int(k, v); },
                    [](const C& c) { return std::to_string(c.patch.boundary); }}},
      {"train_stride", {[](C& c, const S& k, const S& v) { c.patch.train_stride = parse_int(k, v); },
                        [](const C& c) { return std::to_string(c.patch.train_stride); }}},
      {"max_iters", {[](C& c, const S& k, const S& v) { c.train.max_iters = parse_int(k, v); },
                     [](const C& c) { return std::to_string(c.train.max_iters); }}},
      {"rel_tol", {[](C& c, const S& k, const S& v) { c.train.rel_tol = parse_double(k, v); },
                   [](const C& c) { return format_real(c.train.rel_tol); }}},
      {"learning_rate", {[](C& c, const S& k, const S& v) { c.train.learning_rate = parse_double(k, v); },
                         [](const C& c) { return format_real(c.train.learning_rate); }}},
      {"beta1", {[](C& c, const S& k, const S& v) { c.train.beta1 = parse_double(k, v); },
                 [](const C& c) { return format_real(c.train.beta1); }}},
      {"beta2", {[](C& c, const S& k, const S& v) { c.train.beta2 = parse_double(k, v); },
                 [](const C& c) { return format_real(c.train.beta2); }}},
      {"epsilon", {[](C& c, const S& k, const S& v) { c.train.epsilon = parse_double(k, v); },
                   [](const C& c) { return format_real(c.train.epsilon); }}},
      {"max_backtracks", {[](C& c, const S& k, const S& v) { c.train.max_backtracks = parse_int(k, v); },
                          [](const C& c) { return std::to_string(c.train.max_backtracks); }}},
      {"isotropic", {[](C& c, const S& k, const S& v) { c.train.isotropic = parse_bool(k, v); },
                     [](const C& c) { return S(bool_str(c.train.isotropic)); }}},
      {"t0", {[](C& c, const S& k, const S& v) { c.t0 = parse_int(k, v); },
              [](const C& c) { return std::to_string(c.t0); }}},
      {"horizon", {[](C& c, const S& k, const S& v) { c.horizon = parse_int(k, v); },
                   [](const C& c) { return std::to_string(c.horizon); }}},
      {"knn_k", {[](C& c, const S& k, const S& v) { c.knn_k = parse_int(k, v); },
                 [](const C& c) { return std::to_string(c.knn_k); }}},
      {"seeds", {[](C& c, const S& k, const S& v) { c.seeds = parse_seeds(k, v); },
                 [](const C& c) { return join_seeds(c.seeds); }}},
      {"center", {[](C& c, const S& k, const S& v) { c.center = parse_bool(k, v); },
                  [](const C& c) { return S(bool_str(c.center)); }}},
      {"data", {[](C& c, const S&, const S& v) { c.data = v.empty() ? std::nullopt : std::optional(v); },
                [](const C& c) { return c.data ? c.data->generic_string() : S(); }}},
      {"out_dir", {[](C& c, const S&, const S& v) { c.out_dir = v; }, nullptr}},
      {"write_pgm", {[](C& c, const S& k, const S& v) { c.write_pgm = parse_bool(k, v); }, nullptr}},
  };
  return table;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

FrameSequence shifted(const FrameSequence& seq, double offset) {
  if (offset == 0.0) return seq;
  std::vector<Image> frames;
  for (const Image& f : seq.frames()) frames.push_back((f.array() - offset).matrix());
  return FrameSequence(std::move(frames), seq.dt_meta());
}

std::vector<MetricRow> score(const MeanVarSequence& mv, const FrameSequence& truth, std::size_t first_target) {
  std::vector<MetricRow> rows;
  for (std::size_t s = 0; s < mv.size(); ++s) {
    const Image& z = truth[first_target + s];
    rows.push_back({first_target + s, relative_error(z, mv.means()[s]), mean_std_off(z, mv.means()[s], mv.variances()[s]),
                    mv.variances()[s].mean()});
  }
  return rows;
}

MeanVarSequence unshift(const MeanVarSequence& mv, double offset) {
  if (offset == 0.0) return mv;
  MeanVarSequence out(mv.start_index());
  for (std::size_t s = 0; s < mv.size(); ++s) out.push_back((mv.means()[s].array() + offset).matrix(), mv.variances()[s]);
  return out;
}

std::string two_digit(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::small_preset() {
  ExperimentConfig cfg;
  cfg.sim.resolution = 32;
  cfg.frame_resolution = 16;
  cfg.patch = PatchConfig{7, 3, 2, 1};
  return cfg;
}

void ExperimentConfig::validate() const {
  SimConfig s = sim;
  s.n_frames = std::max(s.n_frames, 1);
  s.validate();
  if (!data && (frame_resolution < 1 || sim.resolution % frame_resolution != 0)) {
    throw ArgumentError("frame_resolution must divide the simulation resolution");
  }
  patch.validate();
  if (t0 < 4) throw ArgumentError("t0 must be >= 4 training frames");
  if (horizon < 1) throw ArgumentError("horizon must be >= 1");
  if (knn_k < 1) throw ArgumentError("knn_k must be >= 1");
  if (seeds.empty()) throw ArgumentError("seed list must be non-empty");
  if (train.max_iters < 0 || train.max_backtracks < 0) throw ArgumentError("optimizer iteration counts must be >= 0");
  if (!(train.learning_rate > 0.0) || !(train.rel_tol >= 0.0) || !(train.epsilon > 0.0)) {
    throw ArgumentError("optimizer learning_rate and epsilon must be positive, rel_tol non-negative");
  }
  if (!(train.beta1 >= 0.0 && train.beta1 < 1.0 && train.beta2 >= 0.0 && train.beta2 < 1.0)) {
    throw ArgumentError("optimizer betas must lie in [0, 1)");
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(*this, key, value);
      return;
    }
  }
  throw ArgumentError("unknown config key '" + key + "'");
}

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const auto& entry : fields()) out.push_back(entry.first);
  return out;
}

std::string ExperimentConfig::canonical() const {
  std::vector<std::pair<std::string, std::string>> lines;
  for (const auto& [name, field] : fields()) {
    if (field.get) lines.emplace_back(name, field.get(*this));
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& [k, v] : lines) out += k + " = " + v + "\n";
  return out;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ArgumentError("config line " + std::to_string(number) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

void EvalReport::summarize() {
  mean_re = mean_stde = mean_var = 0.0;
  if (rows.empty()) return;
  for (const MetricRow& r : rows) {
    mean_re += r.re;
    mean_stde += r.stde;
    mean_var += r.mean_var;
  }
  const auto n = static_cast<double>(rows.size());
  mean_re /= n;
  mean_stde /= n;
  mean_var /= n;
}

FrameSequence ground_truth(const ExperimentConfig& cfg, std::uint64_t seed, int n_frames) {
  if (cfg.data) {
    FrameSequence seq = read_sequence(*cfg.data);
    if (seq.size() < static_cast<std::size_t>(n_frames)) {
      throw ArgumentError("ground truth has " + std::to_string(seq.size()) + " frames, need " + std::to_string(n_frames));
    }
    return seq;
  }
  SimConfig sim = cfg.sim;
  sim.seed = seed;
  sim.n_frames = n_frames;
  FrameSequence seq = simulate(sim);
  return cfg.frame_resolution == sim.resolution ? seq : restrict_grid(seq, cfg.frame_resolution);
}

ForwardRun forward_run(const ExperimentConfig& cfg, const FrameSequence& truth) {
  cfg.validate();
  const auto t0 = static_cast<std::size_t>(cfg.t0);
  const auto horizon = static_cast<std::size_t>(cfg.horizon);
  if (truth.size() < t0 + horizon) {
    throw ArgumentError("ground truth has " + std::to_string(truth.size()) + " frames, need t0 + horizon = " +
                        std::to_string(t0 + horizon));
  }
  ForwardRun run;
  const FrameSequence train_frames = truth.slice(0, t0);
  if (cfg.center) {
    double sum = 0.0;
    for (const Image& f : train_frames.frames()) sum += f.sum();
    run.offset = sum / static_cast<double>(t0 * static_cast<std::size_t>(truth.height() * truth.width()));
  }
  const FrameSequence centered = shifted(train_frames, run.offset);
  run.training = build_training_set(centered, cfg.patch);
  GpModel model = train(run.training, cfg.train);
  model.set_source(std::make_shared<const FrameSequence>(centered));
  run.plan = RolloutPlan::from_sequence(centered, t0 - 3, cfg.horizon, cfg.patch);
  run.prediction = unshift(rollout(model, run.plan), run.offset);
  for (std::size_t s = 0; s < horizon; ++s) run.targets.push_back(truth[t0 + s]);
  run.report.method = "gp";
  run.report.rows = score(run.prediction, truth, t0);
  run.report.config_hash = cfg.hash();
  run.report.summarize();
  run.model = std::move(model);
  return run;
}

void write_provenance(const std::filesystem::path& dir, const ExperimentConfig& cfg) {
  ensure_dir(dir);
  write_text_file(dir / "provenance.txt",
                  "config_hash = " + cfg.hash() + "\nseeds = " + join_seeds(cfg.seeds) + "\n" + cfg.canonical());
}

void write_forward_pgm(const std::filesystem::path& dir, const ForwardRun& run) {
  ensure_dir(dir);
  const auto& means = run.prediction.means();
  const auto& vars = run.prediction.variances();
  std::vector<Image> err;
  double lo = 0.0, hi = 0.0, err_hi = 0.0, var_lo = 0.0, var_hi = 0.0;
  for (std::size_t s = 0; s < run.targets.size(); ++s) {
    err.push_back((run.targets[s] - means[s]).cwiseAbs());
    const double a = std::min(run.targets[s].minCoeff(), means[s].minCoeff());
    const double b = std::max(run.targets[s].maxCoeff(), means[s].maxCoeff());
    lo = s == 0 ? a : std::min(lo, a);
    hi = s == 0 ? b : std::max(hi, b);
    err_hi = std::max(err_hi, err.back().maxCoeff());
    var_lo = s == 0 ? vars[s].minCoeff() : std::min(var_lo, vars[s].minCoeff());
    var_hi = s == 0 ? vars[s].maxCoeff() : std::max(var_hi, vars[s].maxCoeff());
  }
  auto span_of = [](double a, double b) { return b > a ? b : a + 1.0; };
  export_pgm(hstack(run.targets, lo), dir / "forward_truth.pgm", lo, span_of(lo, hi));
  export_pgm(hstack(means, lo), dir / "forward_mean.pgm", lo, span_of(lo, hi));
  export_pgm(hstack(err, 0.0), dir / "forward_error.pgm", 0.0, span_of(0.0, err_hi));
  export_pgm(hstack(vars, var_lo), dir / "forward_variance.pgm", var_lo, span_of(var_lo, var_hi));
}

EvalReport run_forward_prediction(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.seeds.front();
  const FrameSequence truth = ground_truth(cfg, seed, cfg.t0 + cfg.horizon);
  ForwardRun run = forward_run(cfg, truth);
  run.report.seeds = {seed};
  if (!cfg.out_dir.empty()) {
    write_provenance(cfg.out_dir, cfg);
    write_text_file(cfg.out_dir / "forward.csv", format_metrics_csv(run.report.rows));
    if (cfg.write_pgm) write_forward_pgm(cfg.out_dir, run);
  }
  return run.report;
}

const MethodCurve& ComparisonReport::curve(const std::string& method) const {
  for (const MethodCurve& c : curves) {
    if (c.method == method) return c;
  }
  throw ArgumentError("no curve for method '" + method + "'");
}

ComparisonReport run_comparison(const ExperimentConfig& cfg) {
  cfg.validate();
  ComparisonReport report;
  report.config_hash = cfg.hash();
  report.seeds = cfg.seeds;
  report.curves = {{"gp", {}, {}, {}}, {"knn", {}, {}, {}}, {"persistence", {}, {}, {}}};
  const auto t0 = static_cast<std::size_t>(cfg.t0);
  for (std::uint64_t seed : cfg.seeds) {
    const FrameSequence truth = ground_truth(cfg, seed, cfg.t0 + cfg.horizon);
    const ForwardRun run = forward_run(cfg, truth);

    FrameSequence knn = knn_rollout(run.training, run.model->params(), run.plan, cfg.knn_k);
    const RolloutPlan raw_plan = RolloutPlan::from_sequence(truth, t0 - 3, cfg.horizon, cfg.patch);
    const FrameSequence persistence = persistence_predict(raw_plan);

    std::vector<double> gp_re, knn_re, pers_re;
    for (std::size_t s = 0; s < run.targets.size(); ++s) {
      gp_re.push_back(run.report.rows[s].re);
      knn_re.push_back(relative_error(run.targets[s], (knn[s].array() + run.offset).matrix()));
      pers_re.push_back(relative_error(run.targets[s], persistence[s]));
    }
    report.curves[0].per_seed.push_back(std::move(gp_re));
    report.curves[1].per_seed.push_back(std::move(knn_re));
    report.curves[2].per_seed.push_back(std::move(pers_re));
  }
  for (MethodCurve& c : report.curves) {
    for (std::size_t s = 0; s < static_cast<std::size_t>(cfg.horizon); ++s) {
      c.t.push_back(t0 + s);
      double sum = 0.0;
      for (const auto& seed_curve : c.per_seed) sum += seed_curve[s];
      c.mean_re.push_back(sum / static_cast<double>(c.per_seed.size()));
    }
  }
  if (!cfg.out_dir.empty()) {
    write_provenance(cfg.out_dir, cfg);
    write_text_file(cfg.out_dir / "comparison.csv", format_comparison_csv(report));
    write_text_file(cfg.out_dir / "comparison_seeds.csv", format_comparison_seeds_csv(report));
  }
  return report;
}

std::string format_comparison_csv(const ComparisonReport& report) {
  std::string out = "method,t,re\n";
  for (const MethodCurve& c : report.curves) {
    for (std::size_t s = 0; s < c.t.size(); ++s) {
      out += c.method + "," + std::to_string(c.t[s]) + "," + format_real(c.mean_re[s]) + "\n";
    }
  }
  return out;
}

std::string format_comparison_seeds_csv(const ComparisonReport& report) {
  std::string out = "seed,method,t,re\n";
  for (std::size_t k = 0; k < report.seeds.size(); ++k) {
    for (const MethodCurve& c : report.curves) {
      for (std::size_t s = 0; s < c.t.size(); ++s) {
        out += std::to_string(report.seeds[k]) + "," + c.method + "," + std::to_string(c.t[s]) + "," +
               format_real(c.per_seed[k][s]) + "\n";
      }
    }
  }
  return out;
}

SequentialReport run_sequential(const ExperimentConfig& cfg, const std::vector<int>& t0_values) {
  cfg.validate();
  if (t0_values.empty()) throw ArgumentError("sequential experiment needs at least one t0");
  SequentialReport report;
  report.t0_values = t0_values;
  const int max_t0 = *std::max_element(t0_values.begin(), t0_values.end());
  const FrameSequence truth = ground_truth(cfg, cfg.seeds.front(), max_t0 + cfg.horizon);
  report.fair_first_index = static_cast<std::size_t>(max_t0 - 3);

  for (int t0 : t0_values) {
    ExperimentConfig local = cfg;
    local.t0 = t0;
    ForwardRun run = forward_run(local, truth);
    run.report.method = "gp_t" + two_digit(t0);
    run.report.seeds = {cfg.seeds.front()};

    const FrameSequence centered = shifted(truth, run.offset);
    const RolloutPlan fair = RolloutPlan::from_sequence(centered, report.fair_first_index, cfg.horizon, cfg.patch);
    EvalReport fair_report;
    fair_report.method = run.report.method + "_fair";
    fair_report.rows = score(unshift(rollout(*run.model, fair), run.offset), truth, static_cast<std::size_t>(max_t0));
    fair_report.config_hash = run.report.config_hash;
    fair_report.seeds = run.report.seeds;
    fair_report.summarize();

    if (!cfg.out_dir.empty()) {
      write_provenance(cfg.out_dir, cfg);
      write_text_file(cfg.out_dir / ("sequential_t" + two_digit(t0) + ".csv"), format_metrics_csv(run.report.rows));
      write_text_file(cfg.out_dir / ("sequential_fair_t" + two_digit(t0) + ".csv"), format_metrics_csv(fair_report.rows));
    }
    report.own_start.push_back(std::move(run.report));
    report.fair_start.push_back(std::move(fair_report));
  }
  return report;
}

}  // namespace gpvp
