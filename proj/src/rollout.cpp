#include "gpvp/rollout.hpp"

#include <string>

#include "gpvp/errors.hpp"
#include "gpvp/gp_predict.hpp"
#include "gpvp/mm_predict.hpp"

namespace gpvp {

RolloutPlan RolloutPlan::from_sequence(const FrameSequence& seq, std::size_t first, int horizon,
                                       const PatchConfig& cfg) {
  if (first + 3 > seq.size()) throw ArgumentError("start window runs past the end of the sequence");
  RolloutPlan plan;
  plan.start_frames = {seq[first], seq[first + 1], seq[first + 2]};
  plan.horizon = horizon;
  plan.cfg = cfg;
  plan.first_index = first;
  return plan;
}

PatchConfig rollout_geometry(const RolloutPlan& plan) {
  if (plan.horizon < 1) throw ArgumentError("rollout horizon must be >= 1");
  PatchConfig cfg = plan.cfg;
  cfg.validate();
  cfg.test_stride = cfg.output_side();
  const Eigen::Index h = plan.start_frames[0].rows();
  const Eigen::Index w = plan.start_frames[0].cols();
  if (h < 1 || w < 1) throw ArgumentError("start frames must be non-empty");
  for (const Image& f : plan.start_frames) {
    if (f.rows() != h || f.cols() != w) throw ArgumentError("start frames must share a shape");
    if (!f.allFinite()) throw ArgumentError("start frames must be finite");
  }
  if (h % cfg.test_stride != 0 || w % cfg.test_stride != 0) {
    throw ArgumentError("frame size must be a multiple of the output patch side " + std::to_string(cfg.test_stride));
  }
  return cfg;
}

Rollout::Rollout(const GpModel& model, const RolloutPlan& plan)
    : model_(model), cfg_(rollout_geometry(plan)), output_(plan.first_index + 3) {
  const PatchConfig& trained = model.patch_config();
  if (trained.patch != cfg_.patch || trained.boundary != cfg_.boundary) {
    throw ArgumentError("rollout patch geometry does not match the model");
  }
  if (cfg_.input_dim() != model.input_dim() || cfg_.output_dim() != model.output_dim()) {
    throw ArgumentError("rollout patch geometry does not match the model dimensions");
  }
  if (const auto& src = model.source(); src && (src->height() != plan.start_frames[0].rows() ||
                                                src->width() != plan.start_frames[0].cols())) {
    throw ArgumentError("start frames do not match the training frame shape");
  }
  for (const Image& f : plan.start_frames) window_.push_back(WindowFrame::observed(f));
}

void Rollout::step() {
  const std::vector<TestInput> inputs = build_test_inputs(window_, cfg_);
  const Eigen::Index h = window_[0].mean.rows();
  const Eigen::Index w = window_[0].mean.cols();
  const int side = cfg_.output_side();
  Image mean(h, w);
  Image var(h, w);

  auto scatter = [&](const TestInput& in, auto&& value_of) {
    for (int r = 0; r < side; ++r) {
      const Eigen::Index rr = wrap_index(in.row + cfg_.boundary + r, h);
      for (int c = 0; c < side; ++c) {
        const Eigen::Index cc = wrap_index(in.col + cfg_.boundary + c, w);
        const auto [m, v] = value_of(static_cast<Eigen::Index>(r) * side + c);
        mean(rr, cc) = m;
        var(rr, cc) = v;
      }
    }
  };

  const bool all_known = window_[0].known() && window_[1].known() && window_[2].known();
  const bool none_known = !window_[0].known() && !window_[1].known() && !window_[2].known();
  if (all_known) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(inputs.size()), model_.input_dim());
    for (std::size_t j = 0; j < inputs.size(); ++j) x.row(static_cast<Eigen::Index>(j)) = inputs[j].mean.transpose();
    const BatchPrediction p = predict_deterministic_batch(model_, x);
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      scatter(inputs[j], [&](Eigen::Index a) { return std::pair{p.mean(row, a), p.var(row, a)}; });
    }
  } else {
    for (const TestInput& in : inputs) {
      const bool exact_dims = (in.var.array() == 0.0).any();
      const std::vector<PredictedPixel> px =
          none_known && !exact_dims ? mm_predict_random(model_, in) : mm_predict_hybrid(model_, in);
      scatter(in, [&](Eigen::Index a) {
        const PredictedPixel& q = px[static_cast<std::size_t>(a)];
        return std::pair{q.mean, q.var};
      });
    }
  }

  known_counts_.push_back(inputs.front().known_count());
  output_.push_back(mean, var);
  // Variances at the floor re-enter the window as zero.
  Image fed = (var.array() <= kVarianceFloor).select(0.0, var.array()).matrix();
  window_.erase(window_.begin());
  window_.push_back(WindowFrame::predicted(std::move(mean), std::move(fed)));
}

void Rollout::run(int steps) {
  for (int i = 0; i < steps; ++i) step();
}

MeanVarSequence rollout(const GpModel& model, const RolloutPlan& plan) {
  Rollout r(model, plan);
  r.run(plan.horizon);
  return r.output();
}

GpModel incorporate_frames(const GpModel& model, const FrameSequence& new_frames, std::size_t first_index,
                           const TrainOptions& options) {
  const auto& source = model.source();
  if (!source) throw ArgumentError("model has no source sequence to extend");
  if (first_index != source->size()) {
    throw ArgumentError("new frames start at index " + std::to_string(first_index) + " but the source sequence ends at " +
                        std::to_string(source->size()));
  }
  if (new_frames.size() == 0) return model;
  if (new_frames.height() != source->height() || new_frames.width() != source->width()) {
    throw ArgumentError("new frames do not match the source frame shape");
  }
  std::vector<Image> frames = source->frames();
  frames.insert(frames.end(), new_frames.frames().begin(), new_frames.frames().end());
  auto extended = std::make_shared<const FrameSequence>(std::move(frames), source->dt_meta());
  const TrainingSet ts = build_training_set(*extended, model.patch_config());
  GpModel out = train(ts, options, model.params());
  out.set_source(extended);
  return out;
}

}  // namespace gpvp
