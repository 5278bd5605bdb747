#include <doctest.h>

#include <memory>

#include "fixtures.hpp"
#include "gpvp/errors.hpp"
#include "gpvp/gp_predict.hpp"
#include "gpvp/rollout.hpp"

using namespace gpvp;

namespace {

const PatchConfig kCfg{3, 1, 1, 1};

struct Trained {
  FrameSequence seq;
  GpModel model;
};

Trained trained_waves(int frames = 8) {
  FrameSequence seq = testing::drifting_waves(12, 8);
  const FrameSequence train_frames = seq.slice(0, static_cast<std::size_t>(frames));
  GpModel model = train(build_training_set(train_frames, kCfg), testing::quick_options());
  model.set_source(std::make_shared<const FrameSequence>(train_frames));
  return {seq, std::move(model)};
}

}  // namespace

TEST_CASE("first step equals batch deterministic prediction") {
  const Trained t = trained_waves();
  const RolloutPlan plan = RolloutPlan::from_sequence(t.seq, 5, 1, kCfg);
  const MeanVarSequence mv = rollout(t.model, plan);
  REQUIRE(mv.size() == 1);
  CHECK(mv.start_index() == 8);

  std::vector<WindowFrame> window;
  for (const Image& f : plan.start_frames) window.push_back(WindowFrame::observed(f));
  const auto inputs = build_test_inputs(window, kCfg);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(inputs.size()), t.model.input_dim());
  for (std::size_t j = 0; j < inputs.size(); ++j) x.row(static_cast<Eigen::Index>(j)) = inputs[j].mean.transpose();
  const BatchPrediction b = predict_deterministic_batch(t.model, x);
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const Eigen::Index r = inputs[j].row + 1, c = inputs[j].col + 1;
    CHECK(mv.means()[0](r, c) == b.mean(static_cast<Eigen::Index>(j), 0));
    CHECK(mv.variances()[0](r, c) == b.var(static_cast<Eigen::Index>(j), 0));
  }
}

TEST_CASE("known-mask schedule over the first four steps") {
  const Trained t = trained_waves();
  Rollout r(t.model, RolloutPlan::from_sequence(t.seq, 5, 4, kCfg));
  r.run(4);
  const std::vector<Eigen::Index> expected{27, 18, 9, 0};
  CHECK(r.known_counts() == expected);
}

TEST_CASE("continuing a rollout equals a longer rollout") {
  const Trained t = trained_waves();
  const RolloutPlan plan = RolloutPlan::from_sequence(t.seq, 5, 6, kCfg);
  Rollout r(t.model, plan);
  r.run(2);
  r.run(4);
  const MeanVarSequence whole = rollout(t.model, plan);
  REQUIRE(r.output().size() == 6);
  for (std::size_t s = 0; s < 6; ++s) {
    CHECK(r.output().means()[s] == whole.means()[s]);
    CHECK(r.output().variances()[s] == whole.variances()[s]);
    CHECK((whole.variances()[s].array() >= 0.0).all());
  }
}

TEST_CASE("uncertainty grows once predictions feed back") {
  const Trained t = trained_waves();
  const MeanVarSequence mv = rollout(t.model, RolloutPlan::from_sequence(t.seq, 5, 6, kCfg));
  CHECK(mv.variances()[5].mean() > mv.variances()[0].mean());
}

TEST_CASE("constant sequences are a fixed point") {
  const FrameSequence seq(std::vector<Image>(6, Image::Constant(8, 8, 0.75)));
  GpModel model = train(build_training_set(seq, kCfg), testing::quick_options());
  const MeanVarSequence mv = rollout(model, RolloutPlan::from_sequence(seq, 3, 15, kCfg));
  for (const Image& m : mv.means()) CHECK((m.array() - 0.75).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("rollout argument checks") {
  const Trained t = trained_waves();
  RolloutPlan plan = RolloutPlan::from_sequence(t.seq, 5, 2, kCfg);
  plan.start_frames[1] = Image::Zero(8, 6);
  CHECK_THROWS_AS(rollout(t.model, plan), ArgumentError);
  plan = RolloutPlan::from_sequence(t.seq, 5, 2, PatchConfig{5, 2, 1, 1});
  CHECK_THROWS_AS(rollout(t.model, plan), ArgumentError);
  plan = RolloutPlan::from_sequence(t.seq, 5, 0, kCfg);
  CHECK_THROWS_AS(rollout(t.model, plan), ArgumentError);
  CHECK_THROWS_AS(RolloutPlan::from_sequence(t.seq, 10, 1, kCfg), ArgumentError);
  const FrameSequence other = testing::drifting_waves(3, 16);
  CHECK_THROWS_AS(rollout(t.model, RolloutPlan::from_sequence(other, 0, 1, kCfg)), ArgumentError);
}

TEST_CASE("incorporating frames extends the training set") {
  const FrameSequence seq = testing::drifting_waves(15, 8);
  const FrameSequence first = seq.slice(0, 10);
  GpModel model = train(build_training_set(first, kCfg), testing::quick_options(5));
  model.set_source(std::make_shared<const FrameSequence>(first));
  CHECK(model.size() == 7 * 64);
  const auto before = model.params()[0].pack();

  const GpModel grown = incorporate_frames(model, seq.slice(10, 5), 10, testing::quick_options(5));
  CHECK(grown.size() == 12 * 64);
  CHECK(grown.source()->size() == 15);
  CHECK(model.size() == 7 * 64);
  CHECK(model.params()[0].pack() == before);

  const GpModel same = incorporate_frames(model, FrameSequence(), 10);
  CHECK(same.params()[0].pack() == before);
  CHECK(same.size() == model.size());

  CHECK_THROWS_AS(incorporate_frames(model, seq.slice(11, 4), 11), ArgumentError);
  GpModel orphan = train(build_training_set(first, kCfg), testing::quick_options(1));
  CHECK_THROWS_AS(incorporate_frames(orphan, seq.slice(10, 5), 10), ArgumentError);
}
