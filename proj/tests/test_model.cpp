#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lrnerv/complexity.hpp"
#include "lrnerv/config.hpp"
#include "lrnerv/metrics.hpp"
#include "lrnerv/model.hpp"
#include "lrnerv/video.hpp"
#include "oracles.hpp"

using namespace lrnerv;

namespace {

DecoderConfig canonical() { return load_config(LRNERV_CONFIG_DIR "/canonical.cfg").decoder; }

constexpr double kFreshMeanSnapshot = 0.49999712303247951;

}  // namespace

TEST(Embedding, KnownValues) {
  const Tensor e0 = positional_embedding(0.0, 5, 1.25);
  ASSERT_EQ(e0.size(), 10u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(e0[2 * i], 0.0);
    EXPECT_EQ(e0[2 * i + 1], 1.0);
  }
  const Tensor e = positional_embedding(0.5, 2, 2.0);
  const double want[] = {1.0, 0.0, 0.0, -1.0};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(e[i], want[i], 1e-15);
  EXPECT_THROW(positional_embedding(1.1, 2, 2.0), std::invalid_argument);
  EXPECT_THROW(positional_embedding(-0.1, 2, 2.0), std::invalid_argument);
}

TEST(Embedding, NormalizedTime) {
  EXPECT_EQ(normalized_time(0, 1), 0.0);
  EXPECT_EQ(normalized_time(3, 4), 1.0);
  EXPECT_DOUBLE_EQ(normalized_time(1, 5), 0.25);
  EXPECT_THROW(normalized_time(4, 4), std::out_of_range);
}

TEST(Config, ValidationNamesTheProblem) {
  DecoderConfig c = oracle::tiny_config();
  EXPECT_NO_THROW(c.validate());
  c.stages[2].c_in = 5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = oracle::tiny_config();
  c.width = 40;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = oracle::tiny_config();
  c.plan = FactorizationPlan::parse("5");
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, FormatParsesBackToTheSameText) {
  const DecoderConfig c = canonical().with_plan(FactorizationPlan::parse("3-4"));
  const std::string text = format_config(c);
  EXPECT_EQ(format_config(parse_config(text).decoder), text);
  EXPECT_THROW(parse_config("height = 3\nheight = 4\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("bogus = 1\n"), std::invalid_argument);
}

TEST(BuildModel, CanonicalStageFourFactorization) {
  const NervModel m = build_model(canonical().with_plan(FactorizationPlan::parse("4")), 0);
  ASSERT_TRUE(m.stage_is_lowrank(4));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_FALSE(m.stage_is_lowrank(i));
  const auto& l = std::get<LRConvLayer>(m.stages[4]);
  EXPECT_EQ(l.proj.shape(), (Shape{24, 96, 3, 1}));
  EXPECT_EQ(l.recon.shape(), (Shape{384, 24, 1, 3}));
}

TEST(BuildModel, SubstitutionLeavesOtherTensorsUntouched) {
  const DecoderConfig c = oracle::tiny_config();
  const NervModel dense = build_model(c, 42);
  const NervModel lr = build_model(c.with_plan(FactorizationPlan::parse("4")), 42);
  const auto a = named_parameters(dense), b = named_parameters(lr);
  std::size_t compared = 0;
  for (const auto& pa : a) {
    if (pa.name.rfind("stages.4", 0) == 0) continue;
    for (const auto& pb : b) {
      if (pb.name == pa.name) {
        EXPECT_EQ(*pa.tensor, *pb.tensor) << pa.name;
        ++compared;
      }
    }
  }
  EXPECT_EQ(compared, a.size() - 2);
}

TEST(BuildModel, AllStagesFactorizedIsSmallest) {
  const DecoderConfig c = canonical();
  const auto p04 = parameter_count(build_model(c.with_plan(FactorizationPlan::parse("0-4")), 0));
  const auto p14 = parameter_count(build_model(c.with_plan(FactorizationPlan::parse("1-4")), 0));
  EXPECT_LT(p04, p14);
}

TEST(Forward, ShapeDeterminismAndRange) {
  const NervModel m = build_model(oracle::tiny_config(), 3);
  const Tensor a = forward(m, 0.25), b = forward(m, 0.25);
  EXPECT_EQ(a.shape(), (Shape{3, 16, 32}));
  EXPECT_EQ(a, b);
  for (double v : a.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Forward, FreshModelDecodesNearHalfGrey) {
  // Regression snapshot of the mean output of a freshly built tiny model.
  const NervModel m = build_model(oracle::tiny_config(), 0);
  const Tensor y = forward(m, 0.0);
  double mean = 0.0, worst = 0.0;
  for (double v : y.data()) {
    mean += v;
    worst = std::max(worst, std::abs(v - 0.5));
  }
  mean /= static_cast<double>(y.size());
  EXPECT_LT(worst, 0.1);
  EXPECT_NEAR(mean, kFreshMeanSnapshot, 1e-9);
}

TEST(Forward, TapeRouteMatchesValueRoute) {
  for (const char* plan : {"-", "0,3", "0-4"}) {
    const NervModel m = build_model(oracle::tiny_config().with_plan(FactorizationPlan::parse(plan)), 9);
    GradTape tape;
    EXPECT_LE(max_abs_diff(forward(m, tape, 0.7).value(), forward(m, 0.7)), 1e-13) << plan;
  }
}

TEST(Loss, ExamplesAndDualRoute) {
  Rng rng(12);
  const Tensor gt = oracle::random_tensor({3, 14, 16}, rng, 0.2, 0.8);
  EXPECT_NEAR(reconstruction_loss(gt, gt), 0.0, 1e-15);
  Tensor shifted = gt;
  for (double& v : shifted.data()) v += 0.1;
  EXPECT_NEAR(reconstruction_loss(shifted, gt, 1.0), 0.1, 1e-12);
  const Tensor pred = oracle::random_tensor({3, 14, 16}, rng, 0.0, 1.0);
  const double plain = reconstruction_loss(pred, gt);
  EXPECT_GE(plain, 0.0);
  GradTape tape;
  EXPECT_NEAR(reconstruction_loss(tape.constant(pred), gt).value()[0], plain, 1e-13);
  EXPECT_THROW(reconstruction_loss(pred, Tensor({3, 14, 15})), std::invalid_argument);
}

TEST(Fit, ZeroStepsReturnsTheInitialModel) {
  const DecoderConfig c = oracle::tiny_config();
  const auto frames = synthetic_video(c.frames, c.height, c.width);
  TrainOptions o;
  o.steps = 0;
  o.seed = 5;
  const FitResult r = fit(frames, c, o);
  const NervModel fresh = build_model(c, 5);
  const auto a = named_parameters(r.model), b = named_parameters(fresh);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].tensor, *b[i].tensor);
  EXPECT_TRUE(r.report.loss.empty());
  EXPECT_EQ(r.report.frame_psnr.size(), frames.size());
}

TEST(Fit, SameSeedSameParameters) {
  const DecoderConfig c = oracle::tiny_config().with_plan(FactorizationPlan::parse("3-4"));
  const auto frames = synthetic_video(c.frames, c.height, c.width);
  TrainOptions o;
  o.steps = 25;
  o.seed = 1;
  const FitResult a = fit(frames, c, o), b = fit(frames, c, o);
  const auto pa = named_parameters(a.model), pb = named_parameters(b.model);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i].tensor, *pb[i].tensor) << pa[i].name;
  EXPECT_EQ(a.report.loss, b.report.loss);
}

TEST(Fit, LossTrendsDownOverWindows) {
  const DecoderConfig c = oracle::tiny_config();
  const auto frames = synthetic_video(c.frames, c.height, c.width);
  TrainOptions o;
  o.steps = 400;
  o.lr = 2e-3;
  const FitResult r = fit(frames, c, o);
  std::vector<double> windows;
  for (std::size_t w = 0; w < 4; ++w) {
    double s = 0.0;
    for (std::size_t i = 100 * w; i < 100 * (w + 1); ++i) s += r.report.loss[i];
    windows.push_back(s / 100.0);
  }
  for (std::size_t w = 1; w < windows.size(); ++w) EXPECT_LE(windows[w], windows[w - 1]);
  for (double l : r.report.loss) EXPECT_TRUE(std::isfinite(l));
}

TEST(Fit, NonFiniteLossAbortsWithDiagnostic) {
  const DecoderConfig c = oracle::tiny_config();
  auto frames = synthetic_video(c.frames, c.height, c.width);
  frames[0][0] = std::nan("");
  TrainOptions o;
  o.steps = 8;
  EXPECT_THROW(fit(frames, c, o), DivergenceError);
}

TEST(Fit, RejectsWrongFrameSize) {
  const DecoderConfig c = oracle::tiny_config();
  TrainOptions o;
  o.steps = 1;
  EXPECT_THROW(fit(synthetic_video(2, 16, 16), c, o), std::invalid_argument);
  EXPECT_THROW(fit({}, c, o), std::invalid_argument);
}
