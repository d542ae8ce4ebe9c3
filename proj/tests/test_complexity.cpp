#include <gtest/gtest.h>

#include "lrnerv/complexity.hpp"
#include "lrnerv/config.hpp"
#include "lrnerv/model.hpp"
#include "oracles.hpp"

using namespace lrnerv;

namespace {

DecoderConfig canonical() { return load_config(LRNERV_CONFIG_DIR "/canonical.cfg").decoder; }

const char* kPlans[] = {"-", "4", "3-4", "2-4", "1-4", "0-4", "0,2"};

}  // namespace

TEST(ConvMacs, SmallExamples) {
  EXPECT_EQ(conv_macs(1, 1, 3, 3, 4, 4), 144u);
  EXPECT_EQ(conv_macs(3, 8, 3, 3, 0, 5), 0u);
  EXPECT_EQ(conv_macs(96, 384, 3, 1, 1, 1), 96u * 384u * 3u);
}

TEST(ConvMacs, MatchesInstrumentedCounter) {
  Rng rng(4);
  for (int i = 0; i < 12; ++i) {
    const std::size_t ci = 1 + rng.below(5), co = 1 + rng.below(5);
    const std::size_t kh = 1 + 2 * rng.below(3), kw = 1 + 2 * rng.below(3);
    const std::size_t h = 1 + rng.below(9), w = 1 + rng.below(9);
    const Tensor x = oracle::random_tensor({ci, h, w}, rng);
    const Tensor k = oracle::random_tensor({co, ci, kh, kw}, rng);
    std::uint64_t count = 0;
    const Tensor y = oracle::direct_conv2d(x, k, nullptr, kh / 2, kw / 2, &count);
    EXPECT_EQ(count, conv_macs(ci, co, kh, kw, y.dim(1), y.dim(2)));
  }
}

TEST(ModelReport, ParamsAgreeWithBuiltModels) {
  for (const DecoderConfig& base : {oracle::tiny_config(), canonical()}) {
    for (const char* p : kPlans) {
      const FactorizationPlan plan = FactorizationPlan::parse(p);
      const ComplexityReport r = model_report(base, plan);
      EXPECT_EQ(r.params, parameter_count(build_model(base.with_plan(plan), 0))) << base.name << " " << p;
      std::uint64_t sum = 0;
      for (const LayerCost& l : r.layers) sum += l.params;
      EXPECT_EQ(sum, r.params);
    }
  }
}

TEST(ModelReport, FactorizingMoreStagesNeverCostsMore) {
  const DecoderConfig c = canonical();
  double prev = model_report(c).gflops();
  for (const char* p : {"4", "3-4", "2-4", "1-4", "0-4"}) {
    const double g = model_report(c, FactorizationPlan::parse(p)).gflops();
    EXPECT_LT(g, prev) << p;
    prev = g;
  }
}

TEST(ModelReport, DenseBaselineIsRecorded) {
  const DecoderConfig c = oracle::tiny_config();
  const ComplexityReport dense = model_report(c);
  const ComplexityReport lr = model_report(c, FactorizationPlan::parse("2-4"));
  EXPECT_EQ(lr.baseline_params, dense.params);
  EXPECT_EQ(lr.baseline_macs, dense.macs);
  EXPECT_NEAR(dense.param_reduction_pct(), 0.0, 1e-12);
  EXPECT_GT(lr.gflops_reduction_pct(), 0.0);
}

TEST(Bpp, WorkedExample) {
  EXPECT_NEAR(bpp(3200000ull * 8, 132, 720, 1280), 25600000.0 / 121651200.0, 1e-15);
  EXPECT_NEAR(bpp(3200000ull * 8, 132, 720, 1280), 0.2104, 5e-5);
  EXPECT_DOUBLE_EQ(bpp(1000, 20, 4, 4) * 2.0, bpp(1000, 10, 4, 4));
  EXPECT_THROW(bpp(10, 0, 4, 4), std::invalid_argument);
}

TEST(Bpp, ReductionEqualsParamReductionAtFixedWidth) {
  const DecoderConfig c = canonical();
  const ComplexityReport r = model_report(c, FactorizationPlan::parse("4"));
  const double b0 = model_bpp(r.baseline_params, 8, c), b1 = model_bpp(r.params, 8, c);
  EXPECT_NEAR(100.0 * (b0 - b1) / b0, r.param_reduction_pct(), 1e-9);
}

TEST(ReportCsv, HeaderAndRowCount) {
  const ComplexityReport r = model_report(oracle::tiny_config(), FactorizationPlan::parse("4"));
  const std::string csv = format_report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "layer,params,macs,gflops,cumulative");
  EXPECT_NE(csv.find("stages.4.proj"), std::string::npos);
  EXPECT_NE(format_report_table(r).find("stages.4.recon"), std::string::npos);
}
