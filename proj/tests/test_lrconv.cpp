#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>

#include "lrnerv/lrconv.hpp"
#include "lrnerv/ops.hpp"
#include "oracles.hpp"

using namespace lrnerv;

TEST(SelectRank, WorkedExample) { EXPECT_EQ(select_rank(96, 384, 0.25), 24u); }

TEST(SelectRank, CeilingAndClamp) {
  EXPECT_EQ(select_rank(10, 10, 0.25), 3u);
  EXPECT_EQ(select_rank(30, 40, 0.1), 3u);
  EXPECT_EQ(select_rank(1, 500, 0.25), 1u);
  EXPECT_EQ(select_rank(7, 9, 1.0), 7u);
  EXPECT_THROW(select_rank(8, 8, 0.0), std::invalid_argument);
  EXPECT_THROW(select_rank(8, 8, 1.5), std::invalid_argument);
  EXPECT_THROW(select_rank(0, 8, 0.5), std::invalid_argument);
}

TEST(ParamCounts, WorkedExample) {
  EXPECT_EQ(dense_param_count(96, 384, 3), 331776u);
  EXPECT_EQ(lr_param_count(96, 384, 3, 24), 34560u);
  EXPECT_NEAR(1.0 / param_ratio(96, 384, 3, 24), 9.6, 1e-12);
}

TEST(LRConv, InitShapesAndDeterminism) {
  const LRConvLayer a = init_lrconv(96, 384, 3, 0.25, 11);
  EXPECT_EQ(a.proj.shape(), (Shape{24, 96, 3, 1}));
  EXPECT_EQ(a.recon.shape(), (Shape{384, 24, 1, 3}));
  EXPECT_EQ(a.bias, Tensor({384}));
  EXPECT_EQ(a.rank(), select_rank(96, 384, 0.25));
  const LRConvLayer b = init_lrconv(96, 384, 3, 0.25, 11);
  EXPECT_EQ(a.proj, b.proj);
  EXPECT_EQ(a.recon, b.recon);
  EXPECT_NE(a.proj, init_lrconv(96, 384, 3, 0.25, 12).proj);
}

TEST(LRConv, ProjectionVarianceIsTwoOverFanIn) {
  const LRConvLayer l = init_lrconv(128, 256, 3, 0.25, 5);
  double s = 0.0;
  for (double v : l.proj.data()) s += v * v;
  const double var = s / static_cast<double>(l.proj.size());
  const double want = 2.0 / (128.0 * 3.0);
  EXPECT_NEAR(var / want, 1.0, 0.2);
}

TEST(LRConv, ForwardEqualsComposedDenseKernel) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t ci = 1 + rng.below(6), co = 1 + rng.below(6);
    const std::size_t k = trial % 2 ? 3 : 5;
    LRConvLayer l = init_lrconv(ci, co, k, rng.uniform(0.05, 1.0), rng.next());
    l.bias = oracle::random_tensor({co}, rng);
    const Tensor x = oracle::random_tensor({ci, 9, 11}, rng);
    const Tensor w = compose_effective_kernel(l);
    ASSERT_EQ(w.shape(), (Shape{co, ci, k, k}));
    const Tensor dense = oracle::direct_conv2d(x, w, &l.bias, k / 2, k / 2);
    EXPECT_LE(max_abs_diff(lrconv_forward(l, x), dense), 1e-12);
  }
}

TEST(LRConv, EffectiveKernelHasBoundedRank) {
  // Rows (co, v), columns (ci, u): the composed kernel factors through rank r.
  Rng rng(8);
  const LRConvLayer l = init_lrconv(12, 16, 3, 0.25, 3);
  const Tensor w = compose_effective_kernel(l);
  Eigen::MatrixXd m(16 * 3, 12 * 3);
  for (std::size_t co = 0; co < 16; ++co)
    for (std::size_t ci = 0; ci < 12; ++ci)
      for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v) m(co * 3 + v, ci * 3 + u) = w[((co * 12 + ci) * 3 + u) * 3 + v];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0);
  EXPECT_EQ(rank, l.rank());
}

TEST(FactorizationPlan, ParseAndLabel) {
  EXPECT_TRUE(FactorizationPlan::parse("-").empty());
  EXPECT_TRUE(FactorizationPlan::parse("\xE2\x88\x92").empty());
  EXPECT_TRUE(FactorizationPlan::parse("none").empty());
  EXPECT_EQ(FactorizationPlan::parse("4").stages, (std::vector<std::size_t>{4}));
  EXPECT_EQ(FactorizationPlan::parse("1-4").stages, (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(FactorizationPlan::parse(" 4, 0-1 ,1").stages, (std::vector<std::size_t>{0, 1, 4}));
  EXPECT_EQ(FactorizationPlan::parse("2-4").label(), "2-4");
  EXPECT_EQ(FactorizationPlan::parse("0,2").label(), "0,2");
  EXPECT_EQ(FactorizationPlan::parse("-").label(), "-");
  EXPECT_THROW(FactorizationPlan::parse("4-2"), std::invalid_argument);
  EXPECT_THROW(FactorizationPlan::parse("a"), std::invalid_argument);
}
