#include <gtest/gtest.h>
#include <torch/torch.h>

#include <cmath>

#include "attnad/attention/losses.hpp"
#include "attnad/common/errors.hpp"

using namespace attnad;
using namespace attnad::attention;

namespace {

double d(const torch::Tensor& t) { return t.item<double>(); }

torch::Tensor full(double v, int64_t n = 4) { return torch::full({n}, v, torch::kFloat64); }

}  // namespace

TEST(LossAdv, PerfectDiscriminationIsZero) {
  EXPECT_EQ(d(loss_adv(full(1.0), full(0.0))), 0.0);
}

TEST(LossAdv, MidpointIsTwoLnTwo) {
  EXPECT_DOUBLE_EQ(d(loss_adv(full(0.5), full(0.5))), 2.0 * std::log(2.0));
  EXPECT_DOUBLE_EQ(d(loss_adv_ano(full(0.5), full(0.5))), 2.0 * std::log(2.0));
}

TEST(LossAdv, GradientSignsByFiniteDifference) {
  const double h = 1e-6;
  for (double r : {0.2, 0.5, 0.8}) {
    for (double f : {0.3, 0.6}) {
      const double dr = (d(loss_adv(full(r + h), full(f))) - d(loss_adv(full(r - h), full(f)))) / (2 * h);
      const double df = (d(loss_adv(full(r), full(f + h))) - d(loss_adv(full(r), full(f - h)))) / (2 * h);
      EXPECT_LT(dr, 0.0);
      EXPECT_GT(df, 0.0);
      // Closed form: -1/r and 1/(1-f) per sample.
      EXPECT_NEAR(dr, -1.0 / r, 1e-6);
      EXPECT_NEAR(df, 1.0 / (1.0 - f), 1e-6);
    }
  }
}

TEST(LossAdvAno, DecreasesAsRealExemplarIsAccepted) {
  double prev = INFINITY;
  for (double r = 0.05; r < 1.0; r += 0.05) {
    const double v = d(loss_adv_ano(full(r), full(0.5)));
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(LossAdv, NonFiniteScoresDiverge) {
  EXPECT_THROW(loss_adv(full(NAN), full(0.5)), TrainingDivergence);
  EXPECT_THROW(loss_adv_ano(full(0.5), full(INFINITY)), TrainingDivergence);
}

TEST(LossAdv, LogitFormMatchesProbabilityForm) {
  auto lr = torch::randn({16}, torch::kFloat64), lf = torch::randn({16}, torch::kFloat64);
  EXPECT_NEAR(d(discriminator_loss_from_logits(lr, lf)), d(loss_adv(torch::sigmoid(lr), torch::sigmoid(lf))), 1e-12);
  EXPECT_NEAR(d(generator_adv_from_logits(lf)), -d(torch::log(torch::sigmoid(lf)).mean()), 1e-12);
}

TEST(LossGenerator, PerfectReconstructionAndPriorMatch) {
  auto x = torch::rand({2, 3, 8, 8});
  EXPECT_EQ(d(reconstruction_nll(x, x)), 0.0);
  auto zeros = torch::zeros({2, 5});
  EXPECT_EQ(d(kl_divergence(zeros, zeros)), 0.0);
}

TEST(LossGenerator, KlClosedFormExample) {
  auto mean = torch::tensor({{1.0, 0.0}}, torch::kFloat64);
  auto logvar = torch::zeros({1, 2}, torch::kFloat64);
  EXPECT_DOUBLE_EQ(d(kl_divergence(mean, logvar)), 0.5);
}

TEST(LossGenerator, ReconstructionIsHalfMse) {
  auto x = torch::rand({3, 3, 8, 8}, torch::kFloat64), y = torch::rand({3, 3, 8, 8}, torch::kFloat64);
  EXPECT_NEAR(d(reconstruction_nll(x, y)), 0.5 * d((x - y).pow(2).mean()), 1e-15);
}

TEST(LossGenerator, NonFiniteLogvarDiverges) {
  auto mean = torch::zeros({1, 2});
  auto logvar = torch::tensor({{0.0f, NAN}});
  EXPECT_THROW(kl_divergence(mean, logvar), TrainingDivergence);
}

TEST(LossAttention, ExactMatchIsZero) {
  auto a_ano = (torch::rand({2, 1, 8, 8}) > 0.5).to(torch::kFloat32);
  auto ones = torch::ones({2, 1, 8, 8});
  EXPECT_EQ(d(loss_attention(ones, a_ano, ones, a_ano)), 0.0);
}

TEST(LossAttention, ConstantOffsetIsOne) {
  auto a_ano = (torch::rand({2, 1, 8, 8}) > 0.5).to(torch::kFloat32);
  auto ones = torch::ones({2, 1, 8, 8});
  EXPECT_EQ(d(loss_attention(torch::zeros_like(ones), a_ano, ones, a_ano)), 1.0);
}

TEST(LossAttention, MatchesScalarLoop) {
  auto gn = torch::rand({2, 1, 5, 7}, torch::kFloat64), ga = torch::rand({2, 1, 5, 7}, torch::kFloat64);
  auto an = torch::ones({2, 1, 5, 7}, torch::kFloat64);
  auto aa = (torch::rand({2, 1, 5, 7}) > 0.5).to(torch::kFloat64);
  double s1 = 0, s2 = 0;
  auto gn_a = gn.accessor<double, 4>(), ga_a = ga.accessor<double, 4>();
  auto an_a = an.accessor<double, 4>(), aa_a = aa.accessor<double, 4>();
  for (int n = 0; n < 2; ++n) {
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 7; ++j) {
        s1 += std::pow(gn_a[n][0][i][j] - an_a[n][0][i][j], 2);
        s2 += std::pow(ga_a[n][0][i][j] - aa_a[n][0][i][j], 2);
      }
    }
  }
  const double expected = s1 / 70.0 + s2 / 70.0;
  EXPECT_NEAR(d(loss_attention(gn, ga, an, aa)), expected, 1e-6);
}

TEST(LossAttention, UndefinedAnomalyTermIsDropped) {
  auto gn = torch::rand({2, 1, 4, 4}, torch::kFloat64);
  auto ones = torch::ones_like(gn);
  EXPECT_NEAR(d(loss_attention(gn, {}, ones, {})), d((gn - 1).pow(2).mean()), 1e-15);
}

TEST(LossBundle, WeightedTotal) {
  LossBundle b;
  b.l_adv = 1.0;
  b.l_adv_ano = 2.0;
  b.l_g_rec = 3.0;
  b.l_g_kl = 4.0;
  b.l_att = 5.0;
  LossWeights w{0.5, 0.0, 2.0, 0.25, 1.0};
  EXPECT_EQ(weighted_total(b, w), 0.5 + 6.0 + 1.0 + 5.0);
}
