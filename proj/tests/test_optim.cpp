#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ulsnn/datagen.hpp"
#include "ulsnn/optim.hpp"

using namespace ulsnn;

namespace {

// E(x) = sum_i c_i (x_i - m_i)^2, convex; ascent direction g = -dE/dx / 2.
class QuadSource {
 public:
  QuadSource(std::vector<float> c, std::vector<float> m, std::vector<float> x0)
      : c_(std::move(c)), m_(std::move(m)), x_(std::move(x0)) {}

  std::size_t dimension() const { return x_.size(); }

  Evaluation gradient() { return Evaluation{grad_at(x_), err_at(x_), 1, 0}; }
  void set_direction(std::span<const float> d) { d_.assign(d.begin(), d.end()); }
  double slope_at(float step, float) { return dot_flat(grad_at(moved(step)), d_); }
  double error_at(float step) { return err_at(moved(step)); }
  void commit(float step) { x_ = moved(step); }
  std::uint64_t contributing_flops() const { return 0; }
  double elapsed_seconds() const { return 0.0; }

 private:
  std::vector<float> moved(float s) const {
    auto y = x_;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * d_[i];
    return y;
  }
  std::vector<float> grad_at(const std::vector<float>& x) const {
    std::vector<float> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = -c_[i] * (x[i] - m_[i]);
    return g;
  }
  double err_at(const std::vector<float>& x) const {
    double e = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) e += double(c_[i]) * (x[i] - m_[i]) * (x[i] - m_[i]);
    return e;
  }
  std::vector<float> c_, m_, x_, d_;
};

}  // namespace

TEST(PrBeta, Examples) {
  std::vector<float> g = {0.3f, -1.2f};
  EXPECT_EQ(pr_beta(g, g), 0.0f);
  EXPECT_EQ(pr_beta(std::vector<float>{0, 1}, std::vector<float>{1, 0}), 1.0f);
  EXPECT_EQ(pr_beta(std::vector<float>{1, 0}, std::vector<float>{2, 0}), 0.0f);
  EXPECT_EQ(pr_beta(std::vector<float>{1, 0}, std::vector<float>{0, 0}), 0.0f);
  EXPECT_THROW(pr_beta(std::vector<float>{1}, std::vector<float>{1, 2}), ShapeError);
}

TEST(NextDirection, Rules) {
  std::vector<float> g = {1, 1};
  CgState s;
  EXPECT_EQ(next_direction(g, s), g);
  EXPECT_EQ(combine_direction(g, std::vector<float>{2, 0}, 0.5f), (std::vector<float>{2, 1}));
  EXPECT_EQ(combine_direction(g, std::vector<float>{2, 0}, 0.0f), g);
  s.iteration = 1;
  s.prev_grad = {1, 0};
  s.direction = {2, 0};
  std::vector<float> g2 = {0, 1};
  float beta = -1.0f;
  EXPECT_EQ(next_direction(g2, s, &beta), (std::vector<float>{2, 1}));
  EXPECT_EQ(beta, 1.0f);
  s.restart = true;
  EXPECT_EQ(next_direction(g2, s), g2);
}

TEST(BracketBySign, PlusPlusMinus) {
  LineSearchCfg cfg;
  const float s = cfg.initial_step;
  auto b = bracket_by_sign([&](float x) { return x < 3.5f * s ? 1 : -1; }, cfg);
  EXPECT_TRUE(b.bracketed);
  EXPECT_EQ(b.lo, 2 * s);
  EXPECT_EQ(b.hi, 4 * s);
}

TEST(BracketBySign, ImmediateTurn) {
  LineSearchCfg cfg;
  auto b = bracket_by_sign([](float x) { return x == 0.0f ? 1 : -1; }, cfg);
  EXPECT_TRUE(b.bracketed);
  EXPECT_EQ(b.lo, 0.0f);
  EXPECT_EQ(b.hi, cfg.initial_step);
}

TEST(BracketBySign, ConcaveQuadraticContainsPeak) {
  LineSearchCfg cfg;
  // f(s) = -(s - 0.37)^2, slope = -2(s - 0.37)
  auto b = bracket_by_sign([](float s) { return -2.0 * (s - 0.37) > 0 ? 1 : -1; }, cfg);
  ASSERT_TRUE(b.bracketed);
  EXPECT_LE(b.lo, 0.37f);
  EXPECT_GE(b.hi, 0.37f);
  // dense scan confirms the sign change lies inside
  int changes = 0;
  for (double s = b.lo; s < b.hi; s += (b.hi - b.lo) / 1000) changes += (s - 0.37) < 0 && (s + (b.hi - b.lo) / 1000 - 0.37) >= 0;
  EXPECT_EQ(changes, 1);
}

TEST(BracketBySign, NoBracketAndBadDirection) {
  LineSearchCfg cfg;
  cfg.max_expansions = 5;
  auto b = bracket_by_sign([](float) { return 1; }, cfg);
  EXPECT_FALSE(b.bracketed);
  EXPECT_FLOAT_EQ(b.hi, cfg.initial_step * 16);
  EXPECT_FLOAT_EQ(b.lo, cfg.initial_step * 8);
  EXPECT_THROW(bracket_by_sign([](float) { return -1; }, cfg), DirectionError);
}

TEST(QuadInterpolate, Examples) {
  EXPECT_FLOAT_EQ(quad_interpolate(0, 0, 1, 1, 2, 0), 1.0f);
  auto f = [](double s) { return -(s - 0.3) * (s - 0.3); };
  EXPECT_NEAR(quad_interpolate(0.1, f(0.1), 0.25, f(0.25), 0.6, f(0.6)), 0.3, 1e-6);
  EXPECT_EQ(quad_interpolate(0, 0, 1, 1, 2, 2), 1.0f);
}

TEST(QuadInterpolate, AlwaysInRange) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 1000; ++i) {
    double s0 = u(rng), s1 = s0 + std::fabs(u(rng)) + 1e-3, s2 = s1 + std::fabs(u(rng)) + 1e-3;
    float v = quad_interpolate(s0, u(rng), s1, u(rng), s2, u(rng));
    EXPECT_GE(v, float(s0) - 1e-6f);
    EXPECT_LE(v, float(s2) + 1e-6f);
  }
}

TEST(LineSearchCfg, Validation) {
  LineSearchCfg c;
  c.growth = 1.0f;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.sign_sample_fraction = 0.0f;
  EXPECT_THROW(c.validate(), ConfigError);
  c.sign_sample_fraction = 1.5f;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(CgTrain, ConvexToyDecreasesEveryEpoch) {
  QuadSource src({1.0f, 3.0f, 0.5f, 2.0f}, {0.2f, -0.4f, 1.0f, 0.0f}, {0, 0, 0, 0});
  auto r = cg_train(src, 8);
  double prev = r.initial_error;
  for (const auto& h : r.history) {
    if (prev < 1e-10) break;
    EXPECT_LT(h.error, prev) << "epoch " << h.epoch;
    prev = h.error;
  }
  EXPECT_LT(r.history.back().error, 1e-3 * r.initial_error);
}

TEST(CgTrain, SlopeSignsOppositeAtBracket) {
  QuadSource src({1.0f, 10.0f}, {1.0f, -1.0f}, {0, 0});
  auto ev = src.gradient();
  src.set_direction(ev.grad);
  LineSearchCfg cfg;
  double slope0 = dot_flat(ev.grad, ev.grad);
  auto ls = line_search(src, slope0, ev.error, cfg, cfg.initial_step);
  ASSERT_TRUE(ls.bracket.bracketed);
  EXPECT_GT(ls.bracket.lo == 0.0f ? slope0 : src.slope_at(ls.bracket.lo, 1.0f), 0.0);
  EXPECT_LE(src.slope_at(ls.bracket.hi, 1.0f), 0.0);
  EXPECT_LT(ls.error, ev.error);
}

TEST(CgTrain, FirstDirectionIsGradient) {
  auto p = MlpParams::zeros(4, 3, 2);
  std::mt19937_64 rng(2);
  auto b = oracle::random_batch(10, 4, 2, rng);
  LocalSource src(p, b);
  auto g = gradient(p, b).flatten();
  CgState s;
  EXPECT_EQ(next_direction(src.gradient().grad, s), g);
}

TEST(CgTrain, BetaZeroIsSteepestAscent) {
  auto p = MlpParams::random(12, 6, 3, 3);
  std::mt19937_64 rng(3);
  auto b = oracle::random_batch(40, 12, 3, rng);
  LineSearchCfg cfg;
  cfg.force_beta_zero = true;
  LocalSource a(p, b);
  auto ra = cg_train(a, 6, cfg);

  // Direct steepest ascent with the same line search.
  LocalSource s(p, b);
  std::vector<double> errs;
  for (int e = 0; e < 6; ++e) {
    auto ev = s.gradient();
    s.set_direction(ev.grad);
    auto ls = line_search(s, dot_flat(ev.grad, ev.grad), ev.error, cfg, cfg.initial_step);
    if (ls.step > 0.0f) s.commit(ls.step);
    errs.push_back(ls.error);
  }
  ASSERT_EQ(ra.history.size(), errs.size());
  for (std::size_t i = 0; i < errs.size(); ++i) {
    EXPECT_EQ(ra.history[i].error, errs[i]);
    EXPECT_EQ(ra.history[i].beta, 0.0f);
  }
  EXPECT_EQ(a.params().flatten(), s.params().flatten());
}

TEST(CgTrain, HistoryCsvAndValidation) {
  QuadSource src({1.0f}, {1.0f}, {0.0f});
  auto r = cg_train(src, 2);
  std::ostringstream os;
  write_history_csv(os, r);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "epoch,error,step,seconds,gflops");
  EXPECT_THROW(cg_train(src, 0), ConfigError);
}

TEST(CgTrain, GlyphTaskImprovesAndSignAgreement) {
  DatasetSpec spec;
  spec.n_classes = 10;
  spec.per_class = 60;
  auto lb = to_batch(build_dataset(spec));
  LocalSource src(MlpParams::random(400, 16, 10, 5), lb.batch);
  LineSearchCfg cfg;
  cfg.audit_sign_agreement = true;
  auto r = cg_train(src, 10, cfg);
  EXPECT_LT(r.history.back().error, r.initial_error);
  ASSERT_GT(r.sign_probes, 0u);
  double agree = double(r.sign_agreements) / double(r.sign_probes);
  RecordProperty("sign_agreement", std::to_string(agree));
  std::cout << "subsampled sign agreement " << agree << " over " << r.sign_probes << " probes\n";
}
