#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ulsnn/trainer.hpp"

using namespace ulsnn;

namespace {

double normwise_rel(const std::vector<float>& got, const std::vector<float>& ref) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    diff = std::max(diff, std::fabs(double(got[i]) - double(ref[i])));
    scale = std::max(scale, std::fabs(double(ref[i])));
  }
  return scale > 0.0 ? diff / scale : diff;
}

Batch concat_ranges(const Batch& b, const std::vector<Range>& rs) {
  std::size_t n = 0;
  for (auto r : rs) n += r.size();
  Batch out{Mat32(n, b.x.cols()), Mat32(n, b.t.cols())};
  std::size_t at = 0;
  for (auto r : rs)
    for (std::size_t i = r.begin; i < r.end; ++i, ++at) {
      std::copy(b.x.row(i), b.x.row(i) + b.x.cols(), out.x.row(at));
      std::copy(b.t.row(i), b.t.row(i) + b.t.cols(), out.t.row(at));
    }
  return out;
}

struct Fixture {
  std::mt19937_64 rng{11};
  Batch data = oracle::random_batch(3000, 20, 6, rng);
  MlpParams p = MlpParams::random(20, 12, 6, 5);
};

}  // namespace

TEST(Partition, Examples) {
  auto r = partition(10, 3);
  EXPECT_EQ(r[0].size(), 4u);
  EXPECT_EQ(r[1].size(), 3u);
  EXPECT_EQ(r[2].size(), 3u);
  EXPECT_EQ(r[2].end, 10u);
  auto big = partition(9264000, 193);
  EXPECT_EQ(big.size(), 193u);
  for (auto x : big) EXPECT_NEAR(double(x.size()), 48000.0, 1.0);
  auto small = partition(5, 8);
  std::size_t empties = 0;
  for (auto x : small) empties += x.empty();
  EXPECT_EQ(empties, 3u);
  EXPECT_THROW(partition(3, 0), ConfigError);
}

TEST(Partition, CoversDisjoint) {
  for (std::size_t n : {0, 1, 7, 100, 1001})
    for (std::size_t w : {1, 2, 3, 16}) {
      auto r = partition(n, w);
      std::size_t at = 0, lo = n, hi = 0;
      for (auto x : r) {
        EXPECT_EQ(x.begin, at);
        at = x.end;
        lo = std::min(lo, x.size());
        hi = std::max(hi, x.size());
      }
      EXPECT_EQ(at, n);
      EXPECT_LE(hi - lo, 1u);
    }
}

TEST(Trainer, SingleWorkerFullDataIsGradient) {
  Fixture f;
  TrainerCfg cfg;
  cfg.workers = 1;
  cfg.halt_fraction = 1.0f;
  cfg.chunk_size = 100000;
  Trainer t(f.data, cfg);
  t.broadcast_params(f.p);
  auto r = t.run_pass(PassKind::gradient);
  auto ref = gradient(f.p, f.data);
  EXPECT_EQ(r.result.flatten(), ref.flatten());
  EXPECT_EQ(r.result.error, ref.error);
  EXPECT_EQ(r.result.n_patterns, 3000u);
}

TEST(Trainer, FourWorkersMatchUnionOfConsumedRows) {
  Fixture f;
  for (Backend be : {Backend::simulated, Backend::threads}) {
    TrainerCfg cfg;
    cfg.backend = be;
    cfg.chunk_size = 128;
    Trainer t(f.data, cfg);
    t.broadcast_params(f.p);
    auto r = t.run_pass(PassKind::gradient);
    auto ref = gradient(f.p, concat_ranges(f.data, r.stats.consumed_ranges));
    EXPECT_EQ(ref.n_patterns, r.result.n_patterns);
    EXPECT_LE(normwise_rel(r.result.flatten(), ref.flatten()), 1e-5);
    EXPECT_NEAR(r.result.error, ref.error, 1e-9 * ref.error);
  }
}

TEST(Trainer, ConsumedBoundRandomized) {
  std::mt19937_64 rng(3);
  for (int run = 0; run < 100; ++run) {
    TrainerCfg cfg;
    cfg.workers = 1 + rng() % 12;
    cfg.chunk_size = 1 + rng() % 400;
    cfg.halt_fraction = float(0.05 + 0.95 * double(rng() % 1000) / 999.0);
    std::size_t n = 1 + rng() % 20000;
    Trainer t(NetShape{400, 64, 50}, n, cfg);
    auto r = t.run_pass(run % 2 ? PassKind::gradient : PassKind::error);
    double lo = double(cfg.halt_fraction) * double(n);
    EXPECT_GE(double(r.stats.consumed) + 1e-9, std::min(lo, double(n))) << run;
    EXPECT_LE(double(r.stats.consumed), lo + double(cfg.workers * cfg.chunk_size)) << run;
    EXPECT_LE(r.stats.consumed, n);
  }
}

TEST(Trainer, IdleSpreadWithinOneChunk) {
  TrainerCfg cfg;
  cfg.workers = 16;
  Trainer t(NetShape{400, 480, 3203}, 16 * 5000, cfg);
  auto r = t.run_pass(PassKind::gradient);
  EXPECT_LE(r.stats.idle_spread(), r.stats.chunk_seconds * (1 + 1e-12));
  cfg.halt_fraction = 1.0f;
  Trainer u(NetShape{400, 480, 3203}, 16 * 5000 + 7, cfg);
  auto q = u.run_pass(PassKind::error);
  EXPECT_LE(q.stats.idle_spread(), q.stats.chunk_seconds * (1 + 1e-12));
}

TEST(Trainer, Deterministic) {
  Fixture f;
  std::vector<float> first;
  for (int rep = 0; rep < 3; ++rep) {
    TrainerCfg cfg;
    cfg.chunk_size = 97;
    Trainer t(f.data, cfg);
    t.broadcast_params(f.p);
    auto g = t.run_pass(PassKind::gradient).result.flatten();
    if (rep == 0) first = g;
    EXPECT_EQ(g, first);
  }
  // halt_fraction = 1 makes the threads backend independent of scheduling.
  TrainerCfg cfg;
  cfg.backend = Backend::threads;
  cfg.halt_fraction = 1.0f;
  cfg.chunk_size = 97;
  Trainer a(f.data, cfg), b(f.data, cfg);
  a.broadcast_params(f.p);
  b.broadcast_params(f.p);
  EXPECT_EQ(a.run_pass(PassKind::gradient).result.flatten(), b.run_pass(PassKind::gradient).result.flatten());
}

TEST(Trainer, BackendsAgreeAtFullData) {
  Fixture f;
  TrainerCfg cfg;
  cfg.halt_fraction = 1.0f;
  cfg.chunk_size = 200;
  Trainer s(f.data, cfg);
  cfg.backend = Backend::threads;
  Trainer th(f.data, cfg);
  s.broadcast_params(f.p);
  th.broadcast_params(f.p);
  EXPECT_EQ(s.run_pass(PassKind::gradient).result.flatten(), th.run_pass(PassKind::gradient).result.flatten());
}

TEST(Trainer, WorkerFailureIdentifiesRange) {
  Fixture f;
  for (Backend be : {Backend::simulated, Backend::threads}) {
    TrainerCfg cfg;
    cfg.backend = be;
    cfg.chunk_size = 100;
    Trainer t(f.data, cfg);
    t.broadcast_params(f.p);
    t.fail_chunk = [](std::size_t w, std::size_t c) { return w == 2 && c == 1; };
    try {
      t.run_pass(PassKind::gradient);
      FAIL() << "expected WorkerFailure";
    } catch (const WorkerFailure& e) {
      EXPECT_EQ(e.worker, 2u);
      EXPECT_EQ(e.range.begin, 1500u);
      EXPECT_EQ(e.range.end, 2250u);
      EXPECT_NE(std::string(e.what()).find("1500..2250"), std::string::npos);
    }
  }
}

TEST(Trainer, BroadcastChecksums) {
  Fixture f;
  Trainer t(f.data, TrainerCfg{});
  auto a1 = t.broadcast_params(f.p);
  auto a2 = t.broadcast_params(f.p);
  ASSERT_EQ(a1.size(), 4u);
  for (std::size_t w = 0; w < 4; ++w) {
    EXPECT_EQ(a1[w].checksum, a2[w].checksum);
    EXPECT_EQ(a1[w].checksum, checksum(f.p.flatten()));
    EXPECT_EQ(a1[w].bytes, 4 * f.p.param_count());
    EXPECT_EQ(a1[w].attempts, 1u);
  }
}

TEST(Trainer, RetransmitOnceThenFail) {
  Fixture f;
  Trainer t(f.data, TrainerCfg{});
  t.corrupt_copy = [](std::size_t w, std::size_t attempt) { return w == 1 && attempt == 1; };
  auto acks = t.broadcast_params(f.p);
  EXPECT_EQ(acks[1].attempts, 2u);
  EXPECT_EQ(acks[0].attempts, 1u);
  t.corrupt_copy = [](std::size_t w, std::size_t) { return w == 3; };
  EXPECT_THROW(t.broadcast_params(f.p), ChecksumError);
}

TEST(Trainer, DirectionAndStepKeepCopiesInSync) {
  Fixture f;
  TrainerCfg cfg;
  cfg.halt_fraction = 1.0f;
  Trainer t(f.data, cfg);
  t.broadcast_params(f.p);
  std::vector<float> d(f.p.param_count());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = float(i % 7) * 0.01f;
  auto acks = t.send_direction(d, 0.5f);
  EXPECT_EQ(acks[0].bytes, d.size() * 4 + 4);
  auto acks2 = t.send_step(0.25f);
  EXPECT_EQ(acks2[0].bytes, 4u);
  MlpParams q = f.p;
  q.add_scaled(0.5f, d);
  q.add_scaled(0.25f, d);
  EXPECT_EQ(t.params().flatten(), q.flatten());
  auto g = t.run_pass(PassKind::gradient).result;
  EXPECT_LE(normwise_rel(g.flatten(), gradient(q, f.data).flatten()), 1e-5);
  // trial step evaluation does not move the parameters
  double e = t.error_at(0.1f);
  MlpParams r = q;
  r.add_scaled(0.1f, d);
  EXPECT_NEAR(e, error(r, f.data), 1e-9 * e);
  EXPECT_EQ(t.params().flatten(), q.flatten());
}

TEST(Trainer, MessageSizes) {
  EXPECT_EQ(4 * param_count(400, 480, 3203), 6917760u);
  EXPECT_EQ(4 * param_count(100, 50, 50), 30000u);
}

TEST(Ledger, IdentityAndFormula) {
  Fixture f;
  TrainerCfg cfg;
  cfg.halt_fraction = 1.0f;
  auto led = measure(f.p, f.data, cfg);
  EXPECT_EQ(led.contributing_flops, gradient_flops(3000, 20, 12, 6));
  EXPECT_DOUBLE_EQ(led.gflops_rate * led.wall_seconds * 1e9, double(led.contributing_flops));
  cfg.backend = Backend::threads;
  auto led2 = measure(f.p, f.data, cfg);
  EXPECT_EQ(led2.contributing_flops, led.contributing_flops);
  EXPECT_GT(led2.wall_seconds, 0.0);
}

TEST(Ledger, FullScalePerProcessorFigures) {
  // Full-scale pass on the simulated clock: 9,264,000 patterns over 193 workers.
  TrainerCfg cfg;
  cfg.workers = 193;
  cfg.chunk_size = 320;
  Trainer t(NetShape{400, 480, 3203}, 9264000, cfg);
  auto e = t.run_pass(PassKind::error);
  auto g = t.run_pass(PassKind::gradient);
  // Nominal 80% pass, as quoted: 26 TF and 74 TF, i.e. about 135 and 383 GF per processor.
  const std::uint64_t nominal = 7411200;
  const double ef = double(error_flops(nominal, 400, 480, 3203)), gf = double(gradient_flops(nominal, 400, 480, 3203));
  EXPECT_NEAR(ef / 1e12, 26.0, 0.5);
  EXPECT_NEAR(gf / 1e12, 74.0, 0.5);
  EXPECT_NEAR(std::round(ef / 1e12) * 1e12 / 193 / 1e9, 135.0, 0.01 * 135.0);
  EXPECT_NEAR(std::round(gf / 1e12) * 1e12 / 193 / 1e9, 383.0, 0.01 * 383.0);
  // The simulated passes overshoot the nominal count by at most one chunk per worker.
  const std::uint64_t slack = nominal + 193 * 320;
  EXPECT_GE(e.result.flops, error_flops(nominal, 400, 480, 3203));
  EXPECT_LE(e.result.flops, error_flops(slack, 400, 480, 3203));
  EXPECT_GE(g.result.flops, gradient_flops(nominal, 400, 480, 3203));
  EXPECT_LE(g.result.flops, gradient_flops(slack, 400, 480, 3203));
}

TEST(Scaling, ProportionalAndFixed) {
  TrainerCfg cfg;
  auto prop = simulate_scaling(NetShape{400, 480, 3203}, {1, 2, 4, 8, 16}, 32000, 0, cfg);
  EXPECT_GE(prop.back().efficiency, 0.9);
  auto fixed = simulate_scaling(NetShape{400, 80, 200}, {1, 2, 4, 8, 16}, 0, 40960, cfg);
  EXPECT_LT(fixed.back().efficiency, 0.9);
  for (std::size_t i = 1; i < fixed.size(); ++i) EXPECT_LT(fixed[i].efficiency, fixed[i - 1].efficiency);
}

TEST(Trainer, ConfigValidation) {
  TrainerCfg cfg;
  cfg.halt_fraction = 0.0f;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.chunk_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.backend = Backend::threads;
  EXPECT_THROW(Trainer(NetShape{1, 1, 1}, 10, cfg), ConfigError);
}

TEST(Trainer, TrainsWithCg) {
  Fixture f;
  TrainerCfg cfg;
  Trainer t(f.data, cfg);
  t.broadcast_params(f.p);
  auto r = cg_train(t, 5);
  EXPECT_LT(r.history.back().error, r.initial_error);
  EXPECT_GT(t.elapsed_seconds(), 0.0);
}
