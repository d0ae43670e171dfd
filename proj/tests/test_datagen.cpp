#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "ulsnn/datagen.hpp"

using namespace ulsnn;

namespace {

bool in_range(const GlyphImage& g) {
  for (float p : g.pixels)
    if (!(p >= 0.0f && p <= 1.0f)) return false;
  return true;
}

GlyphImage random_image(std::uint64_t seed) {
  auto rng = stream(seed, 0);
  GlyphImage g;
  g.label = 3;
  for (float& p : g.pixels) p = float(uniform01(rng));
  return g;
}

}  // namespace

TEST(Prototypes, Deterministic) {
  auto a = generate_prototypes(10, 5), b = generate_prototypes(10, 5);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, generate_prototypes(10, 6));
}

TEST(Prototypes, MarginAndRange) {
  PrototypeCfg cfg;
  auto two = generate_prototypes(2, 1, cfg);
  EXPECT_GE(l2_distance(two[0], two[1]), cfg.margin);
  auto many = generate_prototypes(100, 7, cfg);
  ASSERT_EQ(many.size(), 100u);
  for (std::size_t i = 0; i < many.size(); ++i) {
    EXPECT_EQ(many[i].label, i);
    EXPECT_TRUE(in_range(many[i]));
    for (std::size_t j = 0; j < i; ++j) EXPECT_GE(l2_distance(many[i], many[j]), cfg.margin);
  }
}

TEST(Prototypes, Errors) {
  EXPECT_THROW(generate_prototypes(1, 1), ConfigError);
  PrototypeCfg impossible;
  impossible.margin = 100.0;  // exceeds the diameter of [0,1]^400
  impossible.max_attempts = 5;
  EXPECT_THROW(generate_prototypes(3, 1, impossible), ConfigError);
}

TEST(Transform, ShiftZeroIsIdentity) {
  auto g = random_image(1);
  EXPECT_EQ(shift(g, 0, 0), g);
}

TEST(Transform, ShiftMovesAndZeroFills) {
  auto g = random_image(2);
  auto s = shift(g, 1, -2);
  EXPECT_EQ(s.at(5, 5), g.at(4, 7));
  EXPECT_EQ(s.at(0, 3), 0.0f);
  EXPECT_EQ(s.at(7, 19), 0.0f);
}

TEST(Transform, BlurConstantFixedPoint) {
  for (float c : {0.0f, 0.3f, 0.77f, 1.0f}) {
    GlyphImage g;
    g.pixels.fill(c);
    EXPECT_EQ(blur(g), g);
  }
}

TEST(Transform, BlurIsBoxMean) {
  auto g = random_image(3);
  auto b = blur(g);
  double s = 0.0;
  for (int r = 4; r <= 6; ++r)
    for (int c = 9; c <= 11; ++c) s += g.at(r, c);
  EXPECT_NEAR(b.at(5, 10), s / 9.0, 1e-6);
}

TEST(Transform, ThickenThenThinSinglePixel) {
  GlyphImage g;
  g.at(10, 10) = 1.0f;
  auto t = thicken(g);
  EXPECT_EQ(t.at(9, 10), 1.0f);
  EXPECT_EQ(t.at(10, 11), 1.0f);
  EXPECT_EQ(t.at(9, 9), 0.0f);
  auto back = thin(t);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) {
      bool in_footprint = std::abs(r - 10) + std::abs(c - 10) <= 1;
      if (!in_footprint) {
        EXPECT_EQ(back.at(r, c), g.at(r, c));
      }
    }
}

TEST(Transform, NoiseBoundedAndLabelsKept) {
  auto g = random_image(4);
  auto rng = stream(9, 9);
  for (auto kind : {TransformKind::thicken, TransformKind::thin, TransformKind::shift, TransformKind::blur,
                    TransformKind::noise}) {
    auto t = transform(g, kind, rng);
    EXPECT_EQ(t.label, g.label);
    EXPECT_TRUE(in_range(t));
  }
  GlyphImage mid;
  mid.pixels.fill(0.5f);
  auto n = add_noise(mid, kMaxNoise, rng);
  for (float p : n.pixels) EXPECT_LE(std::fabs(p - 0.5f), 0.2f + 1e-6f);
}

TEST(Dataset, DeterministicShuffledAndLabelled) {
  DatasetSpec spec;
  spec.n_classes = 5;
  spec.per_class = 20;
  auto a = build_dataset(spec), b = build_dataset(spec);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.images.size(), 100u);
  std::vector<int> counts(5, 0);
  bool sorted = true;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    ++counts[a.images[i].label];
    EXPECT_TRUE(in_range(a.images[i]));
    if (i && a.images[i].label < a.images[i - 1].label) sorted = false;
  }
  for (int c : counts) EXPECT_EQ(c, 20);
  EXPECT_FALSE(sorted);
  spec.sample_seed = 99;
  EXPECT_NE(build_dataset(spec), a);
}

TEST(Dataset, RoundTripBitIdentical) {
  DatasetSpec spec;
  spec.n_classes = 4;
  spec.per_class = 6;
  auto ds = build_dataset(spec);
  std::stringstream ss;
  write_dataset(ss, ds);
  std::string bytes = ss.str();
  EXPECT_EQ(bytes.size(), 4 + 16 + 24 * (4 + 1600));
  EXPECT_EQ(bytes.substr(0, 4), "GLY1");
  EXPECT_EQ(read_dataset(ss), ds);
  std::stringstream again;
  std::stringstream src(bytes);
  write_dataset(again, read_dataset(src));
  EXPECT_EQ(again.str(), bytes);
}

TEST(Dataset, FormatErrors) {
  std::stringstream bad("GLY2............");
  EXPECT_THROW(read_dataset(bad), FormatError);
  DatasetSpec spec;
  spec.n_classes = 2;
  spec.per_class = 2;
  std::stringstream ss;
  write_dataset(ss, build_dataset(spec));
  std::string bytes = ss.str();
  std::stringstream trunc(bytes.substr(0, bytes.size() - 10));
  EXPECT_THROW(read_dataset(trunc), FormatError);
  std::string badlabel = bytes;
  badlabel[20] = 7;  // first label
  std::stringstream bl(badlabel);
  EXPECT_THROW(read_dataset(bl), FormatError);
  std::string badw = bytes;
  badw[12] = 21;
  std::stringstream bw(badw);
  EXPECT_THROW(read_dataset(bw), FormatError);
}

TEST(Dataset, DeskScaleBatchShapes) {
  DatasetSpec spec;  // 50 x 400
  auto ds = build_dataset(spec);
  auto path = (std::filesystem::temp_directory_path() / "ulsnn_test_glyphs.bin").string();
  write_dataset(path, ds);
  auto lb = load_dataset(path);
  std::remove(path.c_str());
  EXPECT_EQ(lb.batch.x.rows(), 20000u);
  EXPECT_EQ(lb.batch.x.cols(), 400u);
  EXPECT_EQ(lb.batch.t.rows(), 20000u);
  EXPECT_EQ(lb.batch.t.cols(), 50u);
  for (std::size_t i = 0; i < 50; ++i) {
    int plus = 0;
    for (std::size_t j = 0; j < 50; ++j) {
      float v = lb.batch.t(i, j);
      EXPECT_TRUE(v == 1.0f || v == -1.0f);
      plus += v == 1.0f;
    }
    EXPECT_EQ(plus, 1);
    EXPECT_EQ(lb.batch.t(i, lb.labels[i]), 1.0f);
    for (std::size_t j = 0; j < 400; ++j) {
      EXPECT_GE(lb.batch.x(i, j), -1.0f);
      EXPECT_LE(lb.batch.x(i, j), 1.0f);
    }
  }
}

TEST(Dataset, PaperScaleRatio) { EXPECT_NEAR(9264000.0 / 1729440.0, 5.4, 0.05); }
