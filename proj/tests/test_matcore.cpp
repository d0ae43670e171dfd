#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ulsnn/matcore.hpp"

using namespace ulsnn;

namespace {

Mat32 random_mat(std::size_t r, std::size_t c, std::uint64_t seed, std::size_t stride = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  Mat32 m(r, c, stride ? stride : c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

void expect_mat_eq(const Mat32& a, const Mat32& b) {
  ASSERT_TRUE(a.same_shape(b));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) EXPECT_EQ(a(i, j), b(i, j)) << i << "," << j;
}

}  // namespace

TEST(Mat32, StrideRoundTrip) {
  Mat32 m(3, 4, 9);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = float(10 * i + j);
  EXPECT_EQ(m.stride(), 9u);
  EXPECT_GE(m.storage().size(), 27u);
  auto flat = m.flatten();
  ASSERT_EQ(flat.size(), 12u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(flat[i * 4 + j], float(10 * i + j));
}

TEST(Mat32, StrideBelowColsRejected) { EXPECT_THROW(Mat32(2, 5, 4), ShapeError); }

TEST(Mat32, RaggedRowsRejected) { EXPECT_THROW(Mat32::from_rows({{1, 2}, {3}}), ShapeError); }

TEST(Mat32, TransposeView) {
  auto m = Mat32::from_rows({{1, 2, 3}, {4, 5, 6}});
  MatRef t = transpose(m);
  EXPECT_EQ(t.rows, 3u);
  EXPECT_EQ(t.cols, 2u);
  EXPECT_EQ(t(2, 1), 6.0f);
  EXPECT_EQ(Mat32::from(t)(0, 1), 4.0f);
}

TEST(ElemwiseMul, OnesMask) {
  expect_mat_eq(elemwise_mul(Mat32::from_rows({{1, 2}, {3, 4}}), Mat32::from_rows({{1, 1}, {1, 1}})),
                Mat32::from_rows({{1, 2}, {3, 4}}));
}

TEST(ElemwiseMul, Scalar) { EXPECT_EQ(elemwise_mul(Mat32::from_rows({{2}}), Mat32::from_rows({{2}}))(0, 0), 4.0f); }

TEST(ElemwiseMul, MatchesScalarLoop) {
  auto a = random_mat(5, 7, 1, 11), b = random_mat(5, 7, 2);
  auto out = elemwise_mul(a, b);
  EXPECT_EQ(out.stride(), out.cols());
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(out(i, j), a(i, j) * b(i, j));
}

TEST(ElemwiseMul, ShapeMismatch) { EXPECT_THROW(elemwise_mul(Mat32(2, 3), Mat32(3, 2)), ShapeError); }

TEST(TanhMap, Values) {
  EXPECT_EQ(tanh_map(Mat32::from_rows({{0}}))(0, 0), 0.0f);
  float sat = tanh_map(Mat32::from_rows({{1e6f}}))(0, 0);
  EXPECT_LE(std::fabs(sat - 1.0f), std::numeric_limits<float>::epsilon());
  EXPECT_FLOAT_EQ(tanh_map(Mat32::from_rows({{0.5f}}))(0, 0), float(std::tanh(0.5)));
  EXPECT_NEAR(tanh_map(Mat32::from_rows({{0.5f}}))(0, 0), 0.46211716f, 1e-7f);
}

TEST(TanhMap, BoundedAndExact) {
  auto a = random_mat(6, 9, 3);
  auto t = tanh_map(a);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      EXPECT_LT(std::fabs(t(i, j)), 1.0f);
      EXPECT_EQ(t(i, j), std::tanh(a(i, j)));
    }
}

TEST(OnesMinusSq, Values) {
  EXPECT_EQ(ones_minus_sq(Mat32::from_rows({{0}}))(0, 0), 1.0f);
  EXPECT_EQ(ones_minus_sq(Mat32::from_rows({{1}}))(0, 0), 0.0f);
  expect_mat_eq(ones_minus_sq(Mat32::from_rows({{0.5f, -0.5f}})), Mat32::from_rows({{0.75f, 0.75f}}));
}

TEST(SubMat, SelfIsZero) {
  auto t = random_mat(4, 3, 4);
  auto z = sub_mat(t, t);
  for (float v : z.flatten()) EXPECT_EQ(v, 0.0f);
}

TEST(AxpyMat, Scalar) {
  EXPECT_EQ(axpy_mat(2.0f, Mat32::from_rows({{1}}), Mat32::from_rows({{3}}))(0, 0), 5.0f);
}

TEST(AxpyMat, AddAndMismatch) {
  auto a = random_mat(3, 3, 5), b = random_mat(3, 3, 6);
  auto s = add_mat(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(s(i, j), a(i, j) + b(i, j));
  EXPECT_THROW(axpy_mat(1.0f, Mat32(1, 2), Mat32(2, 1)), ShapeError);
  EXPECT_THROW(sub_mat(Mat32(1, 2), Mat32(2, 1)), ShapeError);
}

TEST(DotFlat, NonNegativeAndDouble) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto a = random_mat(7, 5, seed, 8);
    EXPECT_GE(dot_flat(a, a), 0.0);
  }
  auto a = random_mat(4, 6, 99), b = random_mat(4, 6, 98);
  double ref = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j) ref += double(a(i, j)) * double(b(i, j));
  EXPECT_EQ(dot_flat(a, b), ref);
  EXPECT_THROW(dot_flat(Mat32(2, 2), Mat32(1, 4)), ShapeError);
}

TEST(AllFinite, DetectsNaN) {
  auto a = random_mat(2, 2, 7);
  EXPECT_TRUE(all_finite(a));
  a(1, 1) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(all_finite(a));
}

TEST(Matcore, InputsUnmodified) {
  auto a = random_mat(3, 4, 8), b = random_mat(3, 4, 9);
  auto a0 = a.flatten(), b0 = b.flatten();
  (void)elemwise_mul(a, b);
  (void)sub_mat(a, b);
  (void)tanh_map(a);
  EXPECT_EQ(a.flatten(), a0);
  EXPECT_EQ(b.flatten(), b0);
}
