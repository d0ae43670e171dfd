#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ulsnn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Read-only strided view. A transposed view simply swaps the strides, so
// row_stride/col_stride are both element counts and either may be 1.
struct MatRef {
  const float* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t row_stride = 0;
  std::size_t col_stride = 1;

  float operator()(std::size_t i, std::size_t j) const {
    return data[i * row_stride + j * col_stride];
  }
  bool row_contiguous() const { return col_stride == 1; }
};

inline MatRef transpose(MatRef m) {
  return MatRef{m.data, m.cols, m.rows, m.col_stride, m.row_stride};
}

// Row-major single-precision matrix with an explicit row stride.
// Elements between cols and stride on each row are padding and never read.
class Mat32 {
 public:
  Mat32() = default;

  Mat32(std::size_t rows, std::size_t cols) : Mat32(rows, cols, cols) {}

  Mat32(std::size_t rows, std::size_t cols, std::size_t stride)
      : rows_(rows), cols_(cols), stride_(stride), data_(rows * stride, 0.0f) {
    if (stride < cols) {
      throw ShapeError("Mat32: stride " + std::to_string(stride) + " < cols " +
                       std::to_string(cols));
    }
  }

  static Mat32 from_rows(std::initializer_list<std::initializer_list<float>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r ? rows.begin()->size() : 0;
    Mat32 m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("Mat32::from_rows: ragged rows");
      std::size_t j = 0;
      for (float v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  static Mat32 from(MatRef v) {
    Mat32 m(v.rows, v.cols);
    for (std::size_t i = 0; i < v.rows; ++i)
      for (std::size_t j = 0; j < v.cols; ++j) m(i, j) = v(i, j);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t stride() const { return stride_; }
  std::size_t size() const { return rows_ * cols_; }

  float& operator()(std::size_t i, std::size_t j) { return data_[i * stride_ + j]; }
  float operator()(std::size_t i, std::size_t j) const { return data_[i * stride_ + j]; }

  float* row(std::size_t i) { return data_.data() + i * stride_; }
  const float* row(std::size_t i) const { return data_.data() + i * stride_; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<const float> storage() const { return data_; }

  MatRef view() const { return MatRef{data_.data(), rows_, cols_, stride_, 1}; }
  operator MatRef() const { return view(); }

  bool same_shape(const Mat32& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  // Copies the logical elements in row-major order, dropping padding.
  std::vector<float> flatten() const {
    std::vector<float> out;
    out.reserve(size());
    for (std::size_t i = 0; i < rows_; ++i) out.insert(out.end(), row(i), row(i) + cols_);
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
  std::vector<float> data_;
};

namespace detail {

inline std::string shape_str(const Mat32& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_same_shape(const Mat32& a, const Mat32& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

template <class F>
Mat32 map(const Mat32& a, F f) {
  Mat32 out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const float* src = a.row(i);
    float* dst = out.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = f(src[j]);
  }
  return out;
}

template <class F>
Mat32 zip(const Mat32& a, const Mat32& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Mat32 out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const float* pa = a.row(i);
    const float* pb = b.row(i);
    float* dst = out.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = f(pa[j], pb[j]);
  }
  return out;
}

}  // namespace detail

inline Mat32 elemwise_mul(const Mat32& a, const Mat32& b) {
  return detail::zip(a, b, "elemwise_mul", [](float x, float y) { return x * y; });
}

inline Mat32 tanh_map(const Mat32& a) {
  return detail::map(a, [](float x) { return std::tanh(x); });
}

// 1 - a*a elementwise: the tanh derivative expressed through the activation.
inline Mat32 ones_minus_sq(const Mat32& a) {
  return detail::map(a, [](float x) { return 1.0f - x * x; });
}

inline Mat32 sub_mat(const Mat32& a, const Mat32& b) {
  return detail::zip(a, b, "sub_mat", [](float x, float y) { return x - y; });
}

inline Mat32 add_mat(const Mat32& a, const Mat32& b) {
  return detail::zip(a, b, "add_mat", [](float x, float y) { return x + y; });
}

// alpha*x + y
inline Mat32 axpy_mat(float alpha, const Mat32& x, const Mat32& y) {
  return detail::zip(x, y, "axpy_mat", [alpha](float xv, float yv) { return alpha * xv + yv; });
}

inline double dot_flat(const Mat32& a, const Mat32& b) {
  detail::require_same_shape(a, b, "dot_flat");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const float* pa = a.row(i);
    const float* pb = b.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) acc += double(pa[j]) * double(pb[j]);
  }
  return acc;
}

inline double dot_flat(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot_flat: length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}

inline bool all_finite(const Mat32& a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (!std::isfinite(a(i, j))) return false;
  return true;
}

}  // namespace ulsnn
