#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ulsnn/gemm.hpp"
#include "ulsnn/matcore.hpp"

namespace ulsnn {

class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

struct GemmOptions {
  GemmKernel kernel = GemmKernel::blocked;
  BlockConfig block{};
};

// One-hidden-layer tanh network. w_ih is n_h x n_i, w_ho is n_o x n_h, so
// H = tanh(X * w_ih^T) and Y = tanh(H * w_ho^T) for row-major pattern matrices.
struct MlpParams {
  std::size_t n_i = 0, n_h = 0, n_o = 0;
  Mat32 w_ih;
  Mat32 w_ho;

  static MlpParams zeros(std::size_t n_i, std::size_t n_h, std::size_t n_o) {
    return MlpParams{n_i, n_h, n_o, Mat32(n_h, n_i), Mat32(n_o, n_h)};
  }

  // Uniform in +-2/sqrt(fan_in); raw engine bits only, so the result does not
  // depend on the standard library's distribution implementations.
  static MlpParams random(std::size_t n_i, std::size_t n_h, std::size_t n_o, std::uint64_t seed) {
    MlpParams p = zeros(n_i, n_h, n_o);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](Mat32& w, double fan_in) {
      const float scale = float(2.0 / std::sqrt(fan_in));
      for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
          float u = float(rng() >> 40) * (1.0f / float(1 << 24));
          w(i, j) = (2.0f * u - 1.0f) * scale;
        }
    };
    fill(p.w_ih, double(n_i));
    fill(p.w_ho, double(n_h));
    return p;
  }

  std::size_t param_count() const { return n_i * n_h + n_h * n_o; }

  void validate() const {
    if (w_ih.rows() != n_h || w_ih.cols() != n_i || w_ho.rows() != n_o || w_ho.cols() != n_h) {
      throw ShapeError("MlpParams: weight shapes disagree with n_i/n_h/n_o");
    }
  }

  // w_ih elements then w_ho elements, row-major.
  std::vector<float> flatten() const {
    std::vector<float> out = w_ih.flatten();
    std::vector<float> ho = w_ho.flatten();
    out.insert(out.end(), ho.begin(), ho.end());
    return out;
  }

  // w += step * d for a flat direction laid out like flatten().
  void add_scaled(float step, std::span<const float> d) {
    if (d.size() != param_count()) throw ShapeError("MlpParams::add_scaled: direction length");
    std::size_t idx = 0;
    for (Mat32* w : {&w_ih, &w_ho})
      for (std::size_t i = 0; i < w->rows(); ++i) {
        float* r = w->row(i);
        for (std::size_t j = 0; j < w->cols(); ++j) r[j] += step * d[idx++];
      }
  }
};

struct Batch {
  Mat32 x;  // n_p x n_i
  Mat32 t;  // n_p x n_o

  std::size_t size() const { return x.rows(); }

  Batch slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > x.rows()) throw std::out_of_range("Batch::slice");
    Batch b{Mat32(end - begin, x.cols()), Mat32(end - begin, t.cols())};
    for (std::size_t i = begin; i < end; ++i) {
      std::copy(x.row(i), x.row(i) + x.cols(), b.x.row(i - begin));
      std::copy(t.row(i), t.row(i) + t.cols(), b.t.row(i - begin));
    }
    return b;
  }
};

struct GradResult {
  Mat32 g_ih;
  Mat32 g_ho;
  double error = 0.0;
  std::size_t n_patterns = 0;
  std::uint64_t flops = 0;

  std::vector<float> flatten() const {
    std::vector<float> out = g_ih.flatten();
    std::vector<float> ho = g_ho.flatten();
    out.insert(out.end(), ho.begin(), ho.end());
    return out;
  }
};

struct Forward {
  Mat32 h;  // n_p x n_h
  Mat32 y;  // n_p x n_o
};

// Flop formulas ---------------------------------------------------------------

namespace detail {

inline std::uint64_t mul_checked(std::uint64_t a, std::uint64_t b, const char* what) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw OverflowError(std::string(what) + ": result exceeds 64 bits");
  }
  return a * b;
}

inline std::uint64_t add_checked(std::uint64_t a, std::uint64_t b, const char* what) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) {
    throw OverflowError(std::string(what) + ": result exceeds 64 bits");
  }
  return a + b;
}

}  // namespace detail

inline std::uint64_t param_count(std::uint64_t n_i, std::uint64_t n_h, std::uint64_t n_o) {
  return detail::add_checked(detail::mul_checked(n_i, n_h, "param_count"),
                             detail::mul_checked(n_h, n_o, "param_count"), "param_count");
}

// Forward pass: 2 * n_p * (n_i + n_o) * n_h.
inline std::uint64_t error_flops(std::uint64_t n_p, std::uint64_t n_i, std::uint64_t n_h,
                                 std::uint64_t n_o) {
  using detail::mul_checked;
  std::uint64_t io = detail::add_checked(n_i, n_o, "error_flops");
  return mul_checked(mul_checked(mul_checked(2, n_p, "error_flops"), io, "error_flops"), n_h,
                     "error_flops");
}

// Forward pass plus the three gradient GEMMs: n_p * (4 n_i n_h + 6 n_h n_o).
inline std::uint64_t gradient_flops(std::uint64_t n_p, std::uint64_t n_i, std::uint64_t n_h,
                                    std::uint64_t n_o) {
  using detail::mul_checked;
  std::uint64_t in = mul_checked(mul_checked(4, n_i, "gradient_flops"), n_h, "gradient_flops");
  std::uint64_t out = mul_checked(mul_checked(6, n_h, "gradient_flops"), n_o, "gradient_flops");
  return mul_checked(n_p, detail::add_checked(in, out, "gradient_flops"), "gradient_flops");
}

// Network evaluation --------------------------------------------------------------

inline Forward forward(const MlpParams& p, const Mat32& x, const GemmOptions& g = {}) {
  p.validate();
  if (x.cols() != p.n_i) {
    throw ShapeError("forward: x has " + std::to_string(x.cols()) + " columns, n_i is " +
                     std::to_string(p.n_i));
  }
  Mat32 pre_h(x.rows(), p.n_h);
  gemm(g.kernel, 1.0f, x, transpose(p.w_ih.view()), 0.0f, pre_h, g.block);
  Mat32 h = tanh_map(pre_h);
  Mat32 pre_y(x.rows(), p.n_o);
  gemm(g.kernel, 1.0f, h, transpose(p.w_ho.view()), 0.0f, pre_y, g.block);
  return Forward{std::move(h), tanh_map(pre_y)};
}

// Sum of squared differences, accumulated in double in row-major order.
inline double mse_error(const Mat32& y, const Mat32& t) {
  detail::require_same_shape(y, t, "mse_error");
  double e = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) {
      double d = double(y(i, j)) - double(t(i, j));
      e += d * d;
    }
  return e;
}

inline double error(const MlpParams& p, const Batch& b, const GemmOptions& g = {}) {
  return mse_error(forward(p, b.x, g).y, b.t);
}

// Gradient in the (T - Y) convention:
//   Y_d = (1 - Y.Y) . (T - Y)
//   H_d = (1 - H.H) . (Y_d * W_ho)
//   g_ih = H_d^T * X,  g_ho = Y_d^T * H
// which equals -1/2 of dE/dW for E = sum (Y - T)^2, i.e. an ascent direction for -E.
inline GradResult gradient(const MlpParams& p, const Batch& b, const GemmOptions& g = {}) {
  if (b.t.rows() != b.x.rows() || b.t.cols() != p.n_o) {
    throw ShapeError("gradient: batch targets are " + detail::shape_str(b.t) + ", expected " +
                     std::to_string(b.x.rows()) + "x" + std::to_string(p.n_o));
  }
  Forward f = forward(p, b.x, g);
  const std::size_t n_p = b.x.rows();

  Mat32 y_delta = elemwise_mul(ones_minus_sq(f.y), sub_mat(b.t, f.y));
  Mat32 back(n_p, p.n_h);
  gemm(g.kernel, 1.0f, y_delta, p.w_ho, 0.0f, back, g.block);
  Mat32 h_delta = elemwise_mul(ones_minus_sq(f.h), back);

  GradResult r;
  r.g_ih = Mat32(p.n_h, p.n_i);
  r.g_ho = Mat32(p.n_o, p.n_h);
  gemm(g.kernel, 1.0f, transpose(h_delta.view()), b.x, 0.0f, r.g_ih, g.block);
  gemm(g.kernel, 1.0f, transpose(y_delta.view()), f.h, 0.0f, r.g_ho, g.block);
  r.error = mse_error(f.y, b.t);
  r.n_patterns = n_p;
  r.flops = gradient_flops(n_p, p.n_i, p.n_h, p.n_o);
  return r;
}

inline std::vector<std::size_t> classify(const MlpParams& p, const Mat32& x,
                                         const GemmOptions& g = {}) {
  Mat32 y = forward(p, x, g).y;
  std::vector<std::size_t> out(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const float* r = y.row(i);
    out[i] = std::size_t(std::max_element(r, r + y.cols()) - r);
  }
  return out;
}

inline double classification_error(const MlpParams& p, const Mat32& x,
                                   std::span<const std::uint32_t> labels,
                                   const GemmOptions& g = {}) {
  if (labels.size() != x.rows()) throw ShapeError("classification_error: label count");
  if (labels.empty()) return 0.0;
  auto pred = classify(p, x, g);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != labels[i];
  return double(wrong) / double(labels.size());
}

// Checkpoints -----------------------------------------------------------------
//
// "ULSNN1", n_i n_h n_o as u64 little-endian, then w_ih and w_ho as
// little-endian f32, row-major, no padding.

namespace detail {

inline void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = char((v >> (8 * i)) & 0xff);
  os.write(buf, bytes);
}

inline std::uint64_t get_le(std::istream& is, int bytes, const char* what) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), bytes)) {
    throw FormatError(std::string(what) + ": truncated file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t(buf[i]) << (8 * i);
  return v;
}

inline void put_f32(std::ostream& os, float f) { put_le(os, std::bit_cast<std::uint32_t>(f), 4); }

inline float get_f32(std::istream& is, const char* what) {
  return std::bit_cast<float>(std::uint32_t(get_le(is, 4, what)));
}

}  // namespace detail

inline constexpr char kCheckpointMagic[6] = {'U', 'L', 'S', 'N', 'N', '1'};

inline void save_checkpoint(std::ostream& os, const MlpParams& p) {
  p.validate();
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_le(os, p.n_i, 8);
  detail::put_le(os, p.n_h, 8);
  detail::put_le(os, p.n_o, 8);
  for (const Mat32* w : {&p.w_ih, &p.w_ho})
    for (std::size_t i = 0; i < w->rows(); ++i)
      for (std::size_t j = 0; j < w->cols(); ++j) detail::put_f32(os, (*w)(i, j));
}

inline MlpParams load_checkpoint(std::istream& is) {
  char magic[sizeof(kCheckpointMagic)];
  if (!is.read(magic, sizeof(magic)) ||
      !std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) {
    throw FormatError("load_checkpoint: bad magic");
  }
  const char* what = "load_checkpoint";
  std::uint64_t n_i = detail::get_le(is, 8, what);
  std::uint64_t n_h = detail::get_le(is, 8, what);
  std::uint64_t n_o = detail::get_le(is, 8, what);
  if (n_i == 0 || n_h == 0 || n_o == 0 || param_count(n_i, n_h, n_o) > (std::uint64_t(1) << 34)) {
    throw FormatError("load_checkpoint: implausible layer sizes");
  }
  MlpParams p = MlpParams::zeros(n_i, n_h, n_o);
  for (Mat32* w : {&p.w_ih, &p.w_ho})
    for (std::size_t i = 0; i < w->rows(); ++i)
      for (std::size_t j = 0; j < w->cols(); ++j) (*w)(i, j) = detail::get_f32(is, what);
  return p;
}

inline void save_checkpoint(const std::string& path, const MlpParams& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_checkpoint(os, p);
}

inline MlpParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_checkpoint(is);
}

}  // namespace ulsnn
