#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ulsnn/matcore.hpp"

namespace ulsnn {

enum class KernelPath {
  automatic,  // 4-lane vector microkernel when the config allows it
  scalar,     // generic loops, any lane_width / n_panel
};

// Blocking parameters for gemm_blocked. The defaults are the L1 block of the
// original SSE kernel: a 336-long row of A against a 336x5 packed panel of B.
struct BlockConfig {
  std::size_t k_block = 336;
  std::size_t n_panel = 5;
  std::size_t lane_width = 4;
  std::size_t m2 = 128;
  std::size_t n2 = 160;
  std::size_t k2 = 672;
  std::size_t l1_bytes = 32 * 1024;
  KernelPath path = KernelPath::automatic;

  // Floats resident in L1 for one microkernel sweep: the B panel plus one row of A.
  std::size_t l1_floats() const { return k_block * (n_panel + 1); }

  void validate() const {
    if (lane_width < 1) throw ConfigError("BlockConfig: lane_width must be >= 1");
    if (k_block < lane_width) throw ConfigError("BlockConfig: k_block must be >= lane_width");
    if (n_panel < 1) throw ConfigError("BlockConfig: n_panel must be >= 1");
    if (m2 < 1 || n2 < 1 || k2 < 1) throw ConfigError("BlockConfig: L2 extents must be >= 1");
    if (l1_floats() * sizeof(float) > l1_bytes) {
      throw ConfigError("BlockConfig: k_block*(n_panel+1) floats exceed the L1 budget of " +
                        std::to_string(l1_bytes) + " bytes");
    }
  }
};

inline std::ostream& operator<<(std::ostream& os, const BlockConfig& c) {
  return os << "k_block=" << c.k_block << " n_panel=" << c.n_panel << " lane_width=" << c.lane_width
            << " m2=" << c.m2 << " n2=" << c.n2 << " k2=" << c.k2;
}

namespace detail {

inline std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

inline void check_gemm_shapes(MatRef a, MatRef b, const Mat32& c, const char* op) {
  if (a.cols != b.rows || c.rows() != a.rows || c.cols() != b.cols) {
    throw ShapeError(std::string(op) + ": A " + std::to_string(a.rows) + "x" +
                     std::to_string(a.cols) + ", B " + std::to_string(b.rows) + "x" +
                     std::to_string(b.cols) + ", C " + shape_str(c));
  }
}

// c := beta*c. beta == 0 overwrites, so NaN/Inf in c never leaks through.
inline void scale_c(float beta, Mat32& c) {
  if (beta == 1.0f) return;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    float* r = c.row(i);
    if (beta == 0.0f) {
      std::fill(r, r + c.cols(), 0.0f);
    } else {
      for (std::size_t j = 0; j < c.cols(); ++j) r[j] *= beta;
    }
  }
}

// Packed layout for a k-range of n_panel columns starting at col0:
//   for each lane_width chunk of k, for each panel column j, lane_width values
//   b(k0 + chunk*lw + l, col0 + j).
// k is zero-padded to a multiple of lane_width, columns beyond ncols are zero.
inline void pack_into(float* dst, MatRef b, std::size_t k0, std::size_t klen, std::size_t col0,
                      std::size_t ncols, std::size_t np, std::size_t lw) {
  const std::size_t chunks = (klen + lw - 1) / lw;
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    for (std::size_t j = 0; j < np; ++j) {
      float* out = dst + (ch * np + j) * lw;
      for (std::size_t l = 0; l < lw; ++l) {
        std::size_t k = ch * lw + l;
        out[l] = (j < ncols && k < klen) ? b(k0 + k, col0 + j) : 0.0f;
      }
    }
  }
}

#if defined(__GNUC__) || defined(__clang__)
#define ULSNN_HAVE_VECTOR_EXT 1
typedef float v4sf __attribute__((vector_size(16)));

inline v4sf load4(const float* p) {
  v4sf v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

// NP simultaneous 4-lane dot products of one row of A against a packed panel.
template <std::size_t NP>
inline void micro_v4(const float* a, std::size_t len, const float* panel, float* out) {
  v4sf acc[NP];
  for (std::size_t j = 0; j < NP; ++j) acc[j] = v4sf{0.0f, 0.0f, 0.0f, 0.0f};
  const std::size_t chunks = len / 4;
  const float* bp = panel;
  for (std::size_t c = 0; c < chunks; ++c, bp += NP * 4) {
    __builtin_prefetch(a + 4 * c + 32);
    const v4sf av = load4(a + 4 * c);
    for (std::size_t j = 0; j < NP; ++j) acc[j] += av * load4(bp + 4 * j);
  }
  if (std::size_t rem = len % 4) {
    float tail[4] = {0.0f, 0.0f, 0.0f, 0.0f};
    for (std::size_t l = 0; l < rem; ++l) tail[l] = a[4 * chunks + l];
    const v4sf av = load4(tail);
    for (std::size_t j = 0; j < NP; ++j) acc[j] += av * load4(bp + 4 * j);
  }
  for (std::size_t j = 0; j < NP; ++j) out[j] = ((acc[j][0] + acc[j][1]) + acc[j][2]) + acc[j][3];
}

using MicroFn = void (*)(const float*, std::size_t, const float*, float*);

inline MicroFn vector_micro(std::size_t np) {
  switch (np) {
    case 1: return &micro_v4<1>;
    case 2: return &micro_v4<2>;
    case 3: return &micro_v4<3>;
    case 4: return &micro_v4<4>;
    case 5: return &micro_v4<5>;
    case 6: return &micro_v4<6>;
    case 7: return &micro_v4<7>;
    case 8: return &micro_v4<8>;
    default: return nullptr;
  }
}
#else
#define ULSNN_HAVE_VECTOR_EXT 0
#endif

// Scalar equivalent of the vector microkernel for arbitrary np/lw.
// acc must hold np*lw floats.
inline void micro_scalar(const float* a, std::size_t len, const float* panel, std::size_t np,
                         std::size_t lw, float* acc, float* out) {
  std::fill(acc, acc + np * lw, 0.0f);
  const std::size_t chunks = (len + lw - 1) / lw;
  for (std::size_t c = 0; c < chunks; ++c) {
    const float* bp = panel + c * np * lw;
    for (std::size_t j = 0; j < np; ++j) {
      float* aj = acc + j * lw;
      for (std::size_t l = 0; l < lw; ++l) {
        std::size_t k = c * lw + l;
        float av = k < len ? a[k] : 0.0f;
        aj[l] += av * bp[j * lw + l];
      }
    }
  }
  for (std::size_t j = 0; j < np; ++j) {
    float s = 0.0f;
    for (std::size_t l = 0; l < lw; ++l) s += acc[j * lw + l];
    out[j] = s;
  }
}

}  // namespace detail

inline bool vector_path_available(const BlockConfig& cfg) {
#if ULSNN_HAVE_VECTOR_EXT
  return cfg.path == KernelPath::automatic && cfg.lane_width == 4 && cfg.n_panel >= 1 &&
         cfg.n_panel <= 8;
#else
  (void)cfg;
  return false;
#endif
}

// Reference SGEMM: c := alpha*a*b + beta*c with three loops and f32 accumulation.
inline void gemm_naive(float alpha, MatRef a, MatRef b, float beta, Mat32& c) {
  detail::check_gemm_shapes(a, b, c, "gemm_naive");
  if (alpha == 0.0f && beta == 1.0f) return;
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      float sum = 0.0f;
      for (std::size_t k = 0; k < a.cols; ++k) sum += a(i, k) * b(k, j);
      c(i, j) = beta == 0.0f ? alpha * sum : alpha * sum + beta * c(i, j);
    }
  }
}

// B' re-buffered for the inner loop. See detail::pack_into for the layout.
struct PackedPanel {
  std::vector<float> data;
  std::size_t k_len = 0;
  std::size_t n_cols = 0;  // real columns; the rest of the panel is zero
  std::size_t n_panel = 0;
  std::size_t lane_width = 0;

  Mat32 unpack() const {
    Mat32 out(k_len, n_cols);
    for (std::size_t k = 0; k < k_len; ++k) {
      for (std::size_t j = 0; j < n_cols; ++j) {
        std::size_t ch = k / lane_width, l = k % lane_width;
        out(k, j) = data[(ch * n_panel + j) * lane_width + l];
      }
    }
    return out;
  }
};

inline PackedPanel pack_b_panel(MatRef b, std::size_t col0, const BlockConfig& cfg,
                                std::size_t k0 = 0,
                                std::size_t k_len = std::numeric_limits<std::size_t>::max(),
                                bool allow_remainder = false) {
  if (cfg.lane_width < 1 || cfg.n_panel < 1) throw ConfigError("pack_b_panel: bad config");
  if (k_len == std::numeric_limits<std::size_t>::max()) k_len = b.rows > k0 ? b.rows - k0 : 0;
  if (k0 + k_len > b.rows) throw std::out_of_range("pack_b_panel: k range exceeds B rows");
  if (col0 > b.cols) throw std::out_of_range("pack_b_panel: col0 exceeds B cols");
  std::size_t ncols = std::min(cfg.n_panel, b.cols - col0);
  if (ncols < cfg.n_panel && !allow_remainder) {
    throw std::out_of_range("pack_b_panel: panel at col " + std::to_string(col0) +
                            " runs past B cols without remainder flag");
  }
  PackedPanel p;
  p.k_len = k_len;
  p.n_cols = ncols;
  p.n_panel = cfg.n_panel;
  p.lane_width = cfg.lane_width;
  p.data.assign(detail::round_up(k_len, cfg.lane_width) * cfg.n_panel, 0.0f);
  detail::pack_into(p.data.data(), b, k0, k_len, col0, ncols, cfg.n_panel, cfg.lane_width);
  return p;
}

// Blocked SGEMM. Loop nest, outermost first:
//   n2 columns of C  ->  k2 rows of B (packed once into an L2-sized buffer)
//   -> m2 rows of A  ->  k_block sub-block  ->  n_panel panel  ->  row i of A
// The innermost call computes n_panel dot products of length <= k_block with
// register accumulators; A rows are streamed in place, never copied.
inline void gemm_blocked(float alpha, MatRef a, MatRef b, float beta, Mat32& c,
                         const BlockConfig& cfg = {}) {
  cfg.validate();
  detail::check_gemm_shapes(a, b, c, "gemm_blocked");
  if (alpha == 0.0f && beta == 1.0f) return;
  detail::scale_c(beta, c);
  const std::size_t M = a.rows, N = b.cols, K = a.cols;
  if (alpha == 0.0f || M == 0 || N == 0 || K == 0) return;

  // Streaming A needs unit stride along k; a transposed A is copied once.
  Mat32 a_copy;
  if (!a.row_contiguous()) {
    a_copy = Mat32::from(a);
    a = a_copy.view();
  }

  const std::size_t np = cfg.n_panel, lw = cfg.lane_width;
  const std::size_t kb = cfg.k_block;
  const std::size_t k2 = std::max(cfg.k2, kb);
  const std::size_t n2 = cfg.n2;

#if ULSNN_HAVE_VECTOR_EXT
  detail::MicroFn vec = vector_path_available(cfg) ? detail::vector_micro(np) : nullptr;
#endif
  std::vector<float> acc(np * lw);
  std::vector<float> dots(np);
  std::vector<float> packed;

  for (std::size_t j2 = 0; j2 < N; j2 += n2) {
    const std::size_t nb = std::min(n2, N - j2);
    const std::size_t panels = (nb + np - 1) / np;
    for (std::size_t kk = 0; kk < K; kk += k2) {
      const std::size_t klen2 = std::min(k2, K - kk);
      const std::size_t subs = (klen2 + kb - 1) / kb;
      // One packed region per (sub-block, panel); sub-block s starts at sub_off[s].
      std::vector<std::size_t> sub_off(subs + 1, 0);
      for (std::size_t s = 0; s < subs; ++s) {
        std::size_t len = std::min(kb, klen2 - s * kb);
        sub_off[s + 1] = sub_off[s] + detail::round_up(len, lw) * np * panels;
      }
      packed.resize(sub_off[subs]);
      for (std::size_t s = 0; s < subs; ++s) {
        std::size_t k0 = kk + s * kb;
        std::size_t len = std::min(kb, klen2 - s * kb);
        std::size_t panel_sz = detail::round_up(len, lw) * np;
        for (std::size_t p = 0; p < panels; ++p) {
          std::size_t col0 = j2 + p * np;
          std::size_t ncols = std::min(np, j2 + nb - col0);
          detail::pack_into(packed.data() + sub_off[s] + p * panel_sz, b, k0, len, col0, ncols,
                            np, lw);
        }
      }
      for (std::size_t i2 = 0; i2 < M; i2 += cfg.m2) {
        const std::size_t i_end = std::min(M, i2 + cfg.m2);
        for (std::size_t s = 0; s < subs; ++s) {
          const std::size_t k0 = kk + s * kb;
          const std::size_t len = std::min(kb, klen2 - s * kb);
          const std::size_t panel_sz = detail::round_up(len, lw) * np;
          for (std::size_t p = 0; p < panels; ++p) {
            const float* panel = packed.data() + sub_off[s] + p * panel_sz;
            const std::size_t col0 = j2 + p * np;
            const std::size_t ncols = std::min(np, j2 + nb - col0);
            for (std::size_t i = i2; i < i_end; ++i) {
              const float* arow = a.data + i * a.row_stride + k0;
#if ULSNN_HAVE_VECTOR_EXT
              if (vec) {
                vec(arow, len, panel, dots.data());
              } else
#endif
              {
                detail::micro_scalar(arow, len, panel, np, lw, acc.data(), dots.data());
              }
              float* crow = c.row(i) + col0;
              for (std::size_t j = 0; j < ncols; ++j) crow[j] += alpha * dots[j];
            }
          }
        }
      }
    }
  }
}

enum class GemmKernel { naive, blocked };

inline const char* to_string(GemmKernel k) { return k == GemmKernel::naive ? "naive" : "blocked"; }

inline GemmKernel parse_kernel(const std::string& s) {
  if (s == "naive") return GemmKernel::naive;
  if (s == "blocked") return GemmKernel::blocked;
  throw ConfigError("unknown kernel '" + s + "' (expected naive or blocked)");
}

inline void gemm(GemmKernel kernel, float alpha, MatRef a, MatRef b, float beta, Mat32& c,
                 const BlockConfig& cfg = {}) {
  if (kernel == GemmKernel::naive) {
    gemm_naive(alpha, a, b, beta, c);
  } else {
    gemm_blocked(alpha, a, b, beta, c, cfg);
  }
}

// Benchmarking ------------------------------------------------------------

struct BenchRecord {
  GemmKernel kernel = GemmKernel::blocked;
  std::size_t m = 0, n = 0, k = 0;
  std::size_t stride = 0;
  double wall_seconds = 0.0;
  double mflops = 0.0;
  bool stride_widened = false;  // size exceeded the requested stride

  double flops() const { return 2.0 * double(m) * double(n) * double(k); }
};

struct BenchOptions {
  std::size_t stride = 700;
  std::size_t repetitions = 3;
  std::size_t l2_bytes = 2 * 1024 * 1024;  // flush buffer is 4x this
  std::uint64_t seed = 1;
};

namespace detail {

class CacheFlusher {
 public:
  explicit CacheFlusher(std::size_t bytes) : buf_(std::max<std::size_t>(bytes / sizeof(float), 1)) {}

  // Write then read the whole buffer so none of the operands survive in cache.
  void flush() {
    for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i] = float(i & 0xff) + sink_;
    float s = 0.0f;
    for (float v : buf_) s += v;
    sink_ = s * 1e-30f;
  }

 private:
  std::vector<float> buf_;
  volatile float sink_ = 0.0f;
};

inline void fill_uniform(Mat32& m, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      m(i, j) = float(rng() >> 40) * (1.0f / float(1 << 24));
}

}  // namespace detail

// Times kernel(size x size x size) per size under a conservative protocol:
// wall clock, fixed stride, data caches flushed before each call, median of
// the repetitions.
inline std::vector<BenchRecord> bench_gemm(const std::vector<std::size_t>& sizes, GemmKernel kernel,
                                           const BlockConfig& cfg = {}, const BenchOptions& opt = {}) {
  std::vector<BenchRecord> out;
  std::mt19937_64 rng(opt.seed);
  detail::CacheFlusher flusher(4 * opt.l2_bytes);
  const std::size_t reps = std::max<std::size_t>(opt.repetitions, 3);
  for (std::size_t sz : sizes) {
    BenchRecord r;
    r.kernel = kernel;
    r.m = r.n = r.k = sz;
    r.stride = std::max(opt.stride, sz);
    r.stride_widened = sz > opt.stride;
    Mat32 a(sz, sz, r.stride), b(sz, sz, r.stride), c(sz, sz, r.stride);
    detail::fill_uniform(a, rng);
    detail::fill_uniform(b, rng);
    std::vector<double> times;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      flusher.flush();
      auto t0 = std::chrono::steady_clock::now();
      gemm(kernel, 1.0f, a, b, 0.0f, c, cfg);
      auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-9));
    }
    std::sort(times.begin(), times.end());
    r.wall_seconds = times[times.size() / 2];
    r.mflops = r.flops() / r.wall_seconds / 1e6;
    out.push_back(r);
  }
  return out;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& rows,
                            bool header = true) {
  if (header) os << "kernel,m,n,k,stride,seconds,mflops\n";
  for (const auto& r : rows) {
    os << to_string(r.kernel) << ',' << r.m << ',' << r.n << ',' << r.k << ',' << r.stride << ','
       << r.wall_seconds << ',' << r.mflops << '\n';
  }
}

// Tuning --------------------------------------------------------------------

struct TuneTrial {
  BlockConfig cfg;
  double mflops = 0.0;
};

struct TuneResult {
  BlockConfig best;
  double best_mflops = 0.0;
  double baseline_mflops = 0.0;  // k_block=16, n_panel=1, also a candidate
  std::vector<TuneTrial> trials;
};

// Fills m2/n2/k2 so the packed B block takes about half of L2 and an m2 x k_block
// slab of A about a quarter.
inline BlockConfig with_l2_blocks(BlockConfig cfg, std::size_t l2_bytes) {
  const std::size_t l2_floats = std::max<std::size_t>(l2_bytes / sizeof(float), 1);
  cfg.k2 = 2 * cfg.k_block;
  std::size_t n2 = (l2_floats / 2) / cfg.k2;
  cfg.n2 = std::max(cfg.n_panel, n2 / cfg.n_panel * cfg.n_panel);
  cfg.m2 = std::max<std::size_t>(1, (l2_floats / 4) / cfg.k_block);
  return cfg;
}

inline TuneResult tune_blocks(std::size_t l1_bytes, std::size_t l2_bytes, std::size_t size = 512,
                              std::size_t repetitions = 3) {
  if (l1_bytes == 0 || l2_bytes == 0) throw ConfigError("tune_blocks: cache sizes must be > 0");
  BenchOptions opt;
  opt.stride = size;
  opt.repetitions = repetitions;
  opt.l2_bytes = l2_bytes;

  std::vector<BlockConfig> candidates;
  BlockConfig base;
  base.k_block = 16;
  base.n_panel = 1;
  base.l1_bytes = std::max(l1_bytes, base.l1_floats() * sizeof(float));
  candidates.push_back(with_l2_blocks(base, l2_bytes));
  for (std::size_t kb = 64; kb <= 512; kb += 64) {
    for (std::size_t np = 1; np <= 8; ++np) {
      BlockConfig c;
      c.k_block = kb;
      c.n_panel = np;
      c.l1_bytes = l1_bytes;
      if (c.l1_floats() * sizeof(float) > l1_bytes) continue;
      candidates.push_back(with_l2_blocks(c, l2_bytes));
    }
  }
  // 336 is the historical optimum; include it even though it is off the grid.
  BlockConfig hist;
  hist.l1_bytes = l1_bytes;
  if (hist.l1_floats() * sizeof(float) <= l1_bytes) candidates.push_back(with_l2_blocks(hist, l2_bytes));

  TuneResult res;
  for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
    const auto& c = candidates[idx];
    double rate = bench_gemm({size}, GemmKernel::blocked, c, opt).front().mflops;
    res.trials.push_back({c, rate});
    if (idx == 0) res.baseline_mflops = rate;
    if (rate > res.best_mflops) {
      res.best_mflops = rate;
      res.best = c;
    }
  }
  return res;
}

}  // namespace ulsnn
