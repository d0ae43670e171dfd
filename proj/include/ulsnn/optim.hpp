#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "ulsnn/matcore.hpp"
#include "ulsnn/nn.hpp"

namespace ulsnn {

class DirectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LineSearchCfg {
  float initial_step = 1e-3f;
  float growth = 2.0f;
  std::size_t max_expansions = 40;
  float sign_sample_fraction = 0.1f;
  // Interpolated step is accepted when |slope| <= slope_tolerance * slope(0);
  // otherwise one bisection toward the sign of the slope is tried.
  double slope_tolerance = 0.1;
  // Also evaluate the full-data slope at every probe and count sign agreement.
  bool audit_sign_agreement = false;
  // Steepest ascent: ignore the conjugate term entirely.
  bool force_beta_zero = false;

  void validate() const {
    if (!(growth > 1.0f)) throw ConfigError("LineSearchCfg: growth must be > 1");
    if (!(sign_sample_fraction > 0.0f && sign_sample_fraction <= 1.0f)) {
      throw ConfigError("LineSearchCfg: sign_sample_fraction must be in (0, 1]");
    }
    if (!(initial_step > 0.0f)) throw ConfigError("LineSearchCfg: initial_step must be > 0");
    if (max_expansions < 1) throw ConfigError("LineSearchCfg: max_expansions must be >= 1");
  }
};

struct CgState {
  std::vector<float> prev_grad;
  std::vector<float> direction;
  std::size_t iteration = 0;
  float last_step = 0.0f;
  bool restart = false;  // next direction is the plain gradient
};

// Polak-Ribiere: max(0, g_new.(g_new - g_old) / g_old.g_old). Zero g_old gives 0.
inline float pr_beta(std::span<const float> g_new, std::span<const float> g_old) {
  if (g_new.size() != g_old.size()) throw ShapeError("pr_beta: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g_new.size(); ++i) {
    num += double(g_new[i]) * (double(g_new[i]) - double(g_old[i]));
    den += double(g_old[i]) * double(g_old[i]);
  }
  if (den == 0.0) return 0.0f;
  return float(std::max(0.0, num / den));
}

inline std::vector<float> combine_direction(std::span<const float> g, std::span<const float> d_prev,
                                            float beta) {
  if (g.size() != d_prev.size()) throw ShapeError("combine_direction: length mismatch");
  std::vector<float> d(g.begin(), g.end());
  if (beta != 0.0f)
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += beta * d_prev[i];
  return d;
}

// d = g on the first iteration, after a restart, or when beta clips to 0;
// otherwise d = g + beta * d_prev.
inline std::vector<float> next_direction(std::span<const float> g, const CgState& state,
                                         float* beta_out = nullptr, bool force_beta_zero = false) {
  float beta = 0.0f;
  if (state.iteration > 0 && !state.restart && !force_beta_zero) {
    if (state.prev_grad.size() != g.size() || state.direction.size() != g.size()) {
      throw ShapeError("next_direction: state does not match gradient length");
    }
    beta = pr_beta(g, state.prev_grad);
  }
  if (beta_out) *beta_out = beta;
  if (beta == 0.0f) return std::vector<float>(g.begin(), g.end());
  return combine_direction(g, state.direction, beta);
}

struct Bracket {
  float lo = 0.0f;
  float hi = 0.0f;
  bool bracketed = false;
  std::size_t probes = 0;
};

// Expands initial_step * growth^n until the slope sign turns non-positive.
// sign(step) returns the sign of the directional derivative of the maximized
// objective at step.
template <class SignOracle>
Bracket bracket_by_sign(SignOracle&& sign, const LineSearchCfg& cfg, float initial_step) {
  cfg.validate();
  if (sign(0.0f) <= 0) throw DirectionError("bracket_by_sign: direction is not an ascent direction");
  Bracket b;
  float prev = 0.0f;
  float s = initial_step;
  for (std::size_t n = 0; n < cfg.max_expansions; ++n) {
    ++b.probes;
    if (sign(s) <= 0) {
      b.lo = prev;
      b.hi = s;
      b.bracketed = true;
      return b;
    }
    prev = s;
    s *= cfg.growth;
  }
  b.lo = cfg.max_expansions > 1 ? prev / cfg.growth : 0.0f;
  b.hi = prev;
  return b;
}

template <class SignOracle>
Bracket bracket_by_sign(SignOracle&& sign, const LineSearchCfg& cfg) {
  return bracket_by_sign(std::forward<SignOracle>(sign), cfg, cfg.initial_step);
}

// Abscissa of the vertex of the parabola through three points, clamped to
// [s0, s2]. Degenerate (collinear) input returns s1.
inline float quad_interpolate(double s0, double f0, double s1, double f1, double s2, double f2) {
  const double a = (s1 - s0) * (f1 - f2);
  const double b = (s1 - s2) * (f1 - f0);
  const double den = a - b;
  if (den == 0.0) return float(s1);
  double v = s1 - 0.5 * ((s1 - s0) * a - (s1 - s2) * b) / den;
  if (!std::isfinite(v)) return float(s1);
  return float(std::clamp(v, s0, s2));
}

// What cg_train needs from the data side. The source owns the current point x
// and a search direction d; all evaluations are relative to x + step*d.
struct Evaluation {
  std::vector<float> grad;  // ascent direction for -E
  double error = 0.0;
  std::size_t n_patterns = 0;
  std::uint64_t flops = 0;
};

template <class S>
concept ObjectiveSource = requires(S s, const S cs, std::span<const float> d, float step, float frac) {
  { cs.dimension() } -> std::convertible_to<std::size_t>;
  { s.gradient() } -> std::same_as<Evaluation>;
  { s.set_direction(d) };
  { s.slope_at(step, frac) } -> std::convertible_to<double>;
  { s.error_at(step) } -> std::convertible_to<double>;
  { s.commit(step) };
  { cs.contributing_flops() } -> std::convertible_to<std::uint64_t>;
  { cs.elapsed_seconds() } -> std::convertible_to<double>;
};

struct LineSearchResult {
  float step = 0.0f;
  double error = 0.0;  // E at the accepted step
  Bracket bracket;
  bool interpolated = false;
  bool bisected = false;
  std::size_t sign_probes = 0;
  std::size_t sign_agreements = 0;
};

template <ObjectiveSource S>
LineSearchResult line_search(S& src, double slope0, double e0, const LineSearchCfg& cfg,
                             float initial_step) {
  LineSearchResult r;
  auto sgn = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
  auto sign_oracle = [&](float s) -> int {
    if (s == 0.0f) return sgn(slope0);
    int est = sgn(src.slope_at(s, cfg.sign_sample_fraction));
    ++r.sign_probes;
    if (cfg.audit_sign_agreement) {
      r.sign_agreements += est == sgn(src.slope_at(s, 1.0f));
    }
    return est;
  };
  r.bracket = bracket_by_sign(sign_oracle, cfg, initial_step);
  if (r.bracket.bracketed && r.bracket.lo == 0.0f) {
    // The first probe already overshot: contract until the slope is positive again.
    float h = r.bracket.hi;
    for (std::size_t n = 0; n < cfg.max_expansions; ++n) {
      float s = h / cfg.growth;
      ++r.bracket.probes;
      if (sign_oracle(s) > 0) {
        r.bracket.lo = s;
        break;
      }
      h = s;
    }
    r.bracket.hi = h;
  }
  const float lo = r.bracket.lo, hi = r.bracket.hi;

  // (step, -E) samples; -E is the maximized objective.
  std::vector<std::pair<float, double>> pts;
  auto eval = [&](float s) {
    for (const auto& p : pts)
      if (p.first == s) return p.second;
    double f = s == 0.0f ? -e0 : -src.error_at(s);
    pts.emplace_back(s, f);
    return f;
  };
  const float mid = 0.5f * (lo + hi);
  double f_lo = eval(lo), f_mid = eval(mid), f_hi = eval(hi);

  float s_star;
  if (f_mid >= std::max(f_lo, f_hi)) {
    s_star = quad_interpolate(lo, f_lo, mid, f_mid, hi, f_hi);
    r.interpolated = true;
  } else {
    s_star = f_lo >= f_hi ? lo : hi;
  }
  if (s_star > 0.0f) {
    eval(s_star);
    double slope = src.slope_at(s_star, cfg.sign_sample_fraction);
    if (std::abs(slope) > cfg.slope_tolerance * slope0) {
      float s2 = slope > 0.0 ? 0.5f * (s_star + hi) : 0.5f * (lo + s_star);
      if (s2 > 0.0f) {
        eval(s2);
        r.bisected = true;
      }
    }
  }
  auto best = [&] {
    std::pair<float, double> b{0.0f, -e0};
    for (const auto& [s, f] : pts)
      if (s > 0.0f && f > b.second) b = {s, f};
    return b;
  };
  auto [best_s, best_f] = best();
  if (best_s == 0.0f) {
    // Nothing improved: shrink below the smallest probe until something does.
    float s = hi;
    for (const auto& p : pts)
      if (p.first > 0.0f) s = std::min(s, p.first);
    for (std::size_t n = 0; n < cfg.max_expansions && best_s == 0.0f && s > 0.0f; ++n) {
      s /= cfg.growth;
      eval(s);
      std::tie(best_s, best_f) = best();
    }
  }
  r.step = best_s;
  r.error = -best_f;
  return r;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double error = 0.0;  // after the step
  float step = 0.0f;
  double seconds = 0.0;
  double gflops = 0.0;
  float beta = 0.0f;
  bool bracketed = false;
  bool improved = false;
  std::size_t n_patterns = 0;
};

struct CgTrainResult {
  double initial_error = 0.0;
  std::vector<EpochRecord> history;
  std::size_t restarts = 0;
  std::size_t sign_probes = 0;
  std::size_t sign_agreements = 0;

  std::size_t strict_decreases() const {
    std::size_t n = 0;
    double prev = initial_error;
    for (const auto& h : history) {
      n += h.error < prev;
      prev = h.error;
    }
    return n;
  }
};

// Polak-Ribiere conjugate gradient on -E. Per epoch: one full gradient, a
// direction update, sign bracketing from subsampled slopes, a quadratic step
// and the parameter update x += step * d.
template <ObjectiveSource S>
CgTrainResult cg_train(S& src, std::size_t epochs, const LineSearchCfg& cfg = {},
                       std::ostream* log = nullptr) {
  if (epochs < 1) throw ConfigError("cg_train: epochs must be >= 1");
  cfg.validate();
  CgTrainResult res;
  CgState state;
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const double t0 = src.elapsed_seconds();
    const std::uint64_t flops0 = src.contributing_flops();

    Evaluation ev = src.gradient();
    if (epoch == 1) res.initial_error = ev.error;

    float beta = 0.0f;
    std::vector<float> d = next_direction(ev.grad, state, &beta, cfg.force_beta_zero);
    double slope0 = dot_flat(ev.grad, d);
    if (!(slope0 > 0.0)) {
      // Not an ascent direction: restart from the gradient.
      ++res.restarts;
      d = ev.grad;
      beta = 0.0f;
      slope0 = dot_flat(ev.grad, d);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.beta = beta;
    rec.n_patterns = ev.n_patterns;
    if (slope0 > 0.0) {
      src.set_direction(d);
      const float start = state.last_step > 0.0f ? state.last_step : cfg.initial_step;
      LineSearchResult ls = line_search(src, slope0, ev.error, cfg, start);
      res.sign_probes += ls.sign_probes;
      res.sign_agreements += ls.sign_agreements;
      if (ls.step > 0.0f) src.commit(ls.step);
      rec.error = ls.error;
      rec.step = ls.step;
      rec.bracketed = ls.bracket.bracketed;
    } else {
      rec.error = ev.error;  // stationary point
    }
    rec.improved = rec.error < ev.error;

    state.prev_grad = std::move(ev.grad);
    state.direction = std::move(d);
    state.last_step = rec.step;
    state.restart = rec.step == 0.0f;
    ++state.iteration;

    rec.seconds = src.elapsed_seconds() - t0;
    const double flops = double(src.contributing_flops() - flops0);
    rec.gflops = rec.seconds > 0.0 ? flops / rec.seconds / 1e9 : 0.0;
    res.history.push_back(rec);
    if (log) {
      *log << "epoch " << rec.epoch << " patterns " << rec.n_patterns << " error " << rec.error
           << " step " << rec.step << " seconds " << rec.seconds << " gflops " << rec.gflops
           << '\n';
    }
  }
  return res;
}

inline void write_history_csv(std::ostream& os, const CgTrainResult& r) {
  os << "epoch,error,step,seconds,gflops\n";
  for (const auto& h : r.history) {
    os << h.epoch << ',' << h.error << ',' << h.step << ',' << h.seconds << ',' << h.gflops << '\n';
  }
}

// Single-process objective over an in-memory batch. Slope estimates use the
// first ceil(fraction * n_p) rows; datasets are stored shuffled.
class LocalSource {
 public:
  LocalSource(MlpParams params, const Batch& data, GemmOptions g = {})
      : params_(std::move(params)), data_(&data), gemm_(g),
        start_(std::chrono::steady_clock::now()) {
    params_.validate();
  }

  std::size_t dimension() const { return params_.param_count(); }
  const MlpParams& params() const { return params_; }

  Evaluation gradient() {
    GradResult g = ulsnn::gradient(params_, *data_, gemm_);
    flops_ += g.flops;
    return Evaluation{g.flatten(), g.error, g.n_patterns, g.flops};
  }

  void set_direction(std::span<const float> d) {
    if (d.size() != dimension()) throw ShapeError("LocalSource::set_direction: length");
    direction_.assign(d.begin(), d.end());
  }

  double slope_at(float step, float fraction) {
    MlpParams p = trial(step);
    const Batch& b = sample(fraction);
    GradResult g = ulsnn::gradient(p, b, gemm_);
    flops_ += g.flops;
    return dot_flat(g.flatten(), direction_);
  }

  double error_at(float step) {
    MlpParams p = trial(step);
    flops_ += error_flops(data_->size(), p.n_i, p.n_h, p.n_o);
    return ulsnn::error(p, *data_, gemm_);
  }

  void commit(float step) { params_.add_scaled(step, direction_); }

  std::uint64_t contributing_flops() const { return flops_; }

  double elapsed_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  MlpParams trial(float step) const {
    MlpParams p = params_;
    if (step != 0.0f) p.add_scaled(step, direction_);
    return p;
  }

  const Batch& sample(float fraction) {
    if (fraction >= 1.0f) return *data_;
    std::size_t rows = std::max<std::size_t>(
        1, std::size_t(std::ceil(double(fraction) * double(data_->size()))));
    auto it = samples_.find(rows);
    if (it == samples_.end()) it = samples_.emplace(rows, data_->slice(0, rows)).first;
    return it->second;
  }

  MlpParams params_;
  const Batch* data_;
  GemmOptions gemm_;
  std::vector<float> direction_;
  std::map<std::size_t, Batch> samples_;
  std::uint64_t flops_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ulsnn
