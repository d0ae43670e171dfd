#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ulsnn/cluster.hpp"
#include "ulsnn/nn.hpp"
#include "ulsnn/optim.hpp"
#include "ulsnn/simnet.hpp"

namespace ulsnn {

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
};

// Contiguous ranges whose sizes differ by at most one; the first n_p % workers
// ranges get the extra row. Ranges are empty when workers > n_p.
inline std::vector<Range> partition(std::size_t n_p, std::size_t workers) {
  if (workers < 1) throw ConfigError("partition: workers must be >= 1");
  std::vector<Range> out(workers);
  std::size_t base = n_p / workers, extra = n_p % workers, at = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t len = base + (w < extra ? 1 : 0);
    out[w] = Range{at, at + len};
    at += len;
  }
  return out;
}

enum class Backend { simulated, threads };
enum class PassKind { error, gradient };

struct TrainerCfg {
  std::size_t workers = 4;
  std::size_t chunk_size = 320;
  float halt_fraction = 0.8f;
  // The master process also holds a partition (worker 0).
  bool master_is_worker = true;
  Backend backend = Backend::simulated;
  // Simulated clock: per-worker compute rate and the network model used to
  // cost reductions and broadcasts.
  double worker_flops_per_s = 163.3e9 / 196.0;
  CostModel network = CostModel::bunyip_calibrated();

  void validate() const {
    if (workers < 1) throw ConfigError("TrainerCfg: workers must be >= 1");
    if (chunk_size < 1) throw ConfigError("TrainerCfg: chunk_size must be >= 1");
    if (!(halt_fraction > 0.0f && halt_fraction <= 1.0f)) {
      throw ConfigError("TrainerCfg: halt_fraction must be in (0, 1]");
    }
    if (!(worker_flops_per_s > 0.0)) throw ConfigError("TrainerCfg: worker_flops_per_s must be > 0");
    network.validate();
  }
};

// Only forward and gradient arithmetic counts; reduce and broadcast work does not.
struct FlopLedger {
  std::uint64_t contributing_flops = 0;
  double wall_seconds = 0.0;
  double gflops_rate = 0.0;

  void add(std::uint64_t flops, double seconds) {
    contributing_flops += flops;
    wall_seconds += seconds;
    gflops_rate = wall_seconds > 0.0 ? double(contributing_flops) / wall_seconds / 1e9 : 0.0;
  }
};

struct PassStats {
  std::size_t consumed = 0;
  std::size_t threshold = 0;
  std::vector<double> finish_times;  // per non-empty worker, seconds from pass start
  std::vector<Range> consumed_ranges;  // per worker, the rows it actually processed
  double compute_seconds = 0.0;
  double reduce_seconds = 0.0;
  double total_seconds = 0.0;
  double chunk_seconds = 0.0;  // time for one full chunk on one worker

  double idle_spread() const {
    if (finish_times.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(finish_times.begin(), finish_times.end());
    return *hi - *lo;
  }
};

struct PassResult {
  GradResult result;  // g_ih/g_ho empty for error passes
  PassStats stats;
};

class WorkerFailure : public std::runtime_error {
 public:
  WorkerFailure(std::size_t worker, Range range, const std::string& why)
      : std::runtime_error("worker " + std::to_string(worker) + " (rows " +
                           std::to_string(range.begin) + ".." + std::to_string(range.end) +
                           ") failed: " + why),
        worker(worker), range(range) {}
  std::size_t worker;
  Range range;
};

class ChecksumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Ack {
  std::size_t worker = 0;
  std::uint64_t checksum = 0;
  std::size_t bytes = 0;
  std::size_t attempts = 0;
};

struct NetShape {
  std::size_t n_i = 0, n_h = 0, n_o = 0;
};

// FNV-1a over the IEEE bit patterns.
inline std::uint64_t checksum(std::span<const float> v) {
  std::uint64_t h = 1469598103934665603ull;
  for (float f : v) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

inline std::size_t thread_cap() {
  if (const char* env = std::getenv("ULSNN_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return std::size_t(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

struct PassMsg {
  enum class Type { start, progress, keep_going, halt, result, failed } type = Type::start;
  PassMsg() = default;
  PassMsg(Type ty, std::size_t w, std::size_t n = 0, std::shared_ptr<const GradResult> r = {}, std::string e = {})
      : type(ty), worker(w), rows(n), result(std::move(r)), error(std::move(e)) {}
  std::size_t worker = 0;
  std::size_t rows = 0;
  std::shared_ptr<const GradResult> result;
  std::string error;
};

template <class T>
class Mailbox {
 public:
  void push(T v) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      q_.push_back(std::move(v));
    }
    cv_.notify_one();
  }
  T pop() {
    std::unique_lock<std::mutex> lk(mu_);
    cv_.wait(lk, [&] { return !q_.empty(); });
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> q_;
};

// Per-worker state shared by both backends.
struct WorkerCore {
  Range range;
  std::vector<float> params;  // flat, same layout as MlpParams::flatten
  std::vector<float> direction;
  // Per pass:
  std::size_t cursor = 0;
  std::size_t chunks_done = 0;
  std::optional<MlpParams> trial;
  GradResult acc;

  bool exhausted() const { return cursor >= range.end; }
};

}  // namespace detail

// Data-parallel master/worker trainer. Each worker owns a contiguous slice of
// the training set and a private copy of the parameters; the master only sends
// parameters once, then directions and steps. A pass steps every worker
// through its slice chunk_size patterns at a time, polling the master between
// chunks, until the master has seen halt_fraction of all patterns.
class Trainer {
 public:
  Trainer(const Batch& data, TrainerCfg cfg, GemmOptions g = {})
      : data_(&data), cfg_(std::move(cfg)), gemm_(g) {
    cfg_.validate();
    if (data.x.rows() != data.t.rows()) throw ShapeError("Trainer: x/t row mismatch");
    shape_ = NetShape{data.x.cols(), 0, data.t.cols()};
    n_p_ = data.size();
    init_workers();
  }

  // Timing-only trainer: workers advance the simulated clock without touching data.
  Trainer(NetShape shape, std::size_t n_patterns, TrainerCfg cfg)
      : data_(nullptr), cfg_(std::move(cfg)), shape_(shape), n_p_(n_patterns) {
    cfg_.validate();
    if (cfg_.backend != Backend::simulated) {
      throw ConfigError("Trainer: timing-only mode requires the simulated backend");
    }
    init_workers();
  }

  const TrainerCfg& config() const { return cfg_; }
  const std::vector<Range>& ranges() const { return ranges_; }
  std::size_t patterns() const { return n_p_; }
  const FlopLedger& ledger() const { return ledger_; }
  std::size_t bytes_sent() const { return bytes_sent_; }

  // Injected faults for tests: fail_chunk(worker, chunk_index) aborts that
  // chunk; corrupt_copy(worker, attempt) perturbs a received parameter copy.
  std::function<bool(std::size_t, std::size_t)> fail_chunk;
  std::function<bool(std::size_t, std::size_t)> corrupt_copy;

  std::vector<Ack> broadcast_params(const MlpParams& p) {
    p.validate();
    if (p.n_i != shape_.n_i || p.n_o != shape_.n_o) throw ShapeError("broadcast_params: shape");
    shape_.n_h = p.n_h;
    master_ = p;
    std::vector<float> flat = p.flatten();
    direction_.assign(flat.size(), 0.0f);
    return deliver(flat.size() * sizeof(float), [&](detail::WorkerCore& w) {
      w.params = flat;
      w.direction.assign(flat.size(), 0.0f);
    });
  }

  // Direction for the coming line search, plus a step along it to apply now.
  std::vector<Ack> send_direction(std::span<const float> d, float step = 0.0f) {
    require_params();
    if (d.size() != master_->param_count()) throw ShapeError("send_direction: length");
    direction_.assign(d.begin(), d.end());
    if (step != 0.0f) master_->add_scaled(step, direction_);
    return deliver(d.size() * sizeof(float) + sizeof(float), [&](detail::WorkerCore& w) {
      w.direction = direction_;
      if (step != 0.0f) axpy(w.params, step, w.direction);
    });
  }

  std::vector<Ack> send_step(float step) {
    require_params();
    master_->add_scaled(step, direction_);
    return deliver(sizeof(float), [&](detail::WorkerCore& w) { axpy(w.params, step, w.direction); });
  }

  const MlpParams& params() const {
    require_params();
    return *master_;
  }

  // One error or gradient pass at params + step * direction. halt_fraction
  // overrides the configured cutoff (used for subsampled slope estimates).
  PassResult run_pass(PassKind kind, float step = 0.0f, std::optional<float> halt = std::nullopt) {
    if (data_) require_params();
    const float frac = halt.value_or(cfg_.halt_fraction);
    if (!(frac > 0.0f && frac <= 1.0f)) throw ConfigError("run_pass: halt fraction must be in (0, 1]");
    PassStats stats;
    stats.threshold = std::size_t(std::ceil(double(frac) * double(n_p_)));
    stats.threshold = std::max<std::size_t>(stats.threshold, std::min<std::size_t>(1, n_p_));
    stats.chunk_seconds = chunk_seconds(kind, cfg_.chunk_size);

    for (auto& w : workers_) begin_pass(w, step);
    std::vector<std::shared_ptr<const GradResult>> results(workers_.size());
    if (cfg_.backend == Backend::simulated) {
      run_simulated(kind, stats, results);
    } else {
      run_threads(kind, stats, results);
    }

    for (const auto& w : workers_) stats.consumed_ranges.push_back(Range{w.range.begin, w.cursor});
    PassResult out;
    out.stats = stats;
    out.result = aggregate(kind, results);
    if (data_ == nullptr) out.result.n_patterns = stats.consumed;
    out.result.flops = pass_flops(kind, out.result.n_patterns);
    out.stats.consumed = out.result.n_patterns;

    if (cfg_.backend == Backend::simulated) {
      const std::size_t bytes =
          kind == PassKind::gradient ? 4 * param_count(shape_.n_i, shape_.n_h, shape_.n_o) : 8;
      out.stats.reduce_seconds = cost_of(plan_logn(workers_.size()), bytes, cfg_.network).total;
      out.stats.total_seconds = out.stats.compute_seconds + out.stats.reduce_seconds;
      clock_ += out.stats.total_seconds;
    }
    ledger_.add(out.result.flops, out.stats.total_seconds);
    for (auto& w : workers_) w.trial.reset();
    return out;
  }

  // ObjectiveSource --------------------------------------------------------

  std::size_t dimension() const { return params().param_count(); }

  Evaluation gradient() {
    PassResult r = run_pass(PassKind::gradient);
    return Evaluation{r.result.flatten(), r.result.error, r.result.n_patterns, r.result.flops};
  }

  void set_direction(std::span<const float> d) { send_direction(d, 0.0f); }

  double slope_at(float step, float fraction) {
    PassResult r = run_pass(PassKind::gradient, step, fraction);
    return dot_flat(r.result.flatten(), direction_);
  }

  double error_at(float step) { return run_pass(PassKind::error, step).result.error; }

  void commit(float step) { send_step(step); }

  std::uint64_t contributing_flops() const { return ledger_.contributing_flops; }

  // Simulated clock for the simulated backend, accumulated wall time otherwise.
  double elapsed_seconds() const { return clock_; }

 private:
  void init_workers() {
    ranges_ = partition(n_p_, cfg_.workers);
    workers_.resize(cfg_.workers);
    for (std::size_t w = 0; w < cfg_.workers; ++w) workers_[w].range = ranges_[w];
  }

  void require_params() const {
    if (!master_) throw std::logic_error("Trainer: broadcast_params must be called first");
  }

  static void axpy(std::vector<float>& x, float a, const std::vector<float>& d) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += a * d[i];
  }

  std::uint64_t pass_flops(PassKind kind, std::size_t rows) const {
    return kind == PassKind::gradient ? gradient_flops(rows, shape_.n_i, shape_.n_h, shape_.n_o)
                                      : error_flops(rows, shape_.n_i, shape_.n_h, shape_.n_o);
  }

  double chunk_seconds(PassKind kind, std::size_t rows) const {
    return double(pass_flops(kind, rows)) / cfg_.worker_flops_per_s;
  }

  // Sends a control message to every worker and collects checksum acks;
  // a mismatching copy is retransmitted once.
  template <class Apply>
  std::vector<Ack> deliver(std::size_t bytes, Apply&& apply) {
    const std::uint64_t expect = checksum(master_->flatten());
    std::vector<Ack> acks;
    double seconds = broadcast_seconds(bytes, cfg_.network);
    for (std::size_t w = 0; w < workers_.size(); ++w) {
      std::vector<float> before = workers_[w].params;
      std::vector<float> before_dir = workers_[w].direction;
      Ack ack{w, 0, bytes, 0};
      for (std::size_t attempt = 1; attempt <= 2; ++attempt) {
        workers_[w].params = before;
        workers_[w].direction = before_dir;
        apply(workers_[w]);
        if (corrupt_copy && corrupt_copy(w, attempt) && !workers_[w].params.empty()) {
          workers_[w].params[0] += 1.0f;
        }
        ack.attempts = attempt;
        ack.checksum = checksum(workers_[w].params);
        bytes_sent_ += bytes;
        if (ack.checksum == expect) break;
        if (attempt == 2) {
          throw ChecksumError("worker " + std::to_string(w) +
                              " parameter copy differs from master after retransmit");
        }
        seconds += broadcast_seconds(bytes, cfg_.network);
      }
      acks.push_back(ack);
    }
    if (cfg_.backend == Backend::simulated) clock_ += seconds;
    return acks;
  }

  void begin_pass(detail::WorkerCore& w, float step) {
    w.cursor = w.range.begin;
    w.chunks_done = 0;
    w.acc = GradResult{};
    w.trial.reset();
    if (data_) {
      MlpParams p = MlpParams::zeros(shape_.n_i, shape_.n_h, shape_.n_o);
      std::vector<float> flat = w.params;
      if (step != 0.0f) axpy(flat, step, w.direction);
      p.add_scaled(1.0f, flat);
      w.trial = std::move(p);
    }
  }

  // Processes the next chunk of a worker's slice; returns the rows consumed.
  std::size_t step_chunk(std::size_t wid, detail::WorkerCore& w, PassKind kind) {
    if (fail_chunk && fail_chunk(wid, w.chunks_done)) {
      throw WorkerFailure(wid, w.range, "injected fault at chunk " + std::to_string(w.chunks_done));
    }
    const std::size_t rows = std::min(cfg_.chunk_size, w.range.end - w.cursor);
    if (data_) {
      Batch b = data_->slice(w.cursor, w.cursor + rows);
      if (kind == PassKind::gradient) {
        GradResult g = ulsnn::gradient(*w.trial, b, gemm_);
        if (w.chunks_done == 0) {
          w.acc = std::move(g);
        } else {
          w.acc.g_ih = add_mat(w.acc.g_ih, g.g_ih);
          w.acc.g_ho = add_mat(w.acc.g_ho, g.g_ho);
          w.acc.error += g.error;
          w.acc.n_patterns += g.n_patterns;
        }
      } else {
        w.acc.error += ulsnn::error(*w.trial, b, gemm_);
        w.acc.n_patterns += rows;
      }
    } else {
      w.acc.n_patterns += rows;
    }
    w.cursor += rows;
    ++w.chunks_done;
    return rows;
  }

  void run_simulated(PassKind kind, PassStats& stats,
                     std::vector<std::shared_ptr<const GradResult>>& results) {
    using detail::PassMsg;
    using Type = PassMsg::Type;
    const std::size_t W = workers_.size();
    const std::size_t master = W;
    SimNetwork<PassMsg> net(W + 1);
    stats.finish_times.assign(W, 0.0);
    for (std::size_t w = 0; w < W; ++w) net.send(master, w, PassMsg{Type::start, w});

    std::size_t consumed = 0, done = 0;
    bool halting = false;
    std::optional<WorkerFailure> failure;
    auto work = [&](std::size_t w) {
      auto& core = workers_[w];
      if (core.exhausted()) {
        net.send(w, master, PassMsg{Type::result, w, 0, std::make_shared<GradResult>(core.acc)});
        return;
      }
      try {
        std::size_t rows = step_chunk(w, core, kind);
        net.send(w, master, PassMsg{Type::progress, w, rows}, chunk_seconds(kind, rows));
      } catch (const WorkerFailure& f) {
        net.send(w, master, PassMsg{Type::failed, w, 0, nullptr, f.what()});
      }
    };
    while (done < W) {
      auto env = net.receive();
      const PassMsg& m = env.msg;
      if (env.dst != master) {
        if (m.type == Type::halt) {
          net.send(m.worker, master,
                   PassMsg{Type::result, m.worker, 0, std::make_shared<GradResult>(workers_[m.worker].acc)});
        } else {
          work(m.worker);
        }
        continue;
      }
      switch (m.type) {
        case Type::progress:
          consumed += m.rows;
          if (consumed >= stats.threshold) halting = true;
          net.send(master, m.worker, PassMsg{halting ? Type::halt : Type::keep_going, m.worker});
          break;
        case Type::result:
          results[m.worker] = m.result;
          stats.finish_times[m.worker] = net.now();
          ++done;
          break;
        case Type::failed:
          if (!failure) failure.emplace(m.worker, workers_[m.worker].range, m.error);
          halting = true;
          ++done;
          break;
        default: break;
      }
    }
    if (failure) throw *failure;
    // Workers with no rows never computed; their finish time is not idle time.
    std::vector<double> active;
    for (std::size_t w = 0; w < W; ++w)
      if (!workers_[w].range.empty()) active.push_back(stats.finish_times[w]);
    stats.finish_times = active;
    stats.consumed = consumed;
    stats.compute_seconds = net.now();
  }

  void run_threads(PassKind kind, PassStats& stats,
                   std::vector<std::shared_ptr<const GradResult>>& results) {
    using detail::PassMsg;
    using Type = PassMsg::Type;
    const std::size_t W = workers_.size();
    const std::size_t T = std::min(W, thread_cap());
    detail::Mailbox<PassMsg> to_master;
    std::vector<detail::Mailbox<PassMsg>> to_worker(W);
    const auto t0 = std::chrono::steady_clock::now();
    auto since = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    auto drive = [&](std::size_t tid) {
      std::vector<std::size_t> mine;
      for (std::size_t w = tid; w < W; w += T) mine.push_back(w);
      std::vector<bool> finished(mine.size(), false);
      std::size_t left = mine.size();
      while (left > 0) {
        for (std::size_t i = 0; i < mine.size(); ++i) {
          if (finished[i]) continue;
          const std::size_t w = mine[i];
          PassMsg m = to_worker[w].pop();
          auto& core = workers_[w];
          if (m.type == Type::halt || core.exhausted()) {
            to_master.push(PassMsg{Type::result, w, 0, std::make_shared<GradResult>(core.acc)});
            finished[i] = true;
            --left;
            continue;
          }
          try {
            std::size_t rows = step_chunk(w, core, kind);
            to_master.push(PassMsg{Type::progress, w, rows});
          } catch (const std::exception& e) {
            to_master.push(PassMsg{Type::failed, w, 0, nullptr, e.what()});
            finished[i] = true;
            --left;
          }
        }
      }
    };

    for (std::size_t w = 0; w < W; ++w) to_worker[w].push(PassMsg{Type::start, w});
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < T; ++t) threads.emplace_back(drive, t);

    stats.finish_times.assign(W, 0.0);
    std::size_t consumed = 0, done = 0;
    bool halting = false;
    std::optional<WorkerFailure> failure;
    while (done < W) {
      PassMsg m = to_master.pop();
      switch (m.type) {
        case Type::progress:
          consumed += m.rows;
          if (consumed >= stats.threshold) halting = true;
          to_worker[m.worker].push(PassMsg{halting ? Type::halt : Type::keep_going, m.worker});
          break;
        case Type::result:
          results[m.worker] = m.result;
          stats.finish_times[m.worker] = since();
          ++done;
          break;
        case Type::failed:
          if (!failure) failure.emplace(m.worker, workers_[m.worker].range, m.error);
          halting = true;
          ++done;
          break;
        default: break;
      }
    }
    for (auto& t : threads) t.join();
    if (failure) throw *failure;
    std::vector<double> active;
    for (std::size_t w = 0; w < W; ++w)
      if (!workers_[w].range.empty()) active.push_back(stats.finish_times[w]);
    stats.finish_times = active;
    stats.consumed = consumed;
    stats.compute_seconds = since();
    stats.total_seconds = stats.compute_seconds;
    clock_ += stats.total_seconds;
  }

  // Elementwise sum in worker order.
  GradResult aggregate(PassKind kind, const std::vector<std::shared_ptr<const GradResult>>& results) const {
    GradResult out;
    if (kind == PassKind::gradient && data_) {
      out.g_ih = Mat32(shape_.n_h, shape_.n_i);
      out.g_ho = Mat32(shape_.n_o, shape_.n_h);
    }
    for (const auto& r : results) {
      if (!r) continue;
      out.error += r->error;
      out.n_patterns += r->n_patterns;
      if (kind == PassKind::gradient && data_ && r->n_patterns > 0) {
        out.g_ih = add_mat(out.g_ih, r->g_ih);
        out.g_ho = add_mat(out.g_ho, r->g_ho);
      }
    }
    return out;
  }

  const Batch* data_;
  TrainerCfg cfg_;
  GemmOptions gemm_;
  NetShape shape_;
  std::size_t n_p_ = 0;
  std::vector<Range> ranges_;
  std::vector<detail::WorkerCore> workers_;
  std::optional<MlpParams> master_;
  std::vector<float> direction_;
  FlopLedger ledger_;
  double clock_ = 0.0;
  std::size_t bytes_sent_ = 0;
};

// One gradient pass at p; the ledger counts only forward/gradient flops.
inline FlopLedger measure(const MlpParams& p, const Batch& data, const TrainerCfg& cfg,
                          GemmOptions g = {}) {
  Trainer t(data, cfg, g);
  t.broadcast_params(p);
  t.run_pass(PassKind::gradient);
  return t.ledger();
}

struct ScalingPoint {
  std::size_t workers = 0;
  std::size_t patterns = 0;
  double seconds = 0.0;
  double gflops = 0.0;
  double efficiency = 0.0;  // gflops / (workers * single-worker gflops)
};

// Simulated-clock throughput of one gradient pass for each worker count.
// patterns_per_worker > 0 scales the data with the workers; otherwise
// fixed_patterns is shared out.
inline std::vector<ScalingPoint> simulate_scaling(NetShape shape, const std::vector<std::size_t>& worker_counts,
                                                  std::size_t patterns_per_worker,
                                                  std::size_t fixed_patterns, TrainerCfg cfg) {
  std::vector<ScalingPoint> out;
  double single = 0.0;
  for (std::size_t w : worker_counts) {
    cfg.workers = w;
    std::size_t n = patterns_per_worker > 0 ? patterns_per_worker * w : fixed_patterns;
    Trainer t(shape, n, cfg);
    PassResult r = t.run_pass(PassKind::gradient);
    ScalingPoint pt{w, n, r.stats.total_seconds, double(r.result.flops) / r.stats.total_seconds / 1e9, 0.0};
    if (single == 0.0) {
      Trainer one(shape, patterns_per_worker > 0 ? patterns_per_worker : fixed_patterns,
                  [&] { TrainerCfg c = cfg; c.workers = 1; return c; }());
      PassResult r1 = one.run_pass(PassKind::gradient);
      single = double(r1.result.flops) / r1.stats.total_seconds / 1e9;
    }
    pt.efficiency = pt.gflops / (double(w) * single);
    out.push_back(pt);
  }
  return out;
}

}  // namespace ulsnn
