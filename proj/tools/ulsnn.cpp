// ulsnn command-line driver. Exit codes: 0 success, 1 runtime failure, 2 usage.
#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ulsnn/ulsnn.hpp"

using namespace ulsnn;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to the named file, or stdout when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// gemm-bench ------------------------------------------------------------------

struct GemmBenchArgs {
  std::vector<std::size_t> sizes{64, 320, 672};
  std::size_t stride = 700;
  std::string kernel = "both";
  std::size_t repetitions = 3;
  std::string out;
};

void cmd_gemm_bench(const GemmBenchArgs& a) {
  BenchOptions opt;
  opt.stride = a.stride;
  opt.repetitions = a.repetitions;
  std::vector<GemmKernel> kernels;
  if (a.kernel == "both") {
    kernels = {GemmKernel::blocked, GemmKernel::naive};
  } else {
    kernels = {parse_kernel(a.kernel)};
  }
  Output out(a.out);
  bool header = true;
  for (GemmKernel k : kernels) {
    write_bench_csv(out.stream(), bench_gemm(a.sizes, k, {}, opt), header);
    header = false;
  }
}

// tune --------------------------------------------------------------------------

struct TuneArgs {
  std::size_t l1 = 32 * 1024;
  std::size_t l2 = 2 * 1024 * 1024;
  std::size_t size = 512;
};

void cmd_tune(const TuneArgs& a) {
  TuneResult r = tune_blocks(a.l1, a.l2, a.size);
  json j;
  j["k_block"] = r.best.k_block;
  j["n_panel"] = r.best.n_panel;
  j["m2"] = r.best.m2;
  j["n2"] = r.best.n2;
  j["k2"] = r.best.k2;
  j["mflops"] = r.best_mflops;
  j["baseline_mflops"] = r.baseline_mflops;
  std::cout << j.dump(2) << '\n';
}

// flops ---------------------------------------------------------------------------

struct FlopsArgs {
  std::uint64_t ni = 400, nh = 480, no = 3203, np = 9264000;
};

void cmd_flops(const FlopsArgs& a) {
  const std::uint64_t params = param_count(a.ni, a.nh, a.no);
  json j;
  j["n_i"] = a.ni;
  j["n_h"] = a.nh;
  j["n_o"] = a.no;
  j["n_p"] = a.np;
  j["error_flops"] = error_flops(a.np, a.ni, a.nh, a.no);
  j["gradient_flops"] = gradient_flops(a.np, a.ni, a.nh, a.no);
  j["params"] = params;
  j["message_bytes"] = 4 * params;
  std::cout << j.dump(2) << '\n';
}

// reduce-sim -------------------------------------------------------------------------

struct ReduceArgs {
  std::string plan = "all";
  std::size_t bytes = kReferenceBytes;
  std::string topology;
  std::string out;
};

void cmd_reduce_sim(const ReduceArgs& a) {
  ClusterTopology topo = build_bunyip();
  CostModel m = CostModel::bunyip_calibrated();
  if (!a.topology.empty()) {
    std::ifstream is(a.topology);
    if (!is) throw std::runtime_error("cannot open topology '" + a.topology + "'");
    json j;
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      throw ConfigError("topology: " + std::string(e.what()));
    }
    std::tie(topo, m) = topology_from_json(j);
  }
  std::vector<ReducePlan> plans;
  if (a.plan == "naive" || a.plan == "all") plans.push_back(plan_naive(topo));
  if (a.plan == "logn" || a.plan == "all") plans.push_back(plan_logn(topo));
  if (a.plan == "bunyip" || a.plan == "all") plans.push_back(plan_bunyip(topo));
  std::vector<CostReport> reports;
  for (const auto& p : plans) {
    validate_plan(p);
    reports.push_back(cost_of(p, a.bytes, m, &topo));
  }
  Output out(a.out);
  write_cost_csv(out.stream(), reports);
}

// speedup / scaling ----------------------------------------------------------------------

struct SpeedupArgs {
  double from = 1e3, to = 1e8;
  std::size_t points = 21;
  std::string out;
};

void cmd_speedup(const SpeedupArgs& a) {
  if (!(a.from > 0.0 && a.to >= a.from) || a.points < 2) throw ConfigError("speedup: need 0 < from <= to, points >= 2");
  std::vector<std::size_t> n;
  for (std::size_t i = 0; i < a.points; ++i) {
    double f = double(i) / double(a.points - 1);
    n.push_back(std::size_t(std::llround(a.from * std::pow(a.to / a.from, f))));
  }
  Output out(a.out);
  write_speedup_csv(out.stream(), reduce_speedup_curve(n, CostModel::bunyip_calibrated()));
}

struct ScalingArgs {
  std::vector<std::size_t> workers{1, 2, 4, 8, 16};
  std::size_t per_worker = 32000;
  std::size_t fixed = 0;
  std::size_t ni = 400, nh = 480, no = 3203;
  std::string out;
};

void cmd_scaling(const ScalingArgs& a) {
  if ((a.per_worker == 0) == (a.fixed == 0)) throw ConfigError("scaling: give exactly one of --per-worker, --fixed");
  auto pts = simulate_scaling(NetShape{a.ni, a.nh, a.no}, a.workers, a.per_worker, a.fixed, TrainerCfg{});
  Output out(a.out);
  out.stream() << "workers,patterns,seconds,gflops,efficiency\n";
  for (const auto& p : pts)
    out.stream() << p.workers << ',' << p.patterns << ',' << p.seconds << ',' << p.gflops << ',' << p.efficiency << '\n';
}

// datagen -------------------------------------------------------------------------------

struct DatagenArgs {
  std::size_t classes = 50;
  std::size_t per_class = 400;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> sample_seed;
  double noise = TransformMix{}.noise_amplitude;
  std::string out;
};

void cmd_datagen(const DatagenArgs& a) {
  if (a.out.empty()) throw UsageError("datagen: --out is required");
  DatasetSpec spec;
  spec.n_classes = a.classes;
  spec.per_class = a.per_class;
  spec.prototype_seed = a.seed;
  spec.sample_seed = a.sample_seed.value_or(a.seed + 1);
  spec.mix.noise_amplitude = a.noise;
  Dataset ds = build_dataset(spec);
  write_dataset(a.out, ds);
  json j{{"path", a.out}, {"classes", ds.n_classes}, {"images", ds.images.size()}};
  std::cout << j.dump() << '\n';
}

// train -----------------------------------------------------------------------------------

// Flat record shared by the JSON config file and the flags.
struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t epochs = 30;
  std::size_t hidden = 64;
  std::string data;  // dataset file; generated from the fields below when empty
  std::size_t classes = 50;
  std::size_t per_class = 400;
  std::uint64_t data_seed = 1;
  double noise = TransformMix{}.noise_amplitude;
  std::size_t held_out_per_class = 40;
  std::size_t workers = 4;
  std::size_t chunk_size = 320;
  double halt_fraction = 0.8;
  std::string backend = "simulated";
  std::string kernel = "blocked";
  double initial_step = 1e-3;
  double growth = 2.0;
  std::size_t max_expansions = 40;
  double sign_sample_fraction = 0.1;
  std::string out;
};

template <class T>
void read_field(const json& j, const std::string& key, T& dst) {
  try {
    if constexpr (std::is_unsigned_v<T>) {
      if (!j.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError("");
    } else {
      if (!j.is_string()) throw ConfigError("");
    }
    dst = j.get<T>();
  } catch (const std::exception&) {
    const char* want = std::is_unsigned_v<T> ? "a non-negative integer"
                       : std::is_floating_point_v<T> ? "a number"
                                                     : "a string";
    throw ConfigError("config: '" + key + "' must be " + want + ", got " + j.dump());
  }
}

void load_config(const std::string& path, TrainConfig& c) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "seed") read_field(v, k, c.seed);
    else if (k == "epochs") read_field(v, k, c.epochs);
    else if (k == "hidden") read_field(v, k, c.hidden);
    else if (k == "data") read_field(v, k, c.data);
    else if (k == "classes") read_field(v, k, c.classes);
    else if (k == "per_class") read_field(v, k, c.per_class);
    else if (k == "data_seed") read_field(v, k, c.data_seed);
    else if (k == "noise") read_field(v, k, c.noise);
    else if (k == "held_out_per_class") read_field(v, k, c.held_out_per_class);
    else if (k == "workers") read_field(v, k, c.workers);
    else if (k == "chunk_size") read_field(v, k, c.chunk_size);
    else if (k == "halt_fraction") read_field(v, k, c.halt_fraction);
    else if (k == "backend") read_field(v, k, c.backend);
    else if (k == "kernel") read_field(v, k, c.kernel);
    else if (k == "initial_step") read_field(v, k, c.initial_step);
    else if (k == "growth") read_field(v, k, c.growth);
    else if (k == "max_expansions") read_field(v, k, c.max_expansions);
    else if (k == "sign_sample_fraction") read_field(v, k, c.sign_sample_fraction);
    else if (k == "out") read_field(v, k, c.out);
    else throw ConfigError("config: unknown key '" + k + "'");
  }
}

void cmd_train(const TrainConfig& c) {
  if (c.epochs < 1) throw ConfigError("config: 'epochs' must be >= 1");
  if (c.hidden < 1) throw ConfigError("config: 'hidden' must be >= 1");
  if (c.backend != "simulated" && c.backend != "threads") {
    throw ConfigError("config: 'backend' must be \"simulated\" or \"threads\"");
  }
  TrainerCfg tc;
  tc.workers = c.workers;
  tc.chunk_size = c.chunk_size;
  tc.halt_fraction = float(c.halt_fraction);
  tc.backend = c.backend == "threads" ? Backend::threads : Backend::simulated;
  tc.validate();
  LineSearchCfg ls;
  ls.initial_step = float(c.initial_step);
  ls.growth = float(c.growth);
  ls.max_expansions = c.max_expansions;
  ls.sign_sample_fraction = float(c.sign_sample_fraction);
  ls.validate();
  GemmOptions g;
  g.kernel = parse_kernel(c.kernel);

  DatasetSpec spec;
  spec.n_classes = c.classes;
  spec.per_class = c.per_class;
  spec.prototype_seed = c.data_seed;
  spec.sample_seed = c.data_seed + 1;
  spec.mix.noise_amplitude = c.noise;
  LabeledBatch train = c.data.empty() ? to_batch(build_dataset(spec)) : load_dataset(c.data);
  std::optional<LabeledBatch> held;
  if (c.data.empty() && c.held_out_per_class > 0) {
    DatasetSpec hs = spec;
    hs.per_class = c.held_out_per_class;
    hs.sample_seed = c.data_seed + 776;
    held = to_batch(build_dataset(hs));
  }

  const std::size_t n_i = train.batch.x.cols(), n_o = train.batch.t.cols();
  Trainer t(train.batch, tc, g);
  t.broadcast_params(MlpParams::random(n_i, c.hidden, n_o, c.seed));
  CgTrainResult r = cg_train(t, c.epochs, ls, &std::cerr);
  if (!c.out.empty()) {
    Output out(c.out);
    write_history_csv(out.stream(), r);
  }
  json j;
  j["patterns"] = train.batch.size();
  j["epochs"] = c.epochs;
  j["initial_error"] = r.initial_error;
  j["final_error"] = r.history.back().error;
  j["strict_decreases"] = r.strict_decreases();
  j["restarts"] = r.restarts;
  j["train_classification_error"] = classification_error(t.params(), train.batch.x, train.labels, g);
  if (held) j["held_out_classification_error"] = classification_error(t.params(), held->batch.x, held->labels, g);
  std::cout << j.dump(2) << '\n';
}

std::size_t parse_size_list_item(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size() || v == 0) throw UsageError("bad size '" + s + "'");
  return std::size_t(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blocked GEMM, data-parallel MLP training and reduce simulation."};
  app.require_subcommand(1);

  GemmBenchArgs gb;
  std::string gb_sizes = "64,320,672";
  auto* c_gb = app.add_subcommand("gemm-bench", "Time blocked and naive GEMM and write CSV");
  c_gb->add_option("--sizes", gb_sizes, "Comma-separated square sizes")->capture_default_str();
  c_gb->add_option("--stride", gb.stride, "Row stride of every operand")->capture_default_str();
  c_gb->add_option("--kernel", gb.kernel, "blocked, naive or both")
      ->check(CLI::IsMember({"blocked", "naive", "both"}))
      ->capture_default_str();
  c_gb->add_option("--reps", gb.repetitions, "Timed repetitions per size (median kept)")->capture_default_str();
  c_gb->add_option("--out", gb.out, "CSV path (default stdout)");

  TuneArgs tu;
  auto* c_tu = app.add_subcommand("tune", "Search L1 block shapes and report the fastest");
  c_tu->add_option("--l1", tu.l1, "L1 data cache bytes")->capture_default_str();
  c_tu->add_option("--l2", tu.l2, "L2 cache bytes")->capture_default_str();
  c_tu->add_option("--size", tu.size, "Square size used for timing")->capture_default_str();

  FlopsArgs fl;
  auto* c_fl = app.add_subcommand("flops", "Print flop counts and parameter count as JSON");
  c_fl->add_option("--ni", fl.ni, "Inputs")->capture_default_str();
  c_fl->add_option("--nh", fl.nh, "Hidden units")->capture_default_str();
  c_fl->add_option("--no", fl.no, "Outputs")->capture_default_str();
  c_fl->add_option("--np", fl.np, "Patterns")->capture_default_str();

  ReduceArgs rd;
  auto* c_rd = app.add_subcommand("reduce-sim", "Cost a reduce plan on the cluster model and write CSV");
  c_rd->add_option("--plan", rd.plan, "naive, logn, bunyip or all")
      ->check(CLI::IsMember({"naive", "logn", "bunyip", "all"}))
      ->capture_default_str();
  c_rd->add_option("--bytes", rd.bytes, "Vector size in bytes")->capture_default_str();
  c_rd->add_option("--topology", rd.topology, "Topology JSON (default: built-in 194-process cluster)");
  c_rd->add_option("--out", rd.out, "CSV path (default stdout)");

  SpeedupArgs sp;
  auto* c_sp = app.add_subcommand("speedup", "Overall speedup of the tuned reduce against pattern count (CSV)");
  c_sp->add_option("--from", sp.from, "Smallest pattern count")->capture_default_str();
  c_sp->add_option("--to", sp.to, "Largest pattern count")->capture_default_str();
  c_sp->add_option("--points", sp.points, "Log-spaced points")->capture_default_str();
  c_sp->add_option("--out", sp.out, "CSV path (default stdout)");

  ScalingArgs sc;
  std::string sc_workers = "1,2,4,8,16";
  auto* c_sc = app.add_subcommand("scaling", "Simulated-clock throughput against worker count (CSV)");
  c_sc->add_option("--workers", sc_workers, "Comma-separated worker counts")->capture_default_str();
  c_sc->add_option("--per-worker", sc.per_worker, "Patterns per worker (0 to use --fixed)")->capture_default_str();
  c_sc->add_option("--fixed", sc.fixed, "Fixed total patterns")->capture_default_str();
  c_sc->add_option("--ni", sc.ni, "Inputs")->capture_default_str();
  c_sc->add_option("--nh", sc.nh, "Hidden units")->capture_default_str();
  c_sc->add_option("--no", sc.no, "Outputs")->capture_default_str();
  c_sc->add_option("--out", sc.out, "CSV path (default stdout)");

  DatagenArgs dg;
  auto* c_dg = app.add_subcommand("datagen", "Generate a synthetic glyph dataset file");
  c_dg->add_option("--classes", dg.classes, "Number of classes")->capture_default_str();
  c_dg->add_option("--per-class", dg.per_class, "Images per class")->capture_default_str();
  c_dg->add_option("--seed", dg.seed, "Prototype seed")->capture_default_str();
  c_dg->add_option("--sample-seed", dg.sample_seed, "Distortion seed (default seed+1)");
  c_dg->add_option("--noise", dg.noise, "Noise amplitude, at most 0.2")->capture_default_str();
  c_dg->add_option("--out", dg.out, "Dataset path")->required();

  TrainConfig tc;
  std::string config_path;
  std::optional<std::uint64_t> f_seed, f_data_seed;
  std::optional<std::size_t> f_epochs, f_hidden, f_classes, f_per_class, f_held, f_workers, f_chunk;
  std::optional<double> f_noise, f_halt, f_fraction;
  std::optional<std::string> f_data, f_backend, f_kernel, f_out;
  auto* c_tr = app.add_subcommand("train", "Train an MLP with conjugate gradient; prints a JSON summary");
  c_tr->add_option("--config", config_path, "JSON config file; flags override its values");
  c_tr->add_option("--seed", f_seed, "Weight initialisation seed");
  c_tr->add_option("--epochs", f_epochs, "CG epochs");
  c_tr->add_option("--hidden", f_hidden, "Hidden units");
  c_tr->add_option("--data", f_data, "Dataset file from datagen (default: generate)");
  c_tr->add_option("--classes", f_classes, "Classes of the generated dataset");
  c_tr->add_option("--per-class", f_per_class, "Images per class of the generated dataset");
  c_tr->add_option("--data-seed", f_data_seed, "Seed of the generated dataset");
  c_tr->add_option("--noise", f_noise, "Noise amplitude of the generated dataset");
  c_tr->add_option("--held-out-per-class", f_held, "Held-out images per class (0 disables)");
  c_tr->add_option("--workers", f_workers, "Worker processes");
  c_tr->add_option("--chunk", f_chunk, "Patterns per chunk");
  c_tr->add_option("--halt", f_halt, "Early-halt fraction of patterns");
  c_tr->add_option("--backend", f_backend, "simulated or threads");
  c_tr->add_option("--kernel", f_kernel, "blocked or naive GEMM");
  c_tr->add_option("--sign-fraction", f_fraction, "Fraction of data used for slope signs");
  c_tr->add_option("--out", f_out, "Per-epoch history CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_gb) {
      gb.sizes.clear();
      std::stringstream ss(gb_sizes);
      for (std::string item; std::getline(ss, item, ',');) gb.sizes.push_back(parse_size_list_item(item));
      if (gb.sizes.empty()) throw UsageError("gemm-bench: --sizes is empty");
      cmd_gemm_bench(gb);
    } else if (*c_tu) {
      cmd_tune(tu);
    } else if (*c_fl) {
      cmd_flops(fl);
    } else if (*c_rd) {
      cmd_reduce_sim(rd);
    } else if (*c_sp) {
      cmd_speedup(sp);
    } else if (*c_sc) {
      sc.workers.clear();
      std::stringstream ss(sc_workers);
      for (std::string item; std::getline(ss, item, ',');) sc.workers.push_back(parse_size_list_item(item));
      cmd_scaling(sc);
    } else if (*c_dg) {
      cmd_datagen(dg);
    } else if (*c_tr) {
      if (!config_path.empty()) load_config(config_path, tc);
      if (f_seed) tc.seed = *f_seed;
      if (f_epochs) tc.epochs = *f_epochs;
      if (f_hidden) tc.hidden = *f_hidden;
      if (f_data) tc.data = *f_data;
      if (f_classes) tc.classes = *f_classes;
      if (f_per_class) tc.per_class = *f_per_class;
      if (f_data_seed) tc.data_seed = *f_data_seed;
      if (f_noise) tc.noise = *f_noise;
      if (f_held) tc.held_out_per_class = *f_held;
      if (f_workers) tc.workers = *f_workers;
      if (f_chunk) tc.chunk_size = *f_chunk;
      if (f_halt) tc.halt_fraction = *f_halt;
      if (f_backend) tc.backend = *f_backend;
      if (f_kernel) tc.kernel = *f_kernel;
      if (f_fraction) tc.sign_sample_fraction = *f_fraction;
      if (f_out) tc.out = *f_out;
      cmd_train(tc);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
