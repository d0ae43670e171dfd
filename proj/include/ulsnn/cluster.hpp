#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ulsnn/matcore.hpp"
#include "ulsnn/nn.hpp"
#include "ulsnn/simnet.hpp"

namespace ulsnn {

class PlanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bandwidths in this module use binary prefixes: 1 Mb = 2^20 bits, 1 MB = 2^20 bytes.
inline constexpr double kMebi = 1024.0 * 1024.0;
inline constexpr double kGibi = 1024.0 * kMebi;

// Groups of nodes at the vertices of a complete graph; one switch per group
// pair and one NIC per incident switch on every node. Server processes live
// on a separate node attached to the switches through a gigabit link.
struct ClusterTopology {
  std::size_t groups = 4;
  std::size_t nodes_per_group = 24;
  std::size_t procs_per_node = 2;
  std::size_t nics_per_node = 3;
  std::vector<std::pair<std::size_t, std::size_t>> switches;
  std::size_t servers = 2;  // processes on the server node; the first is the master
  double switch_capacity_bits = 3.8e9;

  std::size_t node_count() const { return groups * nodes_per_group; }
  std::size_t worker_procs() const { return node_count() * procs_per_node; }
  std::size_t process_count() const { return worker_procs() + servers; }
  std::size_t master() const { return worker_procs(); }
  std::size_t server_node() const { return node_count(); }

  std::size_t node_of(std::size_t proc) const {
    if (proc >= process_count()) throw std::out_of_range("ClusterTopology::node_of");
    return proc < worker_procs() ? proc / procs_per_node : server_node();
  }
  std::size_t group_of_node(std::size_t node) const { return node / nodes_per_group; }
  std::size_t node_in(std::size_t group, std::size_t index) const {
    return group * nodes_per_group + index;
  }
  std::size_t proc_on(std::size_t node, std::size_t local) const {
    return node * procs_per_node + local;
  }

  // Switches touching a group, in switch-list order. NIC k uses the k-th one.
  std::vector<std::size_t> incident_switches(std::size_t group) const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < switches.size(); ++s)
      if (switches[s].first == group || switches[s].second == group) out.push_back(s);
    return out;
  }

  std::size_t nic_switch(std::size_t node, std::size_t nic) const {
    auto inc = incident_switches(group_of_node(node));
    if (nic >= inc.size()) throw std::out_of_range("ClusterTopology::nic_switch");
    return inc[nic];
  }

  // NIC on `node` whose switch also serves `other_group`.
  std::size_t nic_toward(std::size_t node, std::size_t other_group) const {
    auto inc = incident_switches(group_of_node(node));
    for (std::size_t k = 0; k < inc.size(); ++k) {
      auto [a, b] = switches[inc[k]];
      if (a == other_group || b == other_group) return k;
    }
    throw std::out_of_range("ClusterTopology::nic_toward: groups not adjacent");
  }

  std::size_t switch_between(std::size_t ga, std::size_t gb) const {
    for (std::size_t s = 0; s < switches.size(); ++s) {
      auto [a, b] = switches[s];
      if ((a == ga && b == gb) || (a == gb && b == ga)) return s;
    }
    throw std::out_of_range("ClusterTopology::switch_between");
  }

  // Minimum switch capacity crossing any split of the groups into equal halves.
  double bisection_bandwidth_bits() const {
    if (groups < 2) return 0.0;
    double best = -1.0;
    const std::size_t half = groups / 2;
    for (std::uint32_t mask = 0; mask < (1u << groups); ++mask) {
      if (std::size_t(__builtin_popcount(mask)) != half) continue;
      std::size_t crossing = 0;
      for (auto [a, b] : switches) crossing += bool(mask >> a & 1u) != bool(mask >> b & 1u);
      double bw = double(crossing) * switch_capacity_bits;
      if (best < 0.0 || bw < best) best = bw;
    }
    return best;
  }

  void validate() const {
    if (groups < 2 || nodes_per_group < 1 || procs_per_node < 1) {
      throw ConfigError("ClusterTopology: need >= 2 groups with >= 1 node and process each");
    }
    if (switches.size() != groups * (groups - 1) / 2) {
      throw ConfigError("ClusterTopology: expected one switch per group pair");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto [a, b] : switches) {
      if (a == b || a >= groups || b >= groups) throw ConfigError("ClusterTopology: bad switch edge");
      if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
        throw ConfigError("ClusterTopology: group pair shares more than one switch");
      }
    }
    if (nics_per_node != groups - 1) {
      throw ConfigError("ClusterTopology: each node needs one NIC per incident switch");
    }
    if (servers < 1) throw ConfigError("ClusterTopology: need a server process to act as master");
  }
};

// Four groups of 24 dual-processor nodes on a tetrahedron of six switches.
inline ClusterTopology build_bunyip() {
  ClusterTopology t;
  for (std::size_t a = 0; a < t.groups; ++a)
    for (std::size_t b = a + 1; b < t.groups; ++b) t.switches.emplace_back(a, b);
  t.validate();
  return t;
}

// Reduce plans ------------------------------------------------------------------

enum class ChannelKind { shm, nic, gigabit, tcp };

inline const char* to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::shm: return "shm";
    case ChannelKind::nic: return "nic";
    case ChannelKind::gigabit: return "gigabit";
    case ChannelKind::tcp: return "tcp";
  }
  return "?";
}

struct Transfer {
  std::size_t src = 0;
  std::size_t dst = 0;
  ChannelKind channel = ChannelKind::tcp;
  int src_nic = -1;  // only for ChannelKind::nic
  int dst_nic = -1;
};

struct Stage {
  std::string name;
  std::vector<Transfer> transfers;
  // Includes waiting for late senders; costed with a calibrated constant.
  bool synchronizing = false;
};

struct ReducePlan {
  std::string name;
  std::size_t processes = 0;
  std::size_t master = 0;
  std::vector<Stage> stages;
};

// Binomial tree over `processes` ranks rooted at `master`: in stage s every
// rank whose offset from the master has lowest set bit s sends to offset - 2^s.
inline ReducePlan plan_logn(std::size_t processes, std::size_t master = 0) {
  if (processes < 1 || master >= processes) throw PlanError("plan_logn: bad process count");
  ReducePlan plan{"logn", processes, master, {}};
  for (std::size_t mask = 1; mask < processes; mask <<= 1) {
    Stage st{"binomial stage " + std::to_string(plan.stages.size() + 1), {}, false};
    for (std::size_t r = mask; r < processes; r += 2 * mask) {
      st.transfers.push_back(
          Transfer{(master + r) % processes, (master + r - mask) % processes, ChannelKind::tcp});
    }
    plan.stages.push_back(std::move(st));
  }
  return plan;
}

inline ReducePlan plan_logn(const ClusterTopology& t) {
  t.validate();
  return plan_logn(t.process_count(), t.master());
}

// Every process sends straight to the master: shm from its own node, gigabit otherwise.
inline ReducePlan plan_naive(const ClusterTopology& t) {
  t.validate();
  ReducePlan plan{"naive", t.process_count(), t.master(), {}};
  Stage st{"gather", {}, false};
  for (std::size_t p = 0; p < t.process_count(); ++p) {
    if (p == t.master()) continue;
    bool local = t.node_of(p) == t.node_of(t.master());
    st.transfers.push_back(
        Transfer{p, t.master(), local ? ChannelKind::shm : ChannelKind::gigabit});
  }
  plan.stages.push_back(std::move(st));
  return plan;
}

// Topology-aware four-stage reduce:
//   1. shared memory inside every node (server node included)
//   2. group A -> B and C -> D counterparts over the switch joining each pair
//   3. in B and D, sets of four: three members send to the set root on three NICs
//   4. the twelve roots reduce to the master over the gigabit uplink
inline ReducePlan plan_bunyip(const ClusterTopology& t) {
  t.validate();
  if (t.groups != 4 || t.procs_per_node != 2 || t.nodes_per_group % 4 != 0 || t.servers > 2) {
    throw PlanError("plan_bunyip: needs 4 groups of dual-process nodes in sets of four");
  }
  constexpr std::size_t A = 0, B = 1, C = 2, D = 3;
  ReducePlan plan{"bunyip", t.process_count(), t.master(), {}};

  Stage s1{"shm intra-node", {}, false};
  for (std::size_t n = 0; n < t.node_count(); ++n)
    s1.transfers.push_back(Transfer{t.proc_on(n, 1), t.proc_on(n, 0), ChannelKind::shm});
  if (t.servers == 2) s1.transfers.push_back(Transfer{t.master() + 1, t.master(), ChannelKind::shm});
  plan.stages.push_back(std::move(s1));

  Stage s2{"counterpart pairs", {}, false};
  for (auto [from, to] : {std::pair{A, B}, std::pair{C, D}}) {
    for (std::size_t i = 0; i < t.nodes_per_group; ++i) {
      std::size_t src = t.node_in(from, i), dst = t.node_in(to, i);
      s2.transfers.push_back(Transfer{t.proc_on(src, 0), t.proc_on(dst, 0), ChannelKind::nic,
                                      int(t.nic_toward(src, to)), int(t.nic_toward(dst, from))});
    }
  }
  plan.stages.push_back(std::move(s2));

  Stage s3{"three-NIC fan-in", {}, false};
  std::vector<std::size_t> roots;
  for (std::size_t g : {B, D}) {
    for (std::size_t set = 0; set < t.nodes_per_group / 4; ++set) {
      std::size_t root = t.node_in(g, set * 4);
      roots.push_back(t.proc_on(root, 0));
      for (std::size_t k = 0; k < 3; ++k) {
        std::size_t member = t.node_in(g, set * 4 + 1 + k);
        s3.transfers.push_back(Transfer{t.proc_on(member, 0), t.proc_on(root, 0),
                                        ChannelKind::nic, int(k), int(k)});
      }
    }
  }
  plan.stages.push_back(std::move(s3));

  Stage s4{"library reduce to master", {}, true};
  for (std::size_t r : roots) s4.transfers.push_back(Transfer{r, t.master(), ChannelKind::gigabit});
  plan.stages.push_back(std::move(s4));
  return plan;
}

// Checks the dataflow: every sender and receiver still holds a live partial
// sum, no process takes both roles in one stage, and only the master is live
// at the end.
inline void validate_plan(const ReducePlan& plan) {
  if (plan.master >= plan.processes) throw PlanError("plan " + plan.name + ": master out of range");
  std::vector<bool> live(plan.processes, true);
  for (const auto& st : plan.stages) {
    std::set<std::size_t> senders, receivers;
    for (const auto& tr : st.transfers) {
      if (tr.src >= plan.processes || tr.dst >= plan.processes || tr.src == tr.dst) {
        throw PlanError("plan " + plan.name + ": bad transfer endpoints in " + st.name);
      }
      if (!live[tr.src] || !live[tr.dst]) {
        throw PlanError("plan " + plan.name + ": transfer touches a retired process in " + st.name);
      }
      if (!senders.insert(tr.src).second) {
        throw PlanError("plan " + plan.name + ": process sends twice in " + st.name);
      }
      receivers.insert(tr.dst);
    }
    for (std::size_t s : senders) {
      if (receivers.count(s)) {
        throw PlanError("plan " + plan.name + ": process both sends and receives in " + st.name);
      }
      live[s] = false;
    }
  }
  for (std::size_t p = 0; p < plan.processes; ++p) {
    if (live[p] != (p == plan.master)) {
      throw PlanError("plan " + plan.name + ": process " + std::to_string(p) +
                      (live[p] ? " never delivered its data" : " is not the master"));
    }
  }
}

// Number of transfers in a stage that reuse a NIC endpoint or a node's shared
// memory segment already used in that stage.
inline std::size_t channel_conflicts(const ReducePlan& plan, const ClusterTopology& t) {
  std::size_t conflicts = 0;
  for (const auto& st : plan.stages) {
    std::set<std::pair<std::size_t, int>> used;  // (node, nic index or -1 for shm)
    for (const auto& tr : st.transfers) {
      if (tr.channel == ChannelKind::nic) {
        conflicts += !used.insert({t.node_of(tr.src), tr.src_nic}).second;
        conflicts += !used.insert({t.node_of(tr.dst), tr.dst_nic}).second;
      } else if (tr.channel == ChannelKind::shm) {
        conflicts += !used.insert({t.node_of(tr.dst), -1}).second;
      }
    }
  }
  return conflicts;
}

// Runs the plan on the simulated network: each stage's messages are sent,
// then delivered and added into the destination in transfer order.
template <class T>
std::vector<T> execute_reduce(const ReducePlan& plan, std::vector<std::vector<T>> vectors) {
  if (vectors.size() != plan.processes) {
    throw PlanError("execute_reduce: plan " + plan.name + " expects " +
                    std::to_string(plan.processes) + " vectors, got " +
                    std::to_string(vectors.size()));
  }
  const std::size_t len = vectors.empty() ? 0 : vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != len) throw ShapeError("execute_reduce: vectors differ in length");
  validate_plan(plan);

  SimNetwork<std::vector<T>> net(plan.processes);
  for (const auto& st : plan.stages) {
    for (const auto& tr : st.transfers) net.send(tr.src, tr.dst, vectors[tr.src]);
    while (!net.empty()) {
      auto env = net.receive();
      auto& acc = vectors[env.dst];
      for (std::size_t i = 0; i < len; ++i) acc[i] += env.msg[i];
    }
    net.advance_to(net.now() + 1.0);
  }
  return std::move(vectors[plan.master]);
}

// Symbolic payload: how many times each process's data reached a holder.
struct Provenance {
  std::vector<std::uint32_t> counts;
  Provenance& operator+=(const Provenance& o) {
    if (counts.size() < o.counts.size()) counts.resize(o.counts.size(), 0);
    for (std::size_t i = 0; i < o.counts.size(); ++i) counts[i] += o.counts[i];
    return *this;
  }
};

inline std::vector<std::uint32_t> contribution_counts(const ReducePlan& plan) {
  std::vector<std::vector<Provenance>> v(plan.processes);
  for (std::size_t p = 0; p < plan.processes; ++p) {
    Provenance pr;
    pr.counts.assign(plan.processes, 0);
    pr.counts[p] = 1;
    v[p] = {pr};
  }
  return execute_reduce(plan, std::move(v)).front().counts;
}

// Cost model ------------------------------------------------------------------

inline constexpr std::size_t kReferenceBytes = 1729440 * 4;  // 400/480/3203 gradient

struct CostModel {
  double shm_bytes_per_s = 0.0;
  double nic_bits_per_s = 100.0 * kMebi;
  double nic_efficiency = 0.8;
  // Per-NIC efficiency when one node receives on several NICs at once.
  double multi_nic_agg_efficiency = 185.0 / 300.0;
  double gigabit_bits_per_s = kGibi;
  double gigabit_efficiency = 1.0;
  // Effective per-NIC efficiency of the MPI library's TCP path.
  double library_efficiency = 0.0;
  double gigabit_stage_seconds = 0.0;
  double add_bytes_per_s = 0.0;

  // Constants derived from the measured stage times for a 6.6 MB gradient:
  // shm stage 0.18 s including a 0.005 s add, 185 Mb/s into each fan-in root,
  // a 3.16 s final library stage and an 8-stage library reduce of 8.5 s.
  static CostModel bunyip_calibrated() {
    constexpr double B = double(kReferenceBytes);
    constexpr double add_s = 0.005;
    CostModel m;
    m.add_bytes_per_s = B / add_s;
    m.shm_bytes_per_s = B / (0.18 - add_s);
    m.library_efficiency = B * 8.0 / (m.nic_bits_per_s * (8.5 / 8.0 - add_s));
    double gigabit_transfer = 12.0 * B * 8.0 / (m.gigabit_bits_per_s * m.gigabit_efficiency);
    m.gigabit_stage_seconds = 3.16 - gigabit_transfer - add_s;
    return m;
  }

  void validate() const {
    for (double bw : {shm_bytes_per_s, nic_bits_per_s, gigabit_bits_per_s, add_bytes_per_s}) {
      if (!(bw > 0.0)) throw ConfigError("CostModel: bandwidths must be > 0");
    }
    for (double e : {nic_efficiency, multi_nic_agg_efficiency, gigabit_efficiency,
                     library_efficiency}) {
      if (!(e > 0.0 && e <= 1.0)) throw ConfigError("CostModel: efficiencies must be in (0, 1]");
    }
    if (gigabit_stage_seconds < 0.0) throw ConfigError("CostModel: negative stage constant");
  }
};

struct StageCost {
  std::string name;
  std::size_t transfers = 0;
  double seconds = 0.0;
};

struct CostReport {
  std::string plan;
  std::vector<StageCost> stages;
  double total = 0.0;
};

// Stage time = slowest channel group + one trailing combine (+ the calibrated
// constant for synchronizing stages). Channel groups:
//   shm, tcp: independent, bytes / bandwidth each
//   nic: per receiving node, bytes over the NICs in use (aggregate efficiency
//        applies when more than one NIC is active)
//   gigabit: one shared uplink, transfers serialize
inline CostReport cost_of(const ReducePlan& plan, std::size_t vector_bytes, const CostModel& m,
                          const ClusterTopology* topo = nullptr) {
  if (vector_bytes == 0) throw ConfigError("cost_of: vector_bytes must be > 0");
  m.validate();
  const double bytes = double(vector_bytes);
  CostReport rep;
  rep.plan = plan.name;
  for (const auto& st : plan.stages) {
    double slowest = 0.0;
    double gigabit_bytes = 0.0;
    std::map<std::size_t, std::pair<double, std::set<int>>> nic_in;  // dst node -> bytes, NICs
    for (const auto& tr : st.transfers) {
      switch (tr.channel) {
        case ChannelKind::shm: slowest = std::max(slowest, bytes / m.shm_bytes_per_s); break;
        case ChannelKind::tcp:
          slowest = std::max(slowest, bytes * 8.0 / (m.nic_bits_per_s * m.library_efficiency));
          break;
        case ChannelKind::gigabit: gigabit_bytes += bytes; break;
        case ChannelKind::nic: {
          std::size_t node = topo ? topo->node_of(tr.dst) : tr.dst;
          auto& slot = nic_in[node];
          slot.first += bytes;
          slot.second.insert(tr.dst_nic);
          break;
        }
      }
    }
    for (const auto& [node, slot] : nic_in) {
      const double k = double(slot.second.size());
      const double bw = k > 1.0 ? k * m.nic_bits_per_s * m.multi_nic_agg_efficiency
                                : m.nic_bits_per_s * m.nic_efficiency;
      slowest = std::max(slowest, slot.first * 8.0 / bw);
    }
    if (gigabit_bytes > 0.0) {
      slowest = std::max(slowest,
                         gigabit_bytes * 8.0 / (m.gigabit_bits_per_s * m.gigabit_efficiency));
    }
    double secs = slowest;
    if (!st.transfers.empty()) secs += bytes / m.add_bytes_per_s;
    if (st.synchronizing) secs += m.gigabit_stage_seconds;
    rep.stages.push_back(StageCost{st.name, st.transfers.size(), secs});
    rep.total += secs;
  }
  return rep;
}

// One transmission of `bytes` over a single NIC; broadcasts are not staged.
inline double broadcast_seconds(std::size_t bytes, const CostModel& m) {
  return double(bytes) * 8.0 / (m.nic_bits_per_s * m.nic_efficiency);
}

inline void write_cost_csv(std::ostream& os, const std::vector<CostReport>& reports,
                           bool header = true) {
  if (header) os << "plan,stage,transfers,seconds\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.stages.size(); ++i)
      os << r.plan << ',' << i + 1 << ',' << r.stages[i].transfers << ',' << r.stages[i].seconds
         << '\n';
    std::size_t n = 0;
    for (const auto& s : r.stages) n += s.transfers;
    os << r.plan << ",total," << n << ',' << r.total << '\n';
  }
}

// Overall speedup from replacing the library reduce ------------------------------

struct SpeedupCfg {
  std::size_t n_i = 400, n_h = 480, n_o = 3203;
  std::size_t processors = 194;
  double flops_per_processor = 163.3e9 / 196.0;
};

inline double speedup_at(double t_grad, double t_lib, double t_opt) {
  return (t_grad + t_lib) / (t_grad + t_opt);
}

struct SpeedupPoint {
  std::size_t n_patterns = 0;
  double gradient_seconds = 0.0;
  double speedup = 0.0;
};

inline std::vector<SpeedupPoint> reduce_speedup_curve(const std::vector<std::size_t>& patterns,
                                                      const CostModel& m,
                                                      const SpeedupCfg& cfg = {}) {
  ClusterTopology t = build_bunyip();
  const std::size_t bytes = 4 * param_count(cfg.n_i, cfg.n_h, cfg.n_o);
  const double t_lib = cost_of(plan_logn(t), bytes, m, &t).total;
  const double t_opt = cost_of(plan_bunyip(t), bytes, m, &t).total;
  std::vector<SpeedupPoint> out;
  for (std::size_t n : patterns) {
    if (n == 0) throw ConfigError("reduce_speedup_curve: pattern counts must be > 0");
    double tg = double(gradient_flops(n, cfg.n_i, cfg.n_h, cfg.n_o)) /
                (double(cfg.processors) * cfg.flops_per_processor);
    out.push_back(SpeedupPoint{n, tg, speedup_at(tg, t_lib, t_opt)});
  }
  return out;
}

inline void write_speedup_csv(std::ostream& os, const std::vector<SpeedupPoint>& pts) {
  os << "patterns,gradient_seconds,speedup\n";
  for (const auto& p : pts) os << p.n_patterns << ',' << p.gradient_seconds << ',' << p.speedup << '\n';
}

// Topology files ------------------------------------------------------------------

inline nlohmann::json topology_to_json(const ClusterTopology& t, const CostModel& m) {
  nlohmann::json j;
  j["groups"] = t.groups;
  j["nodes_per_group"] = t.nodes_per_group;
  j["procs_per_node"] = t.procs_per_node;
  j["nics"] = t.nics_per_node;
  j["servers"] = t.servers;
  j["switches"] = nlohmann::json::array();
  for (auto [a, b] : t.switches) j["switches"].push_back({a, b});
  j["bandwidth"] = {
      {"switch_capacity_bits_per_s", t.switch_capacity_bits},
      {"shm_bytes_per_s", m.shm_bytes_per_s},
      {"nic_bits_per_s", m.nic_bits_per_s},
      {"nic_efficiency", m.nic_efficiency},
      {"multi_nic_agg_efficiency", m.multi_nic_agg_efficiency},
      {"gigabit_bits_per_s", m.gigabit_bits_per_s},
      {"gigabit_efficiency", m.gigabit_efficiency},
      {"library_efficiency", m.library_efficiency},
      {"gigabit_stage_seconds", m.gigabit_stage_seconds},
      {"add_bytes_per_s", m.add_bytes_per_s},
  };
  return j;
}

inline std::pair<ClusterTopology, CostModel> topology_from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{"groups", "nodes_per_group", "procs_per_node", "nics",
                                          "servers", "switches", "bandwidth"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key())) throw ConfigError("topology: unknown key '" + it.key() + "'");
  }
  ClusterTopology t;
  t.groups = j.at("groups").get<std::size_t>();
  t.nodes_per_group = j.at("nodes_per_group").get<std::size_t>();
  t.procs_per_node = j.at("procs_per_node").get<std::size_t>();
  t.nics_per_node = j.at("nics").get<std::size_t>();
  t.servers = j.value("servers", std::size_t{2});
  t.switches.clear();
  for (const auto& e : j.at("switches")) {
    t.switches.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  }
  CostModel m = CostModel::bunyip_calibrated();
  if (j.contains("bandwidth")) {
    const auto& b = j["bandwidth"];
    t.switch_capacity_bits = b.value("switch_capacity_bits_per_s", t.switch_capacity_bits);
    m.shm_bytes_per_s = b.value("shm_bytes_per_s", m.shm_bytes_per_s);
    m.nic_bits_per_s = b.value("nic_bits_per_s", m.nic_bits_per_s);
    m.nic_efficiency = b.value("nic_efficiency", m.nic_efficiency);
    m.multi_nic_agg_efficiency = b.value("multi_nic_agg_efficiency", m.multi_nic_agg_efficiency);
    m.gigabit_bits_per_s = b.value("gigabit_bits_per_s", m.gigabit_bits_per_s);
    m.gigabit_efficiency = b.value("gigabit_efficiency", m.gigabit_efficiency);
    m.library_efficiency = b.value("library_efficiency", m.library_efficiency);
    m.gigabit_stage_seconds = b.value("gigabit_stage_seconds", m.gigabit_stage_seconds);
    m.add_bytes_per_s = b.value("add_bytes_per_s", m.add_bytes_per_s);
  }
  t.validate();
  m.validate();
  return {t, m};
}

}  // namespace ulsnn
