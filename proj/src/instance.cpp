#include "offloadnet/instance.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace offloadnet {

using json = nlohmann::json;

std::vector<NodeId> NetworkInstance::nodes_with_role(NodeRole role) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < node_count(); ++v) {
    if (roles[v] == role) out.push_back(v);
  }
  return out;
}

bool operator==(const NetworkInstance& x, const NetworkInstance& y) {
  return x.id == y.id && x.seed == y.seed && x.graph == y.graph && x.roles == y.roles &&
         x.link_rates == y.link_rates && x.service_rates == y.service_rates;
}

bool operator==(const InstanceRecord& x, const InstanceRecord& y) {
  return x.instance == y.instance && x.task_draws == y.task_draws;
}

// ---------------------------------------------------------------------------
// Topology

ConnectivityGraph generate_ba(int node_count, int attachments, SplitMixStream& rng) {
  if (attachments < 1 || node_count <= attachments) {
    throw std::invalid_argument("Barabasi-Albert graph needs node_count > attachments >= 1");
  }
  std::vector<Link> links;
  // Every link contributes both endpoints; uniform picks from this list are
  // degree-proportional.
  std::vector<NodeId> endpoints;
  const int seed_nodes = attachments + 1;
  for (NodeId u = 0; u < seed_nodes; ++u) {
    for (NodeId v = u + 1; v < seed_nodes; ++v) {
      links.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  for (NodeId v = seed_nodes; v < node_count; ++v) {
    std::vector<NodeId> targets;
    while (static_cast<int>(targets.size()) < attachments) {
      NodeId t = endpoints[rng.below(endpoints.size())];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (NodeId t : targets) {
      links.emplace_back(t, v);
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return ConnectivityGraph(node_count, std::move(links));
}

namespace {

// Unit node capacities on the split graph: node v becomes in(v)=2v and
// out(v)=2v+1 joined by an arc of capacity 1.
class SplitFlow {
 public:
  SplitFlow(const UndirectedGraph& g, NodeId s, NodeId t) : g_(g), s_(s), t_(t) {
    const int n = g.node_count();
    head_.assign(2 * n, -1);
    constexpr int kInf = std::numeric_limits<int>::max() / 4;
    for (NodeId v = 0; v < n; ++v) {
      add_arc(2 * v, 2 * v + 1, (v == s || v == t) ? kInf : 1);
    }
    for (const Link& l : g.links()) {
      add_arc(2 * l.a + 1, 2 * l.b, kInf);
      add_arc(2 * l.b + 1, 2 * l.a, kInf);
    }
  }

  /// Max flow from out(s) to in(t), stopping once `limit` is reached.
  int run(int limit) {
    int flow = 0;
    const int source = 2 * s_ + 1;
    const int sink = 2 * t_;
    std::vector<int> via(head_.size());
    while (flow < limit) {
      std::fill(via.begin(), via.end(), -2);
      via[source] = -1;
      std::queue<int> q;
      q.push(source);
      while (!q.empty() && via[sink] == -2) {
        int u = q.front();
        q.pop();
        for (int a = head_[u]; a >= 0; a = arcs_[a].next) {
          if (arcs_[a].cap > 0 && via[arcs_[a].to] == -2) {
            via[arcs_[a].to] = a;
            q.push(arcs_[a].to);
          }
        }
      }
      if (via[sink] == -2) break;
      for (int v = sink; v != source; v = arcs_[via[v] ^ 1].to) {
        arcs_[via[v]].cap -= 1;
        arcs_[via[v] ^ 1].cap += 1;
      }
      ++flow;
    }
    return flow;
  }

  /// Nodes whose split arc crosses the residual cut after `run`.
  std::vector<NodeId> cut_nodes() const {
    std::vector<bool> seen(head_.size(), false);
    std::vector<int> stack{2 * s_ + 1};
    seen[2 * s_ + 1] = true;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int a = head_[u]; a >= 0; a = arcs_[a].next) {
        if (arcs_[a].cap > 0 && !seen[arcs_[a].to]) {
          seen[arcs_[a].to] = true;
          stack.push_back(arcs_[a].to);
        }
      }
    }
    std::vector<NodeId> cut;
    for (NodeId v = 0; v < g_.node_count(); ++v) {
      if (seen[2 * v] && !seen[2 * v + 1]) cut.push_back(v);
    }
    return cut;
  }

 private:
  struct Arc {
    int to;
    int cap;
    int next;
  };

  void add_arc(int u, int v, int cap) {
    arcs_.push_back({v, cap, head_[u]});
    head_[u] = static_cast<int>(arcs_.size()) - 1;
    arcs_.push_back({u, 0, head_[v]});
    head_[v] = static_cast<int>(arcs_.size()) - 1;
  }

  const UndirectedGraph& g_;
  NodeId s_, t_;
  std::vector<int> head_;
  std::vector<Arc> arcs_;
};

struct CutSearch {
  int connectivity = -1;
  std::vector<NodeId> best_flow_cut;
};

CutSearch search_vertex_cuts(const UndirectedGraph& g) {
  CutSearch result;
  const int n = g.node_count();
  int best = n;
  for (NodeId s = 0; s < n; ++s) {
    for (NodeId t = s + 1; t < n; ++t) {
      if (g.find_link(s, t) >= 0) continue;
      SplitFlow flow(g, s, t);
      int f = flow.run(best + 1);
      if (f > best) continue;
      std::vector<NodeId> cut = flow.cut_nodes();
      if (f < best || result.best_flow_cut.empty() || cut < result.best_flow_cut) {
        result.best_flow_cut = std::move(cut);
      }
      best = f;
      result.connectivity = f;
    }
  }
  return result;
}

// Visits k-subsets of 0..n-1 in lexicographic order; stops when `visit`
// returns true or after `budget` subsets.
template <typename Visit>
bool for_each_subset(int n, int k, long budget, Visit&& visit) {
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (budget-- > 0) {
    if (visit(idx)) return true;
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return false;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return false;
}

}  // namespace

int vertex_connectivity(const UndirectedGraph& g) { return search_vertex_cuts(g).connectivity; }

std::vector<NodeId> select_relays(const UndirectedGraph& g) {
  CutSearch search = search_vertex_cuts(g);
  if (search.connectivity < 0) {
    std::clog << "warning: complete graph has no vertex cut; no relays selected\n";
    return {};
  }
  const int k = search.connectivity;
  if (k == 0) return {};
  std::vector<NodeId> found;
  std::vector<bool> mask(g.node_count(), false);
  bool ok = for_each_subset(g.node_count(), k, 5'000'000, [&](const std::vector<int>& idx) {
    for (int v : idx) mask[v] = true;
    bool cut = g.disconnected_without(mask);
    for (int v : idx) mask[v] = false;
    if (cut) found.assign(idx.begin(), idx.end());
    return cut;
  });
  return ok ? found : search.best_flow_cut;
}

Partition partition_stoer_wagner(const UndirectedGraph& g) {
  const int n = g.node_count();
  if (n < 2) throw std::invalid_argument("Stoer-Wagner needs at least two nodes");
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (const Link& l : g.links()) {
    w[l.a][l.b] += 1.0;
    w[l.b][l.a] += 1.0;
  }
  std::vector<std::vector<NodeId>> members(n);
  for (NodeId v = 0; v < n; ++v) members[v] = {v};
  std::vector<NodeId> active(n);
  std::iota(active.begin(), active.end(), 0);

  double best = std::numeric_limits<double>::infinity();
  std::vector<NodeId> best_side;
  while (active.size() > 1) {
    const std::size_t m = active.size();
    std::vector<double> key(m, 0.0);
    std::vector<bool> added(m, false);
    std::size_t prev = 0, last = 0;
    double last_key = 0.0;
    for (std::size_t step = 0; step < m; ++step) {
      std::size_t sel = m;
      for (std::size_t i = 0; i < m; ++i) {
        if (!added[i] && (sel == m || key[i] > key[sel])) sel = i;
      }
      added[sel] = true;
      prev = last;
      last = sel;
      last_key = key[sel];
      for (std::size_t i = 0; i < m; ++i) {
        if (!added[i]) key[i] += w[active[sel]][active[i]];
      }
    }
    if (last_key < best) {
      best = last_key;
      best_side = members[active[last]];
    }
    NodeId keep = active[prev], drop = active[last];
    for (NodeId u : active) {
      w[keep][u] += w[drop][u];
      w[u][keep] = w[keep][u];
    }
    w[keep][keep] = 0.0;
    members[keep].insert(members[keep].end(), members[drop].begin(), members[drop].end());
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(last));
  }

  std::sort(best_side.begin(), best_side.end());
  std::vector<NodeId> rest;
  std::vector<bool> in_side(n, false);
  for (NodeId v : best_side) in_side[v] = true;
  for (NodeId v = 0; v < n; ++v) {
    if (!in_side[v]) rest.push_back(v);
  }
  Partition p;
  p.cut_weight = best;
  if (best_side.size() <= rest.size()) {
    p.smaller = std::move(best_side);
    p.larger = std::move(rest);
  } else {
    p.smaller = std::move(rest);
    p.larger = std::move(best_side);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Roles, rates, tasks

long server_count(int node_count, double fraction) { return round_half_even(fraction * node_count); }

long task_count(int edge_node_count, double fraction) {
  return round_half_even(fraction * edge_node_count);
}

std::vector<NodeRole> assign_roles(const UndirectedGraph& g, const std::vector<NodeId>& relays,
                                   const Partition& partition, SplitMixStream& rng,
                                   const GenerationParams& params) {
  double u = rng.uniform(params.server_fraction_min, params.server_fraction_max);
  return assign_roles(g, relays, partition, server_count(g.node_count(), u), rng);
}

std::vector<NodeRole> assign_roles(const UndirectedGraph& g, const std::vector<NodeId>& relays,
                                   const Partition& partition, long servers,
                                   SplitMixStream& rng) {
  const int n = g.node_count();
  std::vector<NodeRole> roles(n, NodeRole::edge);
  for (NodeId r : relays) roles[r] = NodeRole::relay;
  if (n - static_cast<long>(relays.size()) < servers) throw std::invalid_argument("too many relays");

  auto without_relays = [&](const std::vector<NodeId>& side) {
    std::vector<NodeId> out;
    for (NodeId v : side) {
      if (roles[v] != NodeRole::relay) out.push_back(v);
    }
    return out;
  };
  std::vector<NodeId> small = without_relays(partition.smaller);
  std::vector<NodeId> large = without_relays(partition.larger);

  const std::size_t want = static_cast<std::size_t>(servers);
  std::vector<NodeId> chosen = rng.sample<NodeId>(small, want);
  if (chosen.size() < want) {
    std::vector<NodeId> extra = rng.sample<NodeId>(large, want - chosen.size());
    chosen.insert(chosen.end(), extra.begin(), extra.end());
  }
  for (NodeId v : chosen) roles[v] = NodeRole::server;
  return roles;
}

SampledRates sample_rates(const UndirectedGraph& g, const std::vector<NodeRole>& roles,
                          SplitMixStream& rng, const GenerationParams& params) {
  SampledRates out;
  out.link_rates.resize(g.link_count());
  for (LinkId e = 0; e < g.link_count(); ++e) {
    out.link_rates[e] = rng.uniform(params.link_rate_min, params.link_rate_max);
  }
  out.service_rates = Eigen::VectorXd::Zero(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    switch (roles[v]) {
      case NodeRole::server:
        out.service_rates[v] = rng.pareto(params.pareto_shape, params.server_rate_mode);
        break;
      case NodeRole::edge:
        out.service_rates[v] = rng.pareto(params.pareto_shape, params.edge_rate_mode);
        break;
      case NodeRole::relay:
        break;
    }
  }
  return out;
}

TaskSet sample_tasks(const NetworkInstance& instance, SplitMixStream& rng,
                     const GenerationParams& params) {
  std::vector<NodeId> edges = instance.nodes_with_role(NodeRole::edge);
  if (edges.empty()) throw std::invalid_argument("no edge nodes to host tasks");
  std::vector<NodeId> servers = instance.nodes_with_role(NodeRole::server);

  double u = rng.uniform(params.task_fraction_min, params.task_fraction_max);
  long count = task_count(static_cast<int>(edges.size()), u);
  std::vector<NodeId> sources = rng.sample<NodeId>(edges, static_cast<std::size_t>(count));

  TaskSet tasks;
  tasks.reserve(sources.size());
  for (NodeId m : sources) {
    Task t;
    t.source = m;
    t.servers = servers;
    t.job_rate = rng.uniform(params.job_rate_min, params.job_rate_max);
    t.upload_packets = params.upload_packets;
    t.download_packets = params.download_packets;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

NetworkInstance make_instance(std::uint64_t id, std::uint64_t seed, int node_count,
                              std::vector<Link> links, std::vector<double> link_rates,
                              std::vector<NodeRole> roles, std::vector<double> service_rates) {
  if (links.size() != link_rates.size()) throw std::invalid_argument("link rate count mismatch");
  if (roles.size() != static_cast<std::size_t>(node_count) ||
      service_rates.size() != static_cast<std::size_t>(node_count)) {
    throw std::invalid_argument("node field count mismatch");
  }
  // The graph sorts links; carry the rates along.
  std::vector<std::size_t> order(links.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return links[i] < links[j]; });
  std::vector<Link> sorted_links;
  NetworkInstance inst;
  inst.link_rates.resize(static_cast<Eigen::Index>(links.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted_links.push_back(links[order[k]]);
    inst.link_rates[static_cast<Eigen::Index>(k)] = link_rates[order[k]];
  }
  inst.id = id;
  inst.seed = seed;
  inst.graph = ConnectivityGraph(node_count, std::move(sorted_links));
  inst.conflict = interface_conflicts(inst.graph);
  inst.roles = std::move(roles);
  inst.service_rates = Eigen::Map<Eigen::VectorXd>(service_rates.data(), node_count);
  return inst;
}

NetworkInstance generate_instance(int node_count, std::uint64_t seed,
                                  const GenerationParams& params) {
  SplitMixStream root(seed);
  SplitMixStream topo = root.split(0);
  SplitMixStream role_rng = root.split(1);
  SplitMixStream rate_rng = root.split(2);

  NetworkInstance inst;
  inst.seed = seed;
  inst.graph = generate_ba(node_count, params.ba_attachments, topo);
  inst.conflict = interface_conflicts(inst.graph);
  std::vector<NodeId> relays = select_relays(inst.graph);
  Partition partition = partition_stoer_wagner(inst.graph);
  inst.roles = assign_roles(inst.graph, relays, partition, role_rng, params);
  SampledRates rates = sample_rates(inst.graph, inst.roles, rate_rng, params);
  inst.link_rates = std::move(rates.link_rates);
  inst.service_rates = std::move(rates.service_rates);
  return inst;
}

SplitMixStream task_draw_stream(std::uint64_t seed, int draw) {
  constexpr std::uint64_t kTaskStreams = 0x7461736bULL << 16;
  return SplitMixStream(seed).split(kTaskStreams + static_cast<std::uint64_t>(draw));
}

InstanceRecord generate_record(std::uint64_t id, int node_count, std::uint64_t seed, int draws,
                               const GenerationParams& params) {
  InstanceRecord rec;
  rec.instance = generate_instance(node_count, seed, params);
  rec.instance.id = id;
  for (int d = 0; d < draws; ++d) {
    SplitMixStream rng = task_draw_stream(seed, d);
    rec.task_draws.push_back(sample_tasks(rec.instance, rng, params));
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Persistence

std::string to_json_line(const InstanceRecord& record) {
  const NetworkInstance& inst = record.instance;
  json j;
  j["id"] = inst.id;
  j["seed"] = inst.seed;
  json nodes = json::array();
  for (NodeId v = 0; v < inst.node_count(); ++v) {
    nodes.push_back({{"id", v}, {"role", to_string(inst.roles[v])}, {"service_rate", inst.service_rates[v]}});
  }
  j["nodes"] = std::move(nodes);
  json links = json::array();
  for (LinkId e = 0; e < inst.graph.link_count(); ++e) {
    const Link& l = inst.graph.link(e);
    links.push_back({{"u", l.a}, {"v", l.b}, {"rate", inst.link_rates[e]}});
  }
  j["links"] = std::move(links);
  json draws = json::array();
  for (const TaskSet& ts : record.task_draws) {
    json tasks = json::array();
    for (const Task& t : ts) {
      tasks.push_back({{"source", t.source},
                       {"job_rate", t.job_rate},
                       {"eta_u", t.upload_packets},
                       {"eta_d", t.download_packets}});
    }
    draws.push_back(std::move(tasks));
  }
  j["task_draws"] = std::move(draws);
  return j.dump();
}

InstanceRecord parse_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("malformed instance line: ") + e.what());
  }
  try {
    const json& nodes = j.at("nodes");
    const int n = static_cast<int>(nodes.size());
    std::vector<NodeRole> roles(n);
    std::vector<double> service(n);
    for (const json& node : nodes) {
      int id = node.at("id").get<int>();
      if (id < 0 || id >= n) throw std::runtime_error("node id out of range");
      roles[id] = parse_node_role(node.at("role").get<std::string>());
      service[id] = node.at("service_rate").get<double>();
    }
    std::vector<Link> links;
    std::vector<double> rates;
    for (const json& l : j.at("links")) {
      links.emplace_back(l.at("u").get<int>(), l.at("v").get<int>());
      rates.push_back(l.at("rate").get<double>());
    }
    InstanceRecord rec;
    rec.instance = make_instance(j.value("id", std::uint64_t{0}), j.at("seed").get<std::uint64_t>(), n,
                                 std::move(links), std::move(rates), std::move(roles),
                                 std::move(service));
    std::vector<NodeId> servers = rec.instance.nodes_with_role(NodeRole::server);
    for (const json& draw : j.at("task_draws")) {
      TaskSet ts;
      for (const json& tj : draw) {
        Task t;
        t.source = tj.at("source").get<int>();
        if (t.source < 0 || t.source >= n || rec.instance.roles[t.source] != NodeRole::edge) {
          throw std::runtime_error("task source is not an edge node");
        }
        t.servers = servers;
        t.job_rate = tj.at("job_rate").get<double>();
        t.upload_packets = tj.at("eta_u").get<int>();
        t.download_packets = tj.at("eta_d").get<int>();
        ts.push_back(std::move(t));
      }
      rec.task_draws.push_back(std::move(ts));
    }
    return rec;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid instance record: ") + e.what());
  }
}

void write_instances(const std::filesystem::path& path, const std::vector<InstanceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const InstanceRecord& r : records) out << to_json_line(r) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<InstanceRecord> read_instances(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<InstanceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_json_line(line));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  json j;
  j["sizes"] = m.sizes;
  j["train_count"] = m.train_count;
  j["test_count"] = m.test_count;
  j["task_draws"] = m.task_draws;
  j["master_seed"] = m.master_seed;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    json j = json::parse(in);
    DatasetManifest m;
    m.sizes = j.at("sizes").get<std::vector<int>>();
    m.train_count = j.at("train_count").get<int>();
    m.test_count = j.at("test_count").get<int>();
    m.task_draws = j.at("task_draws").get<int>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace offloadnet
