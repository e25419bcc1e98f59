#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library code it is compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

// Contention iteration written with plain loops over an adjacency list.
// Links [0, adj.size()) are scheduled; any further entries of `rates` and
// `arrivals` are unscheduled and keep their rate.
struct Service {
  std::vector<double> mu;
  std::vector<double> delay;
};

inline Service reference_service(const std::vector<std::vector<int>>& adj, const std::vector<double>& rates,
                                 const std::vector<double>& arrivals, int horizon, int iterations) {
  const std::size_t nc = adj.size();
  std::vector<double> mu(nc);
  for (std::size_t e = 0; e < nc; ++e) mu[e] = rates[e] / (1.0 + static_cast<double>(adj[e].size()));
  for (int k = 0; k < iterations; ++k) {
    std::vector<double> busy(nc);
    for (std::size_t e = 0; e < nc; ++e) busy[e] = std::min(arrivals[e] / mu[e], 1.0);
    std::vector<double> next(nc);
    for (std::size_t e = 0; e < nc; ++e) {
      double p = 0.0;
      for (int f : adj[e]) p += busy[static_cast<std::size_t>(f)];
      next[e] = rates[e] / (1.0 + p);
    }
    mu = next;
  }
  Service s;
  s.mu = rates;
  for (std::size_t e = 0; e < nc; ++e) s.mu[e] = mu[e];
  for (std::size_t e = 0; e < rates.size(); ++e) {
    const double m = s.mu[e], x = arrivals[e];
    s.delay.push_back(m > x ? 1.0 / (m - x) : horizon * x / m);
  }
  return s;
}

// Minimum-weight simple path from `source` to every node by exhaustive DFS,
// with the number of counted edges along that path.
struct PathResult {
  std::vector<double> distance;
  std::vector<int> hops;
};

inline PathResult enumerate_paths(int n, const std::vector<std::pair<int, int>>& edges,
                                  const std::vector<double>& weight, const std::vector<bool>& counted,
                                  int source) {
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[static_cast<std::size_t>(edges[e].first)].push_back({edges[e].second, static_cast<int>(e)});
    adj[static_cast<std::size_t>(edges[e].second)].push_back({edges[e].first, static_cast<int>(e)});
  }
  PathResult r;
  r.distance.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  r.hops.assign(static_cast<std::size_t>(n), -1);
  std::vector<bool> on_path(static_cast<std::size_t>(n), false);
  std::function<void(int, double, int)> dfs = [&](int v, double d, int h) {
    if (d < r.distance[static_cast<std::size_t>(v)]) {
      r.distance[static_cast<std::size_t>(v)] = d;
      r.hops[static_cast<std::size_t>(v)] = h;
    }
    on_path[static_cast<std::size_t>(v)] = true;
    for (auto [w, e] : adj[static_cast<std::size_t>(v)]) {
      if (on_path[static_cast<std::size_t>(w)]) continue;
      dfs(w, d + weight[static_cast<std::size_t>(e)], h + (counted[static_cast<std::size_t>(e)] ? 1 : 0));
    }
    on_path[static_cast<std::size_t>(v)] = false;
  };
  dfs(source, 0.0, 0);
  return r;
}

inline bool connected_without(int n, const std::vector<std::pair<int, int>>& edges, std::uint32_t removed) {
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int start = -1;
  for (int v = 0; v < n; ++v) {
    if (!(removed >> v & 1u)) {
      start = v;
      break;
    }
  }
  if (start < 0) return true;
  std::vector<int> stack{start};
  comp[static_cast<std::size_t>(start)] = 0;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (auto [a, b] : edges) {
      if (removed >> a & 1u || removed >> b & 1u) continue;
      int w = a == v ? b : b == v ? a : -1;
      if (w >= 0 && comp[static_cast<std::size_t>(w)] < 0) {
        comp[static_cast<std::size_t>(w)] = 0;
        stack.push_back(w);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!(removed >> v & 1u) && comp[static_cast<std::size_t>(v)] < 0) return false;
  }
  return true;
}

// Smallest vertex set whose removal disconnects the graph; among sets of
// that size the lexicographically smallest. Empty when none exists.
inline std::vector<int> min_vertex_cut(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> best;
  for (int size = 1; size <= n - 2 && best.empty(); ++size) {
    std::vector<int> pick(static_cast<std::size_t>(size));
    std::function<bool(int, int)> rec = [&](int from, int depth) {
      if (depth == size) {
        std::uint32_t mask = 0;
        for (int v : pick) mask |= 1u << v;
        if (!connected_without(n, edges, mask)) {
          best = pick;
          return true;
        }
        return false;
      }
      for (int v = from; v < n; ++v) {
        pick[static_cast<std::size_t>(depth)] = v;
        if (rec(v + 1, depth + 1)) return true;
      }
      return false;
    };
    rec(0, 0);
  }
  return best;
}

// Unit-weight global minimum edge cut over all 2^(n-1) bipartitions.
inline int min_edge_cut(int n, const std::vector<std::pair<int, int>>& edges) {
  int best = std::numeric_limits<int>::max();
  for (std::uint32_t mask = 1; mask < (1u << (n - 1)); ++mask) {
    int w = 0;
    for (auto [a, b] : edges) w += ((mask >> a) & 1u) != ((mask >> b) & 1u);
    best = std::min(best, w);
  }
  return best;
}

// Central difference of f along coordinate i.
template <typename F, typename Vec>
double central_difference(F&& f, Vec x, long i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// Second-order one-sided difference, for points on the boundary of the domain.
template <class F, class Vec>
double forward_difference(F&& f, Vec x, long i, double h) {
  const double x0 = x[i];
  const double f0 = f(x);
  x[i] = x0 + h;
  const double f1 = f(x);
  x[i] = x0 + 2.0 * h;
  const double f2 = f(x);
  return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
}

// Connected random graph: random spanning tree plus extra edges.
inline std::vector<std::pair<int, int>> random_connected_graph(int n, double extra_p, std::mt19937_64& gen) {
  std::vector<std::pair<int, int>> edges;
  std::vector<bool> present(static_cast<std::size_t>(n * n), false);
  auto add = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    if (a == b || present[static_cast<std::size_t>(a * n + b)]) return;
    present[static_cast<std::size_t>(a * n + b)] = true;
    edges.emplace_back(a, b);
  };
  for (int v = 1; v < n; ++v) add(v, std::uniform_int_distribution<int>(0, v - 1)(gen));
  std::bernoulli_distribution extra(extra_p);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (extra(gen)) add(a, b);
    }
  }
  return edges;
}

}  // namespace oracle
