#pragma once

// Per-link delay estimation under contention-based scheduling.
//
// Conflicting links with non-empty queues share the channel equally, so a
// physical link with rate r and p contending neighbours is served at
// r / (1 + p). The busy probability of a link is its utilisation x / mu,
// capped at one. Iterating the two relations K times from the worst case
// (every neighbour contending) gives the service estimate; each link is
// then a G/G/1 queue with response time 1 / (mu - x), or, when unstable,
// the time T x / mu to drain what arrived during the first T slots.
//
// Virtual links (computation) are not scheduled and keep their rate.

#include "offloadnet/graph.hpp"
#include "offloadnet/types.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <vector>

namespace offloadnet {

/// Static inputs of the estimator: conflict structure over the physical
/// links and rates of all extended links. Links 0..conflict_size-1 are
/// physical; the rest are virtual.
template <typename Scalar>
struct QueueingNetwork {
  Eigen::SparseMatrix<Scalar> conflict_adjacency;
  VectorX<Scalar> conflict_degree;
  VectorX<Scalar> rates;

  QueueingNetwork() = default;

  QueueingNetwork(const ConflictGraph& conflict, VectorX<Scalar> link_rates)
      : conflict_adjacency(conflict.adjacency_matrix<Scalar>()),
        conflict_degree(conflict.degree.cast<Scalar>()),
        rates(std::move(link_rates)) {
    if (rates.size() < conflict.vertex_count) {
      throw std::invalid_argument("fewer rates than conflict-graph links");
    }
    if ((rates.array() <= Scalar(0)).any()) throw std::invalid_argument("nonpositive link rate");
  }

  QueueingNetwork(const ConflictGraph& conflict, const ExtendedGraph& ext)
      : QueueingNetwork(conflict, ext.rates.cast<Scalar>()) {
    if (conflict.vertex_count != ext.physical_link_count) {
      throw std::invalid_argument("conflict graph does not match the physical links");
    }
  }

  Eigen::Index link_count() const { return rates.size(); }
  Eigen::Index physical_link_count() const { return conflict_adjacency.rows(); }
};

template <typename Scalar>
struct ServiceEstimate {
  VectorX<Scalar> mu_hat;
  FlagVector congested;  // mu_hat <= arrivals
};

/// Output of `estimate_delays`, carrying what the reverse pass needs.
template <typename Scalar>
struct DelayEstimate {
  VectorX<Scalar> delays;
  ServiceEstimate<Scalar> service;
  VectorX<Scalar> arrivals;
  Scalar horizon = Scalar(0);
  std::vector<VectorX<Scalar>> mu_history;  // physical links, k = 0..K
};

template <typename Scalar>
inline constexpr Scalar kStableGap = Scalar(1e-9);

template <typename Scalar>
DelayEstimate<Scalar> estimate_delays(const QueueingNetwork<Scalar>& net,
                                      const VectorX<Scalar>& arrivals, int horizon,
                                      int iterations) {
  const Eigen::Index n = net.link_count();
  const Eigen::Index nc = net.physical_link_count();
  if (arrivals.size() != n) throw std::invalid_argument("arrival vector has wrong dimension");
  if ((arrivals.array() < Scalar(0)).any()) throw std::invalid_argument("negative arrival rate");
  if (horizon < 1 || iterations < 1) throw std::invalid_argument("T and K must be at least 1");

  DelayEstimate<Scalar> out;
  out.arrivals = arrivals;
  out.horizon = Scalar(horizon);

  const auto rc = net.rates.head(nc);
  const auto xc = arrivals.head(nc);
  VectorX<Scalar> mu = rc.array() / (Scalar(1) + net.conflict_degree.array());
  out.mu_history.reserve(static_cast<std::size_t>(iterations) + 1);
  out.mu_history.push_back(mu);
  for (int k = 0; k < iterations; ++k) {
    VectorX<Scalar> busy = (xc.array() / mu.array()).min(Scalar(1));
    VectorX<Scalar> contenders = net.conflict_adjacency * busy;
    mu = rc.array() / (Scalar(1) + contenders.array());
    out.mu_history.push_back(mu);
  }

  out.service.mu_hat = net.rates;
  out.service.mu_hat.head(nc) = mu;
  const auto& mu_hat = out.service.mu_hat;
  out.service.congested = mu_hat.array() <= arrivals.array();
  out.delays.resize(n);
  for (Eigen::Index e = 0; e < n; ++e) {
    if (out.service.congested[e]) {
      out.delays[e] = out.horizon * arrivals[e] / mu_hat[e];
    } else {
      out.delays[e] = Scalar(1) / std::max(mu_hat[e] - arrivals[e], kStableGap<Scalar>);
    }
  }
  return out;
}

/// Gradient of <upstream, delays> with respect to the arrivals, by reverse
/// traversal of the unrolled iteration. Kinks take the branch used in the
/// forward pass; busy = x/mu when x/mu == 1.
template <typename Scalar>
VectorX<Scalar> estimate_delays_vjp(const QueueingNetwork<Scalar>& net,
                                    const DelayEstimate<Scalar>& fwd,
                                    const VectorX<Scalar>& upstream) {
  const Eigen::Index n = net.link_count();
  const Eigen::Index nc = net.physical_link_count();
  if (upstream.size() != n) throw std::invalid_argument("upstream gradient has wrong dimension");
  const auto& x = fwd.arrivals;
  const auto& mu_hat = fwd.service.mu_hat;

  VectorX<Scalar> grad_x = VectorX<Scalar>::Zero(n);
  VectorX<Scalar> grad_mu = VectorX<Scalar>::Zero(n);
  for (Eigen::Index e = 0; e < n; ++e) {
    if (fwd.service.congested[e]) {
      grad_x[e] += upstream[e] * fwd.horizon / mu_hat[e];
      grad_mu[e] -= upstream[e] * fwd.horizon * x[e] / (mu_hat[e] * mu_hat[e]);
    } else {
      const Scalar gap = mu_hat[e] - x[e];
      if (gap > kStableGap<Scalar>) {
        const Scalar d = upstream[e] / (gap * gap);
        grad_x[e] += d;
        grad_mu[e] -= d;
      }
    }
  }

  const auto rc = net.rates.head(nc);
  const auto xc = x.head(nc);
  VectorX<Scalar> g_mu = grad_mu.head(nc);
  const int iterations = static_cast<int>(fwd.mu_history.size()) - 1;
  for (int k = iterations; k >= 1; --k) {
    const VectorX<Scalar>& mu_k = fwd.mu_history[static_cast<std::size_t>(k)];
    const VectorX<Scalar>& mu_prev = fwd.mu_history[static_cast<std::size_t>(k - 1)];
    // mu_k = r / (1 + p)  =>  dmu/dp = -mu_k^2 / r
    VectorX<Scalar> g_p = -(g_mu.array() * mu_k.array().square() / rc.array());
    VectorX<Scalar> g_busy = net.conflict_adjacency.transpose() * g_p;
    VectorX<Scalar> g_prev = VectorX<Scalar>::Zero(nc);
    for (Eigen::Index e = 0; e < nc; ++e) {
      if (xc[e] / mu_prev[e] <= Scalar(1)) {
        grad_x[e] += g_busy[e] / mu_prev[e];
        g_prev[e] = -g_busy[e] * xc[e] / (mu_prev[e] * mu_prev[e]);
      }
    }
    g_mu = std::move(g_prev);
  }
  return grad_x;
}

/// Links whose queue is unstable under the given traffic: mu_hat < rho.
template <typename Scalar>
FlagVector congestion_flags(const ServiceEstimate<Scalar>& service, const VectorX<Scalar>& arrivals) {
  if (arrivals.size() != service.mu_hat.size()) {
    throw std::invalid_argument("arrival vector has wrong dimension");
  }
  return service.mu_hat.array() < arrivals.array();
}

}  // namespace offloadnet
