#pragma once

// Graph convolutional network over the line graph of the extended graph.
//
// Layer l maps X (|V| x g_{l-1}) to
//
//   X' = sigma_l( X Theta0 + (P X) Theta1 )
//
// where P is a fixed sparse operator of the line graph. With the default
// `own_features` aggregation P is diagonal, P_ii = 1 - sum_{e in N(i)}
// 1/sqrt(d(e) d(i)); with `neighbor_features` P is the normalised Laplacian
// I - D^{-1/2} A D^{-1/2}. Both reduce to the identity on isolated vertices.

#include "offloadnet/graph.hpp"
#include "offloadnet/instance.hpp"
#include "offloadnet/rng.hpp"
#include "offloadnet/types.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace offloadnet {

enum class Activation { identity, leaky_relu, softplus };
enum class Aggregation { own_features, neighbor_features };

#ifdef OFFLOADNET_NEIGHBOR_AGGREGATION
inline constexpr Aggregation kDefaultAggregation = Aggregation::neighbor_features;
#else
inline constexpr Aggregation kDefaultAggregation = Aggregation::own_features;
#endif

inline constexpr double kLeakySlope = 0.01;

const char* to_string(Activation a);
const char* to_string(Aggregation a);
Activation parse_activation(std::string_view text);
Aggregation parse_aggregation(std::string_view text);

template <typename Scalar>
Scalar activate(Activation a, Scalar z) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::leaky_relu: return z > Scalar(0) ? z : Scalar(kLeakySlope) * z;
    case Activation::softplus:
      return z > Scalar(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return z;
}

template <typename Scalar>
Scalar activate_derivative(Activation a, Scalar z) {
  switch (a) {
    case Activation::identity: return Scalar(1);
    case Activation::leaky_relu: return z > Scalar(0) ? Scalar(1) : Scalar(kLeakySlope);
    case Activation::softplus:
      return z >= Scalar(0) ? Scalar(1) / (Scalar(1) + std::exp(-z))
                            : std::exp(z) / (Scalar(1) + std::exp(z));
  }
  return Scalar(1);
}

template <typename Scalar>
struct GcnnLayer {
  MatrixX<Scalar> self_weight;   // Theta0, g_{l-1} x g_l
  MatrixX<Scalar> mixed_weight;  // Theta1, g_{l-1} x g_l
  Activation activation = Activation::leaky_relu;
};

template <typename Scalar>
class BasicGcnn {
 public:
  BasicGcnn() = default;

  /// Fan-scaled uniform initialisation; leaky-rectifier hidden layers and a
  /// softplus output so predictions are nonnegative.
  BasicGcnn(const std::vector<int>& dims, std::uint64_t seed,
            Aggregation aggregation = kDefaultAggregation)
      : aggregation_(aggregation), seed_(seed) {
    if (dims.size() < 2) throw std::invalid_argument("a GCNN needs at least one layer");
    SplitMixStream rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const int in = dims[l], out = dims[l + 1];
      if (in < 1 || out < 1) throw std::invalid_argument("layer widths must be positive");
      const double bound = std::sqrt(6.0 / (in + out));
      GcnnLayer<Scalar> layer;
      layer.self_weight.resize(in, out);
      layer.mixed_weight.resize(in, out);
      for (auto* m : {&layer.self_weight, &layer.mixed_weight}) {
        for (Eigen::Index c = 0; c < out; ++c) {
          for (Eigen::Index r = 0; r < in; ++r) (*m)(r, c) = Scalar(rng.uniform(-bound, bound));
        }
      }
      layer.activation = l + 2 == dims.size() ? Activation::softplus : Activation::leaky_relu;
      layers_.push_back(std::move(layer));
    }
  }

  BasicGcnn(std::vector<GcnnLayer<Scalar>> layers, Aggregation aggregation, std::uint64_t seed = 0)
      : layers_(std::move(layers)), aggregation_(aggregation), seed_(seed) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& L = layers_[l];
      if (L.self_weight.rows() != L.mixed_weight.rows() || L.self_weight.cols() != L.mixed_weight.cols()) {
        throw std::invalid_argument("layer weight shapes differ");
      }
      if (l > 0 && layers_[l - 1].self_weight.cols() != L.self_weight.rows()) {
        throw std::invalid_argument("consecutive layer widths do not match");
      }
    }
  }

  const std::vector<GcnnLayer<Scalar>>& layers() const { return layers_; }
  std::vector<GcnnLayer<Scalar>>& layers() { return layers_; }
  Aggregation aggregation() const { return aggregation_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<int> dims() const {
    std::vector<int> d;
    if (layers_.empty()) return d;
    d.push_back(static_cast<int>(layers_.front().self_weight.rows()));
    for (const auto& l : layers_) d.push_back(static_cast<int>(l.self_weight.cols()));
    return d;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.self_weight.size() + l.mixed_weight.size();
    return n;
  }

  /// All weights flattened layer by layer (Theta0 then Theta1, column-major).
  VectorX<Scalar> parameters() const {
    VectorX<Scalar> p(parameter_count());
    Eigen::Index at = 0;
    for (const auto& l : layers_) {
      for (const auto* m : {&l.self_weight, &l.mixed_weight}) {
        p.segment(at, m->size()) = m->reshaped();
        at += m->size();
      }
    }
    return p;
  }

  void set_parameters(const VectorX<Scalar>& p) {
    if (p.size() != parameter_count()) throw std::invalid_argument("parameter vector has wrong size");
    Eigen::Index at = 0;
    for (auto& l : layers_) {
      for (auto* m : {&l.self_weight, &l.mixed_weight}) {
        m->reshaped() = p.segment(at, m->size());
        at += m->size();
      }
    }
  }

  bool all_finite() const { return parameters().allFinite(); }

  friend bool operator==(const BasicGcnn& x, const BasicGcnn& y) {
    if (x.aggregation_ != y.aggregation_ || x.layers_.size() != y.layers_.size()) return false;
    for (std::size_t l = 0; l < x.layers_.size(); ++l) {
      const auto& a = x.layers_[l];
      const auto& b = y.layers_[l];
      if (a.activation != b.activation || a.self_weight != b.self_weight || a.mixed_weight != b.mixed_weight) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<GcnnLayer<Scalar>> layers_;
  Aggregation aggregation_ = kDefaultAggregation;
  std::uint64_t seed_ = 0;
};

using Gcnn = BasicGcnn<double>;

template <typename Scalar>
Eigen::SparseMatrix<Scalar> propagation_operator(const LineGraph& lg, Aggregation aggregation) {
  const int n = lg.vertex_count;
  std::vector<Eigen::Triplet<Scalar>> triplets;
  for (int i = 0; i < n; ++i) {
    const Scalar di = Scalar(lg.degree[i]);
    if (aggregation == Aggregation::own_features) {
      Scalar s = Scalar(1);
      for (int e : lg.adjacency[i]) s -= Scalar(1) / std::sqrt(Scalar(lg.degree[e]) * di);
      triplets.emplace_back(i, i, s);
    } else {
      triplets.emplace_back(i, i, Scalar(1));
      for (int e : lg.adjacency[i]) {
        triplets.emplace_back(i, e, -Scalar(1) / std::sqrt(Scalar(lg.degree[e]) * di));
      }
    }
  }
  Eigen::SparseMatrix<Scalar> p(n, n);
  p.setFromTriplets(triplets.begin(), triplets.end());
  return p;
}

template <typename Scalar>
struct GcnnCache {
  std::vector<MatrixX<Scalar>> inputs;      // X^{l-1}
  std::vector<MatrixX<Scalar>> propagated;  // P X^{l-1}
  std::vector<MatrixX<Scalar>> preactivations;
  MatrixX<Scalar> output;

  /// First output column: the per-link prediction.
  VectorX<Scalar> prediction() const { return output.col(0); }
};

template <typename Scalar>
struct GcnnGradient {
  std::vector<MatrixX<Scalar>> self_weight;
  std::vector<MatrixX<Scalar>> mixed_weight;
  MatrixX<Scalar> input;

  VectorX<Scalar> flatten() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l < self_weight.size(); ++l) n += self_weight[l].size() + mixed_weight[l].size();
    VectorX<Scalar> g(n);
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < self_weight.size(); ++l) {
      for (const auto* m : {&self_weight[l], &mixed_weight[l]}) {
        g.segment(at, m->size()) = m->reshaped();
        at += m->size();
      }
    }
    return g;
  }
};

template <typename Scalar>
GcnnCache<Scalar> forward(const BasicGcnn<Scalar>& model, const Eigen::SparseMatrix<Scalar>& propagation,
                          const MatrixX<Scalar>& features) {
  if (features.rows() != propagation.rows()) throw std::invalid_argument("feature rows do not match graph");
  GcnnCache<Scalar> cache;
  MatrixX<Scalar> x = features;
  for (const auto& layer : model.layers()) {
    if (x.cols() != layer.self_weight.rows()) throw std::invalid_argument("feature width does not match layer");
    MatrixX<Scalar> px = propagation * x;
    MatrixX<Scalar> z = x * layer.self_weight + px * layer.mixed_weight;
    cache.inputs.push_back(std::move(x));
    cache.propagated.push_back(std::move(px));
    x = z.unaryExpr([&](Scalar v) { return activate(layer.activation, v); });
    cache.preactivations.push_back(std::move(z));
  }
  cache.output = std::move(x);
  return cache;
}

/// Reverse pass for the gradient of <upstream, output>.
template <typename Scalar>
GcnnGradient<Scalar> forward_vjp(const BasicGcnn<Scalar>& model, const Eigen::SparseMatrix<Scalar>& propagation,
                                 const GcnnCache<Scalar>& cache, const MatrixX<Scalar>& upstream) {
  const auto& layers = model.layers();
  if (upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols()) {
    throw std::invalid_argument("upstream gradient shape does not match output");
  }
  GcnnGradient<Scalar> grad;
  grad.self_weight.resize(layers.size());
  grad.mixed_weight.resize(layers.size());
  MatrixX<Scalar> g = upstream;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const MatrixX<Scalar>& z = cache.preactivations[l];
    MatrixX<Scalar> gz = g.cwiseProduct(z.unaryExpr([&](Scalar v) { return activate_derivative(layer.activation, v); }));
    grad.self_weight[l] = cache.inputs[l].transpose() * gz;
    grad.mixed_weight[l] = cache.propagated[l].transpose() * gz;
    MatrixX<Scalar> through_mixed = gz * layer.mixed_weight.transpose();
    g = gz * layer.self_weight.transpose() + MatrixX<Scalar>(propagation.transpose() * through_mixed);
  }
  grad.input = std::move(g);
  return grad;
}

/// Per-extended-link input features [virtual, server virtual, task packet
/// rate, link rate]. Throws when a task sits on a node without a virtual link
/// or on a non-edge node.
Eigen::MatrixXd build_features(const ExtendedGraph& ext, const std::vector<NodeRole>& roles,
                               const TaskSet& tasks);

std::vector<int> default_dims(int layers = 5, int hidden = 32);

std::string model_to_json(const Gcnn& model);
Gcnn model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const Gcnn& model);
Gcnn load_model(const std::filesystem::path& path);

}  // namespace offloadnet
