#include "offloadnet/gcnn.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace offloadnet {

using json = nlohmann::json;

namespace {

constexpr int kModelFormatVersion = 1;

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::softplus: return "softplus";
  }
  return "?";
}

const char* to_string(Aggregation a) {
  return a == Aggregation::own_features ? "own_features" : "neighbor_features";
}

Activation parse_activation(std::string_view text) {
  if (text == "identity") return Activation::identity;
  if (text == "leaky_relu") return Activation::leaky_relu;
  if (text == "softplus") return Activation::softplus;
  throw std::invalid_argument("unknown activation: " + std::string(text));
}

Aggregation parse_aggregation(std::string_view text) {
  if (text == "own_features") return Aggregation::own_features;
  if (text == "neighbor_features") return Aggregation::neighbor_features;
  throw std::invalid_argument("unknown aggregation: " + std::string(text));
}

Eigen::MatrixXd build_features(const ExtendedGraph& ext, const std::vector<NodeRole>& roles,
                               const TaskSet& tasks) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(ext.link_count(), 4);
  for (LinkId e = 0; e < ext.link_count(); ++e) {
    x(e, 0) = ext.is_virtual(e) ? 1.0 : 0.0;
    x(e, 1) = ext.server_link[e] ? 1.0 : 0.0;
    x(e, 3) = ext.rates[e];
  }
  for (const Task& t : tasks) {
    if (t.source < 0 || t.source >= ext.physical_node_count || roles[t.source] != NodeRole::edge) {
      throw std::invalid_argument("task source " + std::to_string(t.source) + " is not an edge node");
    }
    x(ext.virtual_link[t.source], 2) += t.packet_rate();
  }
  return x;
}

std::vector<int> default_dims(int layers, int hidden) {
  if (layers < 1) throw std::invalid_argument("need at least one layer");
  std::vector<int> dims{4};
  for (int l = 1; l < layers; ++l) dims.push_back(hidden);
  dims.push_back(1);
  return dims;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw std::runtime_error("matrix data size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

std::string model_to_json(const Gcnn& model) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["dims"] = model.dims();
  j["aggregation"] = to_string(model.aggregation());
  j["init_seed"] = model.seed();
  json acts = json::array();
  json layers = json::array();
  for (const auto& l : model.layers()) {
    acts.push_back(to_string(l.activation));
    layers.push_back({{"theta0", matrix_to_json(l.self_weight)}, {"theta1", matrix_to_json(l.mixed_weight)}});
  }
  j["activations"] = std::move(acts);
  j["layers"] = std::move(layers);
  return j.dump(1);
}

Gcnn model_from_json(std::string_view text) {
  try {
    json j = json::parse(text);
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw std::runtime_error("unsupported model format version");
    }
    const auto acts = j.at("activations").get<std::vector<std::string>>();
    const json& layers = j.at("layers");
    if (acts.size() != layers.size()) throw std::runtime_error("activation count does not match layers");
    std::vector<GcnnLayer<double>> out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      GcnnLayer<double> layer;
      layer.self_weight = matrix_from_json(layers[l].at("theta0"));
      layer.mixed_weight = matrix_from_json(layers[l].at("theta1"));
      layer.activation = parse_activation(acts[l]);
      out.push_back(std::move(layer));
    }
    Gcnn model(std::move(out), parse_aggregation(j.at("aggregation").get<std::string>()),
               j.value("init_seed", std::uint64_t{0}));
    if (model.dims() != j.at("dims").get<std::vector<int>>()) throw std::runtime_error("dims do not match layers");
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Gcnn& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model_to_json(model) << '\n';
}

Gcnn load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace offloadnet
