#pragma once

// Random network instances and task sets: Barabasi-Albert topologies,
// relay selection by minimum vertex cut, server placement on the smaller
// side of a Stoer-Wagner cut, link/service rate sampling, and the JSONL
// instance file format.

#include "offloadnet/graph.hpp"
#include "offloadnet/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace offloadnet {

/// Distribution parameters of generated instances and tasks.
struct GenerationParams {
  int ba_attachments = 2;
  double server_fraction_min = 0.1;
  double server_fraction_max = 0.25;
  double link_rate_min = 30.0;
  double link_rate_max = 70.0;
  double pareto_shape = 2.0;
  double server_rate_mode = 100.0;
  double edge_rate_mode = 8.0;
  double task_fraction_min = 0.3;
  double task_fraction_max = 1.0;
  double job_rate_min = 0.015;
  double job_rate_max = 0.075;
  int upload_packets = 100;
  int download_packets = 1;
};

struct NetworkInstance {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  ConnectivityGraph graph;
  ConflictGraph conflict;
  std::vector<NodeRole> roles;
  Eigen::VectorXd link_rates;     // per physical link
  Eigen::VectorXd service_rates;  // per node, 0 for relays

  int node_count() const { return graph.node_count(); }
  std::vector<NodeId> nodes_with_role(NodeRole role) const;
};

struct Task {
  NodeId source = 0;
  std::vector<NodeId> servers;  // sorted ascending
  double job_rate = 0.0;        // jobs per slot
  int upload_packets = 0;
  int download_packets = 0;

  int total_packets() const { return upload_packets + download_packets; }
  /// Packets per slot injected by the task.
  double packet_rate() const { return job_rate * total_packets(); }

  friend bool operator==(const Task&, const Task&) = default;
};

using TaskSet = std::vector<Task>;

/// A network instance together with its pre-drawn task sets.
struct InstanceRecord {
  NetworkInstance instance;
  std::vector<TaskSet> task_draws;
};

bool operator==(const NetworkInstance& x, const NetworkInstance& y);
bool operator==(const InstanceRecord& x, const InstanceRecord& y);

// Generation steps.

/// Barabasi-Albert graph grown from a complete graph on `attachments + 1`
/// nodes; every later node links to `attachments` distinct existing nodes
/// chosen with probability proportional to degree.
ConnectivityGraph generate_ba(int node_count, int attachments, SplitMixStream& rng);

/// Size of the smallest vertex cut, or -1 for complete graphs.
int vertex_connectivity(const UndirectedGraph& g);

/// Lexicographically smallest minimum vertex cut (sorted). Empty for
/// complete graphs, which have no vertex cut.
std::vector<NodeId> select_relays(const UndirectedGraph& g);

struct Partition {
  std::vector<NodeId> larger;   // sorted
  std::vector<NodeId> smaller;  // sorted
  double cut_weight = 0.0;
};

/// Global minimum edge cut with unit weights (Stoer-Wagner).
Partition partition_stoer_wagner(const UndirectedGraph& g);

long server_count(int node_count, double fraction);
long task_count(int edge_node_count, double fraction);

/// Draws the server fraction, then places servers.
std::vector<NodeRole> assign_roles(const UndirectedGraph& g, const std::vector<NodeId>& relays,
                                   const Partition& partition, SplitMixStream& rng,
                                   const GenerationParams& params = {});

/// Places `servers` servers: uniformly from the smaller side minus relays,
/// overflowing into the larger side minus relays.
std::vector<NodeRole> assign_roles(const UndirectedGraph& g, const std::vector<NodeId>& relays,
                                   const Partition& partition, long servers,
                                   SplitMixStream& rng);

struct SampledRates {
  Eigen::VectorXd link_rates;
  Eigen::VectorXd service_rates;
};

SampledRates sample_rates(const UndirectedGraph& g, const std::vector<NodeRole>& roles,
                          SplitMixStream& rng, const GenerationParams& params = {});

TaskSet sample_tasks(const NetworkInstance& instance, SplitMixStream& rng,
                     const GenerationParams& params = {});

/// Full instance from a seed; the seed fixes every sampled value.
NetworkInstance generate_instance(int node_count, std::uint64_t seed,
                                  const GenerationParams& params = {});

/// Stream used for task draw `draw` of an instance seeded `seed`.
SplitMixStream task_draw_stream(std::uint64_t seed, int draw);

InstanceRecord generate_record(std::uint64_t id, int node_count, std::uint64_t seed, int draws,
                               const GenerationParams& params = {});

/// Rebuilds graph, conflict graph and role-derived data from raw fields.
NetworkInstance make_instance(std::uint64_t id, std::uint64_t seed, int node_count,
                              std::vector<Link> links, std::vector<double> link_rates,
                              std::vector<NodeRole> roles, std::vector<double> service_rates);

// Persistence. One JSON object per line.

std::string to_json_line(const InstanceRecord& record);
InstanceRecord parse_json_line(std::string_view line);

void write_instances(const std::filesystem::path& path, const std::vector<InstanceRecord>& records);
std::vector<InstanceRecord> read_instances(const std::filesystem::path& path);

struct DatasetManifest {
  std::vector<int> sizes;
  int train_count = 2000;
  int test_count = 1000;
  int task_draws = 10;
  std::uint64_t master_seed = 0;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace offloadnet
