#pragma once

#include "aric/adversarial.hpp"
#include "aric/metrics.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

namespace aric::graph {

using NodeId = std::uint32_t;

/// Unordered node pair stored as (min, max).
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  auto operator<=>(const Edge&) const = default;
};

/// Canonical (min, max) pair. Throws DataError on a self-loop.
Edge make_edge(NodeId a, NodeId b);

/// Simple undirected graph.
class Graph {
 public:
  explicit Graph(std::size_t n_nodes = 0) : n_nodes_(n_nodes) {}

  /// Returns false for a duplicate. Throws DataError on self-loops or out-of-range ids.
  bool add_edge(NodeId a, NodeId b);
  bool has_edge(NodeId a, NodeId b) const;
  bool has_edge(const Edge& e) const { return keys_.contains(key(e)); }

  std::size_t n_nodes() const { return n_nodes_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t non_edge_count() const;

 private:
  static std::uint64_t key(const Edge& e) { return (static_cast<std::uint64_t>(e.u) << 32) | e.v; }

  std::size_t n_nodes_;
  std::vector<Edge> edges_;
  std::unordered_set<std::uint64_t> keys_;
};

/// Whitespace-separated integer pairs, one per line; blank lines and '#' comments skipped.
/// n_nodes = max id + 1. Errors name the offending line.
Graph parse_edge_list(std::istream& in);
Graph load_edge_list(const std::filesystem::path& path);

struct EdgeSplit {
  std::vector<Edge> train;
  std::vector<Edge> test_pos;
  std::vector<Edge> test_neg;  // distinct non-edges of the original graph
};

/// Holds out round(test_frac * |E|) edges and as many non-edges, deterministically in `seed`.
EdgeSplit split_edges(const Graph& graph, double test_frac, std::uint64_t seed);

struct PairBatch {
  std::vector<Edge> positives;
  std::vector<Edge> negatives;
};

/// m train edges with replacement, and m non-edges of `full` by rejection sampling.
PairBatch sample_pair_batch(std::span<const Edge> train_edges, const Graph& full, std::size_t m,
                            std::mt19937_64& rng);

/// D(u, v) = sigmoid(e_u . e_v + bias) over its own embedding table.
struct GraphDiscriminator {
  Matrix embeddings;  // n_nodes x dim
  double bias = 0.0;

  double logit(const Edge& e) const;
  double predict(const Edge& e) const;
  Vector logits(std::span<const Edge> pairs) const;
};

/// G(u, v) = softplus(MLP([g_min ; g_max])) over a separate embedding table.
struct GraphGenerator {
  Matrix embeddings;  // n_nodes x dim
  MlpParams mlp;      // 2 dim -> ... -> 1

  Matrix pair_features(std::span<const Edge> pairs) const;
  Vector raw_weights(std::span<const Edge> pairs) const;
};

/// Gradient of an objective w.r.t. the discriminator table and bias, given d objective / d logit.
struct GraphDiscriminatorGrad {
  Matrix embeddings;
  double bias = 0.0;
};

GraphDiscriminatorGrad discriminator_gradient(const GraphDiscriminator& disc, std::span<const Edge> pos,
                                              std::span<const Edge> neg, const LogitObjective& obj);

/// Generator objective on a batch of negative pairs with its gradient w.r.t. the MLP and the
/// generator's embedding table.
struct GraphGeneratorGrad {
  GeneratorObjective objective;
  MlpGrads mlp;
  Matrix embeddings;
};

GraphGeneratorGrad generator_gradient(const GraphGenerator& gen, std::span<const Edge> negatives,
                                      const Vector& neg_logits, double lambda, std::size_t iteration = 0);

struct GraphTrainConfig {
  TrainConfig train;
  std::size_t dim = 20;
  std::vector<std::size_t> generator_hidden{64, 32, 32};

  /// batch 1024, eta_d 1e-3, eta_g 1e-5, gamma 1e-3, lambda 1e-1, dim 20.
  static GraphTrainConfig defaults();
};

struct GraphTrainResult {
  GraphDiscriminator disc;
  GraphGenerator gen;
  TrainTrace trace;
};

GraphTrainResult init_graph_models(const GraphTrainConfig& config, std::size_t n_nodes);

/// The two-phase adversarial loop with node pairs as samples. Negatives exclude every edge of
/// `full`, including held-out test edges.
GraphTrainResult train_graph(const GraphTrainConfig& config, const Graph& full, const EdgeSplit& split);

/// Rounds D at 0.5 on test_pos (label 1) and test_neg (label 0).
MetricsReport link_predict_eval(const GraphDiscriminator& disc, std::span<const Edge> test_pos,
                                std::span<const Edge> test_neg);

struct NodeLabels {
  std::size_t n_classes = 0;
  std::vector<std::vector<int>> labels;  // per node, sorted class ids

  bool has(std::size_t node, int cls) const;
};

/// One line per node: "node_id label_id [label_id ...]". Nodes not listed get no labels.
NodeLabels parse_node_labels(std::istream& in, std::size_t n_nodes);
NodeLabels load_node_labels(const std::filesystem::path& path, std::size_t n_nodes);

struct NodeClassificationConfig {
  double train_frac = 0.9;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t epochs = 300;
  double learning_rate = 0.5;
};

struct NodeClassificationResult {
  std::vector<double> micro_f1;
  std::vector<double> macro_f1;
  double micro_mean = 0.0, micro_std = 0.0;
  double macro_mean = 0.0, macro_std = 0.0;
};

/// One-vs-all logistic regressions on the visible labelled nodes, scored on the hidden ones.
/// A class with no visible positive predicts negative everywhere.
NodeClassificationResult node_classification_eval(const Matrix& embeddings, const NodeLabels& labels,
                                                  const NodeClassificationConfig& config = {});

/// Independent edges: probability p_in inside a block, p_out across blocks.
Graph stochastic_block_model(const std::vector<std::size_t>& block_sizes, double p_in, double p_out,
                             std::uint64_t seed);

/// Header "node_id,e0,...", then one row per node.
void write_embeddings_csv(const Matrix& embeddings, const std::filesystem::path& path);

}  // namespace aric::graph
