#include "aric/graph.hpp"

#include "aric/errors.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

namespace aric::graph {

namespace {

bool parse_id(const std::string& token, long long& out) {
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

Edge random_pair(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  while (true) {
    const NodeId a = pick(rng);
    const NodeId b = pick(rng);
    if (a != b) return make_edge(a, b);
  }
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

Edge make_edge(NodeId a, NodeId b) {
  if (a == b) {
    throw DataError("self-loop on node " + std::to_string(a));
  }
  return a < b ? Edge{a, b} : Edge{b, a};
}

bool Graph::add_edge(NodeId a, NodeId b) {
  if (a >= n_nodes_ || b >= n_nodes_) {
    throw DataError("edge (" + std::to_string(a) + ", " + std::to_string(b) + ") outside node range");
  }
  const Edge e = make_edge(a, b);
  if (!keys_.insert(key(e)).second) {
    return false;
  }
  edges_.push_back(e);
  return true;
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  if (a == b) return false;
  return has_edge(a < b ? Edge{a, b} : Edge{b, a});
}

std::size_t Graph::non_edge_count() const {
  return n_nodes_ * (n_nodes_ - (n_nodes_ > 0 ? 1 : 0)) / 2 - edges_.size();
}

Graph parse_edge_list(std::istream& in) {
  std::vector<std::pair<NodeId, NodeId>> raw;
  long long max_id = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first) || first.front() == '#') {
      continue;
    }
    std::string second, extra;
    if (!(ss >> second) || (ss >> extra)) {
      throw DataError("edge list line " + std::to_string(line_no) + ": expected exactly two node ids");
    }
    long long a = 0, b = 0;
    if (!parse_id(first, a) || !parse_id(second, b)) {
      throw DataError("edge list line " + std::to_string(line_no) + ": non-integer token");
    }
    if (a < 0 || b < 0) {
      throw DataError("edge list line " + std::to_string(line_no) + ": negative node id");
    }
    if (a == b) {
      throw DataError("edge list line " + std::to_string(line_no) + ": self-loop on node " + std::to_string(a));
    }
    if (a > 0xFFFFFFFELL || b > 0xFFFFFFFELL) {
      throw DataError("edge list line " + std::to_string(line_no) + ": node id too large");
    }
    raw.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    max_id = std::max({max_id, a, b});
  }
  Graph g(static_cast<std::size_t>(max_id + 1));
  for (const auto& [a, b] : raw) {
    g.add_edge(a, b);
  }
  return g;
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open edge list '" + path.string() + "'");
  }
  return parse_edge_list(in);
}

EdgeSplit split_edges(const Graph& graph, double test_frac, std::uint64_t seed) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  auto rng = derive_rng(seed, 4);
  std::vector<Edge> edges = graph.edges();
  std::sort(edges.begin(), edges.end());
  std::shuffle(edges.begin(), edges.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(edges.size())));

  EdgeSplit out;
  out.test_pos.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_test), edges.end());

  const std::size_t available = graph.non_edge_count();
  if (available < n_test) {
    throw DataError("graph too dense: needs " + std::to_string(n_test) + " test non-edges, only " +
                    std::to_string(available) + " exist");
  }
  if (available < 4 * n_test) {
    // Dense graph: enumerate the complement and draw without replacement.
    std::vector<Edge> pool;
    for (NodeId a = 0; a < graph.n_nodes(); ++a) {
      for (NodeId b = a + 1; b < graph.n_nodes(); ++b) {
        if (!graph.has_edge(Edge{a, b})) pool.push_back({a, b});
      }
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    out.test_neg.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
  } else {
    std::set<Edge> chosen;
    while (out.test_neg.size() < n_test) {
      const Edge e = random_pair(graph.n_nodes(), rng);
      if (!graph.has_edge(e) && chosen.insert(e).second) {
        out.test_neg.push_back(e);
      }
    }
  }
  return out;
}

PairBatch sample_pair_batch(std::span<const Edge> train_edges, const Graph& full, std::size_t m,
                            std::mt19937_64& rng) {
  if (m < 1) {
    throw ConfigError("pair batch size must be at least 1");
  }
  if (train_edges.empty()) {
    throw DataError("no training edges to sample");
  }
  if (full.non_edge_count() == 0) {
    throw DataError("graph has no non-edges to sample");
  }
  PairBatch batch;
  batch.positives.reserve(m);
  batch.negatives.reserve(m);
  std::uniform_int_distribution<std::size_t> pick(0, train_edges.size() - 1);
  for (std::size_t i = 0; i < m; ++i) {
    batch.positives.push_back(train_edges[pick(rng)]);
  }
  const std::size_t budget = 1000 * m + 10000;
  std::size_t attempts = 0;
  while (batch.negatives.size() < m) {
    if (++attempts > budget) {
      throw DataError("negative pair rejection budget exceeded");
    }
    const Edge e = random_pair(full.n_nodes(), rng);
    if (!full.has_edge(e)) {
      batch.negatives.push_back(e);
    }
  }
#ifndef NDEBUG
  for (const Edge& e : batch.negatives) assert(!full.has_edge(e));
#endif
  return batch;
}

double GraphDiscriminator::logit(const Edge& e) const {
  return embeddings.row(e.u).dot(embeddings.row(e.v)) + bias;
}

double GraphDiscriminator::predict(const Edge& e) const { return sigmoid(logit(e)); }

Vector GraphDiscriminator::logits(std::span<const Edge> pairs) const {
  Vector z(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) z[static_cast<Eigen::Index>(i)] = logit(pairs[i]);
  return z;
}

Matrix GraphGenerator::pair_features(std::span<const Edge> pairs) const {
  const Eigen::Index dim = embeddings.cols();
  Matrix x(static_cast<Eigen::Index>(pairs.size()), 2 * dim);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r).head(dim) = embeddings.row(pairs[i].u);
    x.row(r).tail(dim) = embeddings.row(pairs[i].v);
  }
  return x;
}

Vector GraphGenerator::raw_weights(std::span<const Edge> pairs) const {
  const Matrix out = forward(mlp, pair_features(pairs)).back();
  return out.col(0).unaryExpr([](double z) { return softplus(z); });
}

GraphTrainConfig GraphTrainConfig::defaults() {
  GraphTrainConfig c;
  c.train.batch_size = 1024;
  c.train.pretrain_iters = 200;
  c.train.train_iters = 2000;
  c.train.eta_d = 1e-3;
  c.train.eta_g = 1e-5;
  c.train.gamma = 1e-3;
  c.train.lambda = 1e-1;
  return c;
}

GraphTrainResult init_graph_models(const GraphTrainConfig& config, std::size_t n_nodes) {
  if (config.dim < 1) {
    throw ConfigError("embedding dim must be at least 1");
  }
  auto rng = derive_rng(config.train.seed, 0);
  const double scale = 0.5 / static_cast<double>(config.dim);
  std::uniform_real_distribution<double> unif(-scale, scale);
  const auto rows = static_cast<Eigen::Index>(n_nodes);
  const auto cols = static_cast<Eigen::Index>(config.dim);
  auto fill = [&](Matrix& m) {
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = unif(rng);
  };
  GraphTrainResult out;
  fill(out.disc.embeddings);
  fill(out.gen.embeddings);
  const auto arch =
      make_architecture(2 * config.dim, config.generator_hidden, Activation::relu, 1, Activation::identity);
  out.gen.mlp = init_mlp(arch, rng);
  return out;
}

GraphDiscriminatorGrad discriminator_gradient(const GraphDiscriminator& disc, std::span<const Edge> pos,
                                              std::span<const Edge> neg, const LogitObjective& obj) {
  GraphDiscriminatorGrad g;
  g.embeddings = Matrix::Zero(disc.embeddings.rows(), disc.embeddings.cols());
  auto accumulate = [&](std::span<const Edge> pairs, const Vector& d) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double w = d[static_cast<Eigen::Index>(i)];
      const Edge& e = pairs[i];
      g.embeddings.row(e.u) += w * disc.embeddings.row(e.v);
      g.embeddings.row(e.v) += w * disc.embeddings.row(e.u);
      g.bias += w;
    }
  };
  accumulate(pos, obj.d_pos);
  accumulate(neg, obj.d_neg);
  return g;
}

GraphGeneratorGrad generator_gradient(const GraphGenerator& gen, std::span<const Edge> negatives,
                                      const Vector& neg_logits, double lambda, std::size_t iteration) {
  const Matrix features = gen.pair_features(negatives);
  const Activations acts = forward(gen.mlp, features);
  GraphGeneratorGrad g;
  g.objective = generator_objective(acts.back().col(0), neg_logits, lambda, iteration);
  Matrix out_grad(static_cast<Eigen::Index>(negatives.size()), 1);
  out_grad.col(0) = g.objective.d_pre;
  BackwardResult br = backward(gen.mlp, acts, out_grad);
  const Eigen::Index dim = gen.embeddings.cols();
  g.embeddings = Matrix::Zero(gen.embeddings.rows(), dim);
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    g.embeddings.row(negatives[i].u) += br.input_grad.row(r).head(dim);
    g.embeddings.row(negatives[i].v) += br.input_grad.row(r).tail(dim);
  }
  g.mlp = std::move(br.grads);
  return g;
}

namespace {

void update_discriminator(GraphDiscriminator& disc, std::span<const Edge> pos, std::span<const Edge> neg,
                          const LogitObjective& obj, double eta, std::size_t iteration) {
  const GraphDiscriminatorGrad g = discriminator_gradient(disc, pos, neg, obj);
  if (!g.embeddings.allFinite() || !std::isfinite(g.bias)) {
    throw TrainingError("non-finite discriminator embedding gradient", iteration);
  }
  disc.embeddings += eta * g.embeddings;
  disc.bias += eta * g.bias;
}

}  // namespace

GraphTrainResult train_graph(const GraphTrainConfig& config, const Graph& full, const EdgeSplit& split) {
  config.train.validate();
  if (split.train.empty()) {
    throw DataError("no training edges");
  }
  const TrainConfig& tc = config.train;
  GraphTrainResult out = init_graph_models(config, full.n_nodes());
  auto rng = derive_rng(tc.seed, 1);
  const std::size_t m = tc.batch_size;

  out.trace.pretrain_d_loss.reserve(tc.pretrain_iters);
  for (std::size_t it = 0; it < tc.pretrain_iters; ++it) {
    const PairBatch b = sample_pair_batch(split.train, full, m, rng);
    const LogitObjective obj = pretrain_objective(out.disc.logits(b.positives), out.disc.logits(b.negatives));
    if (!std::isfinite(obj.value)) throw TrainingError("non-finite discriminator objective", it);
    update_discriminator(out.disc, b.positives, b.negatives, obj, tc.eta_d, it);
    out.trace.pretrain_d_loss.push_back(-obj.value);
  }

  const double gamma = tc.effective_gamma();
  out.trace.adversarial.reserve(tc.train_iters);
  for (std::size_t t = 0; t < tc.train_iters; ++t) {
    const std::size_t it = tc.pretrain_iters + t;
    const PairBatch b = sample_pair_batch(split.train, full, m, rng);

    const BatchWeights w = normalize_weights(out.gen.raw_weights(b.negatives), it);
    const LogitObjective d_obj =
        adversarial_objective(out.disc.logits(b.positives), out.disc.logits(b.negatives), w, gamma);
    if (!std::isfinite(d_obj.value)) throw TrainingError("non-finite discriminator objective", it);
    update_discriminator(out.disc, b.positives, b.negatives, d_obj, tc.eta_d, it);

    const GraphGeneratorGrad g = generator_gradient(out.gen, b.negatives, out.disc.logits(b.negatives), tc.lambda, it);
    const GeneratorObjective& g_obj = g.objective;
    if (!std::isfinite(g_obj.value)) throw TrainingError("non-finite generator objective", it);
    if (!g.embeddings.allFinite()) throw TrainingError("non-finite generator embedding gradient", it);
    out.gen.mlp = sgd_step(std::move(out.gen.mlp), g.mlp, tc.eta_g, Direction::descent, it);
    out.gen.embeddings -= tc.eta_g * g.embeddings;

    out.trace.adversarial.push_back(
        {-d_obj.value, g_obj.value, g_obj.weights.entropy(), g_obj.weights.max(), g_obj.weights.min()});
  }
  return out;
}

MetricsReport link_predict_eval(const GraphDiscriminator& disc, std::span<const Edge> test_pos,
                                std::span<const Edge> test_neg) {
  if (test_pos.empty() && test_neg.empty()) {
    throw DataError("empty link-prediction test set");
  }
  std::vector<double> scores;
  std::vector<int> labels;
  for (const Edge& e : test_pos) {
    scores.push_back(disc.predict(e));
    labels.push_back(1);
  }
  for (const Edge& e : test_neg) {
    scores.push_back(disc.predict(e));
    labels.push_back(0);
  }
  return evaluate_binary(scores, labels);
}

bool NodeLabels::has(std::size_t node, int cls) const {
  const auto& l = labels[node];
  return std::binary_search(l.begin(), l.end(), cls);
}

NodeLabels parse_node_labels(std::istream& in, std::size_t n_nodes) {
  NodeLabels out;
  out.labels.resize(n_nodes);
  std::string line;
  std::size_t line_no = 0;
  int max_class = -1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok) || tok.front() == '#') continue;
    long long node = 0;
    if (!parse_id(tok, node) || node < 0 || static_cast<std::size_t>(node) >= n_nodes) {
      throw DataError("label file line " + std::to_string(line_no) + ": invalid node id '" + tok + "'");
    }
    auto& dst = out.labels[static_cast<std::size_t>(node)];
    while (ss >> tok) {
      long long cls = 0;
      if (!parse_id(tok, cls) || cls < 0 || cls > 1'000'000) {
        throw DataError("label file line " + std::to_string(line_no) + ": invalid label id '" + tok + "'");
      }
      dst.push_back(static_cast<int>(cls));
      max_class = std::max(max_class, static_cast<int>(cls));
    }
    std::sort(dst.begin(), dst.end());
    dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
  }
  out.n_classes = static_cast<std::size_t>(max_class + 1);
  return out;
}

NodeLabels load_node_labels(const std::filesystem::path& path, std::size_t n_nodes) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open label file '" + path.string() + "'");
  }
  return parse_node_labels(in, n_nodes);
}

NodeClassificationResult node_classification_eval(const Matrix& embeddings, const NodeLabels& labels,
                                                  const NodeClassificationConfig& config) {
  if (labels.n_classes < 2) {
    throw ConfigError("node classification needs at least 2 classes");
  }
  if (labels.labels.size() != static_cast<std::size_t>(embeddings.rows())) {
    throw ConfigError("label table and embedding table disagree on node count");
  }
  std::vector<std::size_t> labelled;
  for (std::size_t v = 0; v < labels.labels.size(); ++v) {
    if (!labels.labels[v].empty()) labelled.push_back(v);
  }
  if (labelled.size() < 2) {
    throw DataError("fewer than two labelled nodes");
  }

  NodeClassificationResult out;
  const auto arch = logistic_architecture(static_cast<std::size_t>(embeddings.cols()));
  for (std::uint64_t seed : config.seeds) {
    auto rng = derive_rng(seed, 5);
    std::vector<std::size_t> order = labelled;
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(config.train_frac * static_cast<double>(order.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
    const std::vector<std::size_t> train_nodes(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<std::size_t> test_nodes(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

    const Standardizer scaler = Standardizer::fit(gather_rows(embeddings, train_nodes));
    const Matrix x_train = scaler.apply(gather_rows(embeddings, train_nodes));
    const Matrix x_test = scaler.apply(gather_rows(embeddings, test_nodes));

    std::vector<ConfusionCounts> per_class;
    for (std::size_t c = 0; c < labels.n_classes; ++c) {
      const int cls = static_cast<int>(c);
      Matrix y(x_train.rows(), 1);
      bool any_positive = false;
      for (std::size_t i = 0; i < train_nodes.size(); ++i) {
        y(static_cast<Eigen::Index>(i), 0) = labels.has(train_nodes[i], cls) ? 1.0 : 0.0;
        any_positive = any_positive || labels.has(train_nodes[i], cls);
      }
      std::vector<int> preds(test_nodes.size(), 0);
      if (any_positive) {
        auto init_rng = derive_rng(seed, 100 + c);
        MlpParams lr = init_mlp(arch, init_rng);
        const double inv_n = 1.0 / static_cast<double>(x_train.rows());
        for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
          const Activations acts = forward(lr, x_train);
          const Matrix p = acts.back().unaryExpr([](double z) { return sigmoid(z); });
          const Matrix grad = (y - p) * inv_n;
          lr = sgd_step(std::move(lr), backward(lr, acts, grad).grads, config.learning_rate, Direction::ascent,
                        epoch);
        }
        const Matrix z = forward(lr, x_test).back();
        for (std::size_t i = 0; i < test_nodes.size(); ++i) {
          preds[i] = sigmoid(z(static_cast<Eigen::Index>(i), 0)) >= 0.5 ? 1 : 0;
        }
      }
      std::vector<int> truth(test_nodes.size());
      for (std::size_t i = 0; i < test_nodes.size(); ++i) truth[i] = labels.has(test_nodes[i], cls) ? 1 : 0;
      per_class.push_back(confusion(preds, truth));
    }
    const MacroMicroF1 f = macro_micro_f1(per_class);
    out.micro_f1.push_back(f.micro_f1);
    out.macro_f1.push_back(f.macro_f1);
  }
  out.micro_mean = mean_of(out.micro_f1);
  out.micro_std = sample_std(out.micro_f1);
  out.macro_mean = mean_of(out.macro_f1);
  out.macro_std = sample_std(out.macro_f1);
  return out;
}

Graph stochastic_block_model(const std::vector<std::size_t>& block_sizes, double p_in, double p_out,
                             std::uint64_t seed) {
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
    throw ConfigError("edge probabilities must lie in [0, 1]");
  }
  std::vector<std::size_t> block;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) block.insert(block.end(), block_sizes[b], b);
  Graph g(block.size());
  auto rng = derive_rng(seed, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (NodeId a = 0; a < block.size(); ++a) {
    for (NodeId b = a + 1; b < block.size(); ++b) {
      if (u(rng) < (block[a] == block[b] ? p_in : p_out)) g.add_edge(a, b);
    }
  }
  return g;
}

void write_embeddings_csv(const Matrix& embeddings, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write embeddings to '" + path.string() + "'");
  }
  out << "node_id";
  for (Eigen::Index c = 0; c < embeddings.cols(); ++c) out << ",e" << c;
  out << '\n';
  for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < embeddings.cols(); ++c) out << ',' << format_double(embeddings(r, c));
    out << '\n';
  }
}

}  // namespace aric::graph
