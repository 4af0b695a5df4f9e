#include "aric/cli.hpp"

#include "aric/adversarial.hpp"
#include "aric/baselines.hpp"
#include "aric/data.hpp"
#include "aric/errors.hpp"
#include "aric/graph.hpp"
#include "aric/metrics.hpp"
#include "aric/theory.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace aric::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Config file merging

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

// Flat key=value lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("config file line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return entries;
}

bool flag_given(const std::vector<std::string>& tokens, const std::string& flag) {
  return std::any_of(tokens.begin(), tokens.end(),
                     [&](const std::string& t) { return t == flag || t.rfind(flag + "=", 0) == 0; });
}

// Inserts file settings right after the subcommand name so that explicit flags win.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!path || args.empty()) return args;
  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config_file(*path)) {
    const std::string flag = "--" + key;
    if (flag_given(args, flag)) continue;
    injected.push_back(flag);
    if (key == "synth") {
      for (auto& t : split_ws(value)) injected.push_back(t);
    } else {
      injected.push_back(value);
    }
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

// ---------------------------------------------------------------------------
// Shared parsing helpers

double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

SynthSpec parse_synth_spec(const std::vector<std::string>& tokens, std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  for (const auto& token : tokens) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ConfigError("synth setting '" + token + "' is not key=value");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "ir") {
      spec.imbalance_ratio = parse_number(key, value);
    } else if (key == "n") {
      spec.n_total = parse_count(key, value);
    } else if (key == "dim") {
      spec.dim = parse_count(key, value);
    } else if (key == "sep") {
      spec.class_separation = parse_number(key, value);
    } else if (key == "seed") {
      spec.seed = parse_count(key, value);
    } else {
      throw ConfigError("unknown synth key '" + key + "' (expected ir, n, dim, sep, seed)");
    }
  }
  spec.validate();
  return spec;
}

std::vector<std::size_t> parse_hidden(const std::string& arch) {
  if (arch == "shallow") return {64, 32, 32};
  if (arch == "deep") return {10, 8, 8, 6, 6, 6};
  std::vector<std::size_t> hidden;
  for (const auto& part : split_on(arch, ',')) {
    const std::size_t width = parse_count("gen-arch", part);
    if (width == 0) throw ConfigError("gen-arch widths must be positive");
    hidden.push_back(width);
  }
  if (hidden.empty()) throw ConfigError("gen-arch must be deep, shallow or a comma-separated width list");
  return hidden;
}

json synth_json(const SynthSpec& s) {
  return {{"ir", s.imbalance_ratio}, {"n", s.n_total}, {"dim", s.dim}, {"sep", s.class_separation}, {"seed", s.seed}};
}

json train_config_json(const TrainConfig& c) {
  return {{"batch", c.batch_size},   {"pretrain_iters", c.pretrain_iters},
          {"train_iters", c.train_iters}, {"eta_d", c.eta_d},
          {"eta_g", c.eta_g},        {"gamma", c.effective_gamma()},
          {"lambda", c.lambda},      {"seed", c.seed}};
}

json trace_summary(const TrainTrace& t) {
  json s = {{"pretrain_iters", t.pretrain_d_loss.size()}, {"adversarial_iters", t.adversarial.size()}};
  if (!t.pretrain_d_loss.empty()) s["pretrain_final_d_loss"] = t.pretrain_d_loss.back();
  if (!t.adversarial.empty()) {
    const auto& last = t.adversarial.back();
    s["final_d_loss"] = last.d_loss;
    s["final_g_loss"] = last.g_loss;
    s["final_weight_entropy"] = last.weight_entropy;
    s["final_max_weight"] = last.max_weight;
    s["final_min_weight"] = last.min_weight;
  }
  return s;
}

void write_trace_csv(const TrainTrace& t, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "phase,iteration,d_loss,g_loss,weight_entropy,max_weight,min_weight\n";
  for (std::size_t i = 0; i < t.pretrain_d_loss.size(); ++i) {
    out << "pretrain," << i + 1 << ',' << format_double(t.pretrain_d_loss[i]) << ",,,,\n";
  }
  for (std::size_t i = 0; i < t.adversarial.size(); ++i) {
    const auto& r = t.adversarial[i];
    out << "adversarial," << i + 1 << ',' << format_double(r.d_loss) << ',' << format_double(r.g_loss) << ','
        << format_double(r.weight_entropy) << ',' << format_double(r.max_weight) << ','
        << format_double(r.min_weight) << '\n';
  }
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + out + "': " + ec.message());
  return dir;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

json evaluate(const Discriminator& disc, const LabeledDataset& data) {
  const Vector p = predict_proba(disc, data.features);
  return to_json(evaluate_binary(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), data.labels));
}

json model_report(const Discriminator& disc, const DataSplits& splits) {
  return {{"val", evaluate(disc, splits.val)}, {"test", evaluate(disc, splits.test)}};
}

// ---------------------------------------------------------------------------
// Subcommands

struct TrainFlags {
  std::string data;
  std::string label_col = "label";
  std::string pos_label = "1";
  std::vector<std::string> synth;
  std::uint64_t seed = 0;
  TrainConfig train;
  std::optional<double> gamma;
  std::string gen_arch = "shallow";
  std::string out = "aric_out";
};

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  if (f.data.empty() == f.synth.empty()) {
    err << "train: exactly one of --data or --synth is required\n";
    return kExitUsage;
  }
  TrainConfig config = f.train;
  config.seed = f.seed;
  config.gamma = f.gamma;
  config.validate();
  const auto hidden = parse_hidden(f.gen_arch);

  json source;
  LabeledDataset data;
  if (!f.synth.empty()) {
    const SynthSpec spec = parse_synth_spec(f.synth, f.seed);
    data = synth_gaussian_imbalanced(spec);
    source = {{"synth", synth_json(spec)}};
  } else {
    data = load_csv(f.data, f.label_col, f.pos_label, &err);
    source = {{"path", f.data}, {"label_col", f.label_col}, {"pos_label", f.pos_label}};
  }

  SplitSpec split_spec;
  split_spec.seed = f.seed;
  DataSplits splits = split(data, split_spec);
  standardize(splits);

  const auto disc_arch = logistic_architecture(data.dim());
  const auto gen_arch = make_architecture(data.dim(), hidden, Activation::relu, 1, Activation::identity);

  const TrainResult aric = train(config, splits.train, disc_arch, gen_arch);
  const Discriminator pretrain_only = train_pretrain_only(config, splits.train, disc_arch);
  const Discriminator under =
      train_on_pool(config, resample(splits.train, Resampling::undersample, f.seed), disc_arch);
  const Discriminator over = train_on_pool(config, resample(splits.train, Resampling::oversample, f.seed), disc_arch);

  const fs::path dir = prepare_out_dir(f.out);
  const fs::path report_path = dir / "report.json";
  const fs::path trace_path = dir / "trace.csv";
  write_trace_csv(aric.trace, trace_path);

  json config_json = train_config_json(config);
  config_json["gen_arch"] = f.gen_arch;
  json report = {
      {"command", "train"},
      {"config", config_json},
      {"data",
       {{"source", source},
        {"n", data.size()},
        {"dim", data.dim()},
        {"positives", data.positive_count()},
        {"negatives", data.negative_count()},
        {"train", splits.train.size()},
        {"val", splits.val.size()},
        {"test", splits.test.size()}}},
      {"models",
       {{"aric", model_report(aric.disc, splits)},
        {"pretrain_only", model_report(pretrain_only, splits)},
        {"undersample", model_report(under, splits)},
        {"oversample", model_report(over, splits)}}},
      {"trace", trace_summary(aric.trace)},
      {"artifacts", {{"report", report_path.string()}, {"trace_csv", trace_path.string()}}},
  };
  report[kTimingKey] = {{"wall_seconds", seconds_since(start)}};
  write_json(report, report_path);

  for (const char* name : {"aric", "pretrain_only", "undersample", "oversample"}) {
    const auto& t = report["models"][name]["test"];
    out << name << " test auc " << t["auc"].get<double>() << " f1 " << t["f1"].get<double>() << '\n';
  }
  out << "report " << report_path.string() << '\n';
  return kExitOk;
}

struct GraphFlags {
  std::string edges;
  std::string labels;
  std::size_t dim = 20;
  double test_frac = 0.1;
  std::uint64_t seed = 0;
  graph::GraphTrainConfig graph = graph::GraphTrainConfig::defaults();
  std::string gen_arch = "shallow";
  std::string out = "aric_graph_out";
};

int cmd_graph(const GraphFlags& f, std::ostream& out, std::ostream& err) {
  (void)err;
  const auto start = Clock::now();
  graph::GraphTrainConfig config = f.graph;
  config.dim = f.dim;
  config.train.seed = f.seed;
  config.generator_hidden = parse_hidden(f.gen_arch);
  config.train.validate();
  if (!(f.test_frac > 0.0 && f.test_frac < 1.0)) throw ConfigError("--test-frac must lie in (0, 1)");

  const graph::Graph g = graph::load_edge_list(f.edges);
  std::optional<graph::NodeLabels> labels;
  if (!f.labels.empty()) labels = graph::load_node_labels(f.labels, g.n_nodes());

  const graph::EdgeSplit split = graph::split_edges(g, f.test_frac, f.seed);
  const graph::GraphTrainResult result = graph::train_graph(config, g, split);
  const MetricsReport link = graph::link_predict_eval(result.disc, split.test_pos, split.test_neg);

  const fs::path dir = prepare_out_dir(f.out);
  const fs::path report_path = dir / "report.json";
  const fs::path emb_path = dir / "embeddings.csv";
  const fs::path trace_path = dir / "trace.csv";
  graph::write_embeddings_csv(result.disc.embeddings, emb_path);
  write_trace_csv(result.trace, trace_path);

  json config_json = train_config_json(config.train);
  config_json["dim"] = config.dim;
  config_json["test_frac"] = f.test_frac;
  config_json["gen_arch"] = f.gen_arch;
  json report = {
      {"command", "graph"},
      {"config", config_json},
      {"graph",
       {{"path", f.edges},
        {"nodes", g.n_nodes()},
        {"edges", g.edge_count()},
        {"train_edges", split.train.size()},
        {"test_pos", split.test_pos.size()},
        {"test_neg", split.test_neg.size()}}},
      {"link_prediction", to_json(link)},
      {"trace", trace_summary(result.trace)},
      {"artifacts",
       {{"report", report_path.string()}, {"embeddings_csv", emb_path.string()}, {"trace_csv", trace_path.string()}}},
  };
  if (labels) {
    graph::NodeClassificationConfig nc;
    for (auto& s : nc.seeds) s += f.seed;
    const auto r = graph::node_classification_eval(result.disc.embeddings, *labels, nc);
    report["node_classification"] = {{"labels_path", f.labels},
                                     {"shuffles", nc.seeds.size()},
                                     {"train_frac", nc.train_frac},
                                     {"micro_f1", r.micro_f1},
                                     {"macro_f1", r.macro_f1},
                                     {"micro_f1_mean", r.micro_mean},
                                     {"micro_f1_std", r.micro_std},
                                     {"macro_f1_mean", r.macro_mean},
                                     {"macro_f1_std", r.macro_std}};
    report["artifacts"]["labels"] = f.labels;
  }
  report[kTimingKey] = {{"wall_seconds", seconds_since(start)}};
  write_json(report, report_path);

  out << "link accuracy " << link.accuracy << " macro_f1 " << link.macro_f1 << " auc " << link.auc << '\n';
  if (labels) {
    out << "node micro_f1 " << report["node_classification"]["micro_f1_mean"].get<double>() << " macro_f1 "
        << report["node_classification"]["macro_f1_mean"].get<double>() << '\n';
  }
  out << "report " << report_path.string() << '\n';
  return kExitOk;
}

struct TheoryFlags {
  std::optional<std::size_t> k;
  double lambda = 0.0;
  std::string p_plus = "random";
  std::uint64_t seed = 0;
  theory::TheoryConfig config;
  std::optional<double> step;
};

int cmd_theory(const TheoryFlags& f, std::ostream& out, std::ostream& err) {
  (void)err;
  if (!(f.lambda >= 0.0)) throw ConfigError("--lambda must be non-negative");
  std::vector<double> probs;
  if (f.p_plus == "uniform" || f.p_plus == "random") {
    const std::size_t k = f.k.value_or(3);
    if (k < 2) throw ConfigError("--k must be at least 2");
    if (f.p_plus == "uniform") {
      probs = theory::DiscreteDistribution::uniform(k).probs();
    } else {
      auto rng = derive_rng(f.seed, 7);
      probs = theory::DiscreteDistribution::random(k, rng).probs();
    }
  } else {
    for (const auto& part : split_on(f.p_plus, ',')) probs.push_back(parse_number("p-plus", part));
    if (probs.size() < 2) throw ConfigError("--p-plus needs at least 2 entries");
    if (f.k && *f.k != probs.size()) {
      throw ConfigError("--k " + std::to_string(*f.k) + " disagrees with " + std::to_string(probs.size()) +
                        " --p-plus entries");
    }
  }
  const theory::DiscreteDistribution p_plus(probs, 1e-9);
  theory::TheoryConfig config = f.config;
  config.lambda = f.lambda;
  config.step = f.step;
  const auto min = theory::minimize_generator(p_plus, config);
  const json record = {{"lambda", f.lambda},
                       {"k", p_plus.size()},
                       {"p_plus", p_plus.probs()},
                       {"minimizer", min.p},
                       {"residual", theory::theorem1_residual(min.p, p_plus, f.lambda)},
                       {"converged", min.converged},
                       {"iterations", min.iterations},
                       {"objective", min.objective}};
  out << record.dump() << '\n';
  return kExitOk;
}

struct SynthFlags {
  std::vector<std::string> spec;
  std::uint64_t seed = 0;
  std::string out = "synth.csv";
};

int cmd_synth(const SynthFlags& f, std::ostream& out, std::ostream& err) {
  (void)err;
  const SynthSpec spec = parse_synth_spec(f.spec, f.seed);
  const LabeledDataset data = synth_gaussian_imbalanced(spec);
  const fs::path path(f.out);
  if (path.has_parent_path()) prepare_out_dir(path.parent_path().string());
  write_csv(data, path);
  const json record = {{"command", "synth"},
                       {"spec", synth_json(spec)},
                       {"positives", data.positive_count()},
                       {"negatives", data.negative_count()},
                       {"path", f.out}};
  out << record.dump() << '\n';
  return kExitOk;
}

void add_training_flags(CLI::App* sub, TrainConfig& c, std::optional<double>& gamma, std::string& gen_arch,
                        std::uint64_t& seed, std::string& out) {
  sub->add_option("--seed", seed, "Seed for splits, initialization and batches")->capture_default_str();
  sub->add_option("--batch", c.batch_size, "Mini-batch size m per class")->capture_default_str();
  sub->add_option("--pretrain-iters", c.pretrain_iters, "Discriminator pretraining iterations")
      ->capture_default_str();
  sub->add_option("--train-iters", c.train_iters, "Adversarial iterations")->capture_default_str();
  sub->add_option("--eta-d", c.eta_d, "Discriminator learning rate")->capture_default_str();
  sub->add_option("--eta-g", c.eta_g, "Generator learning rate")->capture_default_str();
  sub->add_option("--gamma", gamma, "Weight of the re-weighted negative term (default 1/m)");
  sub->add_option("--lambda", c.lambda, "Entropy regularization weight")->capture_default_str();
  sub->add_option("--gen-arch", gen_arch, "Generator hidden layers: deep, shallow or widths like 64,32,32")
      ->capture_default_str();
  sub->add_option("--out", out, "Output directory")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  try {
    args = merge_config(raw_args);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App app{"Adversarial re-weighting for imbalanced classification"};
  app.name("aric");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "Train the adversarial classifier and baselines on a dataset");
  train->add_option("--data", train_flags.data, "CSV dataset with a header row");
  train->add_option("--label-col", train_flags.label_col, "Name of the label column")->capture_default_str();
  train->add_option("--pos-label", train_flags.pos_label, "Label token of the minority class")
      ->capture_default_str();
  train->add_option("--synth", train_flags.synth, "Synthetic data instead of --data: ir=.. n=.. dim=.. sep=..");
  add_training_flags(train, train_flags.train, train_flags.gamma, train_flags.gen_arch, train_flags.seed,
                     train_flags.out);

  GraphFlags graph_flags;
  auto* graph_cmd = app.add_subcommand("graph", "Link prediction with adversarially re-weighted negative pairs");
  graph_cmd->add_option("--edges", graph_flags.edges, "Edge list, one 'u v' pair per line")->required();
  graph_cmd->add_option("--labels", graph_flags.labels, "Node labels, 'node label [label ...]' per line");
  graph_cmd->add_option("--dim", graph_flags.dim, "Embedding dimension")->capture_default_str();
  graph_cmd->add_option("--test-frac", graph_flags.test_frac, "Fraction of edges held out")->capture_default_str();
  add_training_flags(graph_cmd, graph_flags.graph.train, graph_flags.graph.train.gamma, graph_flags.gen_arch,
                     graph_flags.seed, graph_flags.out);

  TheoryFlags theory_flags;
  auto* theory_cmd = app.add_subcommand("theory", "Minimize the discrete generator objective and check stationarity");
  theory_cmd->add_option("--k", theory_flags.k, "Support size (default 3)");
  theory_cmd->add_option("--lambda", theory_flags.lambda, "Entropy regularization weight")->capture_default_str();
  theory_cmd->add_option("--p-plus", theory_flags.p_plus, "uniform, random, or comma-separated probabilities")
      ->capture_default_str();
  theory_cmd->add_option("--seed", theory_flags.seed, "Seed for a random p+")->capture_default_str();
  theory_cmd->add_option("--max-iters", theory_flags.config.max_iters, "Iteration cap")->capture_default_str();
  theory_cmd->add_option("--step", theory_flags.step, "Step size (default 1/(1+lambda))");
  theory_cmd->add_option("--tol", theory_flags.config.tol, "Stop when no coordinate moves more than this")
      ->capture_default_str();

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "Write an imbalanced two-Gaussian dataset as CSV");
  synth->add_option("spec", synth_flags.spec, "Settings ir=.. n=.. dim=.. sep=.. [seed=..]");
  synth->add_option("--seed", synth_flags.seed, "Generation seed")->capture_default_str();
  synth->add_option("--out", synth_flags.out, "Output CSV path")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_flags, out, err);
    if (*graph_cmd) return cmd_graph(graph_flags, out, err);
    if (*theory_cmd) return cmd_theory(theory_flags, out, err);
    return cmd_synth(synth_flags, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace aric::cli
