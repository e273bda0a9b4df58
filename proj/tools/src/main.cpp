// msm: synthesize graphs, run metapath walks, train embeddings, evaluate
// link prediction, and embed unseen nodes. One subcommand per stage so the
// pipeline can be scripted apart.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msm/eval.hpp"
#include "msm/io.hpp"
#include "msm/metapath.hpp"
#include "msm/model.hpp"
#include "msm/synthgen.hpp"
#include "msm/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::string> read_schema_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw msm::DataError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t i = line.find_first_not_of(" \t");
    if (i == std::string::npos || line[i] == '#') continue;
    out.push_back(line.substr(i));
  }
  return out;
}

std::vector<msm::MetapathSchema> parse_schemas(
    const std::vector<std::string>& texts,
    const msm::HeterogeneousGraph& graph) {
  if (texts.empty())
    throw msm::DataError(
        "no metapath schemas given (use --schema/--schemas or config "
        "`schema =` lines)");
  std::vector<msm::MetapathSchema> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(msm::parse_schema(t, graph));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void add_digest(nlohmann::json& inputs, const fs::path& path) {
  if (fs::exists(path)) inputs[path.filename().string()] = msm::file_digest(path);
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string preset = "default";
  std::uint64_t seed = 1;
  double noise = -1.0;
  std::size_t communities = 0;
  fs::path out;
};

int run_synth(const SynthArgs& args) {
  msm::SynthSpec spec = args.preset == "balanced"     ? msm::balanced_preset()
                        : args.preset == "unbalanced" ? msm::unbalanced_preset()
                                                      : msm::default_spec();
  spec.seed = args.seed;
  if (args.noise >= 0.0) spec.noise_scale = args.noise;
  if (args.communities > 0) spec.communities = args.communities;

  msm::SynthResult result = msm::generate(spec);
  std::vector<std::string> labels;
  labels.reserve(result.community.size());
  for (std::size_t c : result.community)
    labels.push_back("c" + std::to_string(c));
  msm::save_graph_dir(args.out, result.graph, &labels);

  const msm::GraphStats stats = result.graph.stats();
  std::cout << "wrote " << args.out.string() << ": " << stats.total_nodes
            << " nodes, " << stats.total_edges << " edges, "
            << stats.nodes_per_type.size() << " node types, "
            << stats.edges_per_type.size() << " edge types\n";
  return 0;
}

// --- split ------------------------------------------------------------------

struct SplitArgs {
  fs::path graph_dir;
  fs::path out;
  double valid_frac = 0.05;
  double test_frac = 0.10;
  std::uint64_t seed = 1;
};

int run_split(const SplitArgs& args) {
  msm::GraphDirData data = msm::load_graph_dir(args.graph_dir);
  msm::SplitResult result =
      msm::split_edges(data.graph, args.valid_frac, args.test_frac, args.seed);
  msm::save_split(args.out, result, data.graph);
  for (msm::EdgeTypeId r = 0; r < data.graph.num_edge_types(); ++r)
    std::cout << data.graph.edge_type_registry().name(r) << ": "
              << result.split.train_edges[r].size() << " train, "
              << result.split.validation[r].positives.size() << " valid, "
              << result.split.test[r].positives.size() << " test\n";
  return 0;
}

// --- walk -------------------------------------------------------------------

struct WalkArgs {
  fs::path graph_dir;
  fs::path config;
  fs::path schemas_file;
  std::vector<std::string> schema_flags;
  fs::path out;
};

int run_walk(const WalkArgs& args, const CLI::App* cmd) {
  msm::RunConfig config;
  if (!args.config.empty()) config = msm::read_config(args.config);
  if (cmd->count("--walks-per-node"))
    config.train.walks_per_node = cmd->get_option("--walks-per-node")->as<std::size_t>();
  if (cmd->count("--max-walk-length"))
    config.train.max_walk_length = cmd->get_option("--max-walk-length")->as<std::size_t>();
  if (cmd->count("--seed"))
    config.train.seed = cmd->get_option("--seed")->as<std::uint64_t>();

  msm::GraphDirData data = msm::load_graph_dir(args.graph_dir);
  std::vector<std::string> texts = config.schemas;
  if (!args.schemas_file.empty()) {
    auto more = read_schema_file(args.schemas_file);
    texts.insert(texts.end(), more.begin(), more.end());
  }
  texts.insert(texts.end(), args.schema_flags.begin(),
               args.schema_flags.end());
  auto schemas = parse_schemas(texts, data.graph);
  msm::WalkCorpus corpus =
      msm::generate_corpus(data.graph, schemas, config.train.walks_per_node,
                           config.train.max_walk_length, config.train.seed);
  msm::write_corpus(args.out, corpus, data.graph);
  std::cout << "wrote " << corpus.walks.size() << " walks to "
            << args.out.string() << '\n';
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  fs::path graph_dir;
  fs::path config;
  fs::path schemas_file;
  std::vector<std::string> schema_flags;
  fs::path out;
};

int run_train(const TrainArgs& args, const CLI::App* cmd) {
  msm::RunConfig config;
  if (!args.config.empty()) config = msm::read_config(args.config);
  msm::TrainConfig& t = config.train;

  auto u64 = [&](const char* flag) { return cmd->get_option(flag)->as<std::uint64_t>(); };
  auto f64 = [&](const char* flag) { return cmd->get_option(flag)->as<double>(); };
  auto str = [&](const char* flag) { return cmd->get_option(flag)->as<std::string>(); };

  if (cmd->count("--model")) {
    const std::string m = str("--model");
    t.model = m == "i" ? msm::ModelKind::kInductive : msm::ModelKind::kTransductive;
  }
  if (cmd->count("--epochs")) t.epochs = u64("--epochs");
  if (cmd->count("--dim")) t.dim = u64("--dim");
  if (cmd->count("--levels")) t.levels = u64("--levels");
  if (cmd->count("--window")) t.window = u64("--window");
  if (cmd->count("--negatives")) t.negatives = u64("--negatives");
  if (cmd->count("--walks-per-node")) t.walks_per_node = u64("--walks-per-node");
  if (cmd->count("--seed")) t.seed = u64("--seed");
  if (cmd->count("--threads")) t.threads = u64("--threads");
  if (cmd->count("--learning-rate")) t.learning_rate = f64("--learning-rate");
  if (cmd->count("--alpha")) t.alpha = f64("--alpha");
  if (cmd->count("--beta")) t.beta = f64("--beta");
  if (cmd->count("--activation"))
    t.activation = str("--activation") == "identity" ? msm::Activation::kIdentity
                                                     : msm::Activation::kTanh;
  if (cmd->count("--transform"))
    t.transform_kind = str("--transform") == "mlp" ? msm::TransformKind::kMlp
                                                   : msm::TransformKind::kAffine;
  if (cmd->count("--deterministic")) t.deterministic = true;
  if (cmd->count("--no-deterministic")) t.deterministic = false;

  msm::GraphDirData data = msm::load_graph_dir(args.graph_dir);
  std::vector<std::string> texts = config.schemas;
  if (!args.schemas_file.empty()) {
    auto more = read_schema_file(args.schemas_file);
    texts.insert(texts.end(), more.begin(), more.end());
  }
  texts.insert(texts.end(), args.schema_flags.begin(),
               args.schema_flags.end());
  config.schemas = texts;
  auto schemas = parse_schemas(texts, data.graph);

  fs::create_directories(args.out);
  msm::TrainOutcome outcome;
  const auto start = std::chrono::steady_clock::now();
  const fs::path ckpt = args.out / "model.ckpt";
  if (t.model == msm::ModelKind::kTransductive) {
    auto params = msm::train_transductive(data.graph, schemas, t, &outcome);
    msm::save_checkpoint(ckpt, params, data.graph);
  } else {
    auto params = msm::train_inductive(data.graph, schemas, t, &outcome);
    msm::save_checkpoint(ckpt, params, data.graph);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  msm::write_config(args.out / "config.used", config);
  {
    std::ofstream trace(args.out / "loss_trace.csv");
    trace << "epoch,mean_loss,learning_rate\n";
    for (std::size_t e = 0; e < outcome.epoch_mean_loss.size(); ++e)
      trace << e << ',' << fmt(outcome.epoch_mean_loss[e]) << ','
            << fmt(outcome.epoch_learning_rate[e]) << '\n';
  }
  {
    nlohmann::json manifest;
    manifest["tool"] = "msm train";
    manifest["version"] = kVersion;
    manifest["model"] = t.model == msm::ModelKind::kTransductive ? "t" : "i";
    manifest["seed"] = t.seed;
    manifest["samples_per_epoch"] = outcome.samples_per_epoch;
    manifest["epoch_mean_loss"] = outcome.epoch_mean_loss;
    manifest["epoch_learning_rate"] = outcome.epoch_learning_rate;
    manifest["schemas"] = texts;
    nlohmann::json inputs = nlohmann::json::object();
    add_digest(inputs, args.graph_dir / "nodes.tsv");
    add_digest(inputs, args.graph_dir / "edges.tsv");
    add_digest(inputs, args.graph_dir / "attributes.tsv");
    if (!args.config.empty()) add_digest(inputs, args.config);
    if (!args.schemas_file.empty()) add_digest(inputs, args.schemas_file);
    manifest["inputs"] = inputs;
    manifest["checkpoint"] = msm::file_digest(ckpt);
    // Wall-clock timings would make otherwise identical runs differ.
    if (t.deterministic)
      manifest["timing"] = "omitted (deterministic mode)";
    else
      manifest["timing"] = {{"train_seconds", seconds}};
    std::ofstream out(args.out / "run.json");
    out << manifest.dump(2) << '\n';
  }

  for (std::size_t e = 0; e < outcome.epoch_mean_loss.size(); ++e)
    std::cout << "epoch " << e << ": mean loss "
              << fmt(outcome.epoch_mean_loss[e]) << ", lr "
              << fmt(outcome.epoch_learning_rate[e]) << '\n';
  std::cout << "wrote " << ckpt.string() << '\n';
  return 0;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  fs::path graph_dir;
  fs::path checkpoint;
  fs::path out;
  bool json = false;
};

int run_eval(const EvalArgs& args) {
  msm::GraphDirData data = msm::load_graph_dir(args.graph_dir);
  msm::EvalSplit split = msm::load_split(args.graph_dir, data.graph);

  std::vector<Eigen::MatrixXd> embeddings;
  if (msm::peek_checkpoint_kind(args.checkpoint) ==
      msm::CheckpointKind::kTransductive) {
    auto params = msm::load_checkpoint_t(args.checkpoint, data.graph);
    embeddings = msm::all_overall_embeddings(data.graph, params);
  } else {
    auto params = msm::load_checkpoint_i(args.checkpoint, data.graph);
    embeddings = msm::all_overall_embeddings(data.graph, params);
  }

  msm::EvalReport report = msm::evaluate(data.graph, embeddings, split);
  msm::write_report_table(std::cout, report);
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    std::ofstream txt(args.out / "report.txt");
    msm::write_report_table(txt, report);
    std::ofstream csv(args.out / "report.csv");
    msm::write_report_csv(csv, report);
    if (args.json) {
      std::ofstream js(args.out / "report.json");
      msm::write_report_json(js, report);
    }
  }
  return 0;
}

// --- embed-unseen -----------------------------------------------------------

struct EmbedArgs {
  fs::path graph_dir;
  fs::path checkpoint;
  std::string node_type;
  std::string attrs;
  std::vector<std::string> edges;
  std::string edge_type;
  fs::path out;
};

int run_embed_unseen(const EmbedArgs& args) {
  msm::GraphDirData data = msm::load_graph_dir(args.graph_dir);
  if (msm::peek_checkpoint_kind(args.checkpoint) !=
      msm::CheckpointKind::kInductive)
    throw msm::DataError(
        "embed-unseen needs an inductive checkpoint; transductive models "
        "cannot embed nodes they were not trained on");
  msm::InductiveParams params =
      msm::load_checkpoint_i(args.checkpoint, data.graph);

  msm::UnseenNode node;
  const auto type_id = data.graph.node_type_registry().find(args.node_type);
  if (!type_id)
    throw msm::DataError("unknown node type '" + args.node_type + "'");
  node.node_type = *type_id;

  std::vector<double> values;
  std::string token;
  std::istringstream attr_stream(args.attrs);
  while (std::getline(attr_stream, token, ','))
    values.push_back(std::stod(token));
  node.attributes = Eigen::Map<Eigen::VectorXd>(
      values.data(), static_cast<Eigen::Index>(values.size()));

  for (const auto& spec : args.edges) {
    const std::size_t colon = spec.rfind(':');
    if (colon == std::string::npos)
      throw msm::DataError("--edge expects `node_name:edge_type`, got '" +
                           spec + "'");
    const std::string name = spec.substr(0, colon);
    const std::string etype = spec.substr(colon + 1);
    const auto neighbor = data.graph.find_node(name);
    if (!neighbor) throw msm::DataError("unknown node '" + name + "'");
    const auto r = data.graph.edge_type_registry().find(etype);
    if (!r) throw msm::DataError("unknown edge type '" + etype + "'");
    node.edges.emplace_back(*neighbor, static_cast<msm::EdgeTypeId>(*r));
  }

  const auto target = data.graph.edge_type_registry().find(args.edge_type);
  if (!target)
    throw msm::DataError("unknown edge type '" + args.edge_type + "'");

  const Eigen::VectorXd v = msm::embed_unseen(
      data.graph, params, node, static_cast<msm::EdgeTypeId>(*target));

  std::string line;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (k) line += ',';
    line += fmt(v[k]);
  }
  if (args.out.empty()) {
    std::cout << line << '\n';
  } else {
    std::ofstream out(args.out);
    out << line << '\n';
    std::cout << "wrote " << args.out.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-semantic embeddings over heterogeneous graphs"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a planted-community graph");
  synth->add_option("--preset", synth_args.preset, "default | balanced | unbalanced")
      ->check(CLI::IsMember({"default", "balanced", "unbalanced"}));
  synth->add_option("--seed", synth_args.seed, "generator seed");
  synth->add_option("--noise", synth_args.noise, "attribute noise scale");
  synth->add_option("--communities", synth_args.communities, "community count");
  synth->add_option("--out", synth_args.out, "output graph directory")->required();

  SplitArgs split_args;
  CLI::App* split = app.add_subcommand("split", "hold out edges for link prediction");
  split->add_option("--graph-dir", split_args.graph_dir, "input graph directory")->required();
  split->add_option("--out", split_args.out, "output split directory")->required();
  split->add_option("--valid-frac", split_args.valid_frac, "validation fraction per edge type");
  split->add_option("--test-frac", split_args.test_frac, "test fraction per edge type");
  split->add_option("--seed", split_args.seed, "split seed");

  WalkArgs walk_args;
  std::size_t walk_wpn = 10, walk_len = 11;
  std::uint64_t walk_seed = 1;
  CLI::App* walk = app.add_subcommand("walk", "generate a metapath walk corpus");
  walk->add_option("--graph-dir", walk_args.graph_dir, "input graph directory")->required();
  walk->add_option("--config", walk_args.config, "run configuration file");
  walk->add_option("--schemas", walk_args.schemas_file, "file with one schema per line");
  walk->add_option("--schema", walk_args.schema_flags, "schema text (repeatable)");
  walk->add_option("--walks-per-node", walk_wpn, "walks started per eligible node");
  walk->add_option("--max-walk-length", walk_len, "maximum nodes per walk");
  walk->add_option("--seed", walk_seed, "walk seed");
  walk->add_option("--out", walk_args.out, "output corpus file")->required();

  TrainArgs train_args;
  std::string train_model = "t", train_activation = "tanh", train_transform = "affine";
  std::uint64_t train_epochs = 3, train_dim = 200, train_levels = 2,
                train_window = 10, train_negatives = 5, train_wpn = 10,
                train_seed = 1, train_threads = 1;
  double train_lr = 0.01, train_alpha = 1.0, train_beta = 0.1;
  CLI::App* train = app.add_subcommand("train", "train embeddings on a graph directory");
  train->add_option("--graph-dir", train_args.graph_dir, "input graph directory")->required();
  train->add_option("--config", train_args.config, "run configuration file");
  train->add_option("--schemas", train_args.schemas_file, "file with one schema per line");
  train->add_option("--schema", train_args.schema_flags, "schema text (repeatable)");
  train->add_option("--out", train_args.out, "output directory")->required();
  train->add_option("--model", train_model, "t (transductive) | i (inductive)")
      ->check(CLI::IsMember({"t", "i"}));
  train->add_option("--epochs", train_epochs, "training epochs");
  train->add_option("--dim", train_dim, "embedding dimension");
  train->add_option("--levels", train_levels, "neighborhood aggregation depth");
  train->add_option("--window", train_window, "skip-gram window");
  train->add_option("--negatives", train_negatives, "negative samples per pair");
  train->add_option("--walks-per-node", train_wpn, "walks started per eligible node");
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--threads", train_threads, "worker threads (ignored when deterministic)");
  train->add_option("--learning-rate", train_lr, "initial learning rate");
  train->add_option("--alpha", train_alpha, "aggregation mix-in weight");
  train->add_option("--beta", train_beta, "attribute mix-in weight (inductive)");
  train->add_option("--activation", train_activation, "tanh | identity")
      ->check(CLI::IsMember({"tanh", "identity"}));
  train->add_option("--transform", train_transform, "affine | mlp")
      ->check(CLI::IsMember({"affine", "mlp"}));
  train->add_flag("--deterministic", "single-threaded, bit-reproducible run");
  train->add_flag("--no-deterministic", "allow multi-threaded updates");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "score link prediction on a split directory");
  eval->add_option("--graph-dir", eval_args.graph_dir, "split directory (graph + split.tsv)")->required();
  eval->add_option("--checkpoint", eval_args.checkpoint, "trained model checkpoint")->required();
  eval->add_option("--out", eval_args.out, "directory for report files");
  eval->add_flag("--json", eval_args.json, "also write report.json");

  EmbedArgs embed_args;
  CLI::App* embed = app.add_subcommand("embed-unseen", "embed a node the model never saw");
  embed->add_option("--graph-dir", embed_args.graph_dir, "training graph directory")->required();
  embed->add_option("--checkpoint", embed_args.checkpoint, "inductive checkpoint")->required();
  embed->add_option("--type", embed_args.node_type, "node type of the new node")->required();
  embed->add_option("--attrs", embed_args.attrs, "comma-separated attribute values")->required();
  embed->add_option("--edge", embed_args.edges, "`node_name:edge_type` link into the graph (repeatable)");
  embed->add_option("--edge-type", embed_args.edge_type, "edge type whose embedding space to use")->required();
  embed->add_option("--out", embed_args.out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (split->parsed()) return run_split(split_args);
    if (walk->parsed()) return run_walk(walk_args, walk);
    if (train->parsed()) return run_train(train_args, train);
    if (eval->parsed()) return run_eval(eval_args);
    if (embed->parsed()) return run_embed_unseen(embed_args);
  } catch (const msm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(msm::ErrorCode::kNumeric);
  }
  return 0;
}
