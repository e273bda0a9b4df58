#include "msm/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace msm {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

// --- line-oriented text helpers ---

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool skippable(const std::string& line) {
  for (char c : line)
    if (c != ' ' && c != '\t') return c == '#';
  return true;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail_at(const std::filesystem::path& path, std::size_t line,
                          const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double_at(const std::string& text,
                       const std::filesystem::path& path, std::size_t line,
                       const std::string& what) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    fail_at(path, line, "invalid number for " + what + ": '" + t + "'");
  return value;
}

std::uint64_t parse_u64_at(const std::string& text,
                           const std::filesystem::path& path, std::size_t line,
                           const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size())
    fail_at(path, line, "invalid integer for " + what + ": '" + t + "'");
  return value;
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream create_text(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot create " + path.string());
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

NodeId need_node(const HeterogeneousGraph& graph, const std::string& name,
                 const std::filesystem::path& path, std::size_t line) {
  const auto id = graph.find_node(name);
  if (!id) fail_at(path, line, "unknown node '" + name + "'");
  return *id;
}

EdgeTypeId need_edge_type(const HeterogeneousGraph& graph,
                          const std::string& name,
                          const std::filesystem::path& path,
                          std::size_t line) {
  const auto id = graph.edge_type_registry().find(name);
  if (!id) fail_at(path, line, "unknown edge type '" + name + "'");
  return static_cast<EdgeTypeId>(*id);
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph directories

GraphDirData load_graph_dir(const std::filesystem::path& dir) {
  GraphDirData data;
  HeterogeneousGraph& graph = data.graph;

  const auto nodes_path = dir / "nodes.tsv";
  {
    std::ifstream in = open_text(nodes_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_cr(line);
      if (skippable(line)) continue;
      const auto fields = split(line, '\t');
      if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
        fail_at(nodes_path, lineno, "expected `name<TAB>node_type`");
      graph.add_node(fields[0], fields[1]);
    }
  }

  const auto edges_path = dir / "edges.tsv";
  {
    std::ifstream in = open_text(edges_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_cr(line);
      if (skippable(line)) continue;
      const auto fields = split(line, '\t');
      if (fields.size() != 3)
        fail_at(edges_path, lineno, "expected `src<TAB>dst<TAB>edge_type`");
      const NodeId u = need_node(graph, fields[0], edges_path, lineno);
      const NodeId v = need_node(graph, fields[1], edges_path, lineno);
      graph.add_edge(u, v, graph.register_edge_type(fields[2]));
    }
  }

  const auto attrs_path = dir / "attributes.tsv";
  if (std::filesystem::exists(attrs_path)) {
    std::ifstream in = open_text(attrs_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_cr(line);
      if (skippable(line)) continue;
      const auto fields = split(line, '\t');
      if (fields.size() != 2)
        fail_at(attrs_path, lineno, "expected `name<TAB>v1,v2,...`");
      const NodeId u = need_node(graph, fields[0], attrs_path, lineno);
      const auto values = split(fields[1], ',');
      std::vector<double> attrs;
      attrs.reserve(values.size());
      for (const auto& v : values)
        attrs.push_back(parse_double_at(v, attrs_path, lineno, "attribute"));
      graph.set_attributes(u, attrs);
    }
  }

  const auto labels_path = dir / "labels.tsv";
  if (std::filesystem::exists(labels_path)) {
    data.labels.assign(graph.num_nodes(), "");
    std::ifstream in = open_text(labels_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_cr(line);
      if (skippable(line)) continue;
      const auto fields = split(line, '\t');
      if (fields.size() != 2)
        fail_at(labels_path, lineno, "expected `name<TAB>label`");
      data.labels[need_node(graph, fields[0], labels_path, lineno)] =
          fields[1];
    }
  }

  graph.freeze();
  return data;
}

void save_graph_dir(const std::filesystem::path& dir,
                    const HeterogeneousGraph& graph,
                    const std::vector<std::string>* labels) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out = create_text(dir / "nodes.tsv");
    const auto& types = graph.node_type_registry();
    for (NodeId i = 0; i < graph.num_nodes(); ++i)
      out << graph.node_name(i) << '\t' << types.name(graph.node_type(i))
          << '\n';
  }
  {
    std::ofstream out = create_text(dir / "edges.tsv");
    const auto& types = graph.edge_type_registry();
    for (EdgeTypeId r = 0; r < graph.num_edge_types(); ++r)
      for (const auto& [u, v] : graph.edges(r))
        out << graph.node_name(u) << '\t' << graph.node_name(v) << '\t'
            << types.name(r) << '\n';
  }
  bool any_attrs = false;
  for (NodeId i = 0; i < graph.num_nodes() && !any_attrs; ++i)
    any_attrs = graph.has_attributes(i);
  if (any_attrs) {
    std::ofstream out = create_text(dir / "attributes.tsv");
    for (NodeId i = 0; i < graph.num_nodes(); ++i) {
      if (!graph.has_attributes(i)) continue;
      const auto& attrs = graph.attributes(i);
      std::vector<std::string> parts;
      parts.reserve(attrs.size());
      for (double v : attrs) parts.push_back(format_double(v));
      out << graph.node_name(i) << '\t' << join(parts, ',') << '\n';
    }
  }
  if (labels && !labels->empty()) {
    std::ofstream out = create_text(dir / "labels.tsv");
    for (NodeId i = 0; i < graph.num_nodes(); ++i)
      out << graph.node_name(i) << '\t' << (*labels)[i] << '\n';
  }
}

// ---------------------------------------------------------------------------
// Amazon reviews

namespace {

struct ReviewFile {
  std::vector<std::pair<std::string, std::string>> pairs;  // first-seen order
  std::vector<int> best_score;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t accepted = 0;
};

void read_reviews(const std::filesystem::path& path, ReviewFile& file,
                  AmazonLoadStats& stats) {
  std::ifstream in = open_text(path);
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (skippable(line)) continue;
    const auto fields = split(line, ',');
    if (fields.size() < 3 || fields[0].empty() || fields[1].empty()) {
      ++stats.malformed;
      continue;
    }
    const std::string score_text = trim(fields[2]);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(
        score_text.data(), score_text.data() + score_text.size(), value);
    if (ec != std::errc() || ptr != score_text.data() + score_text.size() ||
        value != std::floor(value)) {
      ++stats.malformed;
      continue;
    }
    const int score = static_cast<int>(value);
    if (score < 1 || score > 5) {
      ++stats.out_of_range;
      continue;
    }
    ++file.accepted;
    const std::string key = fields[0] + '\t' + fields[1];
    auto [it, inserted] = file.index.try_emplace(key, file.pairs.size());
    if (inserted) {
      file.pairs.emplace_back(fields[0], fields[1]);
      file.best_score.push_back(score);
    } else {
      ++stats.duplicates;
      file.best_score[it->second] = std::max(file.best_score[it->second], score);
    }
  }
}

}  // namespace

HeterogeneousGraph load_amazon(const std::filesystem::path& movie_reviews,
                               const std::filesystem::path& book_reviews,
                               AmazonLoadStats* stats) {
  AmazonLoadStats local;
  ReviewFile movies, books;
  read_reviews(movie_reviews, movies, local);
  read_reviews(book_reviews, books, local);
  local.movie_reviews = movies.accepted;
  local.book_reviews = books.accepted;

  HeterogeneousGraph graph;
  // Fixed registry order regardless of which scores occur.
  const char* um_names[3] = {"dislike_um", "like_um", "very_like_um"};
  const char* ub_names[3] = {"dislike_ub", "like_ub", "very_like_ub"};
  EdgeTypeId um[3], ub[3];
  for (int b = 0; b < 3; ++b) um[b] = graph.register_edge_type(um_names[b]);
  for (int b = 0; b < 3; ++b) ub[b] = graph.register_edge_type(ub_names[b]);

  auto bin_of = [](int score) { return score <= 2 ? 0 : (score == 5 ? 2 : 1); };

  auto add_file = [&](const ReviewFile& file, const char* item_prefix,
                      const char* item_type, const EdgeTypeId* bins) {
    for (std::size_t i = 0; i < file.pairs.size(); ++i) {
      const auto& [user, item] = file.pairs[i];
      const NodeId u = graph.add_node("u:" + user, "user");
      const NodeId v = graph.add_node(item_prefix + item, item_type);
      graph.add_edge(u, v, bins[bin_of(file.best_score[i])]);
    }
  };
  add_file(movies, "m:", "movie", um);
  add_file(books, "b:", "book", ub);

  graph.freeze();
  if (stats) *stats = local;
  return graph;
}

// ---------------------------------------------------------------------------
// Run configuration

namespace {

const char* activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "identity";
}

const char* model_name(ModelKind k) {
  return k == ModelKind::kTransductive ? "t" : "i";
}

const char* transform_name(TransformKind k) {
  return k == TransformKind::kAffine ? "affine" : "mlp";
}

}  // namespace

RunConfig read_config(const std::filesystem::path& path) {
  RunConfig config;
  std::ifstream in = open_text(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (skippable(line)) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail_at(path, lineno, "expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    TrainConfig& t = config.train;

    auto as_u64 = [&] { return parse_u64_at(value, path, lineno, "'" + key + "'"); };
    auto as_f64 = [&] { return parse_double_at(value, path, lineno, "'" + key + "'"); };

    if (key == "schema") {
      config.schemas.push_back(value);
    } else if (key == "window") {
      t.window = as_u64();
    } else if (key == "negatives") {
      t.negatives = as_u64();
    } else if (key == "learning_rate") {
      t.learning_rate = as_f64();
    } else if (key == "min_learning_rate") {
      t.min_learning_rate = as_f64();
    } else if (key == "epochs") {
      t.epochs = as_u64();
    } else if (key == "batch_size") {
      t.batch_size = as_u64();
    } else if (key == "walks_per_node") {
      t.walks_per_node = as_u64();
    } else if (key == "max_walk_length") {
      t.max_walk_length = as_u64();
    } else if (key == "dim") {
      t.dim = as_u64();
    } else if (key == "edge_dim") {
      t.edge_dim = as_u64();
    } else if (key == "attn_dim") {
      t.attn_dim = as_u64();
    } else if (key == "levels") {
      t.levels = as_u64();
    } else if (key == "alpha") {
      t.alpha = as_f64();
    } else if (key == "beta") {
      t.beta = as_f64();
    } else if (key == "activation") {
      if (value == "tanh") t.activation = Activation::kTanh;
      else if (value == "identity") t.activation = Activation::kIdentity;
      else fail_at(path, lineno, "activation must be `tanh` or `identity`");
    } else if (key == "seed") {
      t.seed = as_u64();
    } else if (key == "model") {
      if (value == "t") t.model = ModelKind::kTransductive;
      else if (value == "i") t.model = ModelKind::kInductive;
      else fail_at(path, lineno, "model must be `t` or `i`");
    } else if (key == "neg_exponent") {
      t.neg_exponent = as_f64();
    } else if (key == "neighbor_cap") {
      t.neighbor_cap = as_u64();
    } else if (key == "transform") {
      if (value == "affine") t.transform_kind = TransformKind::kAffine;
      else if (value == "mlp") t.transform_kind = TransformKind::kMlp;
      else fail_at(path, lineno, "transform must be `affine` or `mlp`");
    } else if (key == "mlp_hidden") {
      t.mlp_hidden = as_u64();
    } else if (key == "threads") {
      t.threads = as_u64();
    } else if (key == "deterministic") {
      if (value == "true" || value == "1") t.deterministic = true;
      else if (value == "false" || value == "0") t.deterministic = false;
      else fail_at(path, lineno, "deterministic must be true/false");
    } else if (key == "valid_frac") {
      config.valid_frac = as_f64();
    } else if (key == "test_frac") {
      config.test_frac = as_f64();
    } else {
      fail_at(path, lineno, "unknown key '" + key + "'");
    }
  }
  return config;
}

void write_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out = create_text(path);
  const TrainConfig& t = config.train;
  out << "window = " << t.window << '\n'
      << "negatives = " << t.negatives << '\n'
      << "learning_rate = " << format_double(t.learning_rate) << '\n'
      << "min_learning_rate = " << format_double(t.min_learning_rate) << '\n'
      << "epochs = " << t.epochs << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "walks_per_node = " << t.walks_per_node << '\n'
      << "max_walk_length = " << t.max_walk_length << '\n'
      << "dim = " << t.dim << '\n'
      << "edge_dim = " << t.edge_dim << '\n'
      << "attn_dim = " << t.attn_dim << '\n'
      << "levels = " << t.levels << '\n'
      << "alpha = " << format_double(t.alpha) << '\n'
      << "beta = " << format_double(t.beta) << '\n'
      << "activation = " << activation_name(t.activation) << '\n'
      << "seed = " << t.seed << '\n'
      << "model = " << model_name(t.model) << '\n'
      << "neg_exponent = " << format_double(t.neg_exponent) << '\n'
      << "neighbor_cap = " << t.neighbor_cap << '\n'
      << "transform = " << transform_name(t.transform_kind) << '\n'
      << "mlp_hidden = " << t.mlp_hidden << '\n'
      << "threads = " << t.threads << '\n'
      << "deterministic = " << (t.deterministic ? "true" : "false") << '\n'
      << "valid_frac = " << format_double(config.valid_frac) << '\n'
      << "test_frac = " << format_double(config.test_frac) << '\n';
  for (const auto& s : config.schemas) out << "schema = " << s << '\n';
}

// ---------------------------------------------------------------------------
// Walk corpus

void write_corpus(const std::filesystem::path& path, const WalkCorpus& corpus,
                  const HeterogeneousGraph& graph) {
  std::ofstream out = create_text(path);
  const auto& types = graph.edge_type_registry();
  for (const auto& walk : corpus.walks) {
    out << "r=" << types.name(walk.target_edge_type) << ';';
    for (std::size_t i = 0; i < walk.nodes.size(); ++i) {
      if (i) out << ' ';
      out << graph.node_name(walk.nodes[i]);
    }
    out << '\n';
  }
}

WalkCorpus read_corpus(const std::filesystem::path& path,
                       const HeterogeneousGraph& graph) {
  WalkCorpus corpus;
  std::ifstream in = open_text(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (skippable(line)) continue;
    if (line.rfind("r=", 0) != 0)
      fail_at(path, lineno, "expected `r=<edge_type>;` prefix");
    const std::size_t semi = line.find(';');
    if (semi == std::string::npos)
      fail_at(path, lineno, "expected `r=<edge_type>;` prefix");
    const std::string type_name = line.substr(2, semi - 2);
    Walk walk;
    walk.target_edge_type = need_edge_type(graph, type_name, path, lineno);
    for (const auto& name : split(line.substr(semi + 1), ' ')) {
      if (name.empty()) continue;
      walk.nodes.push_back(need_node(graph, name, path, lineno));
    }
    corpus.walks.push_back(std::move(walk));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw DataError(std::string("checkpoint truncated reading ") + what);
  return v;
}

void put_f32s(std::ostream& out, const double* data, std::size_t n) {
  std::vector<float> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(data[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
}

void get_f32s(std::istream& in, double* data, std::size_t n, const char* what) {
  std::vector<float> buf(n);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(n * sizeof(float))))
    throw DataError(std::string("checkpoint truncated reading ") + what);
  for (std::size_t i = 0; i < n; ++i) data[i] = buf[i];
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  put_f32s(out, m.data(), static_cast<std::size_t>(m.size()));
}

void get_matrix(std::istream& in, Eigen::MatrixXd& m, const char* what) {
  get_f32s(in, m.data(), static_cast<std::size_t>(m.size()), what);
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  put_f32s(out, v.data(), static_cast<std::size_t>(v.size()));
}

void get_vector(std::istream& in, Eigen::VectorXd& v, const char* what) {
  get_f32s(in, v.data(), static_cast<std::size_t>(v.size()), what);
}

void put_header(std::ostream& out, const char magic[4], const ModelDims& dims) {
  out.write(magic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(dims.num_nodes));
  put_u32(out, static_cast<std::uint32_t>(dims.dim));
  put_u32(out, static_cast<std::uint32_t>(dims.edge_dim));
  put_u32(out, static_cast<std::uint32_t>(dims.attn_dim));
  put_u32(out, static_cast<std::uint32_t>(dims.num_edge_types));
  put_u32(out, static_cast<std::uint32_t>(dims.levels));
}

ModelDims get_header(std::istream& in, const char expected_magic[4],
                     const std::filesystem::path& path) {
  char magic[4] = {};
  if (!in.read(magic, 4))
    throw DataError("checkpoint truncated reading magic: " + path.string());
  if (std::memcmp(magic, expected_magic, 4) != 0)
    throw DataError(path.string() + ": wrong checkpoint magic '" +
                    std::string(magic, 4) + "' (expected '" +
                    std::string(expected_magic, 4) + "')");
  const std::uint32_t version = get_u32(in, "version");
  if (version != kCheckpointVersion)
    throw DataError(path.string() + ": unsupported checkpoint version " +
                    std::to_string(version));
  ModelDims dims;
  dims.num_nodes = get_u32(in, "N");
  dims.dim = get_u32(in, "d");
  dims.edge_dim = get_u32(in, "s");
  dims.attn_dim = get_u32(in, "d_a");
  dims.num_edge_types = get_u32(in, "m");
  dims.levels = get_u32(in, "K");
  return dims;
}

void put_transform(std::ostream& out, const Transform& t) {
  put_u32(out, t.is_mlp() ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(t.w1.rows()));
  put_u32(out, static_cast<std::uint32_t>(t.w1.cols()));
  put_matrix(out, t.w1);
  put_vector(out, t.b1);
  if (t.is_mlp()) {
    put_u32(out, static_cast<std::uint32_t>(t.w2.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.w2.cols()));
    put_matrix(out, t.w2);
    put_vector(out, t.b2);
  }
}

Transform get_transform(std::istream& in, const char* what) {
  Transform t;
  const std::uint32_t kind = get_u32(in, what);
  const std::uint32_t r1 = get_u32(in, what);
  const std::uint32_t c1 = get_u32(in, what);
  t.w1.resize(r1, c1);
  get_matrix(in, t.w1, what);
  t.b1.resize(r1);
  get_vector(in, t.b1, what);
  if (kind == 1) {
    const std::uint32_t r2 = get_u32(in, what);
    const std::uint32_t c2 = get_u32(in, what);
    t.w2.resize(r2, c2);
    get_matrix(in, t.w2, what);
    t.b2.resize(r2);
    get_vector(in, t.b2, what);
  }
  return t;
}

// Per-node tables are serialized node-major: for each node, its values
// under every edge type. base/context at d x N column-major already are.
void put_edge0(std::ostream& out, const std::vector<Eigen::MatrixXd>& edge0,
               std::size_t num_nodes) {
  std::vector<float> buf;
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (const auto& e : edge0)
      for (Eigen::Index k = 0; k < e.rows(); ++k)
        buf.push_back(static_cast<float>(e(k, static_cast<Eigen::Index>(i))));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void get_edge0(std::istream& in, std::vector<Eigen::MatrixXd>& edge0,
               std::size_t num_nodes) {
  std::size_t total = 0;
  for (const auto& e : edge0) total += static_cast<std::size_t>(e.rows());
  std::vector<float> buf(total * num_nodes);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float))))
    throw DataError("checkpoint truncated reading edge embeddings");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (auto& e : edge0)
      for (Eigen::Index k = 0; k < e.rows(); ++k)
        e(k, static_cast<Eigen::Index>(i)) = buf[pos++];
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".manifest");
}

void write_manifest(const std::filesystem::path& path, const char* format,
                    const ModelDims& dims, Activation activation,
                    const HeterogeneousGraph& graph,
                    const std::vector<std::size_t>* attr_dims) {
  std::ofstream out = create_text(manifest_path(path));
  out << "format = " << format << '\n'
      << "version = " << kCheckpointVersion << '\n'
      << "nodes = " << dims.num_nodes << '\n'
      << "dim = " << dims.dim << '\n'
      << "edge_dim = " << dims.edge_dim << '\n'
      << "attn_dim = " << dims.attn_dim << '\n'
      << "num_edge_types = " << dims.num_edge_types << '\n'
      << "levels = " << dims.levels << '\n'
      << "activation = " << activation_name(activation) << '\n'
      << "node_types = " << join(graph.node_type_registry().names(), ',')
      << '\n'
      << "edge_types = " << join(graph.edge_type_registry().names(), ',')
      << '\n'
      << "layout = f32 little-endian; per-node tables node-major; matrices "
         "column-major\n";
  if (attr_dims) {
    std::vector<std::string> parts;
    for (std::size_t d : *attr_dims) parts.push_back(std::to_string(d));
    out << "attr_dims = " << join(parts, ',') << '\n';
  }
}

std::unordered_map<std::string, std::string> read_manifest(
    const std::filesystem::path& path) {
  const auto mpath = manifest_path(path);
  std::ifstream in(mpath);
  if (!in)
    throw DataError("checkpoint manifest missing: " + mpath.string());
  std::unordered_map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (skippable(line)) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail_at(mpath, lineno, "expected `key = value`");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void check_manifest_graph(const std::unordered_map<std::string, std::string>& kv,
                          const HeterogeneousGraph& graph,
                          const std::filesystem::path& path) {
  const auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw DataError(manifest_path(path).string() + ": missing key '" +
                      std::string(key) + "'");
    return it->second;
  };
  if (need("node_types") != join(graph.node_type_registry().names(), ','))
    throw DataError(path.string() +
                    ": checkpoint node types do not match the graph (" +
                    need("node_types") + " vs " +
                    join(graph.node_type_registry().names(), ',') + ")");
  if (need("edge_types") != join(graph.edge_type_registry().names(), ','))
    throw DataError(path.string() +
                    ": checkpoint edge types do not match the graph (" +
                    need("edge_types") + " vs " +
                    join(graph.edge_type_registry().names(), ',') + ")");
}

Activation manifest_activation(
    const std::unordered_map<std::string, std::string>& kv,
    const std::filesystem::path& path) {
  auto it = kv.find("activation");
  if (it == kv.end())
    throw DataError(manifest_path(path).string() + ": missing key 'activation'");
  if (it->second == "tanh") return Activation::kTanh;
  if (it->second == "identity") return Activation::kIdentity;
  throw DataError(manifest_path(path).string() + ": bad activation '" +
                  it->second + "'");
}

std::ofstream open_binary_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create " + path.string());
  return out;
}

std::ifstream open_binary_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const TransductiveParams& params,
                     const HeterogeneousGraph& graph) {
  std::ofstream out = open_binary_out(path);
  put_header(out, "MSMT", params.dims);
  put_matrix(out, params.base);  // d x N col-major == node-major
  put_edge0(out, params.edge0, params.dims.num_nodes);
  for (const auto& w : params.agg_weights) put_matrix(out, w);
  for (const auto& w : params.attn_vec) put_vector(out, w);
  for (const auto& w : params.attn_mat) put_matrix(out, w);
  for (const auto& w : params.transform) put_matrix(out, w);
  put_vector(out, params.alpha);
  put_matrix(out, params.context);
  if (!out) throw DataError("failed writing " + path.string());
  out.close();
  write_manifest(path, "MSMT", params.dims, params.activation, graph, nullptr);
}

void save_checkpoint(const std::filesystem::path& path,
                     const InductiveParams& params,
                     const HeterogeneousGraph& graph) {
  std::ofstream out = open_binary_out(path);
  put_header(out, "MSMI", params.dims);
  put_u32(out, static_cast<std::uint32_t>(params.h.size()));
  for (const auto& t : params.h) put_transform(out, t);
  for (const auto& gz : params.g)
    for (const auto& t : gz) put_transform(out, t);
  for (const auto& o : params.attr_out) put_matrix(out, o);
  put_vector(out, params.beta);
  for (const auto& w : params.agg_weights) put_matrix(out, w);
  for (const auto& w : params.attn_vec) put_vector(out, w);
  for (const auto& w : params.attn_mat) put_matrix(out, w);
  for (const auto& w : params.transform) put_matrix(out, w);
  put_vector(out, params.alpha);
  put_matrix(out, params.context);
  if (!out) throw DataError("failed writing " + path.string());
  out.close();
  write_manifest(path, "MSMI", params.dims, params.activation, graph,
                 &params.attr_dims);
}

CheckpointKind peek_checkpoint_kind(const std::filesystem::path& path) {
  std::ifstream in = open_binary_in(path);
  char magic[4] = {};
  if (!in.read(magic, 4))
    throw DataError("checkpoint truncated reading magic: " + path.string());
  if (std::memcmp(magic, "MSMT", 4) == 0) return CheckpointKind::kTransductive;
  if (std::memcmp(magic, "MSMI", 4) == 0) return CheckpointKind::kInductive;
  throw DataError(path.string() + ": unrecognized checkpoint magic");
}

TransductiveParams load_checkpoint_t(const std::filesystem::path& path,
                                     const HeterogeneousGraph& graph) {
  const auto kv = read_manifest(path);
  check_manifest_graph(kv, graph, path);
  std::ifstream in = open_binary_in(path);
  TransductiveParams params;
  params.dims = get_header(in, "MSMT", path);
  params.activation = manifest_activation(kv, path);
  const ModelDims& dims = params.dims;
  if (dims.num_nodes != graph.num_nodes() ||
      dims.num_edge_types != graph.num_edge_types())
    throw DataError(path.string() + ": checkpoint sized for " +
                    std::to_string(dims.num_nodes) + " nodes / " +
                    std::to_string(dims.num_edge_types) +
                    " edge types, graph has " +
                    std::to_string(graph.num_nodes()) + " / " +
                    std::to_string(graph.num_edge_types()));

  const auto n = static_cast<Eigen::Index>(dims.num_nodes);
  const auto d = static_cast<Eigen::Index>(dims.dim);
  const auto s = static_cast<Eigen::Index>(dims.edge_dim);
  const auto da = static_cast<Eigen::Index>(dims.attn_dim);
  params.base.resize(d, n);
  get_matrix(in, params.base, "base");
  params.edge0.assign(dims.num_edge_types, Eigen::MatrixXd(s, n));
  get_edge0(in, params.edge0, dims.num_nodes);
  params.agg_weights.assign(dims.levels, Eigen::MatrixXd(s, s));
  for (auto& w : params.agg_weights) get_matrix(in, w, "agg_weights");
  params.attn_vec.assign(dims.num_edge_types, Eigen::VectorXd(da));
  for (auto& w : params.attn_vec) get_vector(in, w, "attn_vec");
  params.attn_mat.assign(dims.num_edge_types, Eigen::MatrixXd(da, s));
  for (auto& w : params.attn_mat) get_matrix(in, w, "attn_mat");
  params.transform.assign(dims.num_edge_types, Eigen::MatrixXd(s, d));
  for (auto& w : params.transform) get_matrix(in, w, "transform");
  params.alpha.resize(static_cast<Eigen::Index>(dims.num_edge_types));
  get_vector(in, params.alpha, "alpha");
  params.context.resize(d, n);
  get_matrix(in, params.context, "context");
  return params;
}

InductiveParams load_checkpoint_i(const std::filesystem::path& path,
                                  const HeterogeneousGraph& graph) {
  const auto kv = read_manifest(path);
  check_manifest_graph(kv, graph, path);
  std::ifstream in = open_binary_in(path);
  InductiveParams params;
  params.dims = get_header(in, "MSMI", path);
  params.activation = manifest_activation(kv, path);
  const ModelDims& dims = params.dims;
  if (dims.num_nodes != graph.num_nodes() ||
      dims.num_edge_types != graph.num_edge_types())
    throw DataError(path.string() + ": checkpoint does not match the graph");

  const std::uint32_t num_types = get_u32(in, "num_node_types");
  if (num_types != graph.num_node_types())
    throw DataError(path.string() + ": checkpoint node-type count " +
                    std::to_string(num_types) + " != graph's " +
                    std::to_string(graph.num_node_types()));
  for (std::uint32_t z = 0; z < num_types; ++z)
    params.h.push_back(get_transform(in, "h"));
  params.g.resize(num_types);
  for (std::uint32_t z = 0; z < num_types; ++z)
    for (std::size_t r = 0; r < dims.num_edge_types; ++r)
      params.g[z].push_back(get_transform(in, "g"));
  params.attr_dims.resize(num_types);
  for (std::uint32_t z = 0; z < num_types; ++z) {
    params.attr_dims[z] = static_cast<std::size_t>(params.h[z].w1.cols());
    Eigen::MatrixXd o(params.h[z].w1.cols(),
                      static_cast<Eigen::Index>(dims.dim));
    get_matrix(in, o, "attr_out");
    params.attr_out.push_back(std::move(o));
  }
  params.beta.resize(static_cast<Eigen::Index>(dims.num_edge_types));
  get_vector(in, params.beta, "beta");

  const auto n = static_cast<Eigen::Index>(dims.num_nodes);
  const auto d = static_cast<Eigen::Index>(dims.dim);
  const auto s = static_cast<Eigen::Index>(dims.edge_dim);
  const auto da = static_cast<Eigen::Index>(dims.attn_dim);
  params.agg_weights.assign(dims.levels, Eigen::MatrixXd(s, s));
  for (auto& w : params.agg_weights) get_matrix(in, w, "agg_weights");
  params.attn_vec.assign(dims.num_edge_types, Eigen::VectorXd(da));
  for (auto& w : params.attn_vec) get_vector(in, w, "attn_vec");
  params.attn_mat.assign(dims.num_edge_types, Eigen::MatrixXd(da, s));
  for (auto& w : params.attn_mat) get_matrix(in, w, "attn_mat");
  params.transform.assign(dims.num_edge_types, Eigen::MatrixXd(s, d));
  for (auto& w : params.transform) get_matrix(in, w, "transform");
  params.alpha.resize(static_cast<Eigen::Index>(dims.num_edge_types));
  get_vector(in, params.alpha, "alpha");
  params.context.resize(d, n);
  get_matrix(in, params.context, "context");
  return params;
}

// ---------------------------------------------------------------------------
// Splits

void save_split(const std::filesystem::path& dir, const SplitResult& result,
                const HeterogeneousGraph& original) {
  save_graph_dir(dir, result.train_graph);
  std::ofstream out = create_text(dir / "split.tsv");
  out << "# split\tlabel\tedge_type\tsrc\tdst\n";
  const auto& types = original.edge_type_registry();
  auto dump = [&](const char* which, const char* label,
                  const std::vector<EdgePair>& pairs, EdgeTypeId r) {
    for (const auto& e : pairs)
      out << which << '\t' << label << '\t' << types.name(r) << '\t'
          << original.node_name(e.u) << '\t' << original.node_name(e.v)
          << '\n';
  };
  for (EdgeTypeId r = 0; r < original.num_edge_types(); ++r) {
    dump("valid", "pos", result.split.validation[r].positives, r);
    dump("valid", "neg", result.split.validation[r].negatives, r);
    dump("test", "pos", result.split.test[r].positives, r);
    dump("test", "neg", result.split.test[r].negatives, r);
  }
}

EvalSplit load_split(const std::filesystem::path& dir,
                     const HeterogeneousGraph& train_graph) {
  const auto path = dir / "split.tsv";
  std::ifstream in = open_text(path);
  EvalSplit result;
  const std::size_t m = train_graph.num_edge_types();
  result.train_edges.resize(m);
  result.validation.resize(m);
  result.test.resize(m);
  for (EdgeTypeId r = 0; r < m; ++r)
    for (const auto& [u, v] : train_graph.edges(r))
      result.train_edges[r].push_back({u, v});

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (skippable(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 5)
      fail_at(path, lineno, "expected 5 tab-separated fields");
    const EdgeTypeId r = need_edge_type(train_graph, fields[2], path, lineno);
    const NodeId u = need_node(train_graph, fields[3], path, lineno);
    const NodeId v = need_node(train_graph, fields[4], path, lineno);
    LabeledEdgeSet* set = nullptr;
    if (fields[0] == "valid") set = &result.validation[r];
    else if (fields[0] == "test") set = &result.test[r];
    else fail_at(path, lineno, "split must be `valid` or `test`");
    if (fields[1] == "pos") set->positives.push_back({u, v});
    else if (fields[1] == "neg") set->negatives.push_back({u, v});
    else fail_at(path, lineno, "label must be `pos` or `neg`");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Embedding export

void export_embeddings(const std::filesystem::path& path,
                       const HeterogeneousGraph& graph,
                       const Eigen::MatrixXd& embeddings, EdgeTypeId r) {
  if (static_cast<std::size_t>(embeddings.cols()) != graph.num_nodes())
    throw DataError("export: embedding column count != node count");
  {
    std::ofstream out = create_text(path);
    for (NodeId i = 0; i < graph.num_nodes(); ++i) {
      out << graph.node_name(i) << '\t';
      for (Eigen::Index k = 0; k < embeddings.rows(); ++k) {
        if (k) out << ',';
        out << format_double(embeddings(k, i));
      }
      out << '\n';
    }
  }
  std::ofstream out = open_binary_out(path.string() + ".bin");
  out.write("MSME", 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(embeddings.cols()));
  put_u32(out, static_cast<std::uint32_t>(embeddings.rows()));
  put_u32(out, r);
  put_matrix(out, embeddings);  // column-major == node-major here
  if (!out) throw DataError("failed writing " + path.string() + ".bin");
}

Eigen::MatrixXd read_embeddings_text(const std::filesystem::path& path,
                                     const HeterogeneousGraph& graph) {
  std::ifstream in = open_text(path);
  Eigen::MatrixXd out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (skippable(line)) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2)
      fail_at(path, lineno, "expected `name<TAB>v1,...`");
    const NodeId u = need_node(graph, fields[0], path, lineno);
    const auto values = split(fields[1], ',');
    if (out.size() == 0)
      out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(values.size()),
                                  static_cast<Eigen::Index>(graph.num_nodes()));
    if (static_cast<Eigen::Index>(values.size()) != out.rows())
      fail_at(path, lineno, "inconsistent embedding dimension");
    for (std::size_t k = 0; k < values.size(); ++k)
      out(static_cast<Eigen::Index>(k), u) =
          parse_double_at(values[k], path, lineno, "embedding value");
  }
  return out;
}

std::pair<Eigen::MatrixXd, EdgeTypeId> read_embeddings_binary(
    const std::filesystem::path& path) {
  std::ifstream in = open_binary_in(path);
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, "MSME", 4) != 0)
    throw DataError(path.string() + ": not an embedding container");
  const std::uint32_t version = get_u32(in, "version");
  if (version != kCheckpointVersion)
    throw DataError(path.string() + ": unsupported version");
  const std::uint32_t n = get_u32(in, "N");
  const std::uint32_t d = get_u32(in, "d");
  const EdgeTypeId r = get_u32(in, "edge type");
  Eigen::MatrixXd out(d, n);
  get_matrix(in, out, "embeddings");
  return {std::move(out), r};
}

// ---------------------------------------------------------------------------
// Reports

void write_report_table(std::ostream& out, const EvalReport& report) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %9s %9s %9s %11s\n", "edge type",
                "ROC-AUC", "PR-AUC", "F1", "threshold");
  out << buf;
  auto row = [&](const EvalReport::Row& r) {
    std::snprintf(buf, sizeof buf, "%-20s %9.4f %9.4f %9.4f %11.4f\n",
                  r.edge_type.c_str(), r.roc_auc, r.pr_auc, r.f1, r.threshold);
    out << buf;
  };
  for (const auto& r : report.rows) row(r);
  row(report.average);
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "edge_type,roc_auc,pr_auc,f1,threshold\n";
  auto row = [&](const EvalReport::Row& r) {
    out << r.edge_type << ',' << format_double(r.roc_auc) << ','
        << format_double(r.pr_auc) << ',' << format_double(r.f1) << ','
        << format_double(r.threshold) << '\n';
  };
  for (const auto& r : report.rows) row(r);
  row(report.average);
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  nlohmann::json j;
  auto row = [](const EvalReport::Row& r) {
    return nlohmann::json{{"edge_type", r.edge_type},
                          {"roc_auc", r.roc_auc},
                          {"pr_auc", r.pr_auc},
                          {"f1", r.f1},
                          {"threshold", r.threshold}};
  };
  j["edge_types"] = nlohmann::json::array();
  for (const auto& r : report.rows) j["edge_types"].push_back(row(r));
  j["average"] = row(report.average);
  out << j.dump(2) << '\n';
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in = open_binary_in(path);
  std::uint64_t hash = 14695981039346656037ULL;
  char buf[8192];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

}  // namespace msm
