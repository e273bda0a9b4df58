#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "msm/eval.hpp"
#include "msm/graph.hpp"
#include "msm/metapath.hpp"
#include "msm/model.hpp"
#include "msm/trainer.hpp"

namespace msm {

// ---------------------------------------------------------------------------
// Graph directories: nodes.tsv / edges.tsv / attributes.tsv / labels.tsv.
// Tab-separated, UTF-8, '#' comment lines and blank lines skipped.

struct GraphDirData {
  HeterogeneousGraph graph;
  std::vector<std::string> labels;  // per node id; empty if labels.tsv absent
};

GraphDirData load_graph_dir(const std::filesystem::path& dir);
void save_graph_dir(const std::filesystem::path& dir,
                    const HeterogeneousGraph& graph,
                    const std::vector<std::string>* labels = nullptr);

// ---------------------------------------------------------------------------
// Amazon reviews: CSV records `user,item,score[,...]`, integer scores 1-5.
// Scores 1-2 -> dislike, 3-4 -> like, 5 -> very_like; separate edge types
// for user-movie and user-book. Duplicate (user,item) pairs collapse to the
// highest score. Bad records are skipped and counted, never silently.

struct AmazonLoadStats {
  std::size_t movie_reviews = 0;
  std::size_t book_reviews = 0;
  std::size_t malformed = 0;
  std::size_t out_of_range = 0;
  std::size_t duplicates = 0;
};

HeterogeneousGraph load_amazon(const std::filesystem::path& movie_reviews,
                               const std::filesystem::path& book_reviews,
                               AmazonLoadStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Run configuration: line-oriented `key = value`. Every TrainConfig field
// has a key, plus repeatable `schema = <dsl>` lines and the split
// fractions. Unknown keys are errors naming the line.

struct RunConfig {
  TrainConfig train;
  std::vector<std::string> schemas;
  double valid_frac = 0.05;
  double test_frac = 0.10;
};

RunConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const RunConfig& config);

// ---------------------------------------------------------------------------
// Walk corpus: one walk per line, `r=<edge_type>;` then space-separated
// node names.

void write_corpus(const std::filesystem::path& path, const WalkCorpus& corpus,
                  const HeterogeneousGraph& graph);
WalkCorpus read_corpus(const std::filesystem::path& path,
                       const HeterogeneousGraph& graph);

// ---------------------------------------------------------------------------
// Checkpoints: binary little-endian f32. Header {magic, version, N, d, s,
// d_a, m, K} (magic "MSMT" or "MSMI"), then tensors in declared field
// order; per-node tables are node-major, shared matrices column-major. A
// text sidecar `<path>.manifest` records the type registries, activation,
// transform family, and per-node-type attribute dims.

enum class CheckpointKind { kTransductive, kInductive };

void save_checkpoint(const std::filesystem::path& path,
                     const TransductiveParams& params,
                     const HeterogeneousGraph& graph);
void save_checkpoint(const std::filesystem::path& path,
                     const InductiveParams& params,
                     const HeterogeneousGraph& graph);
CheckpointKind peek_checkpoint_kind(const std::filesystem::path& path);
// Loaders verify the manifest's registries against `graph` and refuse
// mismatches.
TransductiveParams load_checkpoint_t(const std::filesystem::path& path,
                                     const HeterogeneousGraph& graph);
InductiveParams load_checkpoint_i(const std::filesystem::path& path,
                                  const HeterogeneousGraph& graph);

// ---------------------------------------------------------------------------
// Eval splits. save_split writes the reduced training graph into `dir`
// plus `split.tsv` (name-keyed, so it survives reloading); load_split
// resolves names against the graph loaded from the same directory.

void save_split(const std::filesystem::path& dir, const SplitResult& result,
                const HeterogeneousGraph& original);
EvalSplit load_split(const std::filesystem::path& dir,
                     const HeterogeneousGraph& train_graph);

// ---------------------------------------------------------------------------
// Embedding export: text `name<TAB>v1,...,vd` (one line per node, id
// order, 9 significant digits) plus a binary variant `<path>.bin` in the
// checkpoint container style.

void export_embeddings(const std::filesystem::path& path,
                       const HeterogeneousGraph& graph,
                       const Eigen::MatrixXd& embeddings, EdgeTypeId r);
Eigen::MatrixXd read_embeddings_text(const std::filesystem::path& path,
                                     const HeterogeneousGraph& graph);
std::pair<Eigen::MatrixXd, EdgeTypeId> read_embeddings_binary(
    const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Evaluation reports.

void write_report_table(std::ostream& out, const EvalReport& report);
void write_report_csv(std::ostream& out, const EvalReport& report);
void write_report_json(std::ostream& out, const EvalReport& report);

// FNV-1a 64-bit digest of a file's bytes, as fixed-width hex.
std::string file_digest(const std::filesystem::path& path);

}  // namespace msm
