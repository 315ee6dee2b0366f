#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "medtext/models.hpp"
#include "medtext/pipeline.hpp"

// Pipeline commands behind the CLI. Each command reads its settings from an
// Options bag whose keys are the long flag names (without leading dashes).
namespace medtext::harness {

class Options {
 public:
  void set(const std::string& key, std::string value);
  void append(const std::string& key, std::string value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  const std::vector<std::string>& all(const std::string& key) const;

  std::size_t size_or(const std::string& key, std::size_t fallback) const;
  double double_or(const std::string& key, double fallback) const;
  bool bool_or(const std::string& key, bool fallback) const;
  /// Comma-separated positive integers.
  std::vector<std::size_t> list_or(const std::string& key, std::vector<std::size_t> fallback) const;
  /// `--seed` is mandatory for every training command.
  std::uint64_t seed() const;

 private:
  std::map<std::string, std::vector<std::string>> values_;
};

using Logger = std::function<void(std::string_view)>;

/// Writes an embedding file (word2vec) or doc2vec model plus `<out>.manifest.json`.
void cmd_train_embeddings(const Options& opts, const Logger& log);

/// Writes a codebook fitted to the non-reserved rows of an embedding file.
void cmd_fit_codebook(const Options& opts, const Logger& log);

/// Trains one method; writes the classifier bundle and `<out>.report.json`.
void cmd_train(const Options& opts, const Logger& log);

struct ComparisonRow {
  std::string model;
  Method method = Method::cnn;
  double accuracy = 0.0;
  std::size_t n_eval = 0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::vector<std::string> labels;
  std::vector<std::size_t> class_counts;
  std::vector<std::vector<std::pair<std::string, std::string>>> configs;  // per row
  std::vector<std::uint64_t> seeds;                                       // per row
};

/// Scores every model on one validation corpus; writes `<out>.tsv` and `<out>.json`.
ComparisonReport cmd_evaluate(const Options& opts, const Logger& log);

ComparisonReport compare(const std::vector<std::string>& model_paths, const std::vector<Classifier>& models,
                         const corpus::Dataset& valid);
std::string report_tsv(const ComparisonReport& r);
std::string report_json(const ComparisonReport& r);

struct ClassifyResult {
  std::string label;
  std::vector<std::pair<std::string, double>> ranked;  // descending probability
};

ClassifyResult classify(const Classifier& c, std::string_view text);

struct GridSpec {
  std::vector<std::size_t> filters{64, 128, 256};
  std::vector<std::size_t> kernels{3, 5, 7};
  std::vector<std::size_t> conv_layers{2, 4, 6};  // total convolutions, two per pair
};

struct GridRow {
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t conv_layers = 0;
  std::uint64_t parameters = 0;
  double accuracy = 0.0;
  bool skipped = false;
  std::string reason;
};

/// Feasible rows first, ordered by accuracy desc, parameters asc, then
/// (filters, kernel, conv_layers) ascending; skipped rows follow in grid order.
void rank_grid(std::vector<GridRow>& rows);

std::vector<GridRow> run_grid_search(const corpus::Dataset& train, const corpus::Dataset& valid,
                                     const embeddings::WordEmbeddings& emb, const embeddings::Vocabulary& vocab,
                                     const models::CnnConfig& base, const GridSpec& grid, const Logger& log);

std::string grid_tsv(const std::vector<GridRow>& rows);

/// Writes the ranked table to `<out>` and the winning settings to `<out>.best.cfg`.
std::vector<GridRow> cmd_grid_search(const Options& opts, const Logger& log);

/// Writes a synthetic corpus (`--kind order|topics`) for demos.
void cmd_synth_corpus(const Options& opts, const Logger& log);

}  // namespace medtext::harness
