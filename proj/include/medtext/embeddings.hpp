#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "medtext/matrix.hpp"
#include "medtext/rng.hpp"

namespace medtext::embeddings {

using TokenSequences = std::vector<std::vector<std::string>>;
using IdSequences = std::vector<std::vector<std::int32_t>>;

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr const char* kPadToken = "<PAD>";
inline constexpr const char* kUnkToken = "<UNK>";

/// Token index with reserved PAD (0) and UNK (1) ids.
class Vocabulary {
 public:
  Vocabulary();

  /// Appends a token; returns its id. Throws on duplicates.
  std::int32_t add(const std::string& token, std::uint64_t count = 0);

  /// Id of `token`, or kUnkId when absent.
  std::int32_t id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::uint64_t count(std::int32_t id) const { return counts_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::size_t size() const { return tokens_.size(); }

  std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const;

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_ && counts_ == o.counts_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Keeps tokens with frequency >= min_count, ordered by descending
/// frequency then lexicographically.
Vocabulary build_vocab(const TokenSequences& sentences, std::uint64_t min_count);

/// Sequences of in-vocabulary ids; PAD/UNK never appear in the result.
IdSequences encode_known(const TokenSequences& sentences, const Vocabulary& vocab);

struct WordEmbeddings {
  Matrix<float> matrix;  // V x d; rows 0 and 1 are zero

  std::size_t dim() const { return matrix.cols(); }
  std::size_t size() const { return matrix.rows(); }
  std::span<const float> vector(std::int32_t id) const { return matrix.row(static_cast<std::size_t>(id)); }
};

/// Draws ids with probability proportional to count^power.
class UnigramSampler {
 public:
  UnigramSampler(std::span<const std::uint64_t> counts, double power = 0.75);

  std::int32_t sample(Rng& rng) const;
  double probability(std::int32_t id) const;
  bool empty() const { return total_ <= 0.0; }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

struct Word2vecConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t min_count = 2;

  void validate() const;
};

struct Doc2vecConfig {
  std::size_t dim = 100;
  std::size_t epochs = 60;
  std::size_t window = 5;
  std::size_t negatives = 5;
  double learning_rate = 0.025;
  std::size_t infer_epochs = 60;

  void validate() const;
};

/// Negative-sampling loss for one predictor vector `h`:
///   -log sigmoid(u_pos . h) - sum_n log sigmoid(-u_n . h)
/// Writes dL/dh into grad_h and dL/du_i into grad_outputs[i] (outputs[0] is
/// the positive). Both gradients are overwritten, not accumulated.
template <class T>
T sgns_loss_grad(std::span<const T> h, const std::vector<std::span<const T>>& outputs,
                 std::span<T> grad_h, const std::vector<std::span<T>>& grad_outputs);

/// Applies one negative-sampling step for predictor `h`: draws negatives
/// (skipping any equal to `target`) and writes the predictor's step
/// (-lr * dL/dh) into `neu`. Output rows are updated in place unless `frozen`.
void sgns_update(std::span<const float> h, std::int32_t target, Matrix<float>& out, bool frozen,
                 const UnigramSampler& sampler, std::size_t negatives, float lr, Rng& rng,
                 std::vector<float>& neu);

/// Learning rate after `done` of `total` updates: linear from lr0 to 0.1*lr0.
double decayed_rate(double lr0, std::uint64_t done, std::uint64_t total);

/// Skip-gram with negative sampling. Single-threaded and deterministic.
WordEmbeddings train_word2vec(const TokenSequences& sentences, const Vocabulary& vocab,
                              const Word2vecConfig& cfg, std::uint64_t seed);

struct Doc2vecModel {
  Matrix<float> word_vectors;    // V x d input vectors
  Matrix<float> output_weights;  // V x d negative-sampling weights
  Matrix<float> doc_vectors;     // N x d, one per training sentence
  Doc2vecConfig config;

  std::size_t dim() const { return word_vectors.cols(); }
};

/// PV-DM: predictor is the mean of the doc vector and the window's word vectors.
Doc2vecModel train_doc2vec(const TokenSequences& sentences, const Vocabulary& vocab,
                           const Doc2vecConfig& cfg, std::uint64_t seed);

/// Fits a fresh doc vector with word and output weights frozen.
std::vector<float> infer_doc_vector(const Doc2vecModel& m, const Vocabulary& vocab,
                                    const std::vector<std::string>& tokens, std::uint64_t seed);

/// Text format: "V d" header, then "token v1 ... vd" per row, shortest
/// round-trip float representation.
void save_embeddings(const WordEmbeddings& e, const Vocabulary& vocab, const std::filesystem::path& path);
std::pair<WordEmbeddings, Vocabulary> load_embeddings(const std::filesystem::path& path);

/// Same layout, keys are arbitrary row labels (codebook files use indices).
void write_vector_table(std::ostream& out, const std::vector<std::string>& keys, const Matrix<float>& m);
std::pair<std::vector<std::string>, Matrix<float>> read_vector_table(std::istream& in, const std::string& source);

}  // namespace medtext::embeddings
