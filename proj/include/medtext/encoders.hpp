#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "medtext/embeddings.hpp"
#include "medtext/matrix.hpp"

namespace medtext::encoders {

using embeddings::Vocabulary;
using embeddings::WordEmbeddings;
using Tokens = std::vector<std::string>;

struct EncoderConfig {
  std::size_t max_len = 50;
};

/// max_len x d token rows; rows from true_len on are zero (PAD).
struct SentenceMatrix {
  Matrix<float> rows;
  std::size_t true_len = 0;
};

/// Looks up the first max_len tokens; OOV tokens map to the zero UNK row.
SentenceMatrix encode_sentence_matrix(const WordEmbeddings& e, const Vocabulary& vocab,
                                      const Tokens& tokens, const EncoderConfig& cfg);

enum class MeanMode { zero, elim };

/// zero: OOV tokens contribute zero vectors and count in the denominator.
/// elim: OOV tokens are dropped. No in-vocabulary token gives the zero vector.
std::vector<double> mean_embedding(const WordEmbeddings& e, const Vocabulary& vocab,
                                   const Tokens& tokens, MeanMode mode);

struct Codebook {
  Matrix<float> centers;  // K x d

  std::size_t size() const { return centers.rows(); }
  std::size_t dim() const { return centers.cols(); }
};

struct KMeansTrace {
  std::vector<double> inertia;  // after each assignment step
  std::vector<std::size_t> assignment;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm from a k-means++ start. Empty clusters are re-seeded at
/// the point farthest from its assigned center.
Codebook fit_codebook(const Matrix<double>& vectors, std::size_t k, std::size_t max_iters, double tol,
                      std::uint64_t seed, KMeansTrace* trace = nullptr);

/// Word vectors of every non-reserved vocabulary entry, as doubles.
Matrix<double> codebook_inputs(const WordEmbeddings& e);

void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

struct BowConfig {
  std::size_t k = 1000;
  std::size_t k_soft = 50;
  bool normalize = true;
};

/// Soft-assignment histogram: each in-vocabulary token adds 1/R to the bin of
/// its R-th nearest center (Euclidean, ties to lower index), R <= k_soft.
std::vector<double> bow_histogram(const Codebook& cb, const WordEmbeddings& e, const Vocabulary& vocab,
                                  const Tokens& tokens, const BowConfig& cfg);

}  // namespace medtext::encoders
