#include "medtext/encoders.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "medtext/error.hpp"

namespace medtext::encoders {

using embeddings::kUnkId;

SentenceMatrix encode_sentence_matrix(const WordEmbeddings& e, const Vocabulary& vocab,
                                      const Tokens& tokens, const EncoderConfig& cfg) {
  require(cfg.max_len >= 1, "encoder: max_len must be at least 1");
  SentenceMatrix s{Matrix<float>(cfg.max_len, e.dim()), std::min(tokens.size(), cfg.max_len)};
  for (std::size_t i = 0; i < s.true_len; ++i) {
    auto v = e.vector(vocab.id(tokens[i]));
    std::copy(v.begin(), v.end(), s.rows.row(i).begin());
  }
  return s;
}

std::vector<double> mean_embedding(const WordEmbeddings& e, const Vocabulary& vocab,
                                   const Tokens& tokens, MeanMode mode) {
  std::vector<double> sum(e.dim(), 0.0);
  std::size_t known = 0;
  for (const auto& t : tokens) {
    auto id = vocab.id(t);
    if (id <= kUnkId) continue;
    ++known;
    auto v = e.vector(id);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += v[k];
  }
  if (known == 0) return sum;
  const double denom = static_cast<double>(mode == MeanMode::zero ? tokens.size() : known);
  for (auto& x : sum) x /= denom;
  return sum;
}

std::vector<double> bow_histogram(const Codebook& cb, const WordEmbeddings& e, const Vocabulary& vocab,
                                  const Tokens& tokens, const BowConfig& cfg) {
  require(cb.dim() == e.dim(), "bow: codebook dimension " + std::to_string(cb.dim()) +
                                   " differs from embedding dimension " + std::to_string(e.dim()));
  require(cfg.k_soft >= 1, "bow: k_soft must be at least 1");
  const std::size_t K = cb.size();
  const std::size_t ranks = std::min(cfg.k_soft, K);
  std::vector<double> bins(K, 0.0), dist(K);
  std::vector<std::size_t> order(K);
  double total = 0.0;
  for (const auto& t : tokens) {
    auto id = vocab.id(t);
    if (id <= kUnkId) continue;
    auto v = e.vector(id);
    for (std::size_t c = 0; c < K; ++c) {
      auto center = cb.centers.row(c);
      double acc = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        const double diff = static_cast<double>(v[k]) - static_cast<double>(center[k]);
        acc += diff * diff;
      }
      dist[c] = acc;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ranks), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                      });
    for (std::size_t r = 0; r < ranks; ++r) {
      const double w = 1.0 / static_cast<double>(r + 1);
      bins[order[r]] += w;
      total += w;
    }
  }
  if (cfg.normalize && total > 0.0)
    for (auto& b : bins) b /= total;
  return bins;
}

Matrix<double> codebook_inputs(const WordEmbeddings& e) {
  const std::size_t n = e.size() > 2 ? e.size() - 2 : 0;
  Matrix<double> out(n, e.dim());
  for (std::size_t r = 0; r < n; ++r) {
    auto v = e.matrix.row(r + 2);
    std::copy(v.begin(), v.end(), out.row(r).begin());
  }
  return out;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write codebook: " + path.string());
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < cb.size(); ++i) keys.push_back(std::to_string(i));
  embeddings::write_vector_table(out, keys, cb.centers);
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open codebook: " + path.string());
  auto [keys, m] = embeddings::read_vector_table(in, path.string());
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (keys[i] != std::to_string(i))
      throw InputError(path.string() + ": row " + std::to_string(i) + " is labelled '" + keys[i] + "'");
  require(m.rows() >= 1, path.string() + ": codebook has no centers");
  return Codebook{std::move(m)};
}

}  // namespace medtext::encoders
