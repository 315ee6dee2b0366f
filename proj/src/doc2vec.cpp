#include <algorithm>

#include "medtext/embeddings.hpp"
#include "medtext/error.hpp"

namespace medtext::embeddings {

namespace {

void init_uniform(std::span<float> v, Rng& rng) {
  const float scale = 0.5f / static_cast<float>(v.size());
  for (auto& x : v) x = static_cast<float>(rng.uniform(-scale, scale));
}

// One PV-DM pass over a sentence. The doc vector always takes the step;
// word vectors and output weights only when `train_words`.
std::uint64_t pvdm_pass(std::span<float> doc, const std::vector<std::int32_t>& s,
                        Matrix<float>& words, Matrix<float>& out, const UnigramSampler& sampler,
                        const Doc2vecConfig& cfg, bool train_words, std::uint64_t done,
                        std::uint64_t total, Rng& rng) {
  const std::size_t d = doc.size();
  std::vector<float> h(d), neu(d);
  for (std::size_t i = 0; i < s.size(); ++i, ++done) {
    const auto lr = static_cast<float>(decayed_rate(cfg.learning_rate, done, total));
    const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
    const std::size_t hi = std::min(s.size(), i + cfg.window + 1);
    std::copy(doc.begin(), doc.end(), h.begin());
    std::size_t n = 1;
    for (std::size_t j = lo; j < hi; ++j) {
      if (j == i) continue;
      auto w = words.row(static_cast<std::size_t>(s[j]));
      for (std::size_t k = 0; k < d; ++k) h[k] += w[k];
      ++n;
    }
    const float inv = 1.0f / static_cast<float>(n);
    for (auto& x : h) x *= inv;
    sgns_update(h, s[i], out, !train_words, sampler, cfg.negatives, lr, rng, neu);
    // The averaged predictor's error is applied to each of its components,
    // the usual PV-DM mean convention.
    for (std::size_t k = 0; k < d; ++k) doc[k] += neu[k];
    if (train_words) {
      for (std::size_t j = lo; j < hi; ++j) {
        if (j == i) continue;
        auto w = words.row(static_cast<std::size_t>(s[j]));
        for (std::size_t k = 0; k < d; ++k) w[k] += neu[k];
      }
    }
  }
  return s.size();
}

}  // namespace

Doc2vecModel train_doc2vec(const TokenSequences& sentences, const Vocabulary& vocab,
                           const Doc2vecConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (sentences.empty()) throw InputError("doc2vec: empty corpus");
  auto ids = encode_known(sentences, vocab);
  std::uint64_t words_per_epoch = 0;
  for (const auto& s : ids) words_per_epoch += s.size();
  if (words_per_epoch == 0) throw InputError("doc2vec: corpus has no in-vocabulary tokens");
  UnigramSampler sampler(vocab.counts(), 0.75);
  require(!sampler.empty(), "doc2vec: vocabulary carries no frequency counts");

  const std::size_t V = vocab.size(), d = cfg.dim;
  Rng rng(seed);
  Doc2vecModel m{Matrix<float>(V, d), Matrix<float>(V, d), Matrix<float>(ids.size(), d), cfg};
  for (std::size_t r = 2; r < V; ++r) init_uniform(m.word_vectors.row(r), rng);
  for (std::size_t r = 0; r < ids.size(); ++r) init_uniform(m.doc_vectors.row(r), rng);

  const std::uint64_t total = words_per_epoch * cfg.epochs;
  std::uint64_t done = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch)
    for (std::size_t n = 0; n < ids.size(); ++n)
      done += pvdm_pass(m.doc_vectors.row(n), ids[n], m.word_vectors, m.output_weights, sampler,
                        cfg, true, done, total, rng);
  return m;
}

std::vector<float> infer_doc_vector(const Doc2vecModel& m, const Vocabulary& vocab,
                                    const std::vector<std::string>& tokens, std::uint64_t seed) {
  require(m.word_vectors.rows() == vocab.size(), "doc2vec: model and vocabulary sizes differ");
  Rng rng(seed);
  std::vector<float> doc(m.dim());
  init_uniform(doc, rng);
  auto ids = encode_known({tokens}, vocab).front();
  if (ids.empty()) return doc;

  UnigramSampler sampler(vocab.counts(), 0.75);
  require(!sampler.empty(), "doc2vec: vocabulary carries no frequency counts");
  // Nothing is written through these when train_words is false.
  auto& words = const_cast<Matrix<float>&>(m.word_vectors);
  auto& out = const_cast<Matrix<float>&>(m.output_weights);
  const std::uint64_t total = ids.size() * m.config.infer_epochs;
  std::uint64_t done = 0;
  for (std::size_t epoch = 0; epoch < m.config.infer_epochs; ++epoch) {
    done += pvdm_pass(doc, ids, words, out, sampler, m.config, false, done, total, rng);
  }
  return doc;
}

}  // namespace medtext::embeddings
