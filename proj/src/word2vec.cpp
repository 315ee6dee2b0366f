#include <algorithm>

#include "medtext/embeddings.hpp"
#include "medtext/error.hpp"

namespace medtext::embeddings {

namespace {

// Scratch space for one negative-sampling update.
struct SgnsScratch {
  std::vector<std::int32_t> rows;
  std::vector<float> grad_h;
  std::vector<std::vector<float>> grad_rows;
  std::vector<std::span<const float>> outputs;
  std::vector<std::span<float>> grads;
};

}  // namespace

void sgns_update(std::span<const float> h, std::int32_t target, Matrix<float>& out, bool frozen,
                 const UnigramSampler& sampler, std::size_t negatives, float lr, Rng& rng,
                 std::vector<float>& neu) {
  thread_local SgnsScratch scratch;
  const std::size_t d = h.size();
  scratch.rows.clear();
  scratch.rows.push_back(target);
  for (std::size_t n = 0; n < negatives; ++n) {
    auto row = sampler.sample(rng);
    if (row != target) scratch.rows.push_back(row);
  }
  scratch.grad_h.resize(d);
  if (scratch.grad_rows.size() < scratch.rows.size()) scratch.grad_rows.resize(scratch.rows.size());
  auto& outputs = scratch.outputs;
  auto& grads = scratch.grads;
  outputs.clear();
  grads.clear();
  for (std::size_t i = 0; i < scratch.rows.size(); ++i) {
    outputs.push_back(out.row(static_cast<std::size_t>(scratch.rows[i])));
    scratch.grad_rows[i].resize(d);
    grads.emplace_back(scratch.grad_rows[i]);
  }
  sgns_loss_grad<float>(h, outputs, scratch.grad_h, grads);
  for (std::size_t k = 0; k < d; ++k) neu[k] = -lr * scratch.grad_h[k];
  if (frozen) return;
  for (std::size_t i = 0; i < scratch.rows.size(); ++i) {
    auto u = out.row(static_cast<std::size_t>(scratch.rows[i]));
    for (std::size_t k = 0; k < d; ++k) u[k] -= lr * scratch.grad_rows[i][k];
  }
}

WordEmbeddings train_word2vec(const TokenSequences& sentences, const Vocabulary& vocab,
                              const Word2vecConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  auto ids = encode_known(sentences, vocab);
  std::uint64_t words_per_epoch = 0;
  for (const auto& s : ids) words_per_epoch += s.size();
  if (words_per_epoch == 0) throw InputError("word2vec: corpus has no in-vocabulary tokens");

  UnigramSampler sampler(vocab.counts(), 0.75);
  require(!sampler.empty(), "word2vec: vocabulary carries no frequency counts");

  const std::size_t V = vocab.size(), d = cfg.dim;
  Rng rng(seed);
  Matrix<float> in(V, d), out(V, d);
  const float scale = 0.5f / static_cast<float>(d);
  for (std::size_t r = 2; r < V; ++r)
    for (auto& v : in.row(r)) v = static_cast<float>(rng.uniform(-scale, scale));

  const std::uint64_t total = words_per_epoch * cfg.epochs;
  std::uint64_t done = 0;
  std::vector<float> neu(d);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& s : ids) {
      for (std::size_t i = 0; i < s.size(); ++i, ++done) {
        const auto lr = static_cast<float>(decayed_rate(cfg.learning_rate, done, total));
        auto center = in.row(static_cast<std::size_t>(s[i]));
        const std::size_t lo = i >= cfg.window ? i - cfg.window : 0;
        const std::size_t hi = std::min(s.size(), i + cfg.window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          sgns_update(center, s[j], out, false, sampler, cfg.negatives, lr, rng, neu);
          for (std::size_t k = 0; k < d; ++k) center[k] += neu[k];
        }
      }
    }
  }
  std::fill(in.row(kPadId).begin(), in.row(kPadId).end(), 0.0f);
  std::fill(in.row(kUnkId).begin(), in.row(kUnkId).end(), 0.0f);
  return WordEmbeddings{std::move(in)};
}


}  // namespace medtext::embeddings
