#include <chrono>
#include <cmath>
#include <numeric>

#include "medtext/error.hpp"
#include "medtext/models.hpp"

namespace medtext::models {

using namespace neural;

std::size_t CnnConfig::pooled_length() const {
  if (pool == 0) return 0;
  std::size_t len = max_len;
  for (std::size_t p = 0; p < conv_pairs; ++p) len /= pool;
  return len;
}

void CnnConfig::validate() const {
  require(max_len >= 1 && embed_dim >= 1, "cnn config: max_len and embed_dim must be positive");
  require(conv_pairs >= 1, "cnn config: conv_pairs must be at least 1");
  require(filters >= 1 && fc_dim >= 1, "cnn config: filters and fc_dim must be positive");
  require(n_classes >= 2, "cnn config: n_classes must be at least 2");
  require(kernel % 2 == 1, "cnn config: kernel must be odd, got " + std::to_string(kernel));
  require(pool >= 1, "cnn config: pool must be positive");
  require(pooled_length() >= 1, "cnn config: max_len " + std::to_string(max_len) + " pools to length 0 after " +
                                    std::to_string(conv_pairs) + " pairs");
  require(dropout_p >= 0.0 && dropout_p < 1.0, "cnn config: dropout_p must lie in [0, 1)");
  require(epochs >= 1 && batch_size >= 1, "cnn config: epochs and batch_size must be positive");
}

std::uint64_t parameter_count(const CnnConfig& cfg) {
  std::uint64_t n = 0, c_in = cfg.embed_dim;
  for (std::size_t p = 0; p < 2 * cfg.conv_pairs; ++p) {
    n += cfg.filters * cfg.kernel * c_in + cfg.filters;
    c_in = cfg.filters;
  }
  const std::uint64_t flat = cfg.flatten_width();
  n += cfg.fc_dim * flat + cfg.fc_dim;
  n += cfg.n_classes * cfg.fc_dim + cfg.n_classes;
  return n;
}

template <class T>
CnnModel<T> CnnModel<T>::zeros(const CnnConfig& cfg) {
  cfg.validate();
  CnnModel m;
  m.config = cfg;
  std::size_t c_in = cfg.embed_dim;
  for (std::size_t p = 0; p < 2 * cfg.conv_pairs; ++p) {
    m.convs.emplace_back(cfg.filters, cfg.kernel, c_in);
    c_in = cfg.filters;
  }
  m.fc = DenseLayer<T>(cfg.fc_dim, cfg.flatten_width());
  m.out = DenseLayer<T>(cfg.n_classes, cfg.fc_dim);
  return m;
}

template <class T>
CnnModel<T> CnnModel<T>::initialize(const CnnConfig& cfg) {
  CnnModel m = zeros(cfg);
  Rng rng(mix_seed(cfg.seed, 0x1417));
  for (auto& c : m.convs) init_uniform(c, rng);
  init_uniform(m.fc, rng);
  init_uniform(m.out, rng);
  return m;
}

template <class T>
std::vector<Tensor<T>*> CnnModel<T>::parameters() {
  std::vector<Tensor<T>*> ps;
  for (auto& c : convs) {
    ps.push_back(&c.kernels);
    ps.push_back(&c.bias);
  }
  for (auto* d : {&fc, &out}) {
    ps.push_back(&d->weights);
    ps.push_back(&d->bias);
  }
  return ps;
}

template <class T>
std::vector<const Tensor<T>*> CnnModel<T>::parameters() const {
  auto ps = const_cast<CnnModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

template <class T>
std::vector<std::string> CnnModel<T>::parameter_names(const CnnConfig& cfg) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < 2 * cfg.conv_pairs; ++i) {
    names.push_back("conv" + std::to_string(i) + ".kernels");
    names.push_back("conv" + std::to_string(i) + ".bias");
  }
  for (const char* d : {"fc", "out"}) {
    names.push_back(std::string(d) + ".weights");
    names.push_back(std::string(d) + ".bias");
  }
  return names;
}

template <class T>
std::uint64_t CnnModel<T>::allocated_parameters() const {
  std::uint64_t n = 0;
  for (const auto* t : parameters()) n += t->size();
  return n;
}

template <class T>
std::vector<T> cnn_forward(const CnnModel<T>& m, const Tensor<T>& input, bool train, std::uint64_t seed,
                           CnnTrace<T>* trace) {
  const auto& cfg = m.config;
  if (input.rank() != 2 || input.dim(0) != cfg.max_len || input.dim(1) != cfg.embed_dim)
    throw InputError("cnn_forward: expected a [" + std::to_string(cfg.max_len) + "," +
                     std::to_string(cfg.embed_dim) + "] input");
  CnnTrace<T> local;
  CnnTrace<T>& tr = trace ? *trace : local;
  tr = {};
  Rng rng(seed);

  Tensor<T> x = input;
  if (trace) tr.input = input;
  for (std::size_t p = 0; p < cfg.conv_pairs; ++p) {
    for (std::size_t q = 0; q < 2; ++q) {
      const auto& layer = m.convs[2 * p + q];
      Tensor<T> pre = conv1d_forward(x, layer);
      Tensor<T> act = relu(pre);
      if (trace) {
        tr.conv_in.push_back(std::move(x));
        tr.conv_pre.push_back(std::move(pre));
      }
      x = std::move(act);
    }
    auto pooled = maxpool1d(x, cfg.pool, cfg.pool);
    if (trace) {
      tr.pool_in_shape.push_back(x.shape);
      tr.pool_argmax.push_back(std::move(pooled.argmax));
    }
    x = std::move(pooled.out);
  }
  x.shape = {x.size()};
  Tensor<T> h = dropout(x, cfg.dropout_p, train, rng, trace ? &tr.mask1 : nullptr);
  Tensor<T> fc_pre = dense_forward(h, m.fc);
  Tensor<T> fc_act = relu(fc_pre);
  Tensor<T> h2 = dropout(fc_act, cfg.dropout_p, train, rng, trace ? &tr.mask2 : nullptr);
  Tensor<T> logits = dense_forward(h2, m.out);
  auto probs = softmax<T>(logits.data);
  if (trace) {
    tr.flat = std::move(x);
    tr.fc_in = std::move(h);
    tr.fc_pre = std::move(fc_pre);
    tr.out_in = std::move(h2);
    tr.probs = probs;
    tr.ready = true;
  }
  return probs;
}

template <class T>
T cnn_backward(const CnnModel<T>& m, const CnnTrace<T>& tr, std::size_t label, CnnModel<T>& grads) {
  if (!tr.ready) throw InvariantError("cnn_backward called without a recorded forward pass");
  const auto& cfg = m.config;
  const T loss = cross_entropy<T>(tr.probs, label);
  Tensor<T> g({cfg.n_classes});
  g.data = softmax_cross_entropy_grad<T>(tr.probs, label);

  Tensor<T> d_h2;
  dense_backward(tr.out_in, m.out, g, grads.out, &d_h2);
  Tensor<T> d_act = dropout_backward(d_h2, tr.mask2);
  Tensor<T> d_pre = relu_backward(tr.fc_pre, d_act);
  Tensor<T> d_h;
  dense_backward(tr.fc_in, m.fc, d_pre, grads.fc, &d_h);
  Tensor<T> d_x = dropout_backward(d_h, tr.mask1);

  const std::size_t pooled_len = cfg.pooled_length();
  d_x.shape = {pooled_len, cfg.filters};
  for (std::size_t p = cfg.conv_pairs; p-- > 0;) {
    d_x = maxpool1d_backward(d_x, tr.pool_argmax[p], tr.pool_in_shape[p]);
    for (std::size_t q = 2; q-- > 0;) {
      const std::size_t li = 2 * p + q;
      Tensor<T> d_pre_conv = relu_backward(tr.conv_pre[li], d_x);
      const bool need_dx = li > 0;
      conv1d_backward(tr.conv_in[li], m.convs[li], d_pre_conv, grads.convs[li], need_dx ? &d_x : nullptr);
    }
  }
  return loss;
}

template <class T>
Tensor<T> to_tensor(const encoders::SentenceMatrix& s) {
  Tensor<T> t({s.rows.rows(), s.rows.cols()});
  std::copy(s.rows.data().begin(), s.rows.data().end(), t.data.begin());
  return t;
}

std::vector<float> cnn_forward(const CnnModel<float>& m, const encoders::SentenceMatrix& s, bool train,
                               std::uint64_t seed) {
  return cnn_forward<float>(m, to_tensor<float>(s), train, seed);
}

template <class T>
std::size_t predict(std::span<const T> probs) {
  require(!probs.empty(), "predict: empty probability vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  require(!truth.empty(), "evaluate: empty evaluation set");
  require(predicted.size() == truth.size(), "evaluate: prediction and label counts differ");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

TokenizedSet tokenize_dataset(const corpus::Dataset& d, const corpus::TokenizerPolicy& policy) {
  TokenizedSet s;
  s.tokens = corpus::tokenize_all(d, policy);
  for (const auto& ex : d.examples) s.labels.push_back(ex.label);
  return s;
}

namespace {

std::vector<int> cnn_predict_all(const CnnModel<float>& m, const TokenizedSet& set,
                                 const embeddings::WordEmbeddings& emb, const embeddings::Vocabulary& vocab) {
  std::vector<int> out;
  out.reserve(set.size());
  encoders::EncoderConfig enc{m.config.max_len};
  for (const auto& toks : set.tokens) {
    auto probs = cnn_forward(m, encoders::encode_sentence_matrix(emb, vocab, toks, enc), false, 0);
    out.push_back(static_cast<int>(predict<float>(probs)));
  }
  return out;
}

}  // namespace

std::pair<CnnModel<float>, TrainReport> train_cnn(const TokenizedSet& train, const TokenizedSet& valid,
                                                  const embeddings::WordEmbeddings& emb,
                                                  const embeddings::Vocabulary& vocab, const CnnConfig& cfg) {
  cfg.validate();
  require(train.size() > 0, "train_cnn: empty training set");
  require(valid.size() > 0, "train_cnn: empty validation set");
  require(emb.dim() == cfg.embed_dim, "train_cnn: embeddings have dimension " + std::to_string(emb.dim()) +
                                          ", config expects " + std::to_string(cfg.embed_dim));
  for (const auto* set : {&train, &valid})
    for (int y : set->labels)
      require(y >= 0 && static_cast<std::size_t>(y) < cfg.n_classes,
              "train_cnn: label " + std::to_string(y) + " outside the configured " +
                  std::to_string(cfg.n_classes) + " classes");

  const auto start = std::chrono::steady_clock::now();
  auto model = CnnModel<float>::initialize(cfg);
  auto grads = CnnModel<float>::zeros(cfg);
  Optimizer<float> opt(cfg.optimizer);
  auto params = model.parameters();
  auto grad_list = std::as_const(grads).parameters();
  const encoders::EncoderConfig enc{cfg.max_len};

  TrainReport report;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  CnnTrace<float> trace;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffler(mix_seed(cfg.seed, 2 * epoch + 1));
    shuffler.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start_i = 0; start_i < order.size(); start_i += cfg.batch_size) {
      const std::size_t end_i = std::min(order.size(), start_i + cfg.batch_size);
      for (auto* g : grads.parameters()) g->zero();
      for (std::size_t b = start_i; b < end_i; ++b) {
        const std::size_t idx = order[b];
        auto input = to_tensor<float>(encoders::encode_sentence_matrix(emb, vocab, train.tokens[idx], enc));
        const std::uint64_t mask_seed = mix_seed(mix_seed(cfg.seed, 2 * epoch + 2), idx);
        cnn_forward<float>(model, input, true, mask_seed, &trace);
        loss_sum += cnn_backward<float>(model, trace, static_cast<std::size_t>(train.labels[idx]), grads);
      }
      const float inv = 1.0f / static_cast<float>(end_i - start_i);
      for (auto* g : grads.parameters())
        for (auto& v : g->data) v *= inv;
      opt.step(params, grad_list);
    }
    report.train_loss.push_back(loss_sum / static_cast<double>(train.size()));
    report.valid_accuracy.push_back(accuracy(cnn_predict_all(model, valid, emb, vocab), valid.labels));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

std::pair<CnnModel<float>, TrainReport> train_cnn(const corpus::Dataset& train, const corpus::Dataset& valid,
                                                  const embeddings::WordEmbeddings& emb,
                                                  const embeddings::Vocabulary& vocab, const CnnConfig& cfg) {
  require(train.label_map.size() == cfg.n_classes,
          "train_cnn: corpus has " + std::to_string(train.label_map.size()) + " classes, config expects " +
              std::to_string(cfg.n_classes));
  require(valid.label_map == train.label_map, "train_cnn: training and validation label maps differ");
  return train_cnn(tokenize_dataset(train), tokenize_dataset(valid), emb, vocab, cfg);
}

template struct CnnModel<float>;
template struct CnnModel<double>;
template std::vector<float> cnn_forward<float>(const CnnModel<float>&, const Tensor<float>&, bool, std::uint64_t,
                                               CnnTrace<float>*);
template std::vector<double> cnn_forward<double>(const CnnModel<double>&, const Tensor<double>&, bool,
                                                 std::uint64_t, CnnTrace<double>*);
template float cnn_backward<float>(const CnnModel<float>&, const CnnTrace<float>&, std::size_t, CnnModel<float>&);
template double cnn_backward<double>(const CnnModel<double>&, const CnnTrace<double>&, std::size_t,
                                     CnnModel<double>&);
template Tensor<float> to_tensor<float>(const encoders::SentenceMatrix&);
template Tensor<double> to_tensor<double>(const encoders::SentenceMatrix&);
template std::size_t predict<float>(std::span<const float>);
template std::size_t predict<double>(std::span<const double>);

}  // namespace medtext::models
