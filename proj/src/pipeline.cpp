#include "medtext/pipeline.hpp"

#include <charconv>
#include <sstream>

#include "medtext/error.hpp"
#include "medtext/rng.hpp"

namespace medtext::harness {

using models::ModelFile;
using neural::Tensor;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::cnn: return "cnn";
    case Method::doc2vec_logr: return "doc2vec_logr";
    case Method::zeromean_logr: return "zeromean_logr";
    case Method::elimmean_logr: return "elimmean_logr";
    case Method::bow_logr: return "bow_logr";
  }
  throw InvariantError("unknown method");
}

Method parse_method(std::string_view tag) {
  for (Method m : kAllMethods)
    if (to_string(m) == tag) return m;
  throw InputError("unknown method '" + std::string(tag) +
                   "' (expected cnn, doc2vec_logr, zeromean_logr, elimmean_logr or bow_logr)");
}

void FeatureResources::check(Method method) const {
  switch (method) {
    case Method::doc2vec_logr:
      require(doc2vec && doc2vec_vocab, "method doc2vec_logr needs a doc2vec model (--doc2vec)");
      require(doc2vec->word_vectors.rows() == doc2vec_vocab->size(), "doc2vec model and vocabulary sizes differ");
      return;
    case Method::bow_logr:
      require(codebook != nullptr, "method bow_logr needs a codebook (--codebook)");
      [[fallthrough]];
    case Method::cnn:
    case Method::zeromean_logr:
    case Method::elimmean_logr:
      require(embeddings && vocab, "method " + std::string(to_string(method)) + " needs word embeddings (--embeddings)");
      require(embeddings->size() == vocab->size(), "embedding rows and vocabulary sizes differ");
      if (method == Method::bow_logr)
        require(codebook->dim() == embeddings->dim(),
                "codebook dimension " + std::to_string(codebook->dim()) + " differs from embedding dimension " +
                    std::to_string(embeddings->dim()));
      return;
  }
}

std::size_t feature_width(Method method, const FeatureResources& r) {
  switch (method) {
    case Method::doc2vec_logr: return r.doc2vec->dim();
    case Method::zeromean_logr:
    case Method::elimmean_logr: return r.embeddings->dim();
    case Method::bow_logr: return r.codebook->size();
    case Method::cnn: break;
  }
  throw InvariantError("feature_width: cnn consumes sentence matrices");
}

namespace {

std::uint64_t fnv1a(const encoders::Tokens& tokens) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens) {
    for (unsigned char c : t) h = (h ^ c) * 0x100000001b3ULL;
    h = (h ^ 0x20) * 0x100000001b3ULL;
  }
  return h;
}

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

template <class N>
N num(const ModelFile& f, const std::string& key) {
  const auto& s = f.get(key);
  N v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw InputError("model config: value of '" + key + "' is not a number");
  return v;
}

Tensor<float> to_tensor(const Matrix<float>& m) {
  Tensor<float> t({m.rows(), m.cols()});
  t.data = m.data();
  return t;
}

Matrix<float> to_matrix(const Tensor<float>& t, const std::string& name) {
  if (t.rank() != 2) throw InputError("model file: tensor '" + name + "' must be 2-D");
  Matrix<float> m(t.dim(0), t.dim(1));
  m.data() = t.data;
  return m;
}

std::string join_tokens(const embeddings::Vocabulary& v) {
  std::string s;
  for (std::size_t i = 2; i < v.size(); ++i) {
    if (i > 2) s += ' ';
    s += v.tokens()[i];
  }
  return s;
}

std::string join_counts(const embeddings::Vocabulary& v) {
  std::string s;
  for (std::size_t i = 2; i < v.size(); ++i) {
    if (i > 2) s += ' ';
    s += std::to_string(v.counts()[i]);
  }
  return s;
}

embeddings::Vocabulary vocab_from(const ModelFile& f, const std::string& key, const std::string& counts_key) {
  std::istringstream toks(f.get(key));
  std::vector<std::uint64_t> counts;
  if (!counts_key.empty()) {
    std::istringstream cs(f.get(counts_key));
    std::uint64_t c;
    while (cs >> c) counts.push_back(c);
  }
  embeddings::Vocabulary v;
  std::string t;
  std::size_t i = 0;
  while (toks >> t) {
    v.add(t, i < counts.size() ? counts[i] : 0);
    ++i;
  }
  if (!counts_key.empty() && counts.size() != i)
    throw InputError("model file: '" + counts_key + "' does not match '" + key + "'");
  return v;
}

void put_doc2vec_config(ModelFile& f, const embeddings::Doc2vecConfig& c) {
  f.set("doc2vec.dim", std::to_string(c.dim));
  f.set("doc2vec.epochs", std::to_string(c.epochs));
  f.set("doc2vec.window", std::to_string(c.window));
  f.set("doc2vec.negatives", std::to_string(c.negatives));
  f.set("doc2vec.learning_rate", fmt(c.learning_rate));
  f.set("doc2vec.infer_epochs", std::to_string(c.infer_epochs));
}

embeddings::Doc2vecConfig get_doc2vec_config(const ModelFile& f) {
  embeddings::Doc2vecConfig c;
  c.dim = num<std::size_t>(f, "doc2vec.dim");
  c.epochs = num<std::size_t>(f, "doc2vec.epochs");
  c.window = num<std::size_t>(f, "doc2vec.window");
  c.negatives = num<std::size_t>(f, "doc2vec.negatives");
  c.learning_rate = num<double>(f, "doc2vec.learning_rate");
  c.infer_epochs = num<std::size_t>(f, "doc2vec.infer_epochs");
  return c;
}

}  // namespace

std::vector<double> featurize(Method method, const FeatureResources& r, const encoders::Tokens& tokens) {
  switch (method) {
    case Method::zeromean_logr:
      return encoders::mean_embedding(*r.embeddings, *r.vocab, tokens, encoders::MeanMode::zero);
    case Method::elimmean_logr:
      return encoders::mean_embedding(*r.embeddings, *r.vocab, tokens, encoders::MeanMode::elim);
    case Method::bow_logr:
      return encoders::bow_histogram(*r.codebook, *r.embeddings, *r.vocab, tokens, r.bow);
    case Method::doc2vec_logr: {
      auto v = embeddings::infer_doc_vector(*r.doc2vec, *r.doc2vec_vocab, tokens, mix_seed(r.infer_seed, fnv1a(tokens)));
      return {v.begin(), v.end()};
    }
    case Method::cnn: break;
  }
  throw InvariantError("featurize: cnn consumes sentence matrices");
}

Matrix<double> featurize_all(Method method, const FeatureResources& r,
                             const std::vector<encoders::Tokens>& sentences) {
  Matrix<double> out(sentences.size(), feature_width(method, r));
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    auto v = featurize(method, r, sentences[i]);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> Classifier::probabilities(const encoders::Tokens& tokens) const {
  if (method == Method::cnn) {
    ensure(cnn.has_value(), "classifier: cnn method without a cnn model");
    auto s = encoders::encode_sentence_matrix(*features.embeddings, *features.vocab, tokens,
                                              encoders::EncoderConfig{cnn->config.max_len});
    auto p = models::cnn_forward(*cnn, s, false, 0);
    return {p.begin(), p.end()};
  }
  ensure(logr.has_value(), "classifier: logr method without a logr model");
  return models::logreg_probabilities(*logr, featurize(method, features, tokens));
}

std::vector<double> Classifier::probabilities(std::string_view text) const {
  return probabilities(corpus::tokenize(text, policy));
}

int Classifier::predict(const encoders::Tokens& tokens) const {
  auto p = probabilities(tokens);
  return static_cast<int>(models::predict<double>(p));
}

ModelFile Classifier::to_file() const {
  ModelFile f;
  f.set("format", "medtext-classifier");
  f.set("method", std::string(to_string(method)));
  f.set("seed", std::to_string(seed));
  f.set("labels", std::to_string(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) f.set("label." + std::to_string(i), labels.name(static_cast<int>(i)));
  f.set("tokenizer.lowercase", policy.lowercase ? "1" : "0");
  f.set("tokenizer.punctuation_split", policy.punctuation_split ? "1" : "0");
  if (method == Method::doc2vec_logr) {
    put_doc2vec_config(f, features.doc2vec->config);
    f.set("doc2vec.infer_seed", std::to_string(features.infer_seed));
    f.set("doc2vec.vocab", join_tokens(*features.doc2vec_vocab));
    f.set("doc2vec.counts", join_counts(*features.doc2vec_vocab));
    f.add_tensor("doc2vec.word_vectors", to_tensor(features.doc2vec->word_vectors));
    f.add_tensor("doc2vec.output_weights", to_tensor(features.doc2vec->output_weights));
  } else {
    f.set("vocab", join_tokens(*features.vocab));
    f.add_tensor("embeddings", to_tensor(features.embeddings->matrix));
  }
  if (method == Method::bow_logr) {
    f.set("bow.k", std::to_string(features.codebook->size()));
    f.set("bow.k_soft", std::to_string(features.bow.k_soft));
    f.set("bow.normalize", features.bow.normalize ? "1" : "0");
    f.add_tensor("codebook", to_tensor(features.codebook->centers));
  }
  if (method == Method::cnn) models::append_cnn(f, *cnn);
  else models::append_logreg(f, *logr);
  return f;
}

Classifier Classifier::from_file(const ModelFile& f) {
  if (!f.has("format") || f.get("format") != "medtext-classifier")
    throw InputError("model file is not a classifier bundle");
  Classifier c;
  c.method = parse_method(f.get("method"));
  c.seed = num<std::uint64_t>(f, "seed");
  const auto n_labels = num<std::size_t>(f, "labels");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n_labels; ++i) names.push_back(f.get("label." + std::to_string(i)));
  c.labels = corpus::LabelMap(std::move(names));
  c.policy.lowercase = f.get("tokenizer.lowercase") == "1";
  c.policy.punctuation_split = f.get("tokenizer.punctuation_split") == "1";
  if (c.method == Method::doc2vec_logr) {
    auto vocab = vocab_from(f, "doc2vec.vocab", "doc2vec.counts");
    embeddings::Doc2vecModel m{to_matrix(f.tensor("doc2vec.word_vectors"), "doc2vec.word_vectors"),
                               to_matrix(f.tensor("doc2vec.output_weights"), "doc2vec.output_weights"),
                               Matrix<float>(0, 0), get_doc2vec_config(f)};
    c.features.doc2vec = std::make_shared<const embeddings::Doc2vecModel>(std::move(m));
    c.features.doc2vec_vocab = std::make_shared<const embeddings::Vocabulary>(std::move(vocab));
    c.features.infer_seed = num<std::uint64_t>(f, "doc2vec.infer_seed");
  } else {
    c.features.vocab = std::make_shared<const embeddings::Vocabulary>(vocab_from(f, "vocab", ""));
    c.features.embeddings = std::make_shared<const embeddings::WordEmbeddings>(
        embeddings::WordEmbeddings{to_matrix(f.tensor("embeddings"), "embeddings")});
  }
  if (c.method == Method::bow_logr) {
    c.features.codebook =
        std::make_shared<const encoders::Codebook>(encoders::Codebook{to_matrix(f.tensor("codebook"), "codebook")});
    c.features.bow.k = c.features.codebook->size();
    c.features.bow.k_soft = num<std::size_t>(f, "bow.k_soft");
    c.features.bow.normalize = f.get("bow.normalize") == "1";
  }
  c.features.check(c.method);
  if (c.method == Method::cnn) {
    c.cnn = models::extract_cnn(f);
    require(c.cnn->config.n_classes == c.labels.size(), "model file: class count differs from label count");
    require(c.cnn->config.embed_dim == c.features.embeddings->dim(), "model file: embedding width mismatch");
  } else {
    c.logr = models::extract_logreg(f);
    require(c.logr->config.n_classes == c.labels.size(), "model file: class count differs from label count");
    require(c.logr->config.n_features == feature_width(c.method, c.features), "model file: feature width mismatch");
  }
  return c;
}

void Classifier::save(const std::filesystem::path& path) const { models::write_model_file(to_file(), path); }

Classifier Classifier::load(const std::filesystem::path& path) { return from_file(models::read_model_file(path)); }

ModelFile doc2vec_to_file(const embeddings::Doc2vecModel& m, const embeddings::Vocabulary& vocab, std::uint64_t seed) {
  ModelFile f;
  f.set("format", "medtext-doc2vec");
  f.set("seed", std::to_string(seed));
  put_doc2vec_config(f, m.config);
  f.set("doc2vec.vocab", join_tokens(vocab));
  f.set("doc2vec.counts", join_counts(vocab));
  f.add_tensor("doc2vec.word_vectors", to_tensor(m.word_vectors));
  f.add_tensor("doc2vec.output_weights", to_tensor(m.output_weights));
  f.add_tensor("doc2vec.doc_vectors", to_tensor(m.doc_vectors));
  return f;
}

std::pair<embeddings::Doc2vecModel, embeddings::Vocabulary> doc2vec_from_file(const ModelFile& f) {
  if (!f.has("format") || f.get("format") != "medtext-doc2vec")
    throw InputError("model file is not a doc2vec model");
  auto vocab = vocab_from(f, "doc2vec.vocab", "doc2vec.counts");
  embeddings::Doc2vecModel m{to_matrix(f.tensor("doc2vec.word_vectors"), "doc2vec.word_vectors"),
                             to_matrix(f.tensor("doc2vec.output_weights"), "doc2vec.output_weights"),
                             to_matrix(f.tensor("doc2vec.doc_vectors"), "doc2vec.doc_vectors"),
                             get_doc2vec_config(f)};
  require(m.word_vectors.rows() == vocab.size() && m.output_weights.rows() == vocab.size(),
          "doc2vec model: tensor rows do not match the vocabulary");
  return {std::move(m), std::move(vocab)};
}

}  // namespace medtext::harness
