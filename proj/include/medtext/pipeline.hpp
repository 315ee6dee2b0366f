#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medtext/corpus.hpp"
#include "medtext/embeddings.hpp"
#include "medtext/encoders.hpp"
#include "medtext/models.hpp"

// A trained classifier together with everything needed to featurize raw
// text: label names, tokenizer policy and the frozen feature resources.
namespace medtext::harness {

enum class Method { cnn, doc2vec_logr, zeromean_logr, elimmean_logr, bow_logr };

inline constexpr Method kAllMethods[] = {Method::cnn, Method::doc2vec_logr, Method::zeromean_logr,
                                         Method::elimmean_logr, Method::bow_logr};

std::string_view to_string(Method m);
Method parse_method(std::string_view tag);

struct FeatureResources {
  std::shared_ptr<const embeddings::WordEmbeddings> embeddings;
  std::shared_ptr<const embeddings::Vocabulary> vocab;
  std::shared_ptr<const encoders::Codebook> codebook;
  encoders::BowConfig bow;
  std::shared_ptr<const embeddings::Doc2vecModel> doc2vec;
  std::shared_ptr<const embeddings::Vocabulary> doc2vec_vocab;
  std::uint64_t infer_seed = 0;

  /// Throws unless the resources `method` needs are present and consistent.
  void check(Method method) const;
};

/// Feature width of the logistic-regression methods.
std::size_t feature_width(Method method, const FeatureResources& r);

/// Feature vector for the logistic-regression methods. Doc2vec inference is
/// seeded from the resources' infer_seed and the token content, so the same
/// sentence always maps to the same vector.
std::vector<double> featurize(Method method, const FeatureResources& r, const encoders::Tokens& tokens);

Matrix<double> featurize_all(Method method, const FeatureResources& r,
                             const std::vector<encoders::Tokens>& sentences);

class Classifier {
 public:
  Method method = Method::cnn;
  corpus::LabelMap labels;
  corpus::TokenizerPolicy policy;
  std::uint64_t seed = 0;
  FeatureResources features;
  std::optional<models::CnnModel<float>> cnn;
  std::optional<models::LogRModel> logr;

  std::vector<double> probabilities(const encoders::Tokens& tokens) const;
  std::vector<double> probabilities(std::string_view text) const;
  int predict(const encoders::Tokens& tokens) const;

  models::ModelFile to_file() const;
  static Classifier from_file(const models::ModelFile& f);

  void save(const std::filesystem::path& path) const;
  static Classifier load(const std::filesystem::path& path);
};

/// Doc2vec models persist in the same binary container.
models::ModelFile doc2vec_to_file(const embeddings::Doc2vecModel& m, const embeddings::Vocabulary& vocab,
                                  std::uint64_t seed);
std::pair<embeddings::Doc2vecModel, embeddings::Vocabulary> doc2vec_from_file(const models::ModelFile& f);

}  // namespace medtext::harness
