#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "medtext/corpus.hpp"
#include "medtext/embeddings.hpp"
#include "medtext/encoders.hpp"
#include "medtext/matrix.hpp"
#include "medtext/neural.hpp"

namespace medtext::models {

using neural::Tensor;

/// Architecture and training budget of the sentence CNN:
///   [conv -> relu -> conv -> relu -> maxpool] x conv_pairs, flatten, dropout,
///   dense(fc_dim) -> relu, dropout, dense(n_classes), softmax.
struct CnnConfig {
  std::size_t max_len = 50;
  std::size_t embed_dim = 100;
  std::size_t conv_pairs = 2;
  std::size_t filters = 256;
  std::size_t kernel = 5;
  std::size_t pool = 2;
  double dropout_p = 0.5;
  std::size_t fc_dim = 128;
  std::size_t n_classes = 26;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  neural::OptimizerConfig optimizer;
  std::uint64_t seed = 0;

  /// Sequence length reaching the flatten step (0 when infeasible).
  std::size_t pooled_length() const;
  std::size_t flatten_width() const { return pooled_length() * filters; }
  void validate() const;
};

/// Closed-form scalar count of a CNN built from `cfg`.
std::uint64_t parameter_count(const CnnConfig& cfg);

template <class T>
struct CnnModel {
  CnnConfig config;
  std::vector<neural::ConvLayer<T>> convs;  // 2 per pair
  neural::DenseLayer<T> fc;
  neural::DenseLayer<T> out;

  /// Zero-valued parameters shaped by `cfg`.
  static CnnModel zeros(const CnnConfig& cfg);
  /// Glorot-uniform weights, zero biases, seeded by cfg.seed.
  static CnnModel initialize(const CnnConfig& cfg);

  /// Parameter tensors in a fixed order, with matching names.
  std::vector<Tensor<T>*> parameters();
  std::vector<const Tensor<T>*> parameters() const;
  static std::vector<std::string> parameter_names(const CnnConfig& cfg);
  std::uint64_t allocated_parameters() const;
};

/// Intermediates recorded by a forward pass for backpropagation.
template <class T>
struct CnnTrace {
  bool ready = false;
  Tensor<T> input;
  std::vector<Tensor<T>> conv_in;   // input to each conv
  std::vector<Tensor<T>> conv_pre;  // pre-activation of each conv
  std::vector<std::vector<std::size_t>> pool_in_shape;
  std::vector<std::vector<std::size_t>> pool_argmax;
  Tensor<T> flat;
  neural::DropoutMask<T> mask1;
  Tensor<T> fc_in;
  Tensor<T> fc_pre;
  neural::DropoutMask<T> mask2;
  Tensor<T> out_in;
  std::vector<T> probs;
};

/// Class probabilities for one [max_len, embed_dim] input. Dropout is active
/// only when `train`, with masks drawn from `seed`.
template <class T>
std::vector<T> cnn_forward(const CnnModel<T>& m, const Tensor<T>& input, bool train, std::uint64_t seed,
                           CnnTrace<T>* trace = nullptr);

std::vector<float> cnn_forward(const CnnModel<float>& m, const encoders::SentenceMatrix& s, bool train,
                               std::uint64_t seed);

/// Backpropagates cross-entropy against `label` through a recorded trace,
/// accumulating into `grads`. Returns the loss.
template <class T>
T cnn_backward(const CnnModel<T>& m, const CnnTrace<T>& trace, std::size_t label, CnnModel<T>& grads);

template <class T>
Tensor<T> to_tensor(const encoders::SentenceMatrix& s);

struct TrainReport {
  std::vector<double> train_loss;      // mean over the epoch
  std::vector<double> valid_accuracy;  // after each epoch
  double wall_seconds = 0.0;
};

/// Token lists plus labels; the CNN encodes them against frozen embeddings.
struct TokenizedSet {
  std::vector<encoders::Tokens> tokens;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

TokenizedSet tokenize_dataset(const corpus::Dataset& d, const corpus::TokenizerPolicy& policy = {});

std::pair<CnnModel<float>, TrainReport> train_cnn(const TokenizedSet& train, const TokenizedSet& valid,
                                                  const embeddings::WordEmbeddings& emb,
                                                  const embeddings::Vocabulary& vocab, const CnnConfig& cfg);

std::pair<CnnModel<float>, TrainReport> train_cnn(const corpus::Dataset& train, const corpus::Dataset& valid,
                                                  const embeddings::WordEmbeddings& emb,
                                                  const embeddings::Vocabulary& vocab, const CnnConfig& cfg);

struct LogRConfig {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  double l2_lambda = 1e-4;
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LogRModel {
  LogRConfig config;
  Tensor<float> weights;  // [n_classes, n_features]
  Tensor<float> bias;     // [n_classes]
};

/// Mean softmax cross-entropy over `rows` plus (l2_lambda/2)*||W||^2.
/// Gradients are overwritten.
double logreg_loss_grad(std::span<const double> weights, std::span<const double> bias,
                        const Matrix<double>& features, std::span<const int> labels,
                        std::span<const std::size_t> rows, double l2_lambda, std::span<double> grad_weights,
                        std::span<double> grad_bias);

/// Mini-batch gradient descent from zero weights. Validation accuracy is
/// recorded per epoch when a validation set is supplied.
std::pair<LogRModel, TrainReport> train_logreg(const Matrix<double>& features, const std::vector<int>& labels,
                                               const LogRConfig& cfg, const Matrix<double>* valid_features = nullptr,
                                               const std::vector<int>* valid_labels = nullptr);

std::vector<double> logreg_probabilities(const LogRModel& m, std::span<const double> x);

/// Argmax with ties going to the lowest class id.
template <class T>
std::size_t predict(std::span<const T> probs);

/// correct / total; throws on an empty set.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

// --- persistence -----------------------------------------------------------

inline constexpr std::uint32_t kFormatVersion = 1;

/// Binary container: magic "MTCF", u32 version, u64-length-prefixed
/// key=value config block, u32 tensor count, then per tensor: u32 name
/// length + bytes, u32 rank, u64 dims, raw little-endian f32 values.
struct ModelFile {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const;
  void add_tensor(const std::string& name, Tensor<float> t);
  const Tensor<float>& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

std::string encode_model_file(const ModelFile& f);
ModelFile decode_model_file(std::string_view bytes, const std::string& source = "model");
void write_model_file(const ModelFile& f, const std::filesystem::path& path);
ModelFile read_model_file(const std::filesystem::path& path);

void append_cnn(ModelFile& f, const CnnModel<float>& m);
CnnModel<float> extract_cnn(const ModelFile& f);
void append_logreg(ModelFile& f, const LogRModel& m);
LogRModel extract_logreg(const ModelFile& f);

void save_model(const CnnModel<float>& m, const std::filesystem::path& path);
void save_model(const LogRModel& m, const std::filesystem::path& path);
CnnModel<float> load_cnn(const std::filesystem::path& path);
LogRModel load_logreg(const std::filesystem::path& path);

/// Config key=value snapshot of a CNN config (used in model files and reports).
std::vector<std::pair<std::string, std::string>> describe(const CnnConfig& cfg);
CnnConfig cnn_config_from(const ModelFile& f);
std::vector<std::pair<std::string, std::string>> describe(const LogRConfig& cfg);

}  // namespace medtext::models
