#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "medtext/rng.hpp"

// Minimal layer kernels for the sentence CNN. Every op is templated on the
// scalar type: float for training, double for gradient verification.
namespace medtext::neural {

template <class T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, T fill = T(0));

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  // 2-D access for [rows, cols] tensors.
  T& operator()(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  void zero();
  bool operator==(const Tensor&) const = default;
};

template <class To, class From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  Tensor<To> out;
  out.shape = t.shape;
  out.data.assign(t.data.begin(), t.data.end());
  return out;
}

/// Kernels are [C_out, k, C_in]; k is odd and the convolution is same-padded.
template <class T>
struct ConvLayer {
  Tensor<T> kernels;
  Tensor<T> bias;

  ConvLayer() = default;
  ConvLayer(std::size_t out_channels, std::size_t width, std::size_t in_channels);

  std::size_t out_channels() const { return kernels.dim(0); }
  std::size_t width() const { return kernels.dim(1); }
  std::size_t in_channels() const { return kernels.dim(2); }
};

/// weights [n_out, n_in], bias [n_out].
template <class T>
struct DenseLayer {
  Tensor<T> weights;
  Tensor<T> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t n_out, std::size_t n_in);

  std::size_t out_features() const { return weights.dim(0); }
  std::size_t in_features() const { return weights.dim(1); }
};

/// Glorot-uniform weights, zero biases.
template <class T>
void init_uniform(ConvLayer<T>& layer, Rng& rng);
template <class T>
void init_uniform(DenseLayer<T>& layer, Rng& rng);

/// x: [L, C_in] -> [L, C_out].
template <class T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const ConvLayer<T>& layer);

/// Accumulates parameter gradients into `grad`; writes dL/dx when dx is given.
template <class T>
void conv1d_backward(const Tensor<T>& x, const ConvLayer<T>& layer, const Tensor<T>& dout,
                     ConvLayer<T>& grad, Tensor<T>* dx);

template <class T>
struct Pooled {
  Tensor<T> out;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

/// Max over non-overlapping windows along the sequence; trailing remainder
/// positions are dropped and ties go to the earlier position.
template <class T>
Pooled<T> maxpool1d(const Tensor<T>& x, std::size_t window = 2, std::size_t stride = 2);

template <class T>
Tensor<T> maxpool1d_backward(const Tensor<T>& dout, const std::vector<std::size_t>& argmax,
                             const std::vector<std::size_t>& input_shape);

template <class T>
Tensor<T> relu(const Tensor<T>& x);
template <class T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& dout);

/// Per-element survivor scale: 0 or 1/(1-p). Empty in eval mode.
template <class T>
struct DropoutMask {
  std::vector<T> scale;
};

/// Inverted dropout; identity when !train.
template <class T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool train, Rng& rng, DropoutMask<T>* mask = nullptr);

template <class T>
Tensor<T> dropout_backward(const Tensor<T>& dout, const DropoutMask<T>& mask);

/// Treats x as a flat vector of in_features values.
template <class T>
Tensor<T> dense_forward(const Tensor<T>& x, const DenseLayer<T>& layer);

template <class T>
void dense_backward(const Tensor<T>& x, const DenseLayer<T>& layer, const Tensor<T>& dout,
                    DenseLayer<T>& grad, Tensor<T>* dx);

/// Max-subtracted softmax.
template <class T>
std::vector<T> softmax(std::span<const T> z);

/// -log p[label].
template <class T>
T cross_entropy(std::span<const T> p, std::size_t label);

/// dL/dz of cross_entropy(softmax(z), label) = softmax(z) - onehot(label).
template <class T>
std::vector<T> softmax_cross_entropy_grad(std::span<const T> probs, std::size_t label);

/// |a - g| / max(|a|, |g|, 1e-8)
double relative_error(double analytic, double numeric);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> numeric;
};

/// Central differences of `loss` w.r.t. every entry of `params`, compared
/// against `analytic`. `params` is restored before returning.
GradCheckResult grad_check(const std::function<double()>& loss, std::span<double> params,
                           std::span<const double> analytic, double h);

enum class OptimizerKind { sgd_momentum, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Holds one accumulator set per parameter tensor, shaped like it.
template <class T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads);

  const OptimizerConfig& config() const { return cfg_; }
  std::uint64_t steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<std::vector<T>> first_;   // velocity for sgd_momentum, m for adam
  std::vector<std::vector<T>> second_;  // adam only
  std::uint64_t t_ = 0;
};

}  // namespace medtext::neural
