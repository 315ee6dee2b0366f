#include "medtext/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medtext/error.hpp"

namespace medtext::neural {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void require_shape(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw InputError(std::string(op) + ": shape mismatch (" + detail + ")");
}

std::string dims_str(const std::vector<std::size_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

}  // namespace

template <class T>
Tensor<T>::Tensor(std::vector<std::size_t> dims, T fill) : shape(std::move(dims)), data(product(shape), fill) {}

template <class T>
void Tensor<T>::zero() {
  std::fill(data.begin(), data.end(), T(0));
}

template <class T>
ConvLayer<T>::ConvLayer(std::size_t out_channels, std::size_t width, std::size_t in_channels)
    : kernels({out_channels, width, in_channels}), bias({out_channels}) {
  require(width % 2 == 1, "conv: kernel width must be odd, got " + std::to_string(width));
}

template <class T>
DenseLayer<T>::DenseLayer(std::size_t n_out, std::size_t n_in) : weights({n_out, n_in}), bias({n_out}) {}

template <class T>
void init_uniform(ConvLayer<T>& layer, Rng& rng) {
  const double fan_in = static_cast<double>(layer.width() * layer.in_channels());
  const double fan_out = static_cast<double>(layer.width() * layer.out_channels());
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& w : layer.kernels.data) w = static_cast<T>(rng.uniform(-a, a));
  layer.bias.zero();
}

template <class T>
void init_uniform(DenseLayer<T>& layer, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(layer.in_features() + layer.out_features()));
  for (auto& w : layer.weights.data) w = static_cast<T>(rng.uniform(-a, a));
  layer.bias.zero();
}

template <class T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const ConvLayer<T>& layer) {
  require_shape(x.rank() == 2 && x.dim(1) == layer.in_channels(), "conv1d_forward",
                "input " + dims_str(x.shape) + ", kernels " + dims_str(layer.kernels.shape));
  const std::size_t L = x.dim(0), C_in = layer.in_channels(), C_out = layer.out_channels();
  const std::size_t k = layer.width(), half = k / 2;
  Tensor<T> out({L, C_out});
  for (std::size_t t = 0; t < L; ++t) {
    T* o = &out.data[t * C_out];
    for (std::size_t c = 0; c < C_out; ++c) o[c] = layer.bias.data[c];
    for (std::size_t j = 0; j < k; ++j) {
      // Source position t + j - half; zero outside [0, L).
      if (t + j < half || t + j - half >= L) continue;
      const T* xs = &x.data[(t + j - half) * C_in];
      for (std::size_t c = 0; c < C_out; ++c) {
        const T* w = &layer.kernels.data[(c * k + j) * C_in];
        T acc = 0;
        for (std::size_t i = 0; i < C_in; ++i) acc += w[i] * xs[i];
        o[c] += acc;
      }
    }
  }
  return out;
}

template <class T>
void conv1d_backward(const Tensor<T>& x, const ConvLayer<T>& layer, const Tensor<T>& dout,
                     ConvLayer<T>& grad, Tensor<T>* dx) {
  const std::size_t L = x.dim(0), C_in = layer.in_channels(), C_out = layer.out_channels();
  const std::size_t k = layer.width(), half = k / 2;
  require_shape(dout.rank() == 2 && dout.dim(0) == L && dout.dim(1) == C_out, "conv1d_backward",
                "grad " + dims_str(dout.shape));
  require_shape(grad.kernels.shape == layer.kernels.shape, "conv1d_backward", "gradient buffer");
  if (dx) *dx = Tensor<T>(x.shape);
  for (std::size_t t = 0; t < L; ++t) {
    const T* g = &dout.data[t * C_out];
    for (std::size_t c = 0; c < C_out; ++c) grad.bias.data[c] += g[c];
    for (std::size_t j = 0; j < k; ++j) {
      if (t + j < half || t + j - half >= L) continue;
      const std::size_t src = t + j - half;
      const T* xs = &x.data[src * C_in];
      T* dxs = dx ? &dx->data[src * C_in] : nullptr;
      for (std::size_t c = 0; c < C_out; ++c) {
        const T gc = g[c];
        if (gc == T(0)) continue;
        const std::size_t base = (c * k + j) * C_in;
        T* gw = &grad.kernels.data[base];
        for (std::size_t i = 0; i < C_in; ++i) gw[i] += gc * xs[i];
        if (dxs) {
          const T* w = &layer.kernels.data[base];
          for (std::size_t i = 0; i < C_in; ++i) dxs[i] += gc * w[i];
        }
      }
    }
  }
}

template <class T>
Pooled<T> maxpool1d(const Tensor<T>& x, std::size_t window, std::size_t stride) {
  require_shape(x.rank() == 2, "maxpool1d", "input " + dims_str(x.shape));
  require(window >= 1 && stride >= 1, "maxpool1d: window and stride must be positive");
  const std::size_t L = x.dim(0), C = x.dim(1);
  if (L < window)
    throw InputError("maxpool1d: sequence length " + std::to_string(L) + " is shorter than the window " +
                     std::to_string(window));
  const std::size_t out_len = (L - window) / stride + 1;
  Pooled<T> p{Tensor<T>({out_len, C}), std::vector<std::size_t>(out_len * C)};
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t best = t * stride * C + c;
      for (std::size_t w = 1; w < window; ++w) {
        const std::size_t idx = (t * stride + w) * C + c;
        if (x.data[idx] > x.data[best]) best = idx;
      }
      p.out.data[t * C + c] = x.data[best];
      p.argmax[t * C + c] = best;
    }
  }
  return p;
}

template <class T>
Tensor<T> maxpool1d_backward(const Tensor<T>& dout, const std::vector<std::size_t>& argmax,
                             const std::vector<std::size_t>& input_shape) {
  require_shape(dout.size() == argmax.size(), "maxpool1d_backward", "gradient vs argmax map");
  Tensor<T> dx(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) dx.data[argmax[i]] += dout.data[i];
  return dx;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& dout) {
  require_shape(pre.shape == dout.shape, "relu_backward", dims_str(pre.shape) + " vs " + dims_str(dout.shape));
  Tensor<T> dx = dout;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (!(pre.data[i] > T(0))) dx.data[i] = T(0);
  return dx;
}

template <class T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool train, Rng& rng, DropoutMask<T>* mask) {
  if (!(p >= 0.0 && p < 1.0)) throw InputError("dropout: rate must lie in [0, 1), got " + std::to_string(p));
  if (mask) mask->scale.clear();
  if (!train || p == 0.0) {
    if (mask && train) mask->scale.assign(x.size(), T(1));
    return x;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  Tensor<T> y = x;
  std::vector<T> scale(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    scale[i] = rng.uniform() < p ? T(0) : keep_scale;
    y.data[i] *= scale[i];
  }
  if (mask) mask->scale = std::move(scale);
  return y;
}

template <class T>
Tensor<T> dropout_backward(const Tensor<T>& dout, const DropoutMask<T>& mask) {
  if (mask.scale.empty()) return dout;
  require_shape(mask.scale.size() == dout.size(), "dropout_backward", "mask size");
  Tensor<T> dx = dout;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] *= mask.scale[i];
  return dx;
}

template <class T>
Tensor<T> dense_forward(const Tensor<T>& x, const DenseLayer<T>& layer) {
  const std::size_t n_in = layer.in_features(), n_out = layer.out_features();
  require_shape(x.size() == n_in, "dense_forward",
                "input has " + std::to_string(x.size()) + " values, layer expects " + std::to_string(n_in));
  Tensor<T> y({n_out});
  for (std::size_t o = 0; o < n_out; ++o) {
    const T* w = &layer.weights.data[o * n_in];
    T acc = layer.bias.data[o];
    for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x.data[i];
    y.data[o] = acc;
  }
  return y;
}

template <class T>
void dense_backward(const Tensor<T>& x, const DenseLayer<T>& layer, const Tensor<T>& dout,
                    DenseLayer<T>& grad, Tensor<T>* dx) {
  const std::size_t n_in = layer.in_features(), n_out = layer.out_features();
  require_shape(dout.size() == n_out && x.size() == n_in, "dense_backward", "input or gradient size");
  if (dx) *dx = Tensor<T>(x.shape);
  for (std::size_t o = 0; o < n_out; ++o) {
    const T g = dout.data[o];
    grad.bias.data[o] += g;
    if (g == T(0)) continue;
    T* gw = &grad.weights.data[o * n_in];
    for (std::size_t i = 0; i < n_in; ++i) gw[i] += g * x.data[i];
    if (dx) {
      const T* w = &layer.weights.data[o * n_in];
      for (std::size_t i = 0; i < n_in; ++i) dx->data[i] += g * w[i];
    }
  }
}

template <class T>
std::vector<T> softmax(std::span<const T> z) {
  require(!z.empty(), "softmax: empty input");
  const T m = *std::max_element(z.begin(), z.end());
  std::vector<T> p(z.size());
  T sum = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

template <class T>
T cross_entropy(std::span<const T> p, std::size_t label) {
  if (label >= p.size())
    throw InputError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                     std::to_string(p.size()) + " classes");
  return -std::log(p[label]);
}

template <class T>
std::vector<T> softmax_cross_entropy_grad(std::span<const T> probs, std::size_t label) {
  if (label >= probs.size())
    throw InputError("cross_entropy: label " + std::to_string(label) + " out of range");
  std::vector<T> g(probs.begin(), probs.end());
  g[label] -= T(1);
  return g;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<double()>& loss, std::span<double> params,
                           std::span<const double> analytic, double h) {
  require(params.size() == analytic.size(), "grad_check: parameter and gradient sizes differ");
  GradCheckResult r;
  r.numeric.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss();
    params[i] = saved - h;
    const double down = loss();
    params[i] = saved;
    r.numeric[i] = (up - down) / (2.0 * h);
    const double e = relative_error(analytic[i], r.numeric[i]);
    if (e > r.max_relative_error) {
      r.max_relative_error = e;
      r.worst_index = i;
    }
  }
  return r;
}

template <class T>
void Optimizer<T>::step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads) {
  require(params.size() == grads.size(), "optimizer: parameter and gradient lists differ in length");
  if (first_.empty()) {
    for (auto* p : params) {
      first_.emplace_back(p->size(), T(0));
      if (cfg_.kind == OptimizerKind::adam) second_.emplace_back(p->size(), T(0));
    }
  }
  require(first_.size() == params.size(), "optimizer: parameter list changed between steps");
  ++t_;
  const T lr = static_cast<T>(cfg_.learning_rate);
  for (std::size_t n = 0; n < params.size(); ++n) {
    auto& p = params[n]->data;
    const auto& g = grads[n]->data;
    if (p.size() != g.size() || p.size() != first_[n].size())
      throw InputError("optimizer: shape mismatch for parameter tensor " + std::to_string(n));
    auto& m = first_[n];
    if (cfg_.kind == OptimizerKind::sgd_momentum) {
      const T mu = static_cast<T>(cfg_.momentum);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = mu * m[i] + g[i];
        p[i] -= lr * m[i];
      }
    } else {
      auto& v = second_[n];
      const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
      const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
      const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
      const T eps = static_cast<T>(cfg_.epsilon);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T mhat = m[i] / c1, vhat = v[i] / c2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
}

#define MEDTEXT_INSTANTIATE_NEURAL(T)                                                              \
  template struct Tensor<T>;                                                                       \
  template struct ConvLayer<T>;                                                                    \
  template struct DenseLayer<T>;                                                                   \
  template class Optimizer<T>;                                                                     \
  template void init_uniform<T>(ConvLayer<T>&, Rng&);                                              \
  template void init_uniform<T>(DenseLayer<T>&, Rng&);                                             \
  template Tensor<T> conv1d_forward<T>(const Tensor<T>&, const ConvLayer<T>&);                     \
  template void conv1d_backward<T>(const Tensor<T>&, const ConvLayer<T>&, const Tensor<T>&,        \
                                   ConvLayer<T>&, Tensor<T>*);                                     \
  template Pooled<T> maxpool1d<T>(const Tensor<T>&, std::size_t, std::size_t);                     \
  template Tensor<T> maxpool1d_backward<T>(const Tensor<T>&, const std::vector<std::size_t>&,      \
                                           const std::vector<std::size_t>&);                       \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                    \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> dropout<T>(const Tensor<T>&, double, bool, Rng&, DropoutMask<T>*);            \
  template Tensor<T> dropout_backward<T>(const Tensor<T>&, const DropoutMask<T>&);                 \
  template Tensor<T> dense_forward<T>(const Tensor<T>&, const DenseLayer<T>&);                     \
  template void dense_backward<T>(const Tensor<T>&, const DenseLayer<T>&, const Tensor<T>&,        \
                                  DenseLayer<T>&, Tensor<T>*);                                     \
  template std::vector<T> softmax<T>(std::span<const T>);                                          \
  template T cross_entropy<T>(std::span<const T>, std::size_t);                                    \
  template std::vector<T> softmax_cross_entropy_grad<T>(std::span<const T>, std::size_t);

MEDTEXT_INSTANTIATE_NEURAL(float)
MEDTEXT_INSTANTIATE_NEURAL(double)

}  // namespace medtext::neural
