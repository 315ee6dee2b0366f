#include <chrono>
#include <cmath>
#include <numeric>

#include "medtext/error.hpp"
#include "medtext/models.hpp"

namespace medtext::models {

void LogRConfig::validate() const {
  require(n_features >= 1 && n_classes >= 2, "logreg config: need at least one feature and two classes");
  require(l2_lambda >= 0.0, "logreg config: l2_lambda must be non-negative");
  require(learning_rate > 0.0, "logreg config: learning_rate must be positive");
  require(epochs >= 1 && batch_size >= 1, "logreg config: epochs and batch_size must be positive");
}

namespace {

void logits(std::span<const double> w, std::span<const double> b, std::span<const double> x, std::span<double> z) {
  const std::size_t F = x.size();
  for (std::size_t c = 0; c < z.size(); ++c) {
    double acc = b[c];
    const double* row = &w[c * F];
    for (std::size_t i = 0; i < F; ++i) acc += row[i] * x[i];
    z[c] = acc;
  }
}

}  // namespace

double logreg_loss_grad(std::span<const double> weights, std::span<const double> bias,
                        const Matrix<double>& features, std::span<const int> labels,
                        std::span<const std::size_t> rows, double l2_lambda, std::span<double> grad_weights,
                        std::span<double> grad_bias) {
  const std::size_t C = bias.size(), F = features.cols();
  require(weights.size() == C * F && grad_weights.size() == C * F && grad_bias.size() == C,
          "logreg: parameter shapes do not match the feature width");
  require(!rows.empty(), "logreg: empty batch");
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
  std::vector<double> z(C);
  double loss = 0.0;
  for (std::size_t r : rows) {
    auto x = features.row(r);
    logits(weights, bias, x, z);
    auto p = neural::softmax<double>(z);
    const auto y = static_cast<std::size_t>(labels[r]);
    loss += neural::cross_entropy<double>(p, y);
    p[y] -= 1.0;
    for (std::size_t c = 0; c < C; ++c) {
      grad_bias[c] += p[c];
      double* gw = &grad_weights[c * F];
      for (std::size_t i = 0; i < F; ++i) gw[i] += p[c] * x[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  loss *= inv;
  for (auto& g : grad_weights) g *= inv;
  for (auto& g : grad_bias) g *= inv;
  double sq = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    sq += weights[i] * weights[i];
    grad_weights[i] += l2_lambda * weights[i];
  }
  return loss + 0.5 * l2_lambda * sq;
}

std::vector<double> logreg_probabilities(const LogRModel& m, std::span<const double> x) {
  const std::size_t C = m.config.n_classes, F = m.config.n_features;
  require(x.size() == F, "logreg: feature vector has " + std::to_string(x.size()) + " values, model expects " +
                             std::to_string(F));
  std::vector<double> z(C);
  for (std::size_t c = 0; c < C; ++c) {
    double acc = m.bias.data[c];
    for (std::size_t i = 0; i < F; ++i) acc += static_cast<double>(m.weights.data[c * F + i]) * x[i];
    z[c] = acc;
  }
  return neural::softmax<double>(z);
}

std::pair<LogRModel, TrainReport> train_logreg(const Matrix<double>& features, const std::vector<int>& labels,
                                               const LogRConfig& cfg, const Matrix<double>* valid_features,
                                               const std::vector<int>* valid_labels) {
  cfg.validate();
  const std::size_t N = features.rows(), F = cfg.n_features, C = cfg.n_classes;
  require(N >= 1, "logreg: no training examples");
  require(features.cols() == F, "logreg: features have width " + std::to_string(features.cols()) +
                                    ", config expects " + std::to_string(F));
  require(labels.size() == N, "logreg: label count differs from example count");
  for (int y : labels)
    require(y >= 0 && static_cast<std::size_t>(y) < C, "logreg: label " + std::to_string(y) + " out of range");
  for (double v : features.data()) require(std::isfinite(v), "logreg: non-finite feature value");
  const bool has_valid = valid_features && valid_labels;
  if (has_valid)
    require(valid_features->cols() == F && valid_features->rows() == valid_labels->size(),
            "logreg: validation features do not match");

  const auto start = std::chrono::steady_clock::now();
  std::vector<double> w(C * F, 0.0), b(C, 0.0), gw(C * F), gb(C);
  std::vector<std::size_t> order(N), all(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::iota(all.begin(), all.end(), std::size_t{0});

  auto snapshot = [&] {
    LogRModel m{cfg, Tensor<float>({C, F}), Tensor<float>({C})};
    for (std::size_t i = 0; i < w.size(); ++i) m.weights.data[i] = static_cast<float>(w[i]);
    for (std::size_t i = 0; i < b.size(); ++i) m.bias.data[i] = static_cast<float>(b[i]);
    return m;
  };

  TrainReport report;
  Rng rng(mix_seed(cfg.seed, 0x10c));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t s = 0; s < N; s += cfg.batch_size) {
      std::span<const std::size_t> batch(order.data() + s, std::min(cfg.batch_size, N - s));
      logreg_loss_grad(w, b, features, labels, batch, cfg.l2_lambda, gw, gb);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * gw[i];
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.learning_rate * gb[i];
    }
    report.train_loss.push_back(logreg_loss_grad(w, b, features, labels, all, cfg.l2_lambda, gw, gb));
    if (has_valid) {
      auto m = snapshot();
      std::vector<int> pred;
      for (std::size_t r = 0; r < valid_features->rows(); ++r)
        pred.push_back(static_cast<int>(predict<double>(logreg_probabilities(m, valid_features->row(r)))));
      report.valid_accuracy.push_back(accuracy(pred, *valid_labels));
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {snapshot(), std::move(report)};
}

}  // namespace medtext::models
