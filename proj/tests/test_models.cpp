#include <cmath>
#include <numeric>

#include "cnn_gradcheck.hpp"
#include "doctest.h"
#include "medtext/error.hpp"
#include "medtext/models.hpp"
#include "oracles.hpp"

using namespace medtext;
using namespace medtext::models;

namespace {

CnnConfig toy_config(std::size_t filters = 4) {
  CnnConfig c;
  c.max_len = 8;
  c.embed_dim = 6;
  c.conv_pairs = 1;
  c.filters = filters;
  c.kernel = 3;
  c.pool = 2;
  c.fc_dim = 5;
  c.n_classes = 3;
  c.seed = 17;
  return c;
}

// Two classes with disjoint vocabularies; one-hot style embeddings.
struct ToyTask {
  embeddings::WordEmbeddings emb;
  embeddings::Vocabulary vocab;
  TokenizedSet train, valid;
};

ToyTask disjoint_task(std::uint64_t seed) {
  ToyTask t;
  const std::size_t words = 6, d = 8;
  t.emb.matrix = Matrix<float>(2 + 2 * words, d);
  Rng rng(seed);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t w = 0; w < words; ++w) {
      auto id = t.vocab.add((c ? "b" : "a") + std::to_string(w));
      for (auto& v : t.emb.matrix.row(static_cast<std::size_t>(id))) v = static_cast<float>(rng.uniform(-0.3, 0.3));
      t.emb.matrix(static_cast<std::size_t>(id), c) += 1.0f;
    }
  auto fill = [&](TokenizedSet& s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(i % 2);
      std::vector<std::string> toks;
      for (std::uint64_t j = 0, len = 2 + rng.below(6); j < len; ++j)
        toks.push_back((c ? "b" : "a") + std::to_string(rng.below(words)));
      s.tokens.push_back(toks);
      s.labels.push_back(c);
    }
  };
  fill(t.train, 80);
  fill(t.valid, 40);
  return t;
}

CnnConfig small_task_config() {
  CnnConfig c;
  c.max_len = 8;
  c.embed_dim = 8;
  c.conv_pairs = 1;
  c.filters = 4;
  c.kernel = 3;
  c.fc_dim = 8;
  c.n_classes = 2;
  c.epochs = 5;
  c.batch_size = 8;
  c.dropout_p = 0.2;
  c.seed = 3;
  c.optimizer.learning_rate = 0.01;
  return c;
}

}  // namespace

TEST_CASE("parameter_count: toy, full-size and monotonicity") {
  CHECK(parameter_count(toy_config()) == 231);
  CHECK(parameter_count(toy_config(8)) > parameter_count(toy_config()));
  // 50x100 input, 2 pairs, 256 filters of width 5, pool 2, fc 128, 26 classes.
  CnnConfig full;
  CHECK(parameter_count(full) == 1508762);
  CHECK(oracle::cnn_parameters(50, 100, 2, 256, 5, 2, 128, 26) == 1508762);
}

TEST_CASE("parameter_count equals allocated scalars (property)") {
  Rng gen(23);
  for (int trial = 0; trial < 20; ++trial) {
    CnnConfig c;
    c.conv_pairs = 1 + gen.below(3);
    c.max_len = (std::size_t{1} << c.conv_pairs) * (1 + gen.below(4)) + gen.below(2);
    c.embed_dim = 1 + gen.below(10);
    c.filters = 1 + gen.below(12);
    c.kernel = 2 * gen.below(3) + 1;
    c.fc_dim = 1 + gen.below(10);
    c.n_classes = 2 + gen.below(5);
    const auto want = oracle::cnn_parameters(c.max_len, c.embed_dim, c.conv_pairs, c.filters, c.kernel, c.pool,
                                             c.fc_dim, c.n_classes);
    CHECK(parameter_count(c) == want);
    CHECK(CnnModel<float>::zeros(c).allocated_parameters() == want);
  }
}

TEST_CASE("CnnConfig validation") {
  auto c = toy_config();
  c.kernel = 4;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = toy_config();
  c.max_len = 1;
  CHECK(c.pooled_length() == 0);
  CHECK_THROWS_AS(c.validate(), InputError);
  c = toy_config();
  c.dropout_p = 1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("cnn_forward: full-size shape, uniform start, eval determinism") {
  CnnConfig full;
  full.seed = 1;
  auto m = CnnModel<float>::initialize(full);
  CHECK(m.allocated_parameters() == 1508762);
  Rng rng(2);
  Tensor<float> x({50, 100});
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
  auto p = cnn_forward<float>(m, x, false, 0);
  REQUIRE(p.size() == 26);
  double sum = 0;
  for (float v : p) {
    CHECK(v > 0.0f);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) <= 1e-6);
  CHECK(cnn_forward<float>(m, x, false, 0) == p);
  CHECK(cnn_forward<float>(m, x, false, 12345) == p);

  auto zero = cnn_forward<float>(m, Tensor<float>({50, 100}), false, 0);
  for (float v : zero) CHECK(v == doctest::Approx(1.0 / 26).epsilon(1e-6));

  CHECK_THROWS_AS(cnn_forward<float>(m, Tensor<float>({49, 100}), false, 0), InputError);
}

TEST_CASE("cnn_forward: probabilities for random configs (property)") {
  Rng gen(29);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = toy_config(1 + gen.below(6));
    c.n_classes = 2 + gen.below(6);
    c.seed = gen.next();
    auto m = CnnModel<double>::initialize(c);
    Tensor<double> x({c.max_len, c.embed_dim});
    for (auto& v : x.data) v = gen.uniform(-2, 2);
    for (bool train : {false, true}) {
      auto p = cnn_forward<double>(m, x, train, gen.next());
      CHECK(p.size() == c.n_classes);
      CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-6);
      for (double v : p) CHECK(v > 0.0);
    }
  }
}

TEST_CASE("cnn_backward matches central differences on the toy CNN") {
  for (std::size_t filters : {4, 8}) {
    auto checks = testutil::cnn_grad_check(toy_config(filters), 3, 7, 1e-3);
    CHECK(checks.size() == 8);
    for (const auto& c : checks) {
      INFO(c.name);
      CHECK(c.max_relative_error < 1e-4);
    }
  }
  // Same frozen state twice: identical numbers.
  auto a = testutil::cnn_grad_check(toy_config(8), 2, 9, 1e-3);
  auto b = testutil::cnn_grad_check(toy_config(8), 2, 9, 1e-3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].max_relative_error == b[i].max_relative_error);

  auto m = CnnModel<double>::initialize(toy_config());
  auto g = CnnModel<double>::zeros(toy_config());
  CHECK_THROWS_AS(cnn_backward<double>(m, CnnTrace<double>{}, 0, g), InvariantError);
}

TEST_CASE("cnn_backward: two-layer depth also checks out") {
  auto c = toy_config(3);
  c.max_len = 8;
  c.conv_pairs = 2;
  c.dropout_p = 0.3;
  for (const auto& r : testutil::cnn_grad_check(c, 2, 11, 1e-3)) {
    INFO(r.name);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("train_cnn: separable toy task, loss bound, determinism, frozen embeddings") {
  auto task = disjoint_task(4);
  const auto before = task.emb.matrix;
  auto cfg = small_task_config();
  auto [model, report] = train_cnn(task.train, task.valid, task.emb, task.vocab, cfg);
  CHECK(report.valid_accuracy.size() == 5);
  CHECK(report.train_loss.size() == 5);
  CHECK(report.valid_accuracy.back() == 1.0);
  CHECK(report.train_loss.front() <= std::log(2.0) + 0.1);
  CHECK(task.emb.matrix == before);

  auto [model2, report2] = train_cnn(task.train, task.valid, task.emb, task.vocab, cfg);
  CHECK(report2.train_loss == report.train_loss);
  CHECK(report2.valid_accuracy == report.valid_accuracy);
  CHECK(encode_model_file([&] {
          ModelFile f;
          append_cnn(f, model);
          return f;
        }()) == encode_model_file([&] {
          ModelFile f;
          append_cnn(f, model2);
          return f;
        }()));

  cfg.embed_dim = 7;
  CHECK_THROWS_AS(train_cnn(task.train, task.valid, task.emb, task.vocab, cfg), InputError);
  cfg = small_task_config();
  cfg.optimizer.kind = neural::OptimizerKind::sgd_momentum;
  cfg.optimizer.learning_rate = 0.05;
  CHECK(train_cnn(task.train, task.valid, task.emb, task.vocab, cfg).second.valid_accuracy.back() == 1.0);
}

TEST_CASE("logistic regression: gradient, separable data, descent") {
  Rng gen(31);
  {
    Matrix<double> X(5, 3);
    for (auto& v : X.data()) v = gen.uniform(-1, 1);
    std::vector<int> y{0, 1, 2, 1, 0};
    std::vector<double> W(3 * 3), b(3), gW(9), gb(3);
    for (auto& v : W) v = gen.uniform(-1, 1);
    for (auto& v : b) v = gen.uniform(-1, 1);
    std::vector<std::size_t> rows{0, 1, 2, 3, 4};
    auto loss = [&] {
      std::vector<double> a(9), c(3);
      return logreg_loss_grad(W, b, X, y, rows, 0.3, a, c);
    };
    logreg_loss_grad(W, b, X, y, rows, 0.3, gW, gb);
    CHECK(neural::grad_check(loss, W, gW, 1e-5).max_relative_error < 1e-6);
    CHECK(neural::grad_check(loss, b, gb, 1e-5).max_relative_error < 1e-6);
  }
  {
    Matrix<double> X(40, 1);
    std::vector<int> y;
    for (std::size_t i = 0; i < 40; ++i) {
      X(i, 0) = i % 2 ? 1.0 : -1.0;
      y.push_back(static_cast<int>(i % 2));
    }
    LogRConfig cfg{1, 2};
    auto [m, report] = train_logreg(X, y, cfg, &X, &y);
    CHECK(report.valid_accuracy.back() == 1.0);
    CHECK(report.train_loss.back() < report.train_loss.front());
    CHECK(report.train_loss.size() == cfg.epochs);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t N = 20 + gen.below(40), F = 1 + gen.below(6), C = 2 + gen.below(3);
    Matrix<double> X(N, F);
    for (auto& v : X.data()) v = gen.uniform(-2, 2);
    std::vector<int> y;
    for (std::size_t i = 0; i < N; ++i) y.push_back(static_cast<int>(gen.below(C)));
    LogRConfig cfg{F, C};
    cfg.epochs = 20;
    cfg.seed = gen.next();
    auto [m, report] = train_logreg(X, y, cfg);
    // The first recorded loss already follows one epoch; compare with zero weights: ln C.
    CHECK(report.train_loss.back() < std::log(double(C)));
    CHECK(report.train_loss.back() <= report.train_loss.front());
    auto [m2, report2] = train_logreg(X, y, cfg);
    CHECK(m2.weights == m.weights);
  }
  Matrix<double> X(2, 2);
  std::vector<int> bad{0, 5};
  CHECK_THROWS_AS(train_logreg(X, bad, LogRConfig{2, 2}), InputError);
  CHECK_THROWS_AS(train_logreg(X, bad, LogRConfig{3, 2}), InputError);
  CHECK_THROWS_AS(LogRConfig{}.validate(), InputError);
}

TEST_CASE("predict and accuracy") {
  std::vector<double> p{0.2, 0.5, 0.3};
  CHECK(predict<double>(p) == 1);
  std::vector<double> tie{0.5, 0.5};
  CHECK(predict<double>(tie) == 0);
  std::vector<int> pred{1, 2, 3, 4}, truth{1, 2, 3, 0};
  CHECK(accuracy(pred, truth) == 0.75);
  CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), InputError);
}

TEST_CASE("model files: CNN and LogR roundtrip bit for bit") {
  testutil::TempDir dir("models");
  auto cfg = toy_config();
  cfg.dropout_p = 0.35;
  cfg.optimizer.kind = neural::OptimizerKind::sgd_momentum;
  auto m = CnnModel<float>::initialize(cfg);
  for (auto* t : m.parameters())
    for (auto& v : t->data) v += 0.001f;
  save_model(m, dir / "cnn.mtcf");
  auto back = load_cnn(dir / "cnn.mtcf");
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    Tensor<float> x({8, 6});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
    CHECK(cnn_forward<float>(back, x, false, 0) == cnn_forward<float>(m, x, false, 0));
  }
  CHECK(back.config.dropout_p == cfg.dropout_p);
  CHECK(back.config.optimizer.kind == neural::OptimizerKind::sgd_momentum);
  CHECK(back.config.seed == cfg.seed);

  Matrix<double> X(6, 2);
  for (auto& v : X.data()) v = rng.uniform(-1, 1);
  std::vector<int> y{0, 1, 0, 1, 2, 2};
  LogRConfig lc{2, 3};
  lc.epochs = 5;
  auto [lr, report] = train_logreg(X, y, lc);
  save_model(lr, dir / "lr.mtcf");
  auto lr2 = load_logreg(dir / "lr.mtcf");
  CHECK(lr2.weights == lr.weights);
  CHECK(lr2.bias == lr.bias);
  for (std::size_t i = 0; i < 6; ++i) CHECK(logreg_probabilities(lr2, X.row(i)) == logreg_probabilities(lr, X.row(i)));
  CHECK(testutil::slurp(dir / "lr.mtcf") == encode_model_file([&] {
          ModelFile f;
          append_logreg(f, lr2);
          return f;
        }()));
}

TEST_CASE("model files: corrupt input is rejected") {
  auto m = CnnModel<float>::initialize(toy_config());
  ModelFile f;
  append_cnn(f, m);
  const auto bytes = encode_model_file(f);
  CHECK(bytes.substr(0, 4) == "MTCF");
  CHECK(decode_model_file(bytes).tensors.size() == 8);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_model_file(bad_magic), doctest::Contains("bad magic"), InputError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_WITH_AS(decode_model_file(bad_version), doctest::Contains("version"), InputError);
  CHECK_THROWS_AS(decode_model_file(bytes.substr(0, bytes.size() - 3)), InputError);
  CHECK_THROWS_AS(decode_model_file(bytes + "x"), InputError);
  CHECK_THROWS_AS(decode_model_file(""), InputError);

  // Randomly truncated files never crash.
  Rng gen(37);
  for (int i = 0; i < 200; ++i) CHECK_THROWS_AS(decode_model_file(bytes.substr(0, gen.below(bytes.size()))), InputError);
  CHECK_THROWS_AS(load_logreg("/nonexistent/path.mtcf"), InputError);
  CHECK_THROWS_AS(extract_logreg(f), InputError);
}
