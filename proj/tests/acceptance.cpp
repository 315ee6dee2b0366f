// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>

#include "cnn_gradcheck.hpp"
#include "medtext/harness.hpp"
#include "medtext/synthetic.hpp"
#include "oracles.hpp"

using namespace medtext;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome gradient_correctness() {
  models::CnnConfig cfg;
  cfg.max_len = 8;
  cfg.embed_dim = 6;
  cfg.conv_pairs = 1;
  cfg.filters = 4;
  cfg.kernel = 3;
  cfg.fc_dim = 5;
  cfg.n_classes = 3;
  cfg.seed = 1;
  double worst = 0;
  std::string worst_name;
  for (const auto& c : testutil::cnn_grad_check(cfg, 4, 2024, 1e-3))
    if (c.max_relative_error >= worst) {
      worst = c.max_relative_error;
      worst_name = c.name;
    }
  return {worst < 1e-4, "max relative error " + fmt("%.3g", worst) + " (" + worst_name + "), limit 1e-4"};
}

Outcome kernel_oracles() {
  Rng gen(42);
  double conv_err = 0, pool_err = 0, bow_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t L = 1 + gen.below(20), cin = 1 + gen.below(8), cout = 1 + gen.below(8);
    const std::size_t k = 2 * gen.below(4) + 1;
    neural::ConvLayer<double> layer(cout, k, cin);
    for (auto& v : layer.kernels.data) v = gen.uniform(-1, 1);
    for (auto& v : layer.bias.data) v = gen.uniform(-1, 1);
    neural::Tensor<double> x({L, cin});
    for (auto& v : x.data) v = gen.uniform(-1, 1);
    auto got = neural::conv1d_forward(x, layer);
    auto want = oracle::conv1d(x.data, L, cin, layer.kernels.data, layer.bias.data, cout, k);
    for (std::size_t i = 0; i < want.size(); ++i) conv_err = std::max(conv_err, std::abs(got.data[i] - want[i]));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t L = 2 + gen.below(30), C = 1 + gen.below(8);
    neural::Tensor<double> x({L, C});
    for (auto& v : x.data) v = gen.uniform(-1, 1);
    auto got = neural::maxpool1d(x);
    auto want = oracle::maxpool(x.data, L, C, 2, 2);
    if (got.out.size() != want.size()) pool_err = INFINITY;
    for (std::size_t i = 0; i < want.size() && i < got.out.size(); ++i)
      pool_err = std::max(pool_err, std::abs(got.out.data[i] - want[i]));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + gen.below(10), K = 1 + gen.below(40), k_soft = 1 + gen.below(12);
    embeddings::Vocabulary vocab;
    embeddings::WordEmbeddings emb{Matrix<float>(32, d)};
    for (std::size_t i = 0; i < 30; ++i) {
      vocab.add("w" + std::to_string(i));
      for (auto& v : emb.matrix.row(i + 2)) v = static_cast<float>(gen.uniform(-1, 1));
    }
    encoders::Codebook cb{Matrix<float>(K, d)};
    for (auto& v : cb.centers.data()) v = static_cast<float>(gen.uniform(-1, 1));
    std::vector<std::string> toks;
    std::vector<std::vector<double>> vecs;
    for (int i = 0; i < 20; ++i) {
      auto t = "w" + std::to_string(gen.below(34));
      toks.push_back(t);
      if (vocab.contains(t)) {
        auto r = emb.vector(vocab.id(t));
        vecs.emplace_back(r.begin(), r.end());
      }
    }
    std::vector<std::vector<double>> centers;
    for (std::size_t c = 0; c < K; ++c) centers.emplace_back(cb.centers.row(c).begin(), cb.centers.row(c).end());
    const bool normalize = gen.bernoulli(0.5);
    auto got = encoders::bow_histogram(cb, emb, vocab, toks, {K, k_soft, normalize});
    auto want = oracle::bow(centers, vecs, k_soft, normalize);
    for (std::size_t c = 0; c < K; ++c) bow_err = std::max(bow_err, std::abs(got[c] - want[c]));
  }
  const double worst = std::max({conv_err, pool_err, bow_err});
  return {worst <= 1e-10, "max |diff| conv " + fmt("%.2g", conv_err) + ", pool " + fmt("%.2g", pool_err) +
                              ", bow " + fmt("%.2g", bow_err) + " over 100 cases each, limit 1e-10"};
}

Outcome full_size_shape() {
  // Pre-computed from the closed form at (50, 100, 2, 256, 5, 2, 128, 26).
  constexpr std::uint64_t kFullSizeParameters = 1508762;
  models::CnnConfig cfg;
  cfg.seed = 7;
  auto m = models::CnnModel<float>::initialize(cfg);
  Rng rng(8);
  neural::Tensor<float> x({50, 100});
  for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
  auto p = models::cnn_forward<float>(m, x, false, 0);
  double sum = 0;
  bool positive = true;
  for (float v : p) {
    sum += v;
    positive = positive && v > 0.0f;
  }
  const bool pass = p.size() == 26 && positive && std::abs(sum - 1.0) <= 1e-6 &&
                    m.allocated_parameters() == kFullSizeParameters && models::parameter_count(cfg) == kFullSizeParameters;
  return {pass, std::to_string(p.size()) + " probabilities, sum " + fmt("%.9f", sum) + ", allocated " +
                    std::to_string(m.allocated_parameters()) + " = expected " + std::to_string(kFullSizeParameters)};
}

Outcome order_sensitivity() {
  auto c = synthetic::order_corpus(500, 200, 2718);
  auto train_tokens = models::tokenize_dataset(c.train);
  auto valid_tokens = models::tokenize_dataset(c.valid);

  auto vocab = std::make_shared<embeddings::Vocabulary>(embeddings::build_vocab(train_tokens.tokens, 1));
  embeddings::Word2vecConfig wcfg;
  wcfg.dim = 16;
  wcfg.window = 2;
  wcfg.epochs = 5;
  auto emb = std::make_shared<embeddings::WordEmbeddings>(embeddings::train_word2vec(train_tokens.tokens, *vocab, wcfg, 31));

  models::CnnConfig cnn;
  cnn.max_len = 16;
  cnn.embed_dim = 16;
  cnn.conv_pairs = 1;
  cnn.filters = 16;
  cnn.kernel = 3;
  cnn.fc_dim = 32;
  cnn.n_classes = 4;
  cnn.epochs = 8;
  cnn.seed = 5;
  auto [model, report] = models::train_cnn(train_tokens, valid_tokens, *emb, *vocab, cnn);
  const double cnn_acc = report.valid_accuracy.back();

  harness::FeatureResources res;
  res.embeddings = emb;
  res.vocab = vocab;
  auto cb_inputs = encoders::codebook_inputs(*emb);
  res.codebook = std::make_shared<encoders::Codebook>(encoders::fit_codebook(cb_inputs, 16, 100, 1e-6, 3));
  res.bow = {16, 5, true};
  embeddings::Doc2vecConfig dcfg;
  dcfg.dim = 16;
  dcfg.epochs = 30;
  dcfg.infer_epochs = 30;
  res.doc2vec = std::make_shared<embeddings::Doc2vecModel>(embeddings::train_doc2vec(train_tokens.tokens, *vocab, dcfg, 37));
  res.doc2vec_vocab = vocab;
  res.infer_seed = 41;

  std::vector<std::size_t> twins;
  for (std::size_t i = 0; i < valid_tokens.size(); ++i)
    if (valid_tokens.labels[i] <= 1) twins.push_back(i);

  double best_baseline = 0.0, worst_mean_twin = 0.0;
  std::string detail;
  for (auto method : {harness::Method::zeromean_logr, harness::Method::elimmean_logr, harness::Method::bow_logr,
                      harness::Method::doc2vec_logr}) {
    auto x = harness::featurize_all(method, res, train_tokens.tokens);
    auto xv = harness::featurize_all(method, res, valid_tokens.tokens);
    models::LogRConfig lcfg{x.cols(), 4};
    lcfg.epochs = 100;
    lcfg.seed = 43;
    auto [lr, r] = models::train_logreg(x, train_tokens.labels, lcfg, &xv, &valid_tokens.labels);
    std::vector<int> pred;
    for (std::size_t i = 0; i < xv.rows(); ++i)
      pred.push_back(static_cast<int>(models::predict<double>(models::logreg_probabilities(lr, xv.row(i)))));
    const double acc = models::accuracy(pred, valid_tokens.labels);
    std::size_t twin_correct = 0;
    for (auto i : twins) twin_correct += pred[i] == valid_tokens.labels[i];
    const double twin_acc = double(twin_correct) / double(twins.size());
    best_baseline = std::max(best_baseline, acc);
    if (method == harness::Method::zeromean_logr || method == harness::Method::elimmean_logr)
      worst_mean_twin = std::max(worst_mean_twin, twin_acc);
    detail += std::string(", ") + std::string(harness::to_string(method)) + " " + fmt("%.4f", acc) + " (twins " +
              fmt("%.4f", twin_acc) + ")";
  }
  const bool a = cnn_acc >= 0.90, b = worst_mean_twin <= 0.60, c3 = cnn_acc - best_baseline >= 0.15;
  return {a && b && c3, "cnn " + fmt("%.4f", cnn_acc) + detail + "; margin " + fmt("%.4f", cnn_acc - best_baseline) +
                            " (need >= 0.90, twins <= 0.60, margin >= 0.15)"};
}

Outcome embedding_sanity() {
  auto c = synthetic::two_topic_corpus(1000, 10, 20, 99);
  auto vocab = embeddings::build_vocab(c.sentences, 1);
  embeddings::Word2vecConfig cfg;
  cfg.dim = 50;
  cfg.epochs = 5;
  auto e = embeddings::train_word2vec(c.sentences, vocab, cfg, 100);
  auto mean_cos = [&](const std::vector<std::string>& a, const std::vector<std::string>& b, bool same) {
    double s = 0;
    int n = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = same ? i + 1 : 0; j < b.size(); ++j, ++n)
        s += oracle::cosine(e.vector(vocab.id(a[i])).data(), e.vector(vocab.id(b[j])).data(), e.dim());
    return s / n;
  };
  const double intra = 0.5 * (mean_cos(c.topic_a, c.topic_a, true) + mean_cos(c.topic_b, c.topic_b, true));
  const double inter = mean_cos(c.topic_a, c.topic_a == c.topic_b ? c.topic_a : c.topic_b, false);
  return {intra - inter >= 0.2, "intra " + fmt("%.4f", intra) + " - inter " + fmt("%.4f", inter) + " = " +
                                    fmt("%.4f", intra - inter) + ", need >= 0.2"};
}

Outcome determinism_and_persistence() {
  testutil::TempDir dir("acceptance");
  auto d = synthetic::topic_corpus(3, 40, 12);
  corpus::save_dataset(d, dir / "c.tsv", corpus::Format::tsv);
  harness::Options base;
  base.set("corpus", dir / "c.tsv");
  base.set("dim", "8");
  base.set("min-count", "1");
  base.set("seed", "1");
  base.set("out", dir / "e.txt");
  harness::cmd_train_embeddings(base, {});
  base.set("algo", "doc2vec");
  base.set("epochs", "5");
  base.set("out", dir / "d.mtcf");
  harness::cmd_train_embeddings(base, {});
  harness::Options cb;
  cb.set("embeddings", dir / "e.txt");
  cb.set("k", "6");
  cb.set("seed", "1");
  cb.set("out", dir / "cb.txt");
  harness::cmd_fit_codebook(cb, {});

  bool identical = true;
  for (auto method : harness::kAllMethods) {
    harness::Options o;
    o.set("method", std::string(harness::to_string(method)));
    o.set("train", dir / "c.tsv");
    o.set("embeddings", dir / "e.txt");
    o.set("codebook", dir / "cb.txt");
    o.set("doc2vec", dir / "d.mtcf");
    o.set("max-len", "8");
    o.set("filters", "4");
    o.set("conv-pairs", "1");
    o.set("fc-dim", "4");
    o.set("epochs", "2");
    o.set("seed", "77");
    o.set("out", dir / "a.mtcf");
    harness::cmd_train(o, {});
    o.set("out", dir / "b.mtcf");
    harness::cmd_train(o, {});
    const auto first = testutil::slurp(dir / "a.mtcf");
    identical = identical && first.size() > 8 && first == testutil::slurp(dir / "b.mtcf");
  }

  // Save -> load -> eval forward for both model families.
  models::CnnConfig cfg;
  cfg.max_len = 12;
  cfg.embed_dim = 8;
  cfg.filters = 6;
  cfg.n_classes = 3;
  cfg.fc_dim = 7;
  cfg.seed = 3;
  auto cnn = models::CnnModel<float>::initialize(cfg);
  models::save_model(cnn, dir / "cnn.mtcf");
  auto cnn2 = models::load_cnn(dir / "cnn.mtcf");
  Rng rng(4);
  bool cnn_same = true;
  for (int i = 0; i < 20; ++i) {
    neural::Tensor<float> x({12, 8});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
    cnn_same = cnn_same && models::cnn_forward<float>(cnn, x, false, 0) == models::cnn_forward<float>(cnn2, x, false, 0);
  }
  Matrix<double> X(30, 4);
  for (auto& v : X.data()) v = rng.uniform(-1, 1);
  std::vector<int> y(30);
  for (std::size_t i = 0; i < 30; ++i) y[i] = static_cast<int>(i % 3);
  models::LogRConfig lcfg{4, 3};
  lcfg.epochs = 20;
  auto lr = models::train_logreg(X, y, lcfg).first;
  models::save_model(lr, dir / "lr.mtcf");
  auto lr2 = models::load_logreg(dir / "lr.mtcf");
  bool lr_same = true;
  for (std::size_t i = 0; i < 30; ++i)
    lr_same = lr_same && models::logreg_probabilities(lr, X.row(i)) == models::logreg_probabilities(lr2, X.row(i));

  return {identical && cnn_same && lr_same,
          std::string("rerun bytes ") + (identical ? "identical" : "DIFFER") + " for all 5 methods; CNN roundtrip " +
              (cnn_same ? "bit-identical" : "DIFFERS") + "; LogR roundtrip " + (lr_same ? "bit-identical" : "DIFFERS")};
}

Outcome encoder_exactness() {
  Rng rng(5);
  embeddings::Vocabulary vocab;
  embeddings::WordEmbeddings emb{Matrix<float>(102, 100)};
  for (std::size_t i = 0; i < 100; ++i) {
    vocab.add("t" + std::to_string(i));
    for (auto& v : emb.matrix.row(i + 2)) v = static_cast<float>(rng.uniform(-1, 1));
  }
  std::vector<std::string> toks;
  for (int i = 0; i < 60; ++i) toks.push_back("t" + std::to_string(rng.below(100)));
  auto m = encoders::encode_sentence_matrix(emb, vocab, toks, {50});
  bool exact = m.rows.rows() == 50 && m.rows.cols() == 100 && m.true_len == 50;
  for (std::size_t r = 0; exact && r < 50; ++r) {
    auto want = emb.vector(vocab.id(toks[r]));
    exact = std::equal(want.begin(), want.end(), m.rows.row(r).begin());
  }
  // Tokens 51-60 must not influence the matrix.
  auto altered = toks;
  for (std::size_t i = 50; i < 60; ++i) altered[i] = "t0";
  exact = exact && encoders::encode_sentence_matrix(emb, vocab, altered, {50}).rows == m.rows;

  const double h50 = 4.499205338329423;  // sum_{r=1}^{50} 1/r
  encoders::Codebook cb{Matrix<float>(200, 100)};
  for (auto& v : cb.centers.data()) v = static_cast<float>(rng.uniform(-1, 1));
  auto sentence = toks;
  sentence.push_back("oov_token");
  sentence.push_back("another_oov");
  auto hist = encoders::bow_histogram(cb, emb, vocab, sentence, {200, 50, false});
  const double mass = std::accumulate(hist.begin(), hist.end(), 0.0);
  const double want = 60 * h50;
  const double err = std::abs(mass - want);
  return {exact && err <= 1e-9, std::string("first 50 rows ") + (exact ? "exact, tokens 51-60 dropped" : "WRONG") +
                                    "; histogram mass " + fmt("%.12f", mass) + " vs 60 x H50 = " + fmt("%.12f", want) +
                                    " (|diff| " + fmt("%.2g", err) + ")"};
}

Outcome grid_contract() {
  auto d = synthetic::topic_corpus(3, 20, 6);
  auto [train, valid] = corpus::split(d, 0.25, 1);
  auto tokens = corpus::tokenize_all(train);
  auto vocab = embeddings::build_vocab(tokens, 1);
  embeddings::Word2vecConfig wcfg;
  wcfg.dim = 4;
  wcfg.epochs = 1;
  auto emb = embeddings::train_word2vec(tokens, vocab, wcfg, 1);
  models::CnnConfig base;
  base.max_len = 8;
  base.embed_dim = 4;
  base.n_classes = 3;
  base.fc_dim = 4;
  base.epochs = 1;
  base.batch_size = 16;
  base.seed = 13;
  harness::GridSpec grid;  // {64,128,256} x {3,5,7} x {2,4,6}
  auto rows = harness::run_grid_search(train, valid, emb, vocab, base, grid, {});
  auto rerun = harness::run_grid_search(train, valid, emb, vocab, base, grid, {});
  bool depths[7] = {};
  std::size_t feasible = 0;
  for (const auto& r : rows) {
    if (r.skipped) continue;
    ++feasible;
    depths[r.conv_layers] = true;
  }
  bool ordered = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &a = rows[i - 1], &b = rows[i];
    if (a.skipped || b.skipped) continue;
    ordered = ordered && (a.accuracy > b.accuracy ||
                          (a.accuracy == b.accuracy &&
                           (a.parameters < b.parameters ||
                            (a.parameters == b.parameters &&
                             std::tie(a.filters, a.kernel, a.conv_layers) < std::tie(b.filters, b.kernel, b.conv_layers)))));
  }
  const bool same = harness::grid_tsv(rows) == harness::grid_tsv(rerun);
  const bool pass = rows.size() == 27 && feasible == 27 && depths[2] && depths[4] && depths[6] && ordered && same;
  return {pass, std::to_string(feasible) + "/27 feasible rows, depths {2,4,6} " +
                    (depths[2] && depths[4] && depths[6] ? "present" : "MISSING") + ", ranking " +
                    (ordered ? "ordered" : "UNORDERED") + ", rerun " + (same ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_seconds;
  };
  const Criterion criteria[] = {
      {"gradient correctness", gradient_correctness, 60},
      {"kernel oracle equivalence", kernel_oracles, 60},
      {"full-size shape check", full_size_shape, 60},
      {"order-sensitive corpus", order_sensitivity, 600},
      {"embedding sanity", embedding_sanity, 120},
      {"determinism and persistence", determinism_and_persistence, 300},
      {"encoder exactness", encoder_exactness, 60},
      {"grid search contract", grid_contract, 600},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", c.budget_seconds) + " s budget";
    }
    failures += !o.pass;
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
