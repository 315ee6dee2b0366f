#include "medtext/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "medtext/error.hpp"
#include "medtext/synthetic.hpp"

namespace medtext::harness {

using json = nlohmann::ordered_json;

// --- Options ---------------------------------------------------------------

void Options::set(const std::string& key, std::string value) { values_[key] = {std::move(value)}; }

void Options::append(const std::string& key, std::string value) { values_[key].push_back(std::move(value)); }

bool Options::has(const std::string& key) const {
  auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

const std::string& Options::get(const std::string& key) const {
  if (!has(key)) throw InputError("missing required option --" + key);
  return values_.at(key).back();
}

std::string Options::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

const std::vector<std::string>& Options::all(const std::string& key) const {
  static const std::vector<std::string> none;
  auto it = values_.find(key);
  return it == values_.end() ? none : it->second;
}

namespace {

template <class N>
N parse_number(const std::string& key, std::string_view s) {
  N v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw InputError("option --" + key + ": '" + std::string(s) + "' is not a valid number");
  return v;
}

}  // namespace

std::size_t Options::size_or(const std::string& key, std::size_t fallback) const {
  return has(key) ? parse_number<std::size_t>(key, get(key)) : fallback;
}

double Options::double_or(const std::string& key, double fallback) const {
  return has(key) ? parse_number<double>(key, get(key)) : fallback;
}

bool Options::bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = get(key);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InputError("option --" + key + ": '" + v + "' is not a boolean");
}

std::vector<std::size_t> Options::list_or(const std::string& key, std::vector<std::size_t> fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  std::string_view s = get(key);
  while (!s.empty()) {
    auto comma = s.find(',');
    auto item = s.substr(0, comma);
    auto v = parse_number<std::size_t>(key, item);
    require(v > 0, "option --" + key + ": values must be positive");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  require(!out.empty(), "option --" + key + ": empty list");
  return out;
}

std::uint64_t Options::seed() const {
  if (!has("seed")) throw InputError("--seed is required for training commands");
  return parse_number<std::uint64_t>("seed", get("seed"));
}

// --- shared helpers --------------------------------------------------------

namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

corpus::Dataset load_corpus(const Options& o, const std::string& key, const corpus::LabelMap* fixed_labels) {
  std::filesystem::path path = o.get(key);
  if (!std::filesystem::exists(path)) throw InputError("corpus not found: " + path.string());
  auto format = o.has("format") ? corpus::parse_format(o.get("format")) : corpus::guess_format(path);
  return corpus::load_dataset(path, format, fixed_labels);
}

std::pair<corpus::Dataset, corpus::Dataset> load_train_valid(const Options& o, std::uint64_t seed) {
  auto train = load_corpus(o, "train", nullptr);
  require(!train.examples.empty(), "training corpus is empty");
  if (o.has("per-class")) train = corpus::balanced_sample(train, o.size_or("per-class", 0), mix_seed(seed, 11));
  if (o.has("valid")) {
    auto valid = load_corpus(o, "valid", &train.label_map);
    require(!valid.examples.empty(), "validation corpus is empty");
    return {std::move(train), std::move(valid)};
  }
  return corpus::split(train, o.double_or("valid-fraction", 0.2), mix_seed(seed, 12));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& suffix) {
  return std::filesystem::path(p.string() + suffix);
}

FeatureResources load_resources(const Options& o, Method method, std::uint64_t seed) {
  FeatureResources r;
  if (method == Method::doc2vec_logr) {
    require(o.has("doc2vec"), "method doc2vec_logr needs a doc2vec model (--doc2vec)");
    auto [m, v] = doc2vec_from_file(models::read_model_file(o.get("doc2vec")));
    r.doc2vec = std::make_shared<const embeddings::Doc2vecModel>(std::move(m));
    r.doc2vec_vocab = std::make_shared<const embeddings::Vocabulary>(std::move(v));
    r.infer_seed = mix_seed(seed, 0xd0c);
  } else {
    require(o.has("embeddings"), "method " + std::string(to_string(method)) + " needs word embeddings (--embeddings)");
    if (method == Method::bow_logr)
      require(o.has("codebook"), "method bow_logr needs a codebook (--codebook); run fit-codebook first");
    auto [e, v] = embeddings::load_embeddings(o.get("embeddings"));
    r.embeddings = std::make_shared<const embeddings::WordEmbeddings>(std::move(e));
    r.vocab = std::make_shared<const embeddings::Vocabulary>(std::move(v));
    if (method == Method::bow_logr) {
      r.codebook = std::make_shared<const encoders::Codebook>(encoders::load_codebook(o.get("codebook")));
      r.bow.k = r.codebook->size();
      r.bow.k_soft = o.size_or("k-soft", 50);
      r.bow.normalize = o.bool_or("normalize", true);
      require(r.bow.k_soft >= 1, "--k-soft must be at least 1");
    }
  }
  r.check(method);
  return r;
}

// Grid search takes filters and kernel as axes, so it skips them here.
models::CnnConfig cnn_config(const Options& o, std::size_t n_classes, std::size_t embed_dim, std::uint64_t seed,
                             bool grid_axes = false) {
  models::CnnConfig c;
  c.max_len = o.size_or("max-len", c.max_len);
  if (o.has("embed-dim"))
    require(o.size_or("embed-dim", 0) == embed_dim, "--embed-dim " + o.get("embed-dim") +
                                                        " does not match the embedding dimension " +
                                                        std::to_string(embed_dim));
  c.embed_dim = embed_dim;
  c.conv_pairs = o.size_or("conv-pairs", c.conv_pairs);
  if (!grid_axes) {
    c.filters = o.size_or("filters", c.filters);
    c.kernel = o.size_or("kernel", c.kernel);
  }
  c.pool = o.size_or("pool", c.pool);
  c.dropout_p = o.double_or("dropout", c.dropout_p);
  c.fc_dim = o.size_or("fc-dim", c.fc_dim);
  c.n_classes = n_classes;
  c.epochs = o.size_or("epochs", c.epochs);
  c.batch_size = o.size_or("batch-size", c.batch_size);
  const auto opt = o.get_or("optimizer", "adam");
  if (opt == "adam") c.optimizer.kind = neural::OptimizerKind::adam;
  else if (opt == "sgd_momentum") c.optimizer.kind = neural::OptimizerKind::sgd_momentum;
  else throw InputError("--optimizer must be adam or sgd_momentum, got '" + opt + "'");
  c.optimizer.learning_rate = o.double_or("lr", 1e-3);
  c.optimizer.momentum = o.double_or("momentum", c.optimizer.momentum);
  c.seed = seed;
  return c;
}

models::LogRConfig logr_config(const Options& o, std::size_t n_features, std::size_t n_classes, std::uint64_t seed) {
  models::LogRConfig c;
  c.n_features = n_features;
  c.n_classes = n_classes;
  c.l2_lambda = o.double_or("l2", c.l2_lambda);
  c.learning_rate = o.double_or("lr", c.learning_rate);
  c.epochs = o.size_or("epochs", c.epochs);
  c.batch_size = o.size_or("batch-size", c.batch_size);
  c.seed = seed;
  return c;
}

json report_payload(const models::TrainReport& r) {
  json epochs = json::array();
  for (std::size_t i = 0; i < r.train_loss.size(); ++i) {
    json e{{"epoch", i + 1}, {"train_loss", r.train_loss[i]}};
    if (i < r.valid_accuracy.size()) e["valid_accuracy"] = r.valid_accuracy[i];
    epochs.push_back(std::move(e));
  }
  return epochs;
}

bool is_bulky_key(const std::string& k) {
  return k == "vocab" || k == "doc2vec.vocab" || k == "doc2vec.counts" || k.rfind("label.", 0) == 0;
}

json config_json(const models::ModelFile& f) {
  json cfg = json::object();
  for (const auto& [k, v] : f.config)
    if (!is_bulky_key(k)) cfg[k] = v;
  return cfg;
}

}  // namespace

// --- train-embeddings ------------------------------------------------------

void cmd_train_embeddings(const Options& o, const Logger& log) {
  const auto seed = o.seed();
  const auto algo = o.get_or("algo", "word2vec");
  require(algo == "word2vec" || algo == "doc2vec", "--algo must be word2vec or doc2vec, got '" + algo + "'");
  const std::filesystem::path out = o.get("out");
  auto corpus_data = load_corpus(o, "corpus", nullptr);
  const auto sentences = corpus::tokenize_all(corpus_data);
  const auto min_count = o.size_or("min-count", 2);
  require(min_count >= 1, "--min-count must be at least 1");
  const auto vocab = embeddings::build_vocab(sentences, min_count);

  json manifest{{"command", "train-embeddings"}, {"algo", algo}, {"corpus", o.get("corpus")}, {"seed", seed}};
  if (algo == "word2vec") {
    embeddings::Word2vecConfig c;
    c.dim = o.size_or("dim", c.dim);
    c.window = o.size_or("window", c.window);
    c.negatives = o.size_or("negatives", c.negatives);
    c.epochs = o.size_or("epochs", c.epochs);
    c.learning_rate = o.double_or("lr", c.learning_rate);
    c.min_count = min_count;
    auto e = embeddings::train_word2vec(sentences, vocab, c, seed);
    embeddings::save_embeddings(e, vocab, out);
    manifest["config"] = json{{"dim", c.dim},       {"window", c.window},   {"negatives", c.negatives},
                              {"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"min_count", c.min_count}};
  } else {
    embeddings::Doc2vecConfig c;
    c.dim = o.size_or("dim", c.dim);
    c.window = o.size_or("window", c.window);
    c.negatives = o.size_or("negatives", c.negatives);
    c.epochs = o.size_or("epochs", c.epochs);
    c.learning_rate = o.double_or("lr", c.learning_rate);
    c.infer_epochs = o.size_or("infer-epochs", c.epochs);
    auto m = embeddings::train_doc2vec(sentences, vocab, c, seed);
    models::write_model_file(doc2vec_to_file(m, vocab, seed), out);
    manifest["config"] = json{{"dim", c.dim},       {"window", c.window},   {"negatives", c.negatives},
                              {"epochs", c.epochs}, {"learning_rate", c.learning_rate},
                              {"infer_epochs", c.infer_epochs}, {"min_count", min_count}};
  }
  manifest["vocab_size"] = vocab.size();
  manifest["sentences"] = sentences.size();
  write_text(with_suffix(out, ".manifest.json"), manifest.dump(2) + "\n");
  say(log, "wrote " + algo + " model with " + std::to_string(vocab.size()) + " vocabulary entries to " + out.string());
}

// --- fit-codebook ----------------------------------------------------------

void cmd_fit_codebook(const Options& o, const Logger& log) {
  const auto seed = o.seed();
  const std::filesystem::path out = o.get("out");
  auto [emb, vocab] = embeddings::load_embeddings(o.get("embeddings"));
  const auto k = o.size_or("k", 1000);
  const auto max_iters = o.size_or("max-iters", 100);
  const auto tol = o.double_or("tol", 1e-4);
  encoders::KMeansTrace trace;
  auto cb = encoders::fit_codebook(encoders::codebook_inputs(emb), k, max_iters, tol, seed, &trace);
  encoders::save_codebook(cb, out);
  json manifest{{"command", "fit-codebook"},
                {"embeddings", o.get("embeddings")},
                {"seed", seed},
                {"config", {{"k", k}, {"max_iters", max_iters}, {"tol", tol}}},
                {"iterations", trace.iterations},
                {"inertia", trace.inertia.empty() ? 0.0 : trace.inertia.back()}};
  write_text(with_suffix(out, ".manifest.json"), manifest.dump(2) + "\n");
  say(log, "wrote " + std::to_string(k) + "-center codebook to " + out.string() + " after " +
               std::to_string(trace.iterations) + " iterations");
}

// --- train -----------------------------------------------------------------

void cmd_train(const Options& o, const Logger& log) {
  const auto seed = o.seed();
  const auto method = parse_method(o.get("method"));
  const std::filesystem::path out = o.get("out");
  auto resources = load_resources(o, method, seed);
  auto [train, valid] = load_train_valid(o, seed);
  const std::size_t n_classes = train.label_map.size();
  require(n_classes >= 2, "training corpus needs at least two classes");

  Classifier c;
  c.method = method;
  c.labels = train.label_map;
  c.seed = seed;
  c.features = resources;

  models::TrainReport report;
  auto train_tokens = models::tokenize_dataset(train, c.policy);
  auto valid_tokens = models::tokenize_dataset(valid, c.policy);
  if (method == Method::cnn) {
    auto cfg = cnn_config(o, n_classes, resources.embeddings->dim(), seed);
    cfg.validate();
    say(log, "training cnn: " + std::to_string(models::parameter_count(cfg)) + " parameters, " +
                 std::to_string(train.size()) + " training sentences");
    auto [model, r] = models::train_cnn(train_tokens, valid_tokens, *resources.embeddings, *resources.vocab, cfg);
    c.cnn = std::move(model);
    report = std::move(r);
  } else {
    auto cfg = logr_config(o, feature_width(method, resources), n_classes, seed);
    cfg.validate();
    say(log, "featurizing " + std::to_string(train.size() + valid.size()) + " sentences for " +
                 std::string(to_string(method)));
    auto x = featurize_all(method, resources, train_tokens.tokens);
    auto xv = featurize_all(method, resources, valid_tokens.tokens);
    auto [model, r] = models::train_logreg(x, train_tokens.labels, cfg, &xv, &valid_tokens.labels);
    c.logr = std::move(model);
    report = std::move(r);
  }
  auto file = c.to_file();
  models::write_model_file(file, out);

  json rep{{"method", std::string(to_string(method))},
           {"seed", seed},
           {"n_train", train.size()},
           {"n_valid", valid.size()},
           {"config", config_json(file)},
           {"epochs", report_payload(report)},
           {"timing", {{"wall_seconds", report.wall_seconds}}}};
  write_text(with_suffix(out, ".report.json"), rep.dump(2) + "\n");
  say(log, "wrote " + out.string() + " (final validation accuracy " +
               fixed(report.valid_accuracy.empty() ? 0.0 : report.valid_accuracy.back(), 4) + ")");
}

// --- evaluate --------------------------------------------------------------

ComparisonReport compare(const std::vector<std::string>& model_paths, const std::vector<Classifier>& models,
                         const corpus::Dataset& valid) {
  require(!models.empty(), "evaluate: no models given");
  require(!valid.examples.empty(), "evaluate: empty evaluation set");
  for (const auto& m : models)
    if (!(m.labels == models.front().labels))
      throw InputError("evaluate: models disagree on the label map");
  require(valid.label_map == models.front().labels, "evaluate: validation corpus uses a different label map");

  ComparisonReport r;
  r.labels = valid.label_map.names();
  r.class_counts = valid.class_counts();
  std::vector<int> truth;
  for (const auto& ex : valid.examples) truth.push_back(ex.label);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    std::vector<int> pred;
    pred.reserve(valid.size());
    for (const auto& ex : valid.examples) pred.push_back(m.predict(corpus::tokenize(ex.text, m.policy)));
    r.rows.push_back({model_paths.at(i), m.method, models::accuracy(pred, truth), valid.size()});
    auto file = m.to_file();
    std::vector<std::pair<std::string, std::string>> cfg;
    for (const auto& kv : file.config)
      if (!is_bulky_key(kv.first)) cfg.push_back(kv);
    r.configs.push_back(std::move(cfg));
    r.seeds.push_back(m.seed);
  }
  return r;
}

std::string report_tsv(const ComparisonReport& r) {
  std::vector<std::size_t> order(r.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.rows[a].accuracy > r.rows[b].accuracy; });
  std::string s = "method\taccuracy\tn_eval\n";
  for (auto i : order)
    s += std::string(to_string(r.rows[i].method)) + "\t" + fixed(r.rows[i].accuracy, 4) + "\t" +
         std::to_string(r.rows[i].n_eval) + "\n";
  return s;
}

std::string report_json(const ComparisonReport& r) {
  json methods = json::array();
  json configs = json::object();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    methods.push_back({{"method", std::string(to_string(row.method))},
                       {"model", row.model},
                       {"accuracy", row.accuracy},
                       {"n_eval", row.n_eval}});
    json cfg = json::object();
    for (const auto& [k, v] : r.configs[i]) cfg[k] = v;
    configs[row.model] = std::move(cfg);
  }
  json counts = json::object();
  std::size_t total = 0;
  for (std::size_t c = 0; c < r.labels.size(); ++c) {
    counts[r.labels[c]] = r.class_counts[c];
    total += r.class_counts[c];
  }
  json seed;
  if (!r.seeds.empty() && std::all_of(r.seeds.begin(), r.seeds.end(), [&](auto s) { return s == r.seeds.front(); }))
    seed = r.seeds.front();
  else
    seed = r.seeds;
  json doc{{"methods", methods},
           {"dataset", {{"n_examples", total}, {"class_counts", counts}}},
           {"configs", configs},
           {"seed", seed}};
  return doc.dump(2) + "\n";
}

ComparisonReport cmd_evaluate(const Options& o, const Logger& log) {
  const auto& paths = o.all("model");
  require(!paths.empty(), "evaluate needs at least one --model");
  std::vector<Classifier> models;
  for (const auto& p : paths) models.push_back(Classifier::load(p));
  auto valid = load_corpus(o, "valid", &models.front().labels);
  auto report = compare(paths, models, valid);
  const std::filesystem::path out = o.get_or("out", "report");
  write_text(with_suffix(out, ".tsv"), report_tsv(report));
  write_text(with_suffix(out, ".json"), report_json(report));
  say(log, report_tsv(report));
  return report;
}

// --- classify --------------------------------------------------------------

ClassifyResult classify(const Classifier& c, std::string_view text) {
  auto probs = c.probabilities(text);
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  ClassifyResult r;
  r.label = c.labels.name(static_cast<int>(models::predict<double>(probs)));
  for (auto i : order) r.ranked.emplace_back(c.labels.name(static_cast<int>(i)), probs[i]);
  return r;
}

// --- grid search -----------------------------------------------------------

void rank_grid(std::vector<GridRow>& rows) {
  std::stable_partition(rows.begin(), rows.end(), [](const GridRow& r) { return !r.skipped; });
  auto feasible_end = std::find_if(rows.begin(), rows.end(), [](const GridRow& r) { return r.skipped; });
  std::sort(rows.begin(), feasible_end, [](const GridRow& a, const GridRow& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.parameters != b.parameters) return a.parameters < b.parameters;
    return std::tie(a.filters, a.kernel, a.conv_layers) < std::tie(b.filters, b.kernel, b.conv_layers);
  });
}

std::vector<GridRow> run_grid_search(const corpus::Dataset& train, const corpus::Dataset& valid,
                                     const embeddings::WordEmbeddings& emb, const embeddings::Vocabulary& vocab,
                                     const models::CnnConfig& base, const GridSpec& grid, const Logger& log) {
  require(!grid.filters.empty() && !grid.kernels.empty() && !grid.conv_layers.empty(), "grid search: empty grid axis");
  for (auto k : grid.kernels) require(k % 2 == 1, "grid search: kernel sizes must be odd, got " + std::to_string(k));
  for (auto d : grid.conv_layers)
    require(d >= 2 && d % 2 == 0, "grid search: conv layer counts must be even (two per pair), got " + std::to_string(d));
  auto train_tokens = models::tokenize_dataset(train);
  auto valid_tokens = models::tokenize_dataset(valid);
  std::vector<GridRow> rows;
  for (auto f : grid.filters) {
    for (auto k : grid.kernels) {
      for (auto depth : grid.conv_layers) {
        GridRow row{f, k, depth, 0, 0.0, false, ""};
        auto cfg = base;
        cfg.filters = f;
        cfg.kernel = k;
        cfg.conv_pairs = depth / 2;
        if (cfg.pooled_length() == 0) {
          row.skipped = true;
          row.reason = "max_len " + std::to_string(cfg.max_len) + " pools to length 0 after " +
                       std::to_string(cfg.conv_pairs) + " pairs";
          rows.push_back(row);
          say(log, "skip filters=" + std::to_string(f) + " kernel=" + std::to_string(k) + " layers=" +
                       std::to_string(depth) + ": " + row.reason);
          continue;
        }
        row.parameters = models::parameter_count(cfg);
        auto [model, report] = models::train_cnn(train_tokens, valid_tokens, emb, vocab, cfg);
        row.accuracy = report.valid_accuracy.back();
        rows.push_back(row);
        say(log, "filters=" + std::to_string(f) + " kernel=" + std::to_string(k) + " layers=" + std::to_string(depth) +
                     " accuracy=" + fixed(row.accuracy, 4));
      }
    }
  }
  rank_grid(rows);
  return rows;
}

std::string grid_tsv(const std::vector<GridRow>& rows) {
  std::string s = "rank\tfilters\tkernel\tconv_layers\tparameters\tvalid_accuracy\tstatus\n";
  std::size_t rank = 0;
  for (const auto& r : rows) {
    s += (r.skipped ? std::string("-") : std::to_string(++rank)) + "\t" + std::to_string(r.filters) + "\t" +
         std::to_string(r.kernel) + "\t" + std::to_string(r.conv_layers) + "\t" +
         (r.skipped ? std::string("-") : std::to_string(r.parameters)) + "\t" +
         (r.skipped ? std::string("-") : fixed(r.accuracy, 6)) + "\t" +
         (r.skipped ? "skipped: " + r.reason : std::string("ok")) + "\n";
  }
  return s;
}

std::vector<GridRow> cmd_grid_search(const Options& o, const Logger& log) {
  const auto seed = o.seed();
  const std::filesystem::path out = o.get("out");
  auto [emb, vocab] = embeddings::load_embeddings(o.get("embeddings"));
  auto [train, valid] = load_train_valid(o, seed);
  GridSpec grid;
  grid.filters = o.list_or("filters", grid.filters);
  grid.kernels = o.list_or("kernels", grid.kernels);
  grid.conv_layers = o.list_or("depths", grid.conv_layers);
  auto base = cnn_config(o, train.label_map.size(), emb.dim(), seed, true);
  auto rows = run_grid_search(train, valid, emb, vocab, base, grid, log);
  write_text(out, grid_tsv(rows));

  auto best = std::find_if(rows.begin(), rows.end(), [](const GridRow& r) { return !r.skipped; });
  require(best != rows.end(), "grid search: every grid point was infeasible");
  std::ostringstream cfg;
  cfg << "method = cnn\n"
      << "filters = " << best->filters << "\n"
      << "kernel = " << best->kernel << "\n"
      << "conv-pairs = " << best->conv_layers / 2 << "\n"
      << "max-len = " << base.max_len << "\n"
      << "pool = " << base.pool << "\n"
      << "dropout = " << base.dropout_p << "\n"
      << "fc-dim = " << base.fc_dim << "\n"
      << "epochs = " << base.epochs << "\n"
      << "batch-size = " << base.batch_size << "\n"
      << "lr = " << base.optimizer.learning_rate << "\n"
      << "seed = " << seed << "\n";
  write_text(with_suffix(out, ".best.cfg"), cfg.str());
  say(log, "best: filters=" + std::to_string(best->filters) + " kernel=" + std::to_string(best->kernel) +
               " conv_layers=" + std::to_string(best->conv_layers) + " accuracy=" + fixed(best->accuracy, 4));
  return rows;
}

// --- synth-corpus ----------------------------------------------------------

void cmd_synth_corpus(const Options& o, const Logger& log) {
  const auto seed = o.seed();
  const auto kind = o.get_or("kind", "topics");
  const auto format = o.has("format") ? corpus::parse_format(o.get("format")) : corpus::Format::tsv;
  if (kind == "order") {
    auto c = synthetic::order_corpus(o.size_or("per-class", 500), o.size_or("valid-per-class", 200), seed);
    corpus::save_dataset(c.train, o.get("out-train"), format);
    corpus::save_dataset(c.valid, o.get("out-valid"), format);
    say(log, "wrote " + std::to_string(c.train.size()) + " training and " + std::to_string(c.valid.size()) +
                 " validation sentences");
  } else if (kind == "topics") {
    auto d = synthetic::topic_corpus(o.size_or("classes", 4), o.size_or("per-class", 50), seed);
    corpus::save_dataset(d, o.get("out"), format);
    say(log, "wrote " + std::to_string(d.size()) + " sentences to " + o.get("out"));
  } else {
    throw InputError("--kind must be order or topics, got '" + kind + "'");
  }
}

}  // namespace medtext::harness
