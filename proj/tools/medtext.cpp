// medtext: sentence-level text classification pipeline.
//
//   medtext train-embeddings --algo word2vec --dim 100 --seed 1 corpus.tsv
//   medtext fit-codebook --embeddings emb.txt --k 1000 --seed 1 --out codebook.txt
//   medtext train --method cnn --train train.tsv --embeddings emb.txt --seed 1 --out cnn.mtcf
//   medtext evaluate --model cnn.mtcf --model bow.mtcf --valid valid.tsv --out report
//   medtext classify --model cnn.mtcf "Patient denies chest pain."
//   medtext grid-search --train train.tsv --embeddings emb.txt --seed 1 --out grid.tsv

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "medtext/medtext.h"

namespace {

struct Flag {
  const char* name;
  const char* help;
};

// Flags shared by every command that trains something.
const std::vector<Flag> kTrainingFlags = {
    {"seed", "random seed (required)"},
    {"format", "corpus format: tsv or jsonl (default: from extension)"},
    {"epochs", "training epochs"},
    {"lr", "learning rate"},
};

const std::vector<Flag> kCnnFlags = {
    {"max-len", "sentence length in tokens (default 50)"},
    {"conv-pairs", "number of conv-conv-pool blocks (default 2)"},
    {"filters", "filters per convolution (default 256)"},
    {"kernel", "convolution width, odd (default 5)"},
    {"pool", "max-pool window and stride (default 2)"},
    {"dropout", "dropout probability (default 0.5)"},
    {"fc-dim", "hidden dense width (default 128)"},
    {"batch-size", "mini-batch size"},
    {"optimizer", "adam or sgd_momentum (default adam)"},
    {"momentum", "momentum for sgd_momentum"},
    {"embed-dim", "expected embedding dimension (checked against the file)"},
};

const std::vector<Flag> kDataFlags = {
    {"train", "training corpus"},
    {"valid", "validation corpus (default: split off the training corpus)"},
    {"valid-fraction", "held-out fraction when --valid is absent (default 0.2)"},
    {"per-class", "balanced sample size per class"},
};

struct Command {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::vector<std::string> models;
  std::string config;
};

void add_flags(Command& cmd, const std::vector<Flag>& flags) {
  for (const auto& f : flags) {
    if (cmd.app->get_option_no_throw(std::string("--") + f.name)) continue;
    cmd.app->add_option(std::string("--") + f.name, cmd.values[f.name], f.help);
  }
}

Command& make_command(CLI::App& app, std::vector<Command>& all, const char* name, const char* help) {
  auto& cmd = all.emplace_back();
  cmd.app = app.add_subcommand(name, help);
  cmd.app->add_option("--config", cmd.config, "key = value file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  return cmd;
}

// Reads `key = value` lines; blank lines and lines starting with '#' or ';' are ignored.
bool read_config(const std::string& path, std::vector<std::pair<std::string, std::string>>& out, std::string& err) {
  std::ifstream in(path);
  if (!in) {
    err = "cannot open config file " + path;
    return false;
  }
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      err = path + ":" + std::to_string(lineno) + ": expected key = value";
      return false;
    }
    auto key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return true;
}

int fail(mt_status st) {
  std::fprintf(stderr, "medtext: %s\n", mt_last_error());
  return static_cast<int>(st);
}

void print_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int classify(const std::string& model_path, const std::vector<std::string>& texts) {
  mt_model* model = nullptr;
  if (auto st = mt_model_load(model_path.c_str(), &model); st != MT_OK) return fail(st);
  const size_t n = mt_model_num_classes(model);
  std::vector<double> probs(n);
  auto run = [&](const std::string& text) -> mt_status {
    size_t predicted = 0;
    auto st = mt_model_classify(model, text.c_str(), probs.data(), n, &predicted);
    if (st != MT_OK) return st;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return probs[a] > probs[b]; });
    std::printf("%s\n", mt_model_label(model, predicted));
    for (auto i : order) std::printf("  %s\t%.6f\n", mt_model_label(model, i), probs[i]);
    return MT_OK;
  };
  mt_status st = MT_OK;
  if (texts.empty()) {
    std::string line;
    while (st == MT_OK && std::getline(std::cin, line)) st = run(line);
  } else {
    std::string joined;
    for (const auto& t : texts) joined += (joined.empty() ? "" : " ") + t;
    st = run(joined);
  }
  mt_model_free(model);
  return st == MT_OK ? 0 : fail(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence-level text classification: embeddings, encoders, CNN and logistic-regression baselines"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mt_version()));

  std::vector<Command> commands;
  commands.reserve(8);

  auto& emb = make_command(app, commands, "train-embeddings", "train word2vec vectors or a doc2vec model");
  emb.app->add_option("corpus", emb.values["corpus"], "corpus (tsv or jsonl)");
  add_flags(emb, {{"out", "output file (default: embeddings.txt or doc2vec.mtcf)"},
                  {"algo", "word2vec or doc2vec (default word2vec)"},
                  {"dim", "vector dimension (default 100)"},
                  {"window", "context window (default 5)"},
                  {"negatives", "negative samples per positive (default 5)"},
                  {"min-count", "minimum token frequency (default 2)"},
                  {"infer-epochs", "doc2vec inference epochs"}});
  add_flags(emb, kTrainingFlags);

  auto& cb = make_command(app, commands, "fit-codebook", "cluster word vectors into a k-means codebook");
  add_flags(cb, {{"embeddings", "embedding file"},
                 {"k", "number of centers (default 1000)"},
                 {"max-iters", "Lloyd iteration cap (default 100)"},
                 {"tol", "stop when no center moves further than this (default 1e-4)"},
                 {"out", "output codebook file"},
                 {"seed", "random seed (required)"}});

  auto& train = make_command(app, commands, "train", "train one classifier");
  add_flags(train, {{"method", "cnn, doc2vec_logr, zeromean_logr, elimmean_logr or bow_logr"},
                    {"out", "output model file"},
                    {"embeddings", "word embedding file"},
                    {"doc2vec", "doc2vec model (doc2vec_logr)"},
                    {"codebook", "codebook file (bow_logr)"},
                    {"k-soft", "nearest centers per word for bow_logr (default 50)"},
                    {"normalize", "L1-normalize bow histograms (default true)"},
                    {"l2", "logistic regression L2 penalty (default 1e-4)"}});
  add_flags(train, kDataFlags);
  add_flags(train, kTrainingFlags);
  add_flags(train, kCnnFlags);

  auto& eval = make_command(app, commands, "evaluate", "compare trained models on one validation corpus");
  eval.app->add_option("--model", eval.models, "model file (repeatable)");
  add_flags(eval, {{"valid", "validation corpus"},
                   {"out", "report prefix; writes <out>.tsv and <out>.json (default report)"},
                   {"format", "corpus format: tsv or jsonl"}});

  auto& cls = make_command(app, commands, "classify", "classify sentences (arguments or stdin lines)");
  std::vector<std::string> texts;
  cls.app->add_option("text", texts, "sentence; read from stdin when absent");
  add_flags(cls, {{"model", "model file"}});

  auto& grid = make_command(app, commands, "grid-search", "train one CNN per grid point and rank them");
  add_flags(grid, {{"embeddings", "word embedding file"},
                   {"out", "ranked results file; the winner goes to <out>.best.cfg"},
                   {"kernels", "comma-separated odd kernel widths (default 3,5,7)"},
                   {"depths", "comma-separated total conv layer counts (default 2,4,6)"}});
  add_flags(grid, kDataFlags);
  add_flags(grid, kTrainingFlags);
  add_flags(grid, kCnnFlags);
  grid.app->get_option("--filters")->description("comma-separated filter counts (default 64,128,256)");

  auto& synth = make_command(app, commands, "synth-corpus", "write a synthetic labelled corpus");
  add_flags(synth, {{"kind", "order or topics (default topics)"},
                    {"out", "output corpus (topics)"},
                    {"out-train", "training output (order)"},
                    {"out-valid", "validation output (order)"},
                    {"classes", "number of topics (default 4)"},
                    {"per-class", "sentences per class"},
                    {"valid-per-class", "validation sentences per class (order)"},
                    {"seed", "random seed (required)"},
                    {"format", "tsv or jsonl (default tsv)"}});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return MT_ERR_INPUT;
  }

  Command* cmd = nullptr;
  for (auto& c : commands)
    if (c.app->parsed()) cmd = &c;
  const std::string name = cmd->app->get_name();

  std::vector<std::pair<std::string, std::string>> settings;
  if (!cmd->config.empty()) {
    std::string err;
    if (!read_config(cmd->config, settings, err)) {
      std::fprintf(stderr, "medtext: %s\n", err.c_str());
      return MT_ERR_INPUT;
    }
  }
  for (const auto& [key, value] : cmd->values)
    if (!value.empty()) settings.emplace_back(key, value);

  if (name == "classify") {
    std::string model;
    for (const auto& [k, v] : settings)
      if (k == "model") model = v;
    if (model.empty()) {
      std::fprintf(stderr, "medtext: classify needs --model\n");
      return MT_ERR_INPUT;
    }
    return classify(model, texts);
  }

  mt_options* opts = mt_options_create();
  mt_options_set_log(opts, print_line, nullptr);
  mt_status st = MT_OK;
  for (const auto& [k, v] : settings) {
    if (k == "model" && !cmd->models.empty()) continue;
    st = k == "model" ? mt_options_append(opts, k.c_str(), v.c_str()) : mt_options_set(opts, k.c_str(), v.c_str());
    if (st != MT_OK) break;
  }
  for (const auto& m : cmd->models)
    if (st == MT_OK) st = mt_options_append(opts, "model", m.c_str());

  if (st == MT_OK) {
    if (name == "train-embeddings") {
      bool has_out = false, doc2vec = false;
      for (const auto& [k, v] : settings) {
        has_out |= k == "out";
        doc2vec |= k == "algo" && v == "doc2vec";
      }
      if (!has_out) mt_options_set(opts, "out", doc2vec ? "doc2vec.mtcf" : "embeddings.txt");
      st = mt_train_embeddings(opts);
    } else if (name == "fit-codebook") {
      st = mt_fit_codebook(opts);
    } else if (name == "train") {
      st = mt_train(opts);
    } else if (name == "evaluate") {
      st = mt_evaluate(opts);
    } else if (name == "grid-search") {
      st = mt_grid_search(opts);
    } else if (name == "synth-corpus") {
      st = mt_synth_corpus(opts);
    }
  }
  mt_options_free(opts);
  return st == MT_OK ? 0 : fail(st);
}
