#include "medtext/medtext.h"

#include <exception>
#include <memory>
#include <new>
#include <string>

#include "medtext/error.hpp"
#include "medtext/harness.hpp"

using namespace medtext;

struct mt_options {
  harness::Options opts;
  mt_log_fn log_fn = nullptr;
  void* log_user = nullptr;
};

struct mt_model {
  harness::Classifier classifier;
  std::string method;
};

namespace {

thread_local std::string g_error;

template <class F>
mt_status guarded(F&& f) {
  g_error.clear();
  try {
    f();
    return MT_OK;
  } catch (const InputError& e) {
    g_error = e.what();
    return MT_ERR_INPUT;
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return MT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return MT_ERR_INTERNAL;
  } catch (...) {
    g_error = "unknown error";
    return MT_ERR_INTERNAL;
  }
}

harness::Logger logger(const mt_options* o) {
  if (!o->log_fn) return {};
  auto fn = o->log_fn;
  auto user = o->log_user;
  return [fn, user](std::string_view line) { fn(std::string(line).c_str(), user); };
}

template <class Cmd>
mt_status run(const mt_options* o, Cmd cmd) {
  if (!o) {
    g_error = "null options";
    return MT_ERR_INPUT;
  }
  return guarded([&] { cmd(o->opts, logger(o)); });
}

}  // namespace

extern "C" {

const char* mt_version(void) { return "1.0.0"; }

const char* mt_last_error(void) { return g_error.c_str(); }

mt_options* mt_options_create(void) { return new (std::nothrow) mt_options; }

void mt_options_free(mt_options* opts) { delete opts; }

mt_status mt_options_set(mt_options* opts, const char* key, const char* value) {
  if (!opts || !key || !value) {
    g_error = "null argument";
    return MT_ERR_INPUT;
  }
  return guarded([&] { opts->opts.set(key, value); });
}

mt_status mt_options_append(mt_options* opts, const char* key, const char* value) {
  if (!opts || !key || !value) {
    g_error = "null argument";
    return MT_ERR_INPUT;
  }
  return guarded([&] { opts->opts.append(key, value); });
}

void mt_options_set_log(mt_options* opts, mt_log_fn fn, void* user) {
  if (!opts) return;
  opts->log_fn = fn;
  opts->log_user = user;
}

mt_status mt_train_embeddings(const mt_options* opts) { return run(opts, harness::cmd_train_embeddings); }
mt_status mt_fit_codebook(const mt_options* opts) { return run(opts, harness::cmd_fit_codebook); }
mt_status mt_train(const mt_options* opts) { return run(opts, harness::cmd_train); }
mt_status mt_evaluate(const mt_options* opts) {
  return run(opts, [](const auto& o, const auto& l) { harness::cmd_evaluate(o, l); });
}
mt_status mt_grid_search(const mt_options* opts) {
  return run(opts, [](const auto& o, const auto& l) { harness::cmd_grid_search(o, l); });
}
mt_status mt_synth_corpus(const mt_options* opts) { return run(opts, harness::cmd_synth_corpus); }

mt_status mt_model_load(const char* path, mt_model** out) {
  if (!path || !out) {
    g_error = "null argument";
    return MT_ERR_INPUT;
  }
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<mt_model>();
    m->classifier = harness::Classifier::load(path);
    m->method = std::string(harness::to_string(m->classifier.method));
    *out = m.release();
  });
}

void mt_model_free(mt_model* model) { delete model; }

size_t mt_model_num_classes(const mt_model* model) { return model ? model->classifier.labels.size() : 0; }

const char* mt_model_label(const mt_model* model, size_t index) {
  if (!model || index >= model->classifier.labels.size()) return nullptr;
  return model->classifier.labels.names()[index].c_str();
}

const char* mt_model_method(const mt_model* model) { return model ? model->method.c_str() : nullptr; }

mt_status mt_model_classify(const mt_model* model, const char* text, double* probs, size_t n, size_t* predicted) {
  if (!model || !text || !probs || !predicted) {
    g_error = "null argument";
    return MT_ERR_INPUT;
  }
  return guarded([&] {
    require(n == model->classifier.labels.size(),
            "probability buffer holds " + std::to_string(n) + " entries, model has " +
                std::to_string(model->classifier.labels.size()) + " classes");
    auto p = model->classifier.probabilities(std::string_view(text));
    for (std::size_t i = 0; i < n; ++i) probs[i] = p[i];
    *predicted = models::predict<double>(p);
  });
}

}  // extern "C"
