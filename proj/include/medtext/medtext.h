/* C interface to the medtext library. Every call returns an mt_status; on
 * failure mt_last_error() describes the problem for the calling thread. */
#ifndef MEDTEXT_H
#define MEDTEXT_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(MEDTEXT_BUILDING_LIBRARY)
#    define MT_API __declspec(dllexport)
#  else
#    define MT_API __declspec(dllimport)
#  endif
#else
#  define MT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mt_status {
  MT_OK = 0,
  MT_ERR_INPUT = 2,    /* bad arguments, missing files, malformed data */
  MT_ERR_INTERNAL = 3  /* violated invariant or unexpected failure */
} mt_status;

typedef struct mt_options mt_options;
typedef struct mt_model mt_model;
typedef void (*mt_log_fn)(const char* line, void* user);

MT_API const char* mt_version(void);
MT_API const char* mt_last_error(void);

MT_API mt_options* mt_options_create(void);
MT_API void mt_options_free(mt_options* opts);
/* Replaces any previous value of `key`. Keys are long flag names without dashes. */
MT_API mt_status mt_options_set(mt_options* opts, const char* key, const char* value);
/* Adds another value for a repeatable key (e.g. "model"). */
MT_API mt_status mt_options_append(mt_options* opts, const char* key, const char* value);
MT_API void mt_options_set_log(mt_options* opts, mt_log_fn fn, void* user);

MT_API mt_status mt_train_embeddings(const mt_options* opts);
MT_API mt_status mt_fit_codebook(const mt_options* opts);
MT_API mt_status mt_train(const mt_options* opts);
MT_API mt_status mt_evaluate(const mt_options* opts);
MT_API mt_status mt_grid_search(const mt_options* opts);
MT_API mt_status mt_synth_corpus(const mt_options* opts);

MT_API mt_status mt_model_load(const char* path, mt_model** out);
MT_API void mt_model_free(mt_model* model);
MT_API size_t mt_model_num_classes(const mt_model* model);
/* Label name for class `index`, or NULL when out of range. */
MT_API const char* mt_model_label(const mt_model* model, size_t index);
MT_API const char* mt_model_method(const mt_model* model);
/* Writes `n` class probabilities (n must equal mt_model_num_classes) and the
 * predicted class index. */
MT_API mt_status mt_model_classify(const mt_model* model, const char* text, double* probs, size_t n,
                                   size_t* predicted);

#ifdef __cplusplus
}
#endif

#endif
