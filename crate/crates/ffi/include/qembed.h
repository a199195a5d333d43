#ifndef QEMBED_H
#define QEMBED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QembedStatus {
  QEMBED_STATUS_OK = 0,
  QEMBED_STATUS_NULL_POINTER = 1,
  QEMBED_STATUS_INVALID_ARGUMENT = 2,
  QEMBED_STATUS_UNKNOWN_DEVICE = 3,
  QEMBED_STATUS_BUFFER_TOO_SMALL = 4,
  QEMBED_STATUS_RUNTIME_ERROR = 5,
  QEMBED_STATUS_PANIC = 6,
} QembedStatus;

typedef enum QembedMethod {
  QEMBED_METHOD_EXACT = 0,
  QEMBED_METHOD_SWAP_TEST = 1,
  QEMBED_METHOD_INVERSION_TEST = 2,
} QembedMethod;

typedef enum QembedApproach {
  QEMBED_APPROACH_IMPLICIT = 0,
  QEMBED_APPROACH_EXPLICIT = 1,
} QembedApproach;

// Trained parameters together with the readout they were trained for.
typedef struct QembedModel QembedModel;

// Device noise model.
typedef struct QembedNoiseModel QembedNoiseModel;

// Embedding parameters.
typedef struct QembedParams QembedParams;

typedef struct QembedTrainConfig {
  size_t epochs;
  double learning_rate;
  double fd_step;
  double rmsprop_decay;
  double rmsprop_epsilon;
  uint64_t seed;
} QembedTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next `qembed_*` call on the same thread.
const char *qembed_last_error(void);

// Number of trainable parameters of the embedding circuit.
size_t qembed_param_count(void);

struct QembedTrainConfig qembed_train_config_default(void);

// Parameters drawn uniformly from `[0, 2π)`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QembedStatus qembed_params_random(uint64_t seed, struct QembedParams **out);

// # Safety
// `values` must point to `len` readable doubles; `out` as above.
enum QembedStatus qembed_params_from_array(const double *values,
                                           size_t len,
                                           struct QembedParams **out);

// Copies the parameters into `out`, which must hold `qembed_param_count()` values.
//
// # Safety
// `params` must be a live handle; `out` must point to `len` writable doubles.
enum QembedStatus qembed_params_copy_to(const struct QembedParams *params, double *out, size_t len);

// # Safety
// `params` must be null or a handle not yet freed.
void qembed_params_free(struct QembedParams *params);

// Built-in device model: "melbourne", "yorktown", "bogota" or "rome".
//
// # Safety
// `name` must be a nul-terminated string; `out` as for other constructors.
enum QembedStatus qembed_noise_model_builtin(const char *name, struct QembedNoiseModel **out);

// # Safety
// `model` must be null or a handle not yet freed.
void qembed_noise_model_free(struct QembedNoiseModel *model);

// Embedded state of `x` (2 features) as real and imaginary parts of the 4 amplitudes.
//
// # Safety
// `x` must point to 2 doubles, `re` and `im` to 4 writable doubles each.
enum QembedStatus qembed_embed(const double *x,
                               const struct QembedParams *params,
                               double *re,
                               double *im);

// Overlap `|<x1|x2>|²`, exact or estimated. `noise` may be null.
//
// # Safety
// `x1` and `x2` must point to 2 doubles; `noise` must be null or live;
// `out` must be writable.
enum QembedStatus qembed_overlap(const double *x1,
                                 const double *x2,
                                 const struct QembedParams *params,
                                 enum QembedMethod kind,
                                 uint64_t shots,
                                 uint64_t seed,
                                 const struct QembedNoiseModel *noise,
                                 double *out);

// Trains on `n` points with features `features[2i], features[2i+1]` and
// labels `0..L`. A null `config` uses the defaults.
//
// # Safety
// `features` must hold `2 n` doubles, `labels` `n` values; `config` must be
// null or valid; `out` must be writable.
enum QembedStatus qembed_model_train(const double *features,
                                     const size_t *labels,
                                     size_t n,
                                     enum QembedApproach approach,
                                     const struct QembedTrainConfig *config,
                                     struct QembedModel **out);

// Number of classes, or 0 for a null handle.
//
// # Safety
// `model` must be null or live.
size_t qembed_model_n_classes(const struct QembedModel *model);

// Copies the cost before training and after each epoch (`epochs + 1`
// values) and stores the count in `written`.
//
// # Safety
// `model` must be live; `out` must hold `len` doubles; `written` must be writable.
enum QembedStatus qembed_model_cost_history(const struct QembedModel *model,
                                            double *out,
                                            size_t len,
                                            size_t *written);

// Per-class likelihoods of `x` into `out` (`qembed_model_n_classes` values).
//
// # Safety
// `model` must be live; `x` must point to 2 doubles; `noise` null or live;
// `out` must hold `len` doubles.
enum QembedStatus qembed_model_classifying_vector(const struct QembedModel *model,
                                                  const double *x,
                                                  enum QembedMethod kind,
                                                  uint64_t shots,
                                                  uint64_t seed,
                                                  const struct QembedNoiseModel *noise,
                                                  double *out,
                                                  size_t len);

// Predicted label of `x`.
//
// # Safety
// As for [`qembed_model_classifying_vector`]; `out` must be writable.
enum QembedStatus qembed_model_predict(const struct QembedModel *model,
                                       const double *x,
                                       enum QembedMethod kind,
                                       uint64_t shots,
                                       uint64_t seed,
                                       const struct QembedNoiseModel *noise,
                                       size_t *out);

// New parameter handle holding the trained parameters.
//
// # Safety
// `model` must be live; `out` must be writable.
enum QembedStatus qembed_model_copy_params(const struct QembedModel *model,
                                           struct QembedParams **out);

// # Safety
// `model` must be null or a handle not yet freed.
void qembed_model_free(struct QembedModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QEMBED_H */
