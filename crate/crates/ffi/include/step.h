#ifndef STEP_H
#define STEP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum StepStatus {
  STEP_STATUS_OK = 0,
  // A required pointer argument was null.
  STEP_STATUS_NULL_ARGUMENT = 1,
  // Bad input, configuration or file contents.
  STEP_STATUS_INVALID_INPUT = 2,
  // Training produced a non-finite loss or gradient.
  STEP_STATUS_NUMERICAL = 3,
  // Filesystem failure.
  STEP_STATUS_IO = 4,
  // An internal panic was caught.
  STEP_STATUS_PANIC = 5,
} StepStatus;

// Event dataset: host graph, class vocabulary and frames.
typedef struct StepDataset StepDataset;

// Trained parameters together with the vocabulary they were trained on.
typedef struct StepModel StepModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none.
//
// The pointer stays valid until the next failing call on the same thread.
const char *step_last_error_message(void);

// Reads a dataset directory (`meta.json`, `frames.csv`, `adjacency.csv`).
//
// # Safety
// `dir` is a NUL-terminated path; `out` is writable.
enum StepStatus step_dataset_load(const char *dir, size_t order, struct StepDataset **out);

// Writes `dataset` as a dataset directory, creating it if needed.
//
// # Safety
// `dataset` is a live handle; `dir` is a NUL-terminated path.
enum StepStatus step_dataset_save(const struct StepDataset *dataset, const char *dir);

// Generates a synthetic dataset. `topology` is `ring`, `grid` or
// `erdos-renyi:<p>`.
//
// # Safety
// `topology` is a NUL-terminated string; `out` is writable.
enum StepStatus step_synth_generate(const char *topology,
                                    size_t n,
                                    size_t d,
                                    size_t steps,
                                    double coupling,
                                    double noise,
                                    uint64_t seed,
                                    struct StepDataset **out);

// Host count, class count and frame count. Null outputs are skipped.
//
// # Safety
// `dataset` is a live handle; non-null outputs are writable.
enum StepStatus step_dataset_dims(const struct StepDataset *dataset,
                                  size_t *n,
                                  size_t *d,
                                  size_t *steps);

// Releases a dataset. Null is ignored.
//
// # Safety
// `dataset` is null or a handle from this library not yet freed.
void step_dataset_free(struct StepDataset *dataset);

// Trains a model on `dataset`. `config_json` uses the run-configuration
// keys; null means all defaults. `dataset_dir` and `output_dir` are
// ignored. `test_acc` (nullable) receives the final test accuracy.
//
// # Safety
// `dataset` is a live handle; `config_json` is null or NUL-terminated;
// `out` is writable.
enum StepStatus step_model_train(const struct StepDataset *dataset,
                                 const char *config_json,
                                 struct StepModel **out,
                                 double *test_acc);

// Loads a checkpoint file.
//
// # Safety
// `path` is a NUL-terminated path; `out` is writable.
enum StepStatus step_model_load(const char *path, struct StepModel **out);

// Writes a checkpoint file.
//
// # Safety
// `model` is a live handle; `path` is a NUL-terminated path.
enum StepStatus step_model_save(const struct StepModel *model, const char *path);

// Releases a model. Null is ignored.
//
// # Safety
// `model` is null or a handle from this library not yet freed.
void step_model_free(struct StepModel *model);

// Predicts frame `start + s − 1` from frames `start .. start + s − 1`,
// writing one class index per host into `classes` (length `capacity`).
//
// # Safety
// `model` and `dataset` are live handles; `classes` holds `capacity` slots.
enum StepStatus step_model_predict(const struct StepModel *model,
                                   const struct StepDataset *dataset,
                                   size_t start,
                                   size_t s,
                                   size_t *classes,
                                   size_t capacity);

// Accuracy on the chronological test split of `dataset` at window length
// `s`. A nonzero `exclude_zero_event` leaves no-event targets out.
//
// # Safety
// `model` and `dataset` are live handles; `accuracy` is writable.
enum StepStatus step_model_evaluate(const struct StepModel *model,
                                    const struct StepDataset *dataset,
                                    size_t s,
                                    double train_fraction,
                                    int exclude_zero_event,
                                    double *accuracy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEP_H */
