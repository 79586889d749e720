#ifndef STAGECRAFT_H
#define STAGECRAFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum StcStatus {
  STC_STATUS_OK = 0,
  STC_STATUS_NULL_POINTER = 1,
  STC_STATUS_INVALID_ARGUMENT = 2,
  STC_STATUS_IO = 3,
  STC_STATUS_PARSE = 4,
  STC_STATUS_DATA = 5,
  STC_STATUS_MODEL = 6,
  STC_STATUS_PANIC = 7,
} StcStatus;

/*
 Opaque dataset handle.
 */
typedef struct StcDataset StcDataset;

/*
 Opaque model handle.
 */
typedef struct StcModel StcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty if none. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *stc_last_error(void);

/*
 Releases a string returned by this library.

 # Safety
 `s` must come from this library and not have been freed.
 */
void stc_string_free(char *s);

/*
 Reads a headed CSV file. `bins` > 0 bins numeric columns into that many
 equal-frequency levels; 0 treats every column as categorical.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum StcStatus stc_dataset_read_csv(const char *path, size_t bins, struct StcDataset **out);

/*
 Builds a dataset from row-major level codes. Variables are named
 `X1..Xp` with levels `0..k`.

 # Safety
 `cells` must hold `n_rows * n_vars` values and `cardinalities` `n_vars`.
 */
enum StcStatus stc_dataset_from_codes(size_t n_rows,
                                      size_t n_vars,
                                      const uint32_t *cells,
                                      const size_t *cardinalities,
                                      struct StcDataset **out);

/*
 # Safety
 `data` must be a live dataset handle or null.
 */
size_t stc_dataset_n_rows(const struct StcDataset *data);

/*
 # Safety
 `data` must be a live dataset handle or null.
 */
size_t stc_dataset_n_vars(const struct StcDataset *data);

/*
 # Safety
 `data` must come from this library and not have been freed.
 */
void stc_dataset_free(struct StcDataset *data);

/*
 Learns a staged tree. `algorithm` is an algorithm id such as
 `"marginal"`; `order` is a comma-separated list of variable names, or
 null for algorithms that choose their own order.

 # Safety
 Pointers must be valid; `order` may be null.
 */
enum StcStatus stc_learn(const struct StcDataset *data,
                         const char *algorithm,
                         const char *order,
                         double alpha,
                         struct StcModel **out);

/*
 Parses a model JSON document.

 # Safety
 `json` must be NUL-terminated and `out` valid.
 */
enum StcStatus stc_model_from_json(const char *json, struct StcModel **out);

/*
 Serializes a model as a JSON document.

 # Safety
 `model` must be a live handle and `out` valid.
 */
enum StcStatus stc_model_to_json(const struct StcModel *model, char **out);

/*
 Graphviz DOT text of the staged tree, or of its chain event graph when
 `ceg` is nonzero.

 # Safety
 `model` must be a live handle and `out` valid.
 */
enum StcStatus stc_model_to_dot(const struct StcModel *model, int ceg, char **out);

/*
 BIC of the model on `data`. Data columns are matched to the model's
 variables by name and level label.

 # Safety
 Handles must be live and `out` valid.
 */
enum StcStatus stc_model_bic(const struct StcModel *model,
                             const struct StcDataset *data,
                             double *out);

/*
 # Safety
 `model` must be a live handle or null.
 */
size_t stc_model_num_stages(const struct StcModel *model);

/*
 # Safety
 `model` must be a live handle or null.
 */
size_t stc_model_num_positions(const struct StcModel *model);

/*
 1 if stages and positions coincide, 0 otherwise (or for null).

 # Safety
 `model` must be a live handle or null.
 */
int stc_model_is_simple(const struct StcModel *model);

/*
 New model whose stages are the positions of `model`.

 # Safety
 `model` must be a live handle and `out` valid.
 */
enum StcStatus stc_model_simplify(const struct StcModel *model, struct StcModel **out);

/*
 Normalized Hamming stage distance between two models on the same tree.

 # Safety
 Handles must be live and `out` valid.
 */
enum StcStatus stc_distance(const struct StcModel *a, const struct StcModel *b, double *out);

/*
 Random simple staged tree with parameters and `n` rows sampled from it.
 `levels` lists `p` cardinalities, or is null for binary variables.

 # Safety
 `levels` must hold `p` values when non-null; out pointers must be valid.
 */
enum StcStatus stc_simulate(size_t p,
                            const size_t *levels,
                            double q,
                            size_t n,
                            uint64_t seed,
                            struct StcModel **model_out,
                            struct StcDataset **data_out);

/*
 # Safety
 `model` must come from this library and not have been freed.
 */
void stc_model_free(struct StcModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STAGECRAFT_H */
