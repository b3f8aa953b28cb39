/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the masked-language-model toolkit. All functions return an
 * mlmkit_status; on failure mlmkit_last_error() describes what went wrong
 * (thread-local, valid until the next call on the same thread). Buffers the
 * library hands out are released with mlmkit_buffer_free(); handles have
 * their own _free functions. Passing NULL where an argument is required
 * yields MLMKIT_INVALID, never a crash.
 */
#ifndef MLMKIT_H
#define MLMKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MLMKIT_API __declspec(dllexport)
#else
#define MLMKIT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mlmkit_status {
    MLMKIT_OK = 0,
    MLMKIT_USAGE = 2,    /* bad invocation: unknown subcommand, malformed override */
    MLMKIT_CONFIG = 3,   /* invalid or contradictory configuration value */
    MLMKIT_DATA = 4,     /* malformed input data or undefined metric */
    MLMKIT_TRAINING = 5, /* numerical failure during optimization */
    MLMKIT_IO = 6,       /* file or directory could not be read or written */
    MLMKIT_INVALID = 7,  /* API contract violation (NULL argument, bad handle use) */
    MLMKIT_INTERNAL = 8  /* unexpected failure inside the library */
} mlmkit_status;

typedef struct mlmkit_tokenizer mlmkit_tokenizer;
typedef struct mlmkit_model mlmkit_model;

/* Library version as a static "major.minor.patch" string. */
MLMKIT_API const char* mlmkit_version(void);

/* Message for the most recent failure on this thread ("" if none). */
MLMKIT_API const char* mlmkit_last_error(void);

/* Frees any buffer returned through an out-parameter of this API. */
MLMKIT_API void mlmkit_buffer_free(void* ptr);

/* ------------------------------------------------------------ tokenizer */

/* Trains a byte-level BPE tokenizer on a UTF-8 text file, one document per
 * line. The vocabulary holds 6 special tokens, 256 byte tokens, and learned
 * merges up to target_vocab_size. */
MLMKIT_API mlmkit_status mlmkit_tokenizer_train(const char* corpus_path,
                                                int64_t target_vocab_size,
                                                int64_t min_pair_frequency,
                                                mlmkit_tokenizer** out);

MLMKIT_API mlmkit_status mlmkit_tokenizer_load(const char* dir, mlmkit_tokenizer** out);
MLMKIT_API mlmkit_status mlmkit_tokenizer_save(const mlmkit_tokenizer* tok, const char* dir);

/* Token ids for a text. With add_specials nonzero the sequence is wrapped in
 * begin/end markers. *ids_out is allocated by the library. */
MLMKIT_API mlmkit_status mlmkit_tokenizer_encode(const mlmkit_tokenizer* tok, const char* text,
                                                 int add_specials, int64_t** ids_out,
                                                 size_t* count_out);

/* Reconstructs the byte string for a sequence of ids (specials dropped).
 * *text_out is a NUL-terminated buffer allocated by the library. */
MLMKIT_API mlmkit_status mlmkit_tokenizer_decode(const mlmkit_tokenizer* tok, const int64_t* ids,
                                                 size_t count, char** text_out);

MLMKIT_API mlmkit_status mlmkit_tokenizer_vocab_size(const mlmkit_tokenizer* tok, int64_t* out);
MLMKIT_API void mlmkit_tokenizer_free(mlmkit_tokenizer* tok);

/* ---------------------------------------------------------------- model */

/* Loads an encoder checkpoint directory written by a training run. */
MLMKIT_API mlmkit_status mlmkit_model_load(const char* checkpoint_dir, mlmkit_model** out);
MLMKIT_API mlmkit_status mlmkit_model_parameter_count(const mlmkit_model* model, int64_t* out);
MLMKIT_API void mlmkit_model_free(mlmkit_model* model);

/* Zero-shot choice scoring: masked_text contains exactly one <mask> slot;
 * each candidate is scored by the model's average log-probability for its
 * tokens at the masked positions. scores_out needs room for one double per
 * candidate; *predicted_out receives the argmax (earliest on ties). */
MLMKIT_API mlmkit_status mlmkit_score_choices(mlmkit_model* model, const mlmkit_tokenizer* tok,
                                              const char* masked_text,
                                              const char* const* candidates,
                                              size_t candidate_count, double* scores_out,
                                              size_t* predicted_out);

/* -------------------------------------------------------------- metrics */

/* Normal-approximation confidence interval for a proportion. */
MLMKIT_API mlmkit_status mlmkit_accuracy_ci(int64_t correct, int64_t total, double confidence,
                                            double* accuracy_out, double* lower_out,
                                            double* upper_out);

/* Area under the ROC curve for binary labels (0/1) and real scores. */
MLMKIT_API mlmkit_status mlmkit_auc(const double* scores, const int64_t* labels, size_t count,
                                    double* out);

/* --------------------------------------------------------------- runner */

/* Runs one toolkit subcommand end to end, writing all artifacts plus the
 * resolved configuration into run_dir. preset and config_path may be NULL;
 * overrides is an array of "section.key=value" strings (may be NULL when
 * override_count is 0). Subcommand and preset names are listed by
 * mlmkit_subcommands / mlmkit_presets as newline-joined buffers. */
MLMKIT_API mlmkit_status mlmkit_run(const char* subcommand, const char* preset,
                                    const char* config_path, const char* const* overrides,
                                    size_t override_count, const char* run_dir);

MLMKIT_API mlmkit_status mlmkit_subcommands(char** out);
MLMKIT_API mlmkit_status mlmkit_presets(char** out);

/* Canonical text of a named preset configuration. */
MLMKIT_API mlmkit_status mlmkit_preset_text(const char* name, char** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MLMKIT_H */
