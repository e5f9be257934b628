/* C interface to the word-class embedding library.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns a wce_status; on failure wce_last_error() describes
 * the problem (thread-local, valid until the next call on that thread).
 * Strings returned through char** are owned by the caller and released
 * with wce_string_free.
 */
#ifndef WCE_WCE_H
#define WCE_WCE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(WCE_BUILDING_LIBRARY)
#    define WCE_API __declspec(dllexport)
#  else
#    define WCE_API __declspec(dllimport)
#  endif
#else
#  define WCE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wce_status {
  WCE_OK = 0,
  WCE_ERR_CONFIG = 1,
  WCE_ERR_DATA = 2,
  WCE_ERR_DIMENSION = 3,
  WCE_ERR_PARSE = 4,
  WCE_ERR_IO = 5,
  WCE_ERR_NUMERIC = 6,
  WCE_ERR_ARGUMENT = 7,
  WCE_ERR_INTERNAL = 8
} wce_status;

typedef struct wce_corpus wce_corpus;
typedef struct wce_word_class wce_word_class;
typedef struct wce_embeddings wce_embeddings;
typedef struct wce_model wce_model;
typedef struct wce_regressor wce_regressor;

WCE_API const char* wce_version(void);
WCE_API const char* wce_last_error(void);
WCE_API const char* wce_status_name(wce_status status);
WCE_API void wce_string_free(char* s);

/* Worker threads for row-parallel stages (0 means hardware concurrency). */
WCE_API void wce_set_threads(size_t threads);
/* Nonzero: progress messages on stderr. */
WCE_API void wce_set_verbose(int verbose);

/* ---- corpus ---------------------------------------------------------- */

typedef struct wce_corpus_options {
  size_t min_df;              /* default 5 */
  uint64_t seed;              /* validation sample seed, default 0 */
  double validation_fraction; /* default 0.2 */
  size_t validation_cap;      /* default 20000 */
  int mode;                   /* -1 auto (default), 0 single-label, 1 multilabel */
} wce_corpus_options;

WCE_API void wce_corpus_options_init(wce_corpus_options* options);

/* Builds from JSON-lines files. With a manifest, train_path holds every
 * document and test_path is ignored (may be NULL). */
WCE_API wce_status wce_corpus_build(const char* train_path, const char* test_path,
                                    const char* manifest_path, const wce_corpus_options* options,
                                    wce_corpus** out);
WCE_API wce_status wce_corpus_save(const wce_corpus* corpus, const char* dir);
WCE_API wce_status wce_corpus_load(const char* dir, wce_corpus** out);
/* Any output pointer may be NULL. */
WCE_API wce_status wce_corpus_info(const wce_corpus* corpus, size_t* vocabulary, size_t* classes,
                                   size_t* train_docs, size_t* validation_docs, size_t* test_docs);
WCE_API void wce_corpus_free(wce_corpus* corpus);

/* ---- word-class matrix --------------------------------------------- */

typedef struct wce_timing {
  double correlate_seconds;
  double standardize_seconds;
  double pca_seconds;
} wce_timing;

/* measure: "dot", "ppmi", "ig" or "chi2". timing may be NULL. */
WCE_API wce_status wce_compute(const wce_corpus* corpus, const char* measure, size_t max_dims,
                               wce_word_class** out, wce_timing* timing);
WCE_API wce_status wce_word_class_save(const wce_word_class* s, const char* path);
WCE_API wce_status wce_word_class_load(const char* path, wce_word_class** out);
WCE_API wce_status wce_word_class_export_text(const wce_word_class* s, const char* path);
WCE_API wce_status wce_word_class_shape(const wce_word_class* s, size_t* rows, size_t* dims);
WCE_API void wce_word_class_free(wce_word_class* s);

/* ---- embedding layer ------------------------------------------------ */

typedef struct wce_embedding_options {
  const char* variant; /* random | pretrained | pretrained+random | pretrained+wce | wce */
  int trainable;       /* default 0 */
  size_t random_dim;   /* default 300 */
  uint64_t seed;       /* default 0 */
} wce_embedding_options;

WCE_API void wce_embedding_options_init(wce_embedding_options* options);

/* pretrained_path and word_class may be NULL when the variant does not use them. */
WCE_API wce_status wce_embeddings_build(const wce_corpus* corpus, const char* pretrained_path,
                                        const wce_word_class* word_class,
                                        const wce_embedding_options* options,
                                        wce_embeddings** out);
WCE_API wce_status wce_embeddings_save(const wce_embeddings* e, const char* path);
WCE_API wce_status wce_embeddings_load(const char* path, wce_embeddings** out);
/* columns: "all", "leading" or "trailing". */
WCE_API wce_status wce_embeddings_export_text(const wce_embeddings* e, const char* path,
                                              const char* columns);
WCE_API wce_status wce_embeddings_shape(const wce_embeddings* e, size_t* rows, size_t* q,
                                        size_t* r);
/* Variant name of the embedding layer (static storage). */
WCE_API const char* wce_embeddings_variant(const wce_embeddings* e);
WCE_API void wce_embeddings_free(wce_embeddings* e);

/* ---- classifier ------------------------------------------------------ */

typedef struct wce_train_options {
  double dropout;         /* default 0 */
  double learning_rate;   /* default 1e-3 */
  size_t batch_size;      /* default 100 */
  size_t max_length;      /* default 500 */
  size_t max_epochs;      /* default 200 */
  size_t patience;        /* default 10 */
  size_t epoch_batches;   /* default 0 (full pass) */
  int final_validation_epoch; /* default 1 */
  int trainable;          /* -1 keep the embedding's flags (default), 0 static, 1 trainable */
  uint64_t seed;          /* default 0 */
} wce_train_options;

WCE_API void wce_train_options_init(wce_train_options* options);

/* log_path (nullable) receives one JSON object per epoch. */
WCE_API wce_status wce_train(const wce_corpus* corpus, const wce_embeddings* embeddings,
                             const wce_train_options* options, const char* log_path,
                             wce_model** out);
WCE_API wce_status wce_model_save(const wce_model* model, const char* path);
WCE_API wce_status wce_model_load(const char* path, wce_model** out);
WCE_API void wce_model_free(wce_model* model);

/* split: "train", "validation" or "test". json_out receives
 * {"macro_f1":..,"micro_f1":..,"per_class":[..],"classes":[..]}. */
WCE_API wce_status wce_evaluate(const wce_model* model, const wce_corpus* corpus,
                                const char* split, char** json_out);

/* ---- out-of-vocabulary regression ------------------------------------ */

typedef struct wce_regressor_options {
  size_t hidden;            /* default 64 */
  double dropout;           /* default 0.5 */
  double learning_rate;     /* default 1e-3 */
  size_t batch_size;        /* default 256 */
  size_t max_epochs;        /* default 500 */
  size_t patience;          /* default 20 */
  double holdout_fraction;  /* default 0.1 */
  size_t min_terms;         /* default 50 */
  uint64_t seed;            /* default 0 */
} wce_regressor_options;

WCE_API void wce_regressor_options_init(wce_regressor_options* options);

/* log_json (nullable) receives the per-epoch MSE history. */
WCE_API wce_status wce_oov_train(const wce_embeddings* embeddings,
                                 const wce_regressor_options* options, wce_regressor** out,
                                 char** log_json);
WCE_API wce_status wce_oov_impute(const wce_embeddings* embeddings, const wce_regressor* regressor,
                                  wce_embeddings** out, size_t* imputed_rows);
/* Tab-separated lines "term class value", best first. */
WCE_API wce_status wce_oov_inspect(const wce_regressor* regressor, const char* pretrained_path,
                                   size_t top, char** text_out);
WCE_API wce_status wce_regressor_save(const wce_regressor* regressor, const char* path);
WCE_API wce_status wce_regressor_load(const char* path, wce_regressor** out);
WCE_API void wce_regressor_free(wce_regressor* regressor);

/* ---- export, experiments, fixtures ------------------------------------ */

/* Round-robin selection by information gain; columns as for export_text. */
WCE_API wce_status wce_export_projector(const wce_embeddings* embeddings, const wce_corpus* corpus,
                                        size_t budget, const char* columns, const char* out_dir);

/* out_dir (nullable) overrides the config's out key. summary_json (nullable)
 * receives the summary document. */
WCE_API wce_status wce_run_experiment(const char* config_path, const char* out_dir,
                                      char** summary_json);

typedef struct wce_synthetic_options {
  size_t documents;
  size_t classes;
  size_t terms_per_class;
  size_t noise_terms;
  double noise_fraction;
  double purity;
  size_t min_length;
  size_t max_length;
  double test_fraction;
  size_t pretrained_dim;
  size_t classes_per_topic;
  double class_scale;
  size_t spurious_per_class;
  double spurious_rate;
  double oov_fraction;
  uint64_t seed;
} wce_synthetic_options;

WCE_API void wce_synthetic_options_init(wce_synthetic_options* options);

/* Writes train.jsonl, test.jsonl and pretrained.txt into out_dir. */
WCE_API wce_status wce_make_synthetic(const wce_synthetic_options* options, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* WCE_WCE_H */
