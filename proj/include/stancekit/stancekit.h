/* C interface to the stancekit library. Every function returning int
 * reports an sk_status; on failure sk_last_error() holds a message for the
 * calling thread. Strings returned by the library stay valid until the next
 * call on the same handle (or thread, for sk_last_error). */
#ifndef STANCEKIT_H
#define STANCEKIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SK_API __declspec(dllexport)
#else
#define SK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sk_status {
  SK_OK = 0,
  SK_ERR_USAGE = 1,
  SK_ERR_VALIDATION = 2,
  SK_ERR_PARSE = 3,
  SK_ERR_EMPTY_DATASET = 4,
  SK_ERR_PROVIDER = 5,
  SK_ERR_CACHE = 6,
  SK_ERR_TRAINING = 7,
  SK_ERR_PARTIAL_CORPUS = 8,
  SK_ERR_ENCODING = 9,
  SK_ERR_PLUGIN = 10,
  SK_ERR_IO = 11,
  SK_ERR_INTERNAL = 12
} sk_status;

typedef enum sk_label { SK_SUPPORT = 0, SK_OPPOSE = 1, SK_NEUTRAL = 2 } sk_label;

/* Process exit class for a status: 0 ok, 2 usage/validation,
 * 3 external service, 4 internal stage failure. */
SK_API int sk_exit_class(int status);

SK_API const char* sk_last_error(void);
SK_API const char* sk_status_name(int status);
SK_API const char* sk_version(void);

/* Experiment commands: "generate-weak", "train", "evaluate", "baseline",
 * "size-study". */
typedef struct sk_command sk_command;

SK_API int sk_command_create(const char* name, sk_command** out);
SK_API void sk_command_destroy(sk_command* cmd);
SK_API int sk_command_set_config(sk_command* cmd, const char* path);
SK_API int sk_command_set_out(sk_command* cmd, const char* dir);
SK_API int sk_command_set_seed(sk_command* cmd, uint64_t seed);
/* "dotted.key=value"; value is parsed as JSON when possible. */
SK_API int sk_command_set(sk_command* cmd, const char* assignment);
SK_API int sk_command_run(sk_command* cmd);
/* JSON summary of the last successful run, or NULL. */
SK_API const char* sk_command_summary(const sk_command* cmd);

/* Stance datasets. spec_json is a dataset block such as
 * {"name":"x","labels":["support","oppose"],"eval_mode":"binary_threshold"};
 * NULL means a three-way phrase-topic set. */
typedef struct sk_dataset sk_dataset;

SK_API int sk_dataset_load(const char* path, const char* spec_json, sk_dataset** out);
SK_API void sk_dataset_destroy(sk_dataset* ds);
SK_API size_t sk_dataset_size(const sk_dataset* ds);
SK_API int sk_dataset_get(const sk_dataset* ds, size_t index, const char** text, const char** topic,
                          int* label, const char** source_id);

/* Text builders copy into buf (NUL-terminated) and always set *needed to the
 * full length including the terminator. A short buffer yields
 * SK_ERR_USAGE with nothing written. */
SK_API int sk_mask_topic_prompt(const char* text, int label, char* buf, size_t cap, size_t* needed);
SK_API int sk_mask_text_prompt(const char* topic, int label, char* buf, size_t cap, size_t* needed);
SK_API int sk_training_hypothesis(const char* topic, char* buf, size_t cap, size_t* needed);

SK_API int sk_macro_f1(const int* gold, const int* pred, size_t n, const int* labels, size_t n_labels,
                       double* out);
SK_API int sk_predict_binary_threshold(double p_support, double p_oppose, double p_neutral, int* out);
SK_API int sk_random_baseline(size_t n, const int* labels, size_t n_labels, uint64_t seed, int* out);

#ifdef __cplusplus
}
#endif

#endif
