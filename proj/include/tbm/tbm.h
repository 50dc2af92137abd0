/*
 * tbm.h - C interface to the TBM operating-parameter decision engine.
 *
 * Objects are opaque handles created by tbm_*_create/load/parse functions and
 * released with the matching tbm_*_free. Every fallible call returns a
 * tbm_status; on failure tbm_last_error() describes the problem (the message
 * is thread-local and valid until the next call on the same thread).
 *
 * Strings returned through char** out-parameters are heap allocated and must
 * be released with tbm_free_string.
 *
 * Target vectors are ordered hf, th, tor, pb. Feature vectors are ordered
 * p, rpm, ucs, rqd, cai, d_avg, ci, peak_acc, main_freq.
 */
#ifndef TBM_TBM_H
#define TBM_TBM_H

#include <stdint.h>

#if defined(_WIN32)
#  if defined(TBM_BUILDING_LIB)
#    define TBM_API __declspec(dllexport)
#  else
#    define TBM_API __declspec(dllimport)
#  endif
#else
#  define TBM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tbm_status {
    TBM_OK = 0,
    TBM_ERR_INVALID_INPUT = 1,
    TBM_ERR_DOMAIN = 2,
    TBM_ERR_FIT = 3,
    TBM_ERR_IO = 4,
    TBM_ERR_PARSE = 5,
    TBM_ERR_RUNTIME = 6
} tbm_status;

#define TBM_FEATURE_COUNT 9
#define TBM_TARGET_COUNT 4

typedef struct tbm_physics tbm_physics;
typedef struct tbm_model tbm_model;
typedef struct tbm_server tbm_server;

TBM_API const char* tbm_version(void);
TBM_API const char* tbm_last_error(void);
TBM_API const char* tbm_status_name(tbm_status status);
TBM_API void tbm_free_string(char* s);

/* ---- physics rules --------------------------------------------------- */

/* Fitted force polynomials, CP rule and the default 38-cutter layout. */
TBM_API tbm_status tbm_physics_default(tbm_physics** out);
TBM_API tbm_status tbm_physics_load(const char* path, tbm_physics** out);
TBM_API tbm_status tbm_physics_parse(const char* json, tbm_physics** out);
TBM_API tbm_status tbm_physics_to_json(const tbm_physics* physics, char** out_json);
TBM_API tbm_status tbm_physics_digest(const tbm_physics* physics, char** out_digest);
TBM_API void tbm_physics_free(tbm_physics* physics);

/* Forces in kN (torque in kN*m). out_of_domain may be NULL; it is set to 1
 * when (ucs, p) lies outside the fitted polynomial domain. */
TBM_API tbm_status tbm_physics_normal_force(const tbm_physics* physics, double ucs, double p, double* out,
                                            int* out_of_domain);
TBM_API tbm_status tbm_physics_rolling_force(const tbm_physics* physics, double ucs, double p, double* out,
                                             int* out_of_domain);
TBM_API tbm_status tbm_physics_thrust(const tbm_physics* physics, double ucs, double p, double* out,
                                      int* out_of_domain);
TBM_API tbm_status tbm_physics_torque(const tbm_physics* physics, double ucs, double p, double* out,
                                      int* out_of_domain);
TBM_API tbm_status tbm_physics_critical_penetration(const tbm_physics* physics, double ucs, double spacing_mm,
                                                    double* out);

/* Least-squares fit from a cutting-sample CSV. base supplies the cutter layout
 * and may be NULL (default layout). report_json may be NULL. */
TBM_API tbm_status tbm_physics_fit_csv(const char* cutting_csv_path, const tbm_physics* base, tbm_physics** out,
                                       char** report_json);

/* ---- muck ------------------------------------------------------------ */

/* D, CI and (when particle_csv_path is non-NULL) the majority geometry class. */
TBM_API tbm_status tbm_muck_indices_csv(const char* sieve_csv_path, const char* particle_csv_path,
                                        char** out_json);

/* ---- synthetic data -------------------------------------------------- */

TBM_API tbm_status tbm_generate_dataset(const char* config_json, uint64_t seed, const char* out_csv_path);

/* ---- rock-machine mapping -------------------------------------------- */

/* hp_json must carry an explicit "seed"; optional "train_count"/"test_count". */
TBM_API tbm_status tbm_model_train(const char* dataset_csv_path, const tbm_physics* physics, const char* hp_json,
                                   tbm_model** out, char** report_json);
/* Accepts a trained model file or a physics-stub descriptor
 * {"schema_version":1,"kind":"physics_stub"}. */
TBM_API tbm_status tbm_model_load(const char* path, const tbm_physics* physics, tbm_model** out);
TBM_API tbm_status tbm_model_save(const tbm_model* model, const char* path);
TBM_API tbm_status tbm_model_digest(const tbm_model* model, char** out_digest);
TBM_API void tbm_model_free(tbm_model* model);

TBM_API tbm_status tbm_model_predict(const tbm_model* model, const double features[TBM_FEATURE_COUNT],
                                     double targets[TBM_TARGET_COUNT]);
TBM_API tbm_status tbm_model_evaluate_csv(const tbm_model* model, const char* dataset_csv_path, char** metrics_json);

/* ---- decisions and studies ------------------------------------------- */

/* request_json: {"context":{...}, "limits"?, "cost"?, "grid"?}. region_csv may be NULL. */
TBM_API tbm_status tbm_optimize(const tbm_model* model, const tbm_physics* physics, const char* request_json,
                                char** result_json, char** region_csv);
/* ranges_json: {"ucs":{min,max,step}, "rqd":..., "cai":..., "limits"?, "cost"?, "grid"?}. */
TBM_API tbm_status tbm_deduce(const tbm_model* model, const tbm_physics* physics, const char* ranges_json,
                              char** rows_csv, char** stats_json);
TBM_API tbm_status tbm_compare_sections_csv(const char* sections_csv_path, char** report_json);

/* ---- advisor service ------------------------------------------------- */

/* Binds immediately (port 0 picks a free port); config_json may be NULL or
 * hold "limits", "cost", "grid", "max_request_bytes". */
TBM_API tbm_status tbm_server_create(const tbm_model* model, const tbm_physics* physics, const char* host, int port,
                                     const char* config_json, tbm_server** out);
TBM_API int tbm_server_port(const tbm_server* server);
/* Blocks until tbm_server_stop is called from another thread. */
TBM_API tbm_status tbm_server_run(tbm_server* server);
TBM_API void tbm_server_stop(tbm_server* server);
TBM_API void tbm_server_free(tbm_server* server);

#ifdef __cplusplus
}
#endif

#endif /* TBM_TBM_H */
