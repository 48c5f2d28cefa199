/* SPDX-License-Identifier: Apache-2.0 */
#ifndef ELASTIC_ELASTIC_H
#define ELASTIC_ELASTIC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ELASTIC_BUILDING_LIBRARY)
#    define ELASTIC_API __declspec(dllexport)
#  else
#    define ELASTIC_API __declspec(dllimport)
#  endif
#else
#  define ELASTIC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum elastic_status {
  ELASTIC_OK = 0,
  ELASTIC_INVALID_ARGUMENT = 1,
  ELASTIC_SHAPE_MISMATCH = 2,
  ELASTIC_OUT_OF_RANGE = 3,
  ELASTIC_IO = 4,
  ELASTIC_INTERNAL = 5
} elastic_status;

typedef enum elastic_command {
  ELASTIC_CMD_GENERATE = 0,
  ELASTIC_CMD_COMPARE_FUSION = 1,
  ELASTIC_CMD_SWEEP = 2,
  ELASTIC_CMD_DUMP_DATASET = 3
} elastic_command;

typedef enum elastic_strategy {
  ELASTIC_STRATEGY_NONE = 0,
  ELASTIC_STRATEGY_EXPLICIT = 1,
  ELASTIC_STRATEGY_IMPLICIT = 2
} elastic_strategy;

typedef enum elastic_sweep_axis {
  ELASTIC_SWEEP_R = 0,
  ELASTIC_SWEEP_DELTA = 1,
  ELASTIC_SWEEP_TARGET = 2
} elastic_sweep_axis;

typedef enum elastic_format { ELASTIC_FORMAT_PGM = 0, ELASTIC_FORMAT_PNG = 1 } elastic_format;

typedef struct elastic_dataset elastic_dataset;
typedef struct elastic_schedule elastic_schedule;
typedef struct elastic_grid elastic_grid;
typedef struct elastic_report elastic_report;

/* All pointers are borrowed for the duration of the call. */
typedef struct elastic_run_config {
  elastic_command command;
  int target_h;
  int target_w;
  const char* class_name;
  int steps;
  double guidance;
  double resample_fraction;
  int resample_iters; /* negative: automatic */
  double rrg_delta;
  double rrg_cutoff;
  double background_low;
  double background_high;
  uint64_t seed;
  elastic_strategy strategy;
  int strategy_stride; /* explicit overlap only */
  uint64_t dataset_seed;
  int per_class;
  int native_h;
  int native_w;
  const char* out_dir;
  elastic_format format;
  int trace;
  int timing;
  int parallel;
  const int* strides; /* compare-fusion explicit strides */
  size_t stride_count;
  int fusion_step; /* DDIM step index, negative: midpoint */
  elastic_sweep_axis sweep_axis;
  const char* const* sweep_values;
  size_t sweep_value_count;
} elastic_run_config;

ELASTIC_API const char* elastic_version(void);
ELASTIC_API const char* elastic_status_name(elastic_status status);
/* Message of the last failed call on this thread; "" if none. */
ELASTIC_API const char* elastic_last_error(void);

ELASTIC_API void elastic_run_config_init(elastic_run_config* cfg);
ELASTIC_API elastic_status elastic_run_config_validate(const elastic_run_config* cfg);
/* Command line that reproduces cfg (output directory omitted). Writes at most
   cap bytes including the terminator; *needed receives the full length + 1. */
ELASTIC_API elastic_status elastic_run_config_command(const elastic_run_config* cfg, char* buf, size_t cap,
                                                      size_t* needed);

/* Runs cfg->command, writing files under cfg->out_dir. For sweeps the
   returned report is the summary. */
ELASTIC_API elastic_status elastic_run(const elastic_run_config* cfg, elastic_report** out);

ELASTIC_API void elastic_report_destroy(elastic_report* report);
ELASTIC_API const char* elastic_report_text(const elastic_report* report);
/* NULL when the key is absent. */
ELASTIC_API const char* elastic_report_get(const elastic_report* report, const char* key);
ELASTIC_API size_t elastic_report_rows(const elastic_report* report);
ELASTIC_API size_t elastic_report_columns(const elastic_report* report);
ELASTIC_API const char* elastic_report_column(const elastic_report* report, size_t col);
ELASTIC_API const char* elastic_report_cell(const elastic_report* report, size_t row, size_t col);

ELASTIC_API elastic_status elastic_dataset_create(uint64_t seed, int per_class, int native_h, int native_w,
                                                  elastic_dataset** out);
ELASTIC_API void elastic_dataset_destroy(elastic_dataset* ds);
ELASTIC_API int elastic_dataset_class_count(const elastic_dataset* ds);
ELASTIC_API const char* elastic_dataset_class_name(const elastic_dataset* ds, int class_id);
/* -1 when unknown. */
ELASTIC_API int elastic_dataset_find_class(const elastic_dataset* ds, const char* name);
ELASTIC_API size_t elastic_dataset_size(const elastic_dataset* ds);
ELASTIC_API elastic_status elastic_dataset_exemplar(const elastic_dataset* ds, size_t index, elastic_grid** out);

ELASTIC_API elastic_status elastic_schedule_create(int train_steps, double beta_start, double beta_end,
                                                   int ddim_steps, elastic_schedule** out);
ELASTIC_API void elastic_schedule_destroy(elastic_schedule* sched);
ELASTIC_API elastic_status elastic_schedule_alpha_bar(const elastic_schedule* sched, int t, double* out);
ELASTIC_API size_t elastic_schedule_step_count(const elastic_schedule* sched);
ELASTIC_API int elastic_schedule_step(const elastic_schedule* sched, size_t index);

/* data may be NULL (zero fill); otherwise h*w*c values, row-major, channels last. */
ELASTIC_API elastic_status elastic_grid_create(int h, int w, int c, const double* data, elastic_grid** out);
ELASTIC_API void elastic_grid_destroy(elastic_grid* grid);
ELASTIC_API int elastic_grid_height(const elastic_grid* grid);
ELASTIC_API int elastic_grid_width(const elastic_grid* grid);
ELASTIC_API int elastic_grid_channels(const elastic_grid* grid);
ELASTIC_API const double* elastic_grid_data(const elastic_grid* grid);
ELASTIC_API elastic_status elastic_grid_save(const elastic_grid* grid, elastic_format format, const char* path);

/* Exact posterior-mean noise prediction; class_id < 0 for unconditional. */
ELASTIC_API elastic_status elastic_denoise(const elastic_dataset* ds, const elastic_schedule* sched,
                                           const elastic_grid* x, int t, int class_id, elastic_grid** out);

/* Elastic sample using the sampler fields of cfg (target, guidance,
   resampling, guidance weight, background, seed, strategy). */
ELASTIC_API elastic_status elastic_sample(const elastic_dataset* ds, const elastic_schedule* sched,
                                          const elastic_run_config* cfg, elastic_grid** out);

#ifdef __cplusplus
}
#endif

#endif
