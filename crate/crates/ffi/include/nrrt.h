#ifndef NRRT_H
#define NRRT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Planner selector for [`nrrt_plan`].
 */
#define NRRT_PLANNER_RRT_STAR 0

#define NRRT_PLANNER_NEURAL 1

#define NRRT_PLANNER_NEURAL_INFORMED 2

/**
 * Density selector for [`nrrt_grid_generate`].
 */
#define NRRT_DENSITY_SPARSE 0

#define NRRT_DENSITY_MEDIUM 1

#define NRRT_DENSITY_DENSE 2

typedef enum NrrtStatus {
  NRRT_STATUS_OK = 0,
  NRRT_STATUS_INVALID_ARGUMENT = 1,
  NRRT_STATUS_FORMAT = 2,
  NRRT_STATUS_INFEASIBLE_PROBLEM = 3,
  NRRT_STATUS_EMPTY_PRIOR = 4,
  NRRT_STATUS_EMPTY_FREE_SPACE = 5,
  NRRT_STATUS_ELLIPSE_EXHAUSTED = 6,
  NRRT_STATUS_CONFIGURATION = 7,
  NRRT_STATUS_IO = 8,
  NRRT_STATUS_NULL_POINTER = 9,
  NRRT_STATUS_BUFFER_TOO_SMALL = 10,
  NRRT_STATUS_PANIC = 11,
} NrrtStatus;

/**
 * Opaque occupancy grid.
 */
typedef struct NrrtGrid NrrtGrid;

/**
 * Opaque planning result.
 */
typedef struct NrrtOutcome NrrtOutcome;

/**
 * Opaque sampling prior, tied to the grid it was built for.
 */
typedef struct NrrtPrior NrrtPrior;

typedef struct NrrtPlannerConfig {
  size_t iterations;
  double step;
  double rewire_radius;
  double alpha;
  double goal_tolerance;
  uint64_t seed;
  size_t max_rejections;
} NrrtPlannerConfig;

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *nrrt_last_error(void);

/**
 * Library defaults for planner settings.
 */
struct NrrtPlannerConfig nrrt_config_default(void);

/**
 * Builds a grid from `width * height` row-major cells, 0 = free,
 * nonzero = occupied.
 *
 * # Safety
 * `cells` must point to `width * height` readable bytes and `out` must be
 * writable.
 */
enum NrrtStatus nrrt_grid_new(size_t width,
                              size_t height,
                              const uint8_t *cells,
                              struct NrrtGrid **out);

/**
 * Loads a map JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum NrrtStatus nrrt_grid_load(const char *path, struct NrrtGrid **out);

/**
 * Generates a procedural map; `density` is one of the `NRRT_DENSITY_*`
 * constants.
 *
 * # Safety
 * `out` must be writable.
 */
enum NrrtStatus nrrt_grid_generate(uint64_t seed,
                                   uint32_t density,
                                   size_t width,
                                   size_t height,
                                   struct NrrtGrid **out);

/**
 * # Safety
 * `grid` must be a live handle or NULL.
 */
size_t nrrt_grid_width(const struct NrrtGrid *grid);

/**
 * # Safety
 * `grid` must be a live handle or NULL.
 */
size_t nrrt_grid_height(const struct NrrtGrid *grid);

/**
 * Whether the point lies in a free cell; false for NULL or out of bounds.
 *
 * # Safety
 * `grid` must be a live handle or NULL.
 */
bool nrrt_grid_is_free(const struct NrrtGrid *grid, double x, double y);

/**
 * # Safety
 * `grid` must come from this library and not be used afterwards.
 */
void nrrt_grid_free(struct NrrtGrid *grid);

/**
 * Oracle prior: the normalized dilated A* path mask of the problem.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum NrrtStatus nrrt_prior_oracle(const struct NrrtGrid *grid,
                                  double start_x,
                                  double start_y,
                                  double goal_x,
                                  double goal_y,
                                  struct NrrtPrior **out);

/**
 * Loads and validates an NPRI prior against `grid`.
 *
 * # Safety
 * `grid` must be a live handle, `path` NUL-terminated and `out` writable.
 */
enum NrrtStatus nrrt_prior_load(const struct NrrtGrid *grid,
                                const char *path,
                                struct NrrtPrior **out);

/**
 * Writes the prior as an NPRI file.
 *
 * # Safety
 * `prior` must be a live handle and `path` NUL-terminated.
 */
enum NrrtStatus nrrt_prior_save(const struct NrrtPrior *prior, const char *path);

/**
 * # Safety
 * `prior` must come from this library and not be used afterwards.
 */
void nrrt_prior_free(struct NrrtPrior *prior);

/**
 * Runs one planner. `planner` is one of the `NRRT_PLANNER_*` constants;
 * `prior` may be NULL only for RRT*. A run that finds no path still returns
 * `NRRT_STATUS_OK` with an unsuccessful outcome.
 *
 * # Safety
 * `grid` and `config` must be valid, `prior` valid or NULL, `out` writable.
 */
enum NrrtStatus nrrt_plan(const struct NrrtGrid *grid,
                          uint32_t planner,
                          double start_x,
                          double start_y,
                          double goal_x,
                          double goal_y,
                          const struct NrrtPlannerConfig *config,
                          const struct NrrtPrior *prior,
                          struct NrrtOutcome **out);

/**
 * # Safety
 * `outcome` must be a live handle or NULL.
 */
bool nrrt_outcome_success(const struct NrrtOutcome *outcome);

/**
 * Path cost, or +infinity when unsuccessful or NULL.
 *
 * # Safety
 * `outcome` must be a live handle or NULL.
 */
double nrrt_outcome_cost(const struct NrrtOutcome *outcome);

/**
 * Number of path vertices.
 *
 * # Safety
 * `outcome` must be a live handle or NULL.
 */
size_t nrrt_outcome_path_len(const struct NrrtOutcome *outcome);

/**
 * Copies the path as interleaved `x, y` pairs into `xy`, which holds
 * `capacity` doubles. Needs `2 * nrrt_outcome_path_len` slots.
 *
 * # Safety
 * `outcome` must be a live handle and `xy` writable for `capacity` doubles.
 */
enum NrrtStatus nrrt_outcome_path(const struct NrrtOutcome *outcome, double *xy, size_t capacity);

/**
 * Serializes the outcome to a newly allocated JSON string, released with
 * [`nrrt_string_free`].
 *
 * # Safety
 * `outcome` must be a live handle and `out` writable.
 */
enum NrrtStatus nrrt_outcome_to_json(const struct NrrtOutcome *outcome, char **out);

/**
 * # Safety
 * `outcome` must come from this library and not be used afterwards.
 */
void nrrt_outcome_free(struct NrrtOutcome *outcome);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void nrrt_string_free(char *s);

#endif  /* NRRT_H */
