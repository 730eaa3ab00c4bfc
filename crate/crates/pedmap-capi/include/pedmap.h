/* C interface to the pedmap pedestrian-hotspot library. */

#ifndef PEDMAP_H
#define PEDMAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every API call.
 */
typedef enum PedmapStatus {
  /**
   * The call succeeded.
   */
  PEDMAP_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  PEDMAP_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PEDMAP_STATUS_INVALID_UTF8 = 2,
  /**
   * The operating system reported an I/O failure.
   */
  PEDMAP_STATUS_IO = 3,
  /**
   * A file could not be parsed in its declared format.
   */
  PEDMAP_STATUS_PARSE = 4,
  /**
   * Input values violated a documented precondition.
   */
  PEDMAP_STATUS_VALIDATION = 5,
  /**
   * Advisory parameters were out of range.
   */
  PEDMAP_STATUS_INVALID_PARAMS = 6,
  /**
   * The queried index holds no nodes.
   */
  PEDMAP_STATUS_NO_NODES = 7,
  /**
   * The two maps were built with different cluster radii.
   */
  PEDMAP_STATUS_RADIUS_MISMATCH = 8,
  /**
   * Advisories and ground truth describe different clips.
   */
  PEDMAP_STATUS_CLIP_MISMATCH = 9,
  /**
   * The library panicked; treat the handle as poisoned.
   */
  PEDMAP_STATUS_INTERNAL = 10,
} PedmapStatus;

/**
 * Opaque spatial index handle. Independent of the map it was built from;
 * the map may be freed first.
 */
typedef struct PedmapIndex PedmapIndex;

/**
 * Opaque hotspot map handle.
 */
typedef struct PedmapMap PedmapMap;

/**
 * Advisory-rule tunables, mirroring the library defaults documented for
 * `pedmap_advisory_params_default`.
 */
typedef struct PedmapAdvisoryParams {
  /**
   * t: driver reaction time in seconds.
   */
  double reaction_time_s;
  /**
   * f: road friction coefficient.
   */
  double friction;
  /**
   * G: road grade, positive uphill.
   */
  double grade;
  /**
   * b: multiplicative safety offset on stopping distance, >= 1.
   */
  double offset;
  /**
   * K: path distance in meters between advisory evaluations.
   */
  double sampling_distance_m;
  /**
   * Half-angle of the forward field of view in degrees.
   */
  double fov_half_angle_deg;
  /**
   * Minimum node weight for a hotspot to count.
   */
  uint64_t min_weight;
} PedmapAdvisoryParams;

/**
 * Nearest-node query result.
 */
typedef struct PedmapNearest {
  /**
   * Index of the winning node in the map's canonical node order.
   */
  uintptr_t node_index;
  /**
   * Great-circle distance from the query to that node, meters.
   */
  double distance_m;
} PedmapNearest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; never NULL, never
 * freed by the caller.
 */
const char *pedmap_version(void);

/**
 * Message describing the most recent failure on this thread, valid until
 * the next API call from the same thread. Never NULL.
 */
const char *pedmap_last_error(void);

/**
 * Great-circle distance in meters between two coordinates.
 *
 * # Safety
 * `out_m` must point to writable memory.
 */
enum PedmapStatus pedmap_haversine_m(double lat1_deg,
                                     double lon1_deg,
                                     double lat2_deg,
                                     double lon2_deg,
                                     double *out_m);

/**
 * Fill `out` with the documented default advisory parameters
 * (t=1.5 s, f=0.7, G=0, b=1.5, K=2 m, θ=90°, min weight 1).
 *
 * # Safety
 * `out` must point to writable memory.
 */
enum PedmapStatus pedmap_advisory_params_default(struct PedmapAdvisoryParams *out);

/**
 * Stopping distance in meters at `v_kmh` under `params`.
 *
 * # Safety
 * `params` and `out_m` must be valid pointers.
 */
enum PedmapStatus pedmap_stopping_distance_m(double v_kmh,
                                             const struct PedmapAdvisoryParams *params,
                                             double *out_m);

/**
 * Load a hotspot map from a JSON file written by `pedmap_map_save` or the
 * CLI. On success `*out` owns the map; free it with `pedmap_map_free`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PedmapStatus pedmap_map_load(const char *path, struct PedmapMap **out);

/**
 * Write a map as canonical JSON; identical maps produce identical bytes.
 *
 * # Safety
 * `map` must come from this API and `path` be a NUL-terminated string.
 */
enum PedmapStatus pedmap_map_save(const struct PedmapMap *map, const char *path);

/**
 * Build a map from drive-log files (.jsonl or .csv), clustering detections
 * with the given radius in meters. On success `*out` owns the map.
 *
 * # Safety
 * `log_paths` must point to `n_logs` NUL-terminated strings; `out` must be
 * a valid pointer.
 */
enum PedmapStatus pedmap_map_build(const char *const *log_paths,
                                   uintptr_t n_logs,
                                   double cluster_radius_m,
                                   struct PedmapMap **out);

/**
 * Merge two maps built with the same cluster radius into a new map.
 *
 * # Safety
 * All pointers must be valid; `a` and `b` must come from this API.
 */
enum PedmapStatus pedmap_map_merge(const struct PedmapMap *a,
                                   const struct PedmapMap *b,
                                   struct PedmapMap **out);

/**
 * Copy `map`, keeping only nodes with weight at or above `min_weight`.
 *
 * # Safety
 * `map` must come from this API and `out` be a valid pointer.
 */
enum PedmapStatus pedmap_map_filter_by_weight(const struct PedmapMap *map,
                                              uint64_t min_weight,
                                              struct PedmapMap **out);

/**
 * Number of nodes in the map.
 *
 * # Safety
 * `map` must come from this API and `out` be a valid pointer.
 */
enum PedmapStatus pedmap_map_node_count(const struct PedmapMap *map, uintptr_t *out);

/**
 * Sum of node weights in the map.
 *
 * # Safety
 * `map` must come from this API and `out` be a valid pointer.
 */
enum PedmapStatus pedmap_map_total_weight(const struct PedmapMap *map, uint64_t *out);

/**
 * Release a map. NULL is a no-op.
 *
 * # Safety
 * `map` must come from this API and not be freed twice.
 */
void pedmap_map_free(struct PedmapMap *map);

/**
 * Build a nearest-neighbor index over the map's nodes. `leaf_capacity`
 * of 0 selects the default. The index snapshots the map: freeing the map
 * afterwards is fine.
 *
 * # Safety
 * `map` must come from this API and `out` be a valid pointer.
 */
enum PedmapStatus pedmap_index_build(const struct PedmapMap *map,
                                     uintptr_t leaf_capacity,
                                     struct PedmapIndex **out);

/**
 * Find the node nearest to a query point. Returns
 * `PEDMAP_STATUS_NO_NODES` when the index is empty.
 *
 * # Safety
 * `index` must come from this API and `out` be a valid pointer.
 */
enum PedmapStatus pedmap_index_nearest(const struct PedmapIndex *index,
                                       double lat_deg,
                                       double lon_deg,
                                       struct PedmapNearest *out);

/**
 * Release an index. NULL is a no-op.
 *
 * # Safety
 * `index` must come from this API and not be freed twice.
 */
void pedmap_index_free(struct PedmapIndex *index);

/**
 * Replay the drive log at `log_path` against `map` and write the advisory
 * JSON to `out_path`. NULL `params` selects the defaults.
 *
 * # Safety
 * `map` must come from this API; paths must be NUL-terminated strings.
 */
enum PedmapStatus pedmap_replay_to_file(const struct PedmapMap *map,
                                        const char *log_path,
                                        const struct PedmapAdvisoryParams *params,
                                        const char *out_path);

/**
 * Score the advisories at `advisories_path` against the ground truth at
 * `ground_truth_path` and write the report JSON to `report_path`.
 *
 * # Safety
 * Paths must be NUL-terminated strings.
 */
enum PedmapStatus pedmap_evaluate_to_file(const char *advisories_path,
                                          const char *ground_truth_path,
                                          const char *report_path);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PEDMAP_H */
