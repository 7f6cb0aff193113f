/* odnslab — DNS measurement-research toolkit.
 *
 * C interface to the toolkit core. Handles are opaque; every function
 * returns a status code and leaves a human-readable message retrievable via
 * odnslab_last_error() on failure. Status codes match the CLI exit codes.
 */

#ifndef ODNSLAB_H
#define ODNSLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum odnslab_status {
  ODNSLAB_OK = 0,
  ODNSLAB_E_USAGE = 2,
  ODNSLAB_E_CONFIG = 3,
  ODNSLAB_E_IO = 4,
  ODNSLAB_E_VALIDATION = 5,
} odnslab_status;

typedef struct odnslab_config odnslab_config;

const char* odnslab_version(void);

/* Message for the most recent failure on this thread. */
const char* odnslab_last_error(void);

/* Configuration -----------------------------------------------------------
 * Load order: explicit path, else the ODNSLAB_CONFIG environment variable,
 * else built-in defaults. Overrides use dotted keys, e.g.
 * odnslab_config_set(cfg, "transport.mode", "sim").
 */
odnslab_status odnslab_config_open(const char* path_or_null, odnslab_config** out);
odnslab_status odnslab_config_set(odnslab_config* cfg, const char* key,
                                  const char* value);
void odnslab_config_free(odnslab_config* cfg);

/* Measurement pipelines ----------------------------------------------------
 * Every run writes self-describing artifacts (config hash + seed header).
 * allow_live must be nonzero for real UDP transports; the simulator needs no
 * acknowledgment.
 */
odnslab_status odnslab_scan(odnslab_config* cfg, const char* targets_path,
                            const char* out_jsonl, int allow_live);
odnslab_status odnslab_ratelimit(odnslab_config* cfg, const char* targets_path,
                                 const char* out_jsonl, int allow_live);
odnslab_status odnslab_amp_support(odnslab_config* cfg, const char* targets_path,
                                   const char* out_jsonl, int allow_live);
odnslab_status odnslab_fingerprint(odnslab_config* cfg, const char* banners_jsonl,
                                   const char* out_csv);

/* Threat model ------------------------------------------------------------ */

typedef struct odnslab_model_result {
  double tf_qps;
  double rf_qps;
  double tf_uplink_bps;
  double rf_uplink_bps;
  double victim_bps_tf;
  double victim_bps_rf;
  double ratio;
} odnslab_model_result;

/* profile_name NULL or "" = every profile in the configured table. The
 * rendered comparison table is returned through rendered_out when non-NULL;
 * free it with odnslab_string_free. */
odnslab_status odnslab_model(odnslab_config* cfg, const char* profile_name,
                             const char* out_csv, char** rendered_out);
odnslab_status odnslab_model_curve(odnslab_config* cfg, const char* profile_name,
                                   double pps_lo, double pps_hi, size_t points,
                                   const char* out_csv);

/* Direct evaluation of the forwarder volume model, no files involved. */
odnslab_status odnslab_effective_rates(const char* device_name, double small_pps,
                                       double large_pps_or_zero, double uplink_bps,
                                       double downlink_bps, double query_bytes,
                                       double amplification, double mtu,
                                       odnslab_model_result* out);

/* Aggregate attack-traffic lower bound in bits per second. Returns a
 * negative value on invalid (non-positive) arguments. */
double odnslab_aggregate_floor(double count_resolvers, double per_resolver_pps,
                               double query_bytes, double amplification);

typedef struct odnslab_plan_summary {
  size_t selected_forwarders;
  double expected_aggregate_pps;
  uint64_t equivalent_direct_hosts;
  int policy_satisfied;
} odnslab_plan_summary;

/* policy: "pop" or "country". */
odnslab_status odnslab_orchestrate(odnslab_config* cfg, const char* inventory_csv,
                                   size_t max_forwarders, const char* policy,
                                   double direct_rate_pps, const char* out_csv,
                                   odnslab_plan_summary* summary_out);

/* Simulation --------------------------------------------------------------
 * Runs the workload embedded in the topology file and writes the event
 * trace (JSON Lines) and per-node counters (CSV).
 */
odnslab_status odnslab_simulate(odnslab_config* cfg, const char* topology_json,
                                const char* trace_jsonl, const char* counters_csv);

/* Analytics over previously written artifacts ------------------------------ */
odnslab_status odnslab_analyze_histogram(odnslab_config* cfg,
                                         const char* estimates_jsonl,
                                         const char* out_csv);
odnslab_status odnslab_analyze_recurrence(odnslab_config* cfg,
                                          const char* const* epoch_files,
                                          size_t epoch_count, const char* kind,
                                          const char* out_csv);
odnslab_status odnslab_analyze_rtt_delta(odnslab_config* cfg,
                                         const char* labeled_jsonl,
                                         const char* out_csv);
odnslab_status odnslab_analyze_amp_table(odnslab_config* cfg, const char* amp_jsonl,
                                         const char* out_csv);

/* Authoritative responder ---------------------------------------------------
 * Blocks while serving. port 0 uses the configured port; max_queries 0
 * serves until the process ends. on_bound (optional) receives the actual
 * port before serving starts.
 */
typedef void (*odnslab_port_callback)(uint16_t port, void* user);
odnslab_status odnslab_authd_run(odnslab_config* cfg, uint16_t port,
                                 uint64_t max_queries,
                                 odnslab_port_callback on_bound, void* user);

void odnslab_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* ODNSLAB_H */
