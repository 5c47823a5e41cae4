/* tq — a typing-based trace-equivalence prover for security protocols.
 *
 * C API of the shared library. All functions return a tq_status; results
 * are returned through opaque tq_report handles that the caller frees with
 * tq_report_free. The library is thread-safe: handles are independent and
 * tq_last_error is thread-local.
 */
#ifndef TQ_TQ_H
#define TQ_TQ_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct tq_report tq_report;

typedef enum tq_status {
  TQ_OK = 0,
  TQ_ERR_IO = 1,
  TQ_ERR_PARSE = 2,
  TQ_ERR_BADARG = 3,
  TQ_ERR_INTERNAL = 4
} tq_status;

typedef enum tq_verdict {
  TQ_PROVEN_EQUIVALENT = 0,
  TQ_UNKNOWN = 1,
  TQ_ERROR = 2
} tq_verdict;

typedef enum tq_reason {
  TQ_REASON_NONE = 0,
  TQ_REASON_TYPE_FAILURE = 1,
  TQ_REASON_INCONSISTENT_CONSTRAINTS = 2,
  TQ_REASON_OUT_OF_FRAGMENT = 3
} tq_reason;

typedef struct tq_options {
  int trace_depth;   /* oracle: visible actions per trace (default 6) */
  int recipe_depth;  /* oracle: attacker term depth (default 3) */
  int repl_bound;    /* oracle: unfoldings per replication (default 2) */
  int max_input_values; /* oracle: value classes explored per input (default 256) */
  int dump_constraints; /* include the constraint dump in the report */
} tq_options;

void tq_options_init(tq_options* o);

/* Run the full proving pipeline (parse, zip, type, consistency) on a
 * protocol file. On success *out owns the report. */
tq_status tq_run(const char* path, const tq_options* o, tq_report** out);
tq_status tq_run_source(const char* source, const char* name, const tq_options* o,
                        tq_report** out);

/* Run the bounded brute-force oracle on the same file. */
tq_status tq_oracle(const char* path, const tq_options* o, tq_report** out);

/* Replay a recorded attack witness (JSON with a "witness" array). */
tq_status tq_replay(const char* path, const char* witness_path, const tq_options* o,
                    tq_report** out);

tq_verdict tq_report_verdict(const tq_report* r);
tq_reason tq_report_reason(const tq_report* r);
int tq_report_attack_found(const tq_report* r);
uint64_t tq_report_constraint_count(const tq_report* r);
uint64_t tq_report_entry_count(const tq_report* r);
/* phase is one of "parse", "type", "consistency", "oracle", "total". */
double tq_report_phase_ms(const tq_report* r, const char* phase);
/* Strings are owned by the report and live until tq_report_free. */
const char* tq_report_json(tq_report* r);
const char* tq_report_text(tq_report* r);
/* Conventional process exit code: 0 proven / no attack, 1 unknown / attack,
 * 2 error. */
int tq_report_exit_code(const tq_report* r);

void tq_report_free(tq_report* r);

/* Thread-local description of the last failure. */
const char* tq_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* TQ_TQ_H */
