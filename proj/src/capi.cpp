#include "tq/tq.h"

#include <cstring>
#include <string>

#include "driver.hpp"

struct tq_report {
  tq::Report rep;
  std::string json_cache;
  std::string text_cache;
};

namespace {

thread_local std::string g_last_error;

tq::RunOptions to_options(const tq_options* o) {
  tq::RunOptions r;
  if (o) {
    if (o->trace_depth > 0) r.bounds.trace_depth = o->trace_depth;
    if (o->recipe_depth > 0) r.bounds.recipe_depth = o->recipe_depth;
    if (o->repl_bound >= 0) r.bounds.repl_bound = o->repl_bound;
    if (o->max_input_values > 0) r.bounds.max_input_values = o->max_input_values;
    r.dump_constraints = o->dump_constraints != 0;
  }
  return r;
}

tq_status finish(tq::Report rep, tq_report** out) {
  if (!out) {
    g_last_error = "null output handle";
    return TQ_ERR_BADARG;
  }
  auto* h = new tq_report{std::move(rep), {}, {}};
  if (h->rep.verdict == tq::Verdict::Error) {
    g_last_error = h->rep.detail;
    *out = h;  // the report still carries the diagnostics
    if (h->rep.detail.rfind("cannot read", 0) == 0) return TQ_ERR_IO;
    if (h->rep.detail.rfind("parse error", 0) == 0) return TQ_ERR_PARSE;
    return TQ_ERR_INTERNAL;
  }
  *out = h;
  return TQ_OK;
}

}  // namespace

extern "C" {

void tq_options_init(tq_options* o) {
  if (!o) return;
  o->trace_depth = 6;
  o->recipe_depth = 3;
  o->repl_bound = 2;
  o->max_input_values = 256;
  o->dump_constraints = 0;
}

tq_status tq_run(const char* path, const tq_options* o, tq_report** out) {
  if (!path) {
    g_last_error = "null path";
    return TQ_ERR_BADARG;
  }
  return finish(tq::run_file(path, to_options(o)), out);
}

tq_status tq_run_source(const char* source, const char* name, const tq_options* o,
                        tq_report** out) {
  if (!source) {
    g_last_error = "null source";
    return TQ_ERR_BADARG;
  }
  return finish(tq::run_source(source, name ? name : "<memory>", to_options(o)), out);
}

tq_status tq_oracle(const char* path, const tq_options* o, tq_report** out) {
  if (!path) {
    g_last_error = "null path";
    return TQ_ERR_BADARG;
  }
  return finish(tq::oracle_file(path, to_options(o)), out);
}

tq_status tq_replay(const char* path, const char* witness_path, const tq_options* o,
                    tq_report** out) {
  if (!path || !witness_path) {
    g_last_error = "null path";
    return TQ_ERR_BADARG;
  }
  return finish(tq::replay_file(path, witness_path, to_options(o)), out);
}

tq_verdict tq_report_verdict(const tq_report* r) {
  if (!r) return TQ_ERROR;
  return static_cast<tq_verdict>(static_cast<int>(r->rep.verdict));
}

tq_reason tq_report_reason(const tq_report* r) {
  if (!r) return TQ_REASON_NONE;
  return static_cast<tq_reason>(static_cast<int>(r->rep.reason));
}

int tq_report_attack_found(const tq_report* r) {
  return r && r->rep.attack_found ? 1 : 0;
}

uint64_t tq_report_constraint_count(const tq_report* r) {
  return r ? r->rep.constraint_count : 0;
}

uint64_t tq_report_entry_count(const tq_report* r) {
  return r ? r->rep.entry_count : 0;
}

double tq_report_phase_ms(const tq_report* r, const char* phase) {
  if (!r || !phase) return 0;
  if (!std::strcmp(phase, "parse")) return r->rep.parse_ms;
  if (!std::strcmp(phase, "type")) return r->rep.type_ms;
  if (!std::strcmp(phase, "consistency")) return r->rep.consistency_ms;
  if (!std::strcmp(phase, "oracle")) return r->rep.oracle_ms;
  if (!std::strcmp(phase, "total")) return r->rep.total_ms;
  return 0;
}

const char* tq_report_json(tq_report* r) {
  if (!r) return "";
  if (r->json_cache.empty()) r->json_cache = tq::report_json(r->rep);
  return r->json_cache.c_str();
}

const char* tq_report_text(tq_report* r) {
  if (!r) return "";
  if (r->text_cache.empty()) r->text_cache = tq::report_text(r->rep);
  return r->text_cache.c_str();
}

int tq_report_exit_code(const tq_report* r) {
  if (!r) return 2;
  if (r->rep.oracle_mode && r->rep.verdict != tq::Verdict::Error)
    return r->rep.attack_found ? 1 : 0;
  return tq::exit_code(r->rep);
}

void tq_report_free(tq_report* r) { delete r; }

const char* tq_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
