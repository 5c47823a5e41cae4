#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oracle.hpp"

namespace tq {

enum class Verdict : int {
  ProvenEquivalent = 0,
  Unknown = 1,
  Error = 2,
};

enum class UnknownReason : int {
  None = 0,
  TypeFailure = 1,
  InconsistentConstraints = 2,
  OutOfFragment = 3,
};

struct RunOptions {
  bool dump_constraints = false;
  OracleBounds bounds;
  uint64_t dump_cap = 5000;  // skip the dump if the set expands beyond this
};

struct Report {
  std::string file;
  bool replicated = false;
  Verdict verdict = Verdict::Error;
  UnknownReason reason = UnknownReason::None;
  std::string detail;

  uint64_t constraint_count = 0;
  uint64_t entry_count = 0;

  double parse_ms = 0;
  double type_ms = 0;
  double consistency_ms = 0;
  double oracle_ms = 0;
  double total_ms = 0;

  std::vector<std::string> constraint_dump;

  // oracle runs
  bool oracle_mode = false;
  bool attack_found = false;
  bool oracle_complete = true;
  std::vector<std::string> witness;
};

Report run_source(const std::string& source, const std::string& name, const RunOptions& o);
Report run_file(const std::string& path, const RunOptions& o);

Report oracle_source(const std::string& source, const std::string& name,
                     const RunOptions& o);
Report oracle_file(const std::string& path, const RunOptions& o);

// Replays a witness file (JSON, as produced in oracle reports).
Report replay_file(const std::string& path, const std::string& witness_path,
                   const RunOptions& o);

std::string report_json(const Report& r);
std::string report_text(const Report& r);

int exit_code(const Report& r);

}  // namespace tq
