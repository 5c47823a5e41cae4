#include "driver.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bityper.hpp"
#include "consistency.hpp"
#include "parser.hpp"

namespace tq {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string read_file(const std::string& path, bool& ok) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ok = false;
    return {};
  }
  std::ostringstream os;
  os << in.rdbuf();
  ok = true;
  return os.str();
}

void fill_dump(Report& rep, const ConstraintSet& c, const RunOptions& o,
               const char* prefix) {
  if (!o.dump_constraints) return;
  if (c.entry_count_bound() > o.dump_cap) {
    rep.constraint_dump.push_back(std::string(prefix) +
                                  "(constraint set too large to expand)");
    return;
  }
  for (const ConstraintEntry& e : c.entries())
    rep.constraint_dump.push_back(std::string(prefix) + to_string(e));
}

OracleBounds effective_bounds(const ProtocolFile& f, const RunOptions& o) {
  OracleBounds b = o.bounds;
  if (b.free_nonces.empty()) {
    b.free_nonces.push_back(make_atom(AtomKind::FreeNonce, "atk1"));
    b.free_nonces.push_back(make_atom(AtomKind::FreeNonce, "atk2"));
  }
  for (const Atom& a : f.freenames) b.free_nonces.push_back(a);
  for (const Atom& a : f.constants) b.constants.push_back(a);
  return b;
}

TypeEnv base_env(const ProtocolFile& f) { return f.key_env; }

}  // namespace

Report run_source(const std::string& source, const std::string& name,
                  const RunOptions& o) {
  Report rep;
  rep.file = name;
  auto t0 = Clock::now();

  auto parsed = parse_protocol(source);
  rep.parse_ms = ms_since(t0);
  if (auto* err = std::get_if<ParseError>(&parsed)) {
    rep.verdict = Verdict::Error;
    rep.detail = err->str();
    rep.total_ms = ms_since(t0);
    return rep;
  }
  const ProtocolFile& file = std::get<ProtocolFile>(parsed);
  rep.replicated = file.replicated_query;

  TypeEnv env = base_env(file);
  if (!well_formed(env)) {
    rep.verdict = Verdict::Error;
    rep.detail = "key declarations are not well-formed (declare keys before use)";
    rep.total_ms = ms_since(t0);
    return rep;
  }

  BiTyper typer;
  auto t1 = Clock::now();

  if (!file.replicated_query) {
    if (contains_repl(file.biprocess)) {
      rep.verdict = Verdict::Unknown;
      rep.reason = UnknownReason::OutOfFragment;
      rep.detail = "process uses replication; use 'query equivalence replicated'";
      rep.total_ms = ms_since(t0);
      return rep;
    }
    auto typed = typer.check_process(env, file.biprocess);
    rep.type_ms = ms_since(t1);
    if (auto* f = std::get_if<TypeFailure>(&typed)) {
      rep.verdict = Verdict::Unknown;
      rep.reason = UnknownReason::TypeFailure;
      rep.detail = f->message;
      rep.total_ms = ms_since(t0);
      return rep;
    }
    const ConstraintSet& c = std::get<ConstraintSet>(typed);
    rep.constraint_count = c.constraint_count();
    rep.entry_count = c.entry_count_bound();
    fill_dump(rep, c, o, "");
    auto t2 = Clock::now();
    auto failure = check_const(c);
    rep.consistency_ms = ms_since(t2);
    if (failure) {
      rep.verdict = Verdict::Unknown;
      rep.reason = UnknownReason::InconsistentConstraints;
      rep.detail = failure->detail;
    } else {
      rep.verdict = Verdict::ProvenEquivalent;
    }
    rep.total_ms = ms_since(t0);
    return rep;
  }

  // replicated query
  auto split = split_replication(file.biprocess);
  if (auto* u = std::get_if<UnsupportedShape>(&split)) {
    rep.verdict = Verdict::Unknown;
    rep.reason = UnknownReason::OutOfFragment;
    rep.detail = u->reason;
    rep.total_ms = ms_since(t0);
    return rep;
  }
  const SplitReplication& parts = std::get<SplitReplication>(split);
  for (const auto& [a, ann] : parts.shared_nonces) {
    NonceType nt;
    nt.label = ann.label;
    nt.mult = ann.mult;
    nt.name = a;
    env.bind(a, Type::nonce(nt));
  }
  auto typed = typer.type_replicated(env, parts.replicated, parts.sequential);
  rep.type_ms = ms_since(t1);
  if (auto* f = std::get_if<TypeFailure>(&typed)) {
    rep.verdict = Verdict::Unknown;
    rep.reason = UnknownReason::TypeFailure;
    rep.detail = f->message;
    rep.total_ms = ms_since(t0);
    return rep;
  }
  const auto& sets = std::get<BiTyper::ReplicatedSets>(typed);
  rep.constraint_count =
      sets.replicated.constraint_count() + sets.sequential.constraint_count();
  rep.entry_count =
      sets.replicated.entry_count_bound() + sets.sequential.entry_count_bound();
  fill_dump(rep, sets.replicated, o, "[!] ");
  fill_dump(rep, sets.sequential, o, "");
  auto t2 = Clock::now();
  auto failure = check_replicated(sets.replicated, sets.sequential);
  rep.consistency_ms = ms_since(t2);
  if (failure) {
    rep.verdict = Verdict::Unknown;
    rep.reason = UnknownReason::InconsistentConstraints;
    rep.detail = failure->detail;
  } else {
    rep.verdict = Verdict::ProvenEquivalent;
  }
  rep.total_ms = ms_since(t0);
  return rep;
}

Report run_file(const std::string& path, const RunOptions& o) {
  bool ok = false;
  std::string src = read_file(path, ok);
  if (!ok) {
    Report rep;
    rep.file = path;
    rep.verdict = Verdict::Error;
    rep.detail = "cannot read " + path;
    return rep;
  }
  return run_source(src, path, o);
}

Report oracle_source(const std::string& source, const std::string& name,
                     const RunOptions& o) {
  Report rep;
  rep.file = name;
  rep.oracle_mode = true;
  auto t0 = Clock::now();
  auto parsed = parse_protocol(source);
  rep.parse_ms = ms_since(t0);
  if (auto* err = std::get_if<ParseError>(&parsed)) {
    rep.verdict = Verdict::Error;
    rep.detail = err->str();
    rep.total_ms = ms_since(t0);
    return rep;
  }
  const ProtocolFile& file = std::get<ProtocolFile>(parsed);
  rep.replicated = file.replicated_query;
  OracleBounds b = effective_bounds(file, o);
  auto t1 = Clock::now();
  auto result =
      trace_equiv_bounded(erase_left(file.biprocess), erase_right(file.biprocess), b);
  rep.oracle_ms = ms_since(t1);
  rep.oracle_complete = result.complete;
  rep.attack_found = result.attack.has_value();
  if (result.attack) {
    rep.verdict = Verdict::Unknown;
    rep.detail = (result.attack->from_left ? "left trace unmatched: "
                                           : "right trace unmatched: ") +
                 result.attack->detail;
    for (const Action& a : result.attack->actions) rep.witness.push_back(to_string(a));
  } else {
    rep.verdict = Verdict::ProvenEquivalent;  // NoAttackFound (bounded)
  }
  rep.total_ms = ms_since(t0);
  return rep;
}

Report oracle_file(const std::string& path, const RunOptions& o) {
  bool ok = false;
  std::string src = read_file(path, ok);
  if (!ok) {
    Report rep;
    rep.file = path;
    rep.oracle_mode = true;
    rep.verdict = Verdict::Error;
    rep.detail = "cannot read " + path;
    return rep;
  }
  return oracle_source(src, path, o);
}

Report replay_file(const std::string& path, const std::string& witness_path,
                   const RunOptions& o) {
  Report rep;
  rep.file = path;
  rep.oracle_mode = true;
  bool ok = false;
  std::string src = read_file(path, ok);
  if (!ok) {
    rep.verdict = Verdict::Error;
    rep.detail = "cannot read " + path;
    return rep;
  }
  std::string wsrc = read_file(witness_path, ok);
  if (!ok) {
    rep.verdict = Verdict::Error;
    rep.detail = "cannot read " + witness_path;
    return rep;
  }
  auto parsed = parse_protocol(src);
  if (auto* err = std::get_if<ParseError>(&parsed)) {
    rep.verdict = Verdict::Error;
    rep.detail = err->str();
    return rep;
  }
  const ProtocolFile& file = std::get<ProtocolFile>(parsed);
  OracleBounds b = effective_bounds(file, o);

  nlohmann::json j = nlohmann::json::parse(wsrc, nullptr, false);
  if (j.is_discarded() || !j.contains("witness") || !j["witness"].is_array()) {
    rep.verdict = Verdict::Error;
    rep.detail = "witness file must contain a \"witness\" action array";
    return rep;
  }
  std::map<std::string, Atom> symbols;
  for (const Atom& a : file.constants) symbols[a.base] = a;
  for (const Atom& a : file.freenames) symbols[a.base] = a;
  for (const Atom& a : b.free_nonces) symbols[a.base] = a;
  for (int i = 1; i <= 64; ++i) symbols["ax" + std::to_string(i)] = frame_var(i);

  std::vector<Action> word;
  for (const auto& item : j["witness"]) {
    std::string s = item.get<std::string>();
    Action a;
    if (s.rfind("in(", 0) == 0 && s.back() == ')') {
      a.is_input = true;
      auto t = parse_term(s.substr(3, s.size() - 4), symbols);
      if (auto* e = std::get_if<ParseError>(&t)) {
        rep.verdict = Verdict::Error;
        rep.detail = "bad recipe in witness: " + e->str();
        return rep;
      }
      a.recipe = std::get<Term>(t);
    } else if (s.rfind("out(ax", 0) == 0) {
      a.is_input = false;
      a.out_ordinal = std::atoi(s.c_str() + 6);
    } else {
      rep.verdict = Verdict::Error;
      rep.detail = "bad action in witness: " + s;
      return rep;
    }
    word.push_back(std::move(a));
  }

  auto t1 = Clock::now();
  auto failure =
      replay(erase_left(file.biprocess), erase_right(file.biprocess), word, b);
  rep.oracle_ms = ms_since(t1);
  rep.attack_found = failure.has_value();
  if (failure) {
    rep.verdict = Verdict::Unknown;
    rep.detail = failure->detail;
    for (const Action& a : failure->actions) rep.witness.push_back(to_string(a));
  } else {
    rep.verdict = Verdict::ProvenEquivalent;
  }
  rep.total_ms = ms_since(t1);
  return rep;
}

std::string report_json(const Report& r) {
  nlohmann::json j;
  j["schema"] = 1;
  j["file"] = r.file;
  j["query"] = r.replicated ? "equivalence replicated" : "equivalence";
  if (r.oracle_mode) {
    j["mode"] = "oracle";
    j["result"] = r.verdict == Verdict::Error ? "error"
                  : r.attack_found           ? "attack"
                                             : "no_attack_found";
    j["complete"] = r.oracle_complete;
    j["witness"] = r.witness;
  } else {
    j["mode"] = "prove";
    switch (r.verdict) {
      case Verdict::ProvenEquivalent:
        j["verdict"] = "proven_equivalent";
        break;
      case Verdict::Unknown:
        j["verdict"] = "unknown";
        break;
      case Verdict::Error:
        j["verdict"] = "error";
        break;
    }
    switch (r.reason) {
      case UnknownReason::None:
        j["reason"] = nullptr;
        break;
      case UnknownReason::TypeFailure:
        j["reason"] = "type_failure";
        break;
      case UnknownReason::InconsistentConstraints:
        j["reason"] = "inconsistent_constraints";
        break;
      case UnknownReason::OutOfFragment:
        j["reason"] = "out_of_fragment";
        break;
    }
    j["constraint_count"] = r.constraint_count;
    j["entry_count"] = r.entry_count;
  }
  if (!r.detail.empty()) j["detail"] = r.detail;
  j["timing_ms"] = {{"parse", r.parse_ms},
                    {"type", r.type_ms},
                    {"consistency", r.consistency_ms},
                    {"oracle", r.oracle_ms},
                    {"total", r.total_ms}};
  if (!r.constraint_dump.empty()) j["constraints"] = r.constraint_dump;
  return j.dump(2);
}

std::string report_text(const Report& r) {
  std::ostringstream os;
  os << r.file << ": ";
  if (r.oracle_mode) {
    if (r.verdict == Verdict::Error)
      os << "ERROR: " << r.detail;
    else if (r.attack_found) {
      os << "Attack";
      if (!r.detail.empty()) os << " (" << r.detail << ")";
      for (const std::string& a : r.witness) os << "\n  " << a;
    } else {
      os << "NoAttackFound";
      if (!r.oracle_complete) os << " (input enumeration truncated at the cap)";
    }
    os << "\n  oracle time: " << r.oracle_ms << " ms";
    return os.str();
  }
  switch (r.verdict) {
    case Verdict::ProvenEquivalent:
      os << "Proven-Equivalent";
      break;
    case Verdict::Unknown:
      os << "Unknown(";
      switch (r.reason) {
        case UnknownReason::TypeFailure: os << "TypeFailure"; break;
        case UnknownReason::InconsistentConstraints: os << "InconsistentConstraints"; break;
        case UnknownReason::OutOfFragment: os << "OutOfFragment"; break;
        default: os << "?"; break;
      }
      os << ")";
      break;
    case Verdict::Error:
      os << "ERROR";
      break;
  }
  if (!r.detail.empty()) os << "\n  " << r.detail;
  os << "\n  constraints: " << r.constraint_count << ", entries: " << r.entry_count;
  os << "\n  timing: parse " << r.parse_ms << " ms, type " << r.type_ms
     << " ms, consistency " << r.consistency_ms << " ms, total " << r.total_ms << " ms";
  for (const std::string& line : r.constraint_dump) os << "\n  " << line;
  return os.str();
}

int exit_code(const Report& r) {
  switch (r.verdict) {
    case Verdict::ProvenEquivalent:
      return 0;
    case Verdict::Unknown:
      return 1;
    case Verdict::Error:
      return 2;
  }
  return 2;
}

}  // namespace tq
