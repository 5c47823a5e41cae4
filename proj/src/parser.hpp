#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "process.hpp"
#include "term.hpp"
#include "types.hpp"

namespace tq {

struct ParseError {
  int line = 0;
  int col = 0;
  std::string message;
  std::string expected;

  std::string str() const;
};

// One equivalence query: declarations, the zipped bi-process, and the
// query mode.
struct ProtocolFile {
  std::vector<Atom> constants;
  std::vector<Atom> freenames;
  TypeEnv key_env;  // declaration order
  Proc biprocess;
  bool replicated_query = false;
};

std::variant<ProtocolFile, ParseError> parse_protocol(const std::string& source);

std::string print_protocol(const ProtocolFile& f);

// Standalone term / type parsers for tests and the constraint dump
// round-trip. Identifiers are resolved against `symbols`; unknown
// identifiers are an error.
std::variant<Term, ParseError> parse_term(const std::string& source,
                                          const std::map<std::string, Atom>& symbols);
std::variant<Type, ParseError> parse_type(const std::string& source,
                                          const std::map<std::string, Atom>& symbols);

}  // namespace tq
