#pragma once

#include <optional>
#include <string>
#include <vector>

#include "process.hpp"
#include "term.hpp"

namespace tq {

// Bounds and attacker pools for the ground-truth search.
struct OracleBounds {
  int trace_depth = 6;    // visible actions per trace
  int recipe_depth = 3;   // attacker term depth
  int repl_bound = 2;     // unfoldings per replication
  // Input steps explore at most this many value classes, smallest recipes
  // first; when the bound trips, the NoAttackFound verdict is flagged as
  // incomplete. Attack verdicts are always exact.
  int max_input_values = 256;
  std::vector<Atom> free_nonces;  // attacker names (defaults added by caller)
  std::vector<Atom> constants;
};

// Execution state (E; P; phi; sigma). Frame terms are stored ground
// (outputs are composed with the store when emitted).
struct Configuration {
  std::vector<Atom> private_names;
  std::vector<std::pair<Proc, int>> active;  // process and its replication budget
  std::vector<Term> frame;
  Substitution store;
  int unfold_count = 0;  // fresh-index source for replication copies

  std::string key() const;  // canonical form for dedup
};

struct Action {
  bool is_input = false;
  int out_ordinal = 0;  // for outputs: the new ax ordinal
  Term recipe;          // for inputs
};

std::string to_string(const Action& a);

// All tau-descendants (reflexive): the states from which the next visible
// action can fire.
std::vector<Configuration> tau_closure(const Configuration& c, int max_states = 100000);

// Visible successors of a single configuration (no tau prefix).
std::vector<std::pair<Action, Configuration>> visible_steps(const Configuration& c,
                                                            const OracleBounds& b);

struct Distinguished {
  Term left_recipe;
  Term right_recipe;
};

// Bounded static equivalence of ground frames: enumerates attacker recipes
// up to the depth bound over both frames simultaneously and checks that the
// same pairs of recipes evaluate equal (failure included) on both sides.
std::optional<Distinguished> static_equiv(const Frame& f1, const Frame& f2,
                                          const OracleBounds& b);

struct AttackWitness {
  std::vector<Action> actions;
  bool from_left = true;  // the side whose trace is unmatched
  std::string detail;
};

struct TraceSearchResult {
  std::optional<AttackWitness> attack;
  bool complete = true;  // false when the input-value cap truncated the search
};

// Bounded trace-equivalence search: explores all left traces up to the
// bounds, synchronising the set of right configurations on the same action
// word, and requires a statically equivalent right frame at every prefix;
// then the same with the sides swapped.
TraceSearchResult trace_equiv_bounded(const Proc& left, const Proc& right,
                                      const OracleBounds& b);

// Replays a recorded action word against both processes; returns the
// failure description if the word or the equivalence breaks.
std::optional<AttackWitness> replay(const Proc& left, const Proc& right,
                                    const std::vector<Action>& word,
                                    const OracleBounds& b);

}  // namespace tq
