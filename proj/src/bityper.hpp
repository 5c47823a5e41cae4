#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "constraints.hpp"
#include "process.hpp"
#include "term.hpp"
#include "types.hpp"

namespace tq {

struct TypeFailure {
  std::string message;  // deepest failing subgoal
};

// Goal-directed checker for the term judgment  Gamma |- M ~ N : T -> c.
// Returns the generated constraints, or nullopt when no derivation exists
// under the fixed search strategy (structural rules first, THashL before
// THash, TAencL before TAencH, honest-key rules picked by the key's label,
// subtyping normalized at leaves, union targets left then right).
class BiTyper {
 public:
  std::optional<std::vector<Constraint>> check_term(const TypeEnv& env, const Term& left,
                                                    const Term& right, const Type& target);

  // Fig. 7 destructor rules; nullopt when no rule applies.
  std::optional<Type> type_destructor(const TypeEnv& env, const DestructorApp& d);

  // Process judgment  Gamma |- P ~ Q -> C  for replication-free bi-processes.
  std::variant<ConstraintSet, TypeFailure> check_process(const TypeEnv& env, const Proc& p);

  // Replicated fragment: types the replicated body and the sequential part
  // independently under the shared environment.
  struct ReplicatedSets {
    ConstraintSet replicated;
    ConstraintSet sequential;
  };
  std::variant<ReplicatedSets, TypeFailure> type_replicated(const TypeEnv& env,
                                                            const Proc& repl,
                                                            const Proc& seq);

  const std::string& last_failure() const { return failure_; }

 private:
  // deepest-subgoal diagnostics
  void note_failure(int depth, const std::string& msg);

  std::optional<std::vector<Constraint>> check_term_at(const TypeEnv& env, const Term& l,
                                                       const Term& r, const Type& t,
                                                       int depth);
  bool scope_ok(const TypeEnv& env, const Term& t);
  std::optional<Type> refinement_candidate(const TypeEnv& env, const Term& l,
                                           const Term& r);
  std::variant<ConstraintSet, TypeFailure> bind_and_check(const TypeEnv& env,
                                                          const Atom& var, const Type& t,
                                                          const Proc& cont);
  std::variant<ConstraintSet, TypeFailure> check_if(const TypeEnv& env, const Proc& p);

  std::string failure_;
  int failure_depth_ = -1;
};

}  // namespace tq
