#pragma once

#include <optional>
#include <string>

#include "constraints.hpp"

namespace tq {

// First-order syntactic unification; process variables are flexible,
// everything else rigid. The result is idempotent and most general.
std::optional<Substitution> mgu(const Term& a, const Term& b);

// step1: plug in the values of finite-refinement variables and rebuild the
// environment over the remaining atoms plus every finite nonce type
// occurring in it.
struct Step1Result {
  std::vector<Constraint> constraints;
  TypeEnv env;
};
Step1Result step1(const std::vector<Constraint>& c, const TypeEnv& env);

// step2: open pairs everywhere, ciphertexts and signatures under low keys,
// and signatures under honest keys (keeping the signature itself).
std::vector<Constraint> step2(const std::vector<Constraint>& c, const TypeEnv& env);

// step3: every remaining constraint must be one of the shapes the attacker
// cannot test apart. Returns the first offending constraint.
std::optional<Constraint> step3(const std::vector<Constraint>& c, const TypeEnv& env);

// step4: whenever two left sides unify (under the refinement-family side
// condition), the right sides must agree after the index-mirroring and
// low-variable adjustments; and symmetrically.
struct Step4Failure {
  Constraint a;
  Constraint b;
  Substitution unifier;
  bool right_sides_unified = false;  // true when the symmetric direction failed
};
std::optional<Step4Failure> step4(const std::vector<Constraint>& c, const TypeEnv& env);

struct ConsistencyFailure {
  int step = 0;  // 3 or 4
  std::string detail;
  ConstraintEntry entry;  // the (merged) entry that failed
};

// The four-step procedure over every entry of the set. For factored sets
// without cross-product type conflicts this walks co-occurring leaf pairs,
// which checks exactly the same conditions as expanding the product.
std::optional<ConsistencyFailure> check_const(const ConstraintSet& c);
bool check_const_ok(const ConstraintSet& c);

std::optional<ConsistencyFailure> check_entry(const ConstraintEntry& e);

// check_const([C]_1 ∪× [C]_2 ∪× [C']_1): sound for every number of
// sessions of the replicated part by the two-sessions-suffice and
// type-reduction theorems.
std::optional<ConsistencyFailure> check_replicated(const ConstraintSet& c,
                                                   const ConstraintSet& seq);

}  // namespace tq
