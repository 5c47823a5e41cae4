#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "term.hpp"
#include "types.hpp"

namespace tq {

// (M ~ N): the attacker observes M on the left and N on the right; the two
// must be indistinguishable.
struct Constraint {
  Term left;
  Term right;

  bool operator==(const Constraint& o) const { return left == o.left && right == o.right; }
  bool operator<(const Constraint& o) const {
    if (left != o.left) return left < o.left;
    return right < o.right;
  }
};

std::string to_string(const Constraint& c);

// One execution path: its constraints and the typing environment that
// gives a type to everything they mention. Environments here never
// contain union types.
struct ConstraintEntry {
  std::vector<Constraint> constraints;  // sorted, unique
  TypeEnv env;
};

std::string to_string(const ConstraintEntry& e);

void sort_unique(std::vector<Constraint>& cs);

// A constraint set. Stored as a sum/product tree over entry leaves so that
// the product unions produced by parallel composition stay polynomial;
// entries() expands on demand and the consistency check walks co-occurring
// leaf pairs instead of expanding.
class ConstraintSet {
 public:
  ConstraintSet() = default;

  static ConstraintSet leaf(std::vector<ConstraintEntry> entries);
  // {(∅, Γ)}
  static ConstraintSet single(TypeEnv env);
  // C ∪ C'
  static ConstraintSet sum(ConstraintSet a, ConstraintSet b);
  // C ∪× C'
  static ConstraintSet product(ConstraintSet a, ConstraintSet b);

  bool null() const { return !node_; }

  // C ∪∀ c
  ConstraintSet add_all(const std::vector<Constraint>& c) const;

  // Map every leaf entry.
  ConstraintSet map_entries(
      const std::function<std::vector<ConstraintEntry>(const ConstraintEntry&)>& f) const;

  // Expanded entries, with incompatible products dropped.
  std::vector<ConstraintEntry> entries() const;

  // Number of expanded entries, ignoring compatibility (saturating).
  uint64_t entry_count_bound() const;

  // Total number of constraints over all leaf entries (an upper bound on
  // distinct constraints).
  uint64_t constraint_count() const;

  // All leaf entries of the subtree (the co-occurrence basis).
  void collect_leaf_entries(std::vector<const ConstraintEntry*>& out) const;

  // Visit (a, a) for every leaf entry and (a, b) for every pair of leaf
  // entries that can occur together in one expanded entry. Stops early when
  // the visitor returns false.
  bool visit_cooccurring_pairs(
      const std::function<bool(const ConstraintEntry&, const ConstraintEntry&)>& f) const;

  // True when no two leaf entries bind the same atom to different types;
  // in that case pairwise checking is exactly entry-by-entry checking.
  bool products_compatible() const;

 private:
  enum class K : uint8_t { Leaf, Sum, Product };
  struct Node {
    K k = K::Leaf;
    std::vector<ConstraintEntry> entries;
    std::vector<ConstraintSet> kids;
  };
  std::shared_ptr<const Node> node_;
};

// Explicit-set operations (used by tests and small pipelines).
std::vector<ConstraintEntry> union_times(const std::vector<ConstraintEntry>& a,
                                         const std::vector<ConstraintEntry>& b);
std::vector<ConstraintEntry> union_forall(std::vector<ConstraintEntry> c,
                                          const std::vector<Constraint>& add);

// [C]_i — renaming for session i (constraints and environments).
ConstraintSet rename_constraints(const ConstraintSet& c, int i);
ConstraintEntry rename_entry(const ConstraintEntry& e, int i);

// [C]_i^n — renaming, type expansion and branching.
ConstraintSet expand_constraints(const ConstraintSet& c, int i, int n);
std::vector<ConstraintEntry> expand_entry(const ConstraintEntry& e, int i, int n);

// The attacker's initial knowledge derived from an environment: low keys,
// public and verification keys, and low nonces, in declaration order.
struct AttackerKnowledge {
  std::vector<Atom> restricted;  // all nonces of the environment
  std::vector<Term> terms;
};
AttackerKnowledge attacker_knowledge(const TypeEnv& env);

}  // namespace tq
