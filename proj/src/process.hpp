#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "term.hpp"
#include "types.hpp"

namespace tq {

// A left/right pair of terms; equal on both sides unless it came from
// choice[M,N] or from zipping two different processes.
struct BiTerm {
  Term left;
  Term right;

  BiTerm() = default;
  BiTerm(Term t) : left(t), right(std::move(t)) {}
  BiTerm(Term l, Term r) : left(std::move(l)), right(std::move(r)) {}
  bool same() const { return left == right; }
  bool operator==(const BiTerm& o) const { return left == o.left && right == o.right; }
};

std::string to_string(const BiTerm& t);

struct NonceAnnotation {
  Label label = Label::HH;
  Mult mult = Mult::One;
  bool operator==(const NonceAnnotation& o) const {
    return label == o.label && mult == o.mult;
  }
};

enum class ProcKind : uint8_t { Zero, New, Out, In, Par, Let, IfEq, Repl };

// Destructors applicable in a let: d(y) with d from Fig. 1.
struct DestructorApp {
  Op op = Op::Fst;  // Dec | Adec | Check | Fst | Snd
  Atom arg;         // the variable y
  Atom key;         // for Dec/Adec/Check
  bool has_key() const { return op == Op::Dec || op == Op::Adec || op == Op::Check; }
  bool operator==(const DestructorApp& o) const {
    return op == o.op && arg == o.arg && (!has_key() || key == o.key);
  }
};

std::string to_string(const DestructorApp& d);

// Shared immutable bi-process tree. A plain (single-sided) process is the
// special case in which every BiTerm has equal sides.
class Proc {
 public:
  Proc() = default;

  static Proc zero();
  static Proc make_new(Atom nonce, NonceAnnotation ann, Proc cont);
  static Proc out(BiTerm payload, Proc cont);
  static Proc in(Atom var, Proc cont);
  static Proc par(Proc a, Proc b);
  static Proc let(Atom var, DestructorApp d, Proc then_p, Proc else_p);
  static Proc ifeq(BiTerm a, BiTerm b, Proc then_p, Proc else_p);
  static Proc repl(Proc body);

  bool null() const { return !node_; }
  ProcKind kind() const { return node_->kind; }
  const Atom& binder() const { return node_->binder; }      // New / In / Let
  const NonceAnnotation& ann() const { return node_->ann; } // New
  const BiTerm& payload() const { return node_->terms[0]; } // Out
  const BiTerm& lhs() const { return node_->terms[0]; }     // IfEq
  const BiTerm& rhs() const { return node_->terms[1]; }     // IfEq
  const DestructorApp& dapp() const { return node_->dapp; } // Let
  const Proc& first() const { return node_->sub[0]; }   // cont / then / par-left
  const Proc& second() const { return node_->sub[1]; }  // else / par-right

  bool operator==(const Proc& o) const;

 private:
  struct Node {
    ProcKind kind = ProcKind::Zero;
    Atom binder;
    NonceAnnotation ann;
    std::vector<BiTerm> terms;
    DestructorApp dapp;
    std::vector<Proc> sub;
  };
  std::shared_ptr<const Node> node_;
};

std::string to_string(const Proc& p);

Proc erase_left(const Proc& p);
Proc erase_right(const Proc& p);

// Structural zip of two single-sided processes. Binders are aligned
// positionally: the right process's bound names are renamed to the left's,
// and annotations must agree.
struct ShapeMismatch {
  std::string where;
};
std::variant<Proc, ShapeMismatch> pair_processes(const Proc& left, const Proc& right);

// Renaming of a process for session i: nonces bound with an infinite
// annotation (or typed tau^{l,inf} in env) become their index-i copies with
// a finite annotation; every variable becomes x_i.
Proc rename_session(const Proc& p, int i, const TypeEnv& env);

// new n1...nk.((!P) | P') -> (P, P') with the prefix recorded as nonce
// bindings. Verifies the side conditions of the replication theorem:
// the replicated part binds only infinite nonces, the sequential part only
// finite ones, and they share no variables.
struct SplitReplication {
  Proc replicated;
  Proc sequential;
  std::vector<std::pair<Atom, NonceAnnotation>> shared_nonces;
};
struct UnsupportedShape {
  std::string reason;
};
std::variant<SplitReplication, UnsupportedShape> split_replication(const Proc& p);

bool contains_repl(const Proc& p);
void bound_vars(const Proc& p, std::vector<Atom>& out);
void bound_nonces(const Proc& p, std::vector<std::pair<Atom, NonceAnnotation>>& out);

}  // namespace tq
