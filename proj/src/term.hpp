#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tq {

// Sorts of atomic symbols. Bound nonces are created by the protocol,
// free nonces belong to the attacker, keys are the atomic long-term keys,
// variables are process inputs, frame variables ax_1, ax_2, ... store
// outputs, and constants are public identifiers.
enum class AtomKind : uint8_t {
  BoundNonce,
  FreeNonce,
  Key,
  Var,
  FrameVar,
  Constant,
};

struct Atom {
  AtomKind kind = AtomKind::Constant;
  std::string base;
  // Session index for the m_i / x_i families; 0 means unindexed.
  // Only bound nonces and variables carry one.
  int session = 0;
  // Frame variables are canonical: ax_1, ax_2, ... (ordinal >= 1).
  int ordinal = 0;
  // Freshening disambiguator for same-named binders; invisible in reports
  // unless needed.
  int tag = 0;

  bool operator==(const Atom& o) const {
    return kind == o.kind && session == o.session && ordinal == o.ordinal &&
           tag == o.tag && base == o.base;
  }
  bool operator!=(const Atom& o) const { return !(*this == o); }
  bool operator<(const Atom& o) const;
};

Atom make_atom(AtomKind kind, std::string base, int session = 0, int tag = 0);
Atom frame_var(int ordinal);
std::string to_string(const Atom& a);
size_t hash_of(const Atom& a);

enum class Op : uint8_t {
  Leaf,
  Pk,
  Vk,
  Enc,
  Aenc,
  Sign,
  Pair,
  Hash,
  Dec,
  Adec,
  Check,
  Fst,
  Snd,
};

bool is_constructor(Op op);
bool is_destructor(Op op);
int arity(Op op);
const char* op_name(Op op);

// Immutable term tree with structural equality and a cached hash.
class Term {
 public:
  Term() = default;
  static Term atom(const Atom& a);
  static Term make(Op op, std::vector<Term> args);

  static Term pk(Term k) { return make(Op::Pk, {std::move(k)}); }
  static Term vk(Term k) { return make(Op::Vk, {std::move(k)}); }
  static Term enc(Term m, Term k) { return make(Op::Enc, {std::move(m), std::move(k)}); }
  static Term aenc(Term m, Term k) { return make(Op::Aenc, {std::move(m), std::move(k)}); }
  static Term sign(Term m, Term k) { return make(Op::Sign, {std::move(m), std::move(k)}); }
  static Term pair(Term a, Term b) { return make(Op::Pair, {std::move(a), std::move(b)}); }
  static Term hash(Term m) { return make(Op::Hash, {std::move(m)}); }

  bool null() const { return !node_; }
  Op op() const { return node_->op; }
  bool is_atom() const { return node_->op == Op::Leaf; }
  bool is_atom(AtomKind k) const { return is_atom() && leaf().kind == k; }
  const Atom& leaf() const { return node_->atom; }
  const std::vector<Term>& args() const { return node_->args; }
  size_t hash() const { return node_->hash; }
  size_t size() const { return node_->size; }

  bool operator==(const Term& o) const;
  bool operator!=(const Term& o) const { return !(*this == o); }
  bool operator<(const Term& o) const;

 private:
  struct Node {
    Op op = Op::Leaf;
    Atom atom;
    std::vector<Term> args;
    size_t hash = 0;
    size_t size = 1;
  };
  std::shared_ptr<const Node> node_;
};

// Finite map from variables (process or frame) to terms.
using Substitution = std::map<Atom, Term>;

// new E. { t_1/ax_1, ..., t_n/ax_n }
struct Frame {
  std::vector<Atom> restricted;
  std::vector<Term> bindings;  // bindings[i] is the image of ax_{i+1}
};

// Term evaluation t|v per the destructor tables; nullopt is the failure
// value (the attacker observes it).
std::optional<Term> evaluate(const Term& t);

// Constructor-only terms with atomic keys in every key position.
bool is_message(const Term& t);

bool is_ground(const Term& t);

Term apply(const Substitution& s, const Term& t);

// Renames arbitrary atoms (not only variables), for alpha-conversion.
Term rename_atoms(const Term& t, const std::map<Atom, Atom>& ren);

// Swaps session indices i and j on every atom; involutive.
Term exchange_indices(const Term& t, int i, int j);

// Renames for session i: variables x -> x_i, and nonces from `families`
// (bound nonces with an infinite nonce type) -> m_i.
Term rename_session(const Term& t, int i, const std::vector<Atom>& families);

void collect_atoms(const Term& t, std::vector<Atom>& out);
std::vector<Atom> term_vars(const Term& t);

std::string to_string(const Term& t);

}  // namespace tq

template <>
struct std::hash<tq::Atom> {
  size_t operator()(const tq::Atom& a) const;
};
template <>
struct std::hash<tq::Term> {
  size_t operator()(const tq::Term& t) const { return t.null() ? 0 : t.hash(); }
};
