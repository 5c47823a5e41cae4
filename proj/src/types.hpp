#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "term.hpp"

namespace tq {

// Security labels: first letter confidentiality, second integrity.
enum class Label : uint8_t { LL, HL, HH };

const char* to_string(Label l);
inline bool high_confidentiality(Label l) { return l != Label::LL; }
inline bool high_integrity(Label l) { return l == Label::HH; }

enum class Mult : uint8_t { One, Many };

// tau^{l,a}_n — the type of the nonce or constant n.
struct NonceType {
  Label label = Label::LL;
  Mult mult = Mult::One;
  Atom name;

  bool operator==(const NonceType& o) const {
    return label == o.label && mult == o.mult && name == o.name;
  }
  bool operator!=(const NonceType& o) const { return !(*this == o); }
};

std::string to_string(const NonceType& nt);

enum class TypeKind : uint8_t { Label, Pair, Key, SEnc, AEnc, Refine, Union };

// Immutable security type tree.
class Type {
 public:
  Type() = default;
  static Type label(Label l);
  static Type pair(Type a, Type b);
  static Type key(Label l, Type payload);
  static Type senc(Type payload, Atom k);
  static Type aenc(Type payload, Atom k);
  static Type refine(NonceType l, NonceType r);
  // The nonce-type abbreviation: tau as a type means [tau; tau].
  static Type nonce(NonceType nt) { return refine(nt, nt); }
  static Type union_of(Type a, Type b);

  bool null() const { return !node_; }
  TypeKind kind() const { return node_->kind; }
  Label lab() const { return node_->lab; }            // Label / Key
  const Type& left() const { return node_->sub[0]; }  // Pair / Union
  const Type& right() const { return node_->sub[1]; }
  const Type& payload() const { return node_->sub[0]; }  // Key / SEnc / AEnc
  const Atom& key_atom() const { return node_->key; }    // SEnc / AEnc
  const NonceType& ref_left() const { return node_->ref[0]; }
  const NonceType& ref_right() const { return node_->ref[1]; }

  bool is_label(Label l) const { return kind() == TypeKind::Label && lab() == l; }
  // [tau;tau] with both components equal.
  bool is_nonce_type() const {
    return kind() == TypeKind::Refine && ref_left() == ref_right();
  }
  bool is_finite_refinement() const {
    return kind() == TypeKind::Refine && ref_left().mult == Mult::One;
  }
  bool is_infinite_refinement() const {
    return kind() == TypeKind::Refine && ref_left().mult == Mult::Many;
  }

  size_t hash() const { return node_->hash; }
  bool operator==(const Type& o) const;
  bool operator!=(const Type& o) const { return !(*this == o); }

 private:
  struct Node {
    TypeKind kind = TypeKind::Label;
    Label lab = Label::LL;
    std::vector<Type> sub;
    Atom key;
    NonceType ref[2];
    size_t hash = 0;
  };
  std::shared_ptr<const Node> node_;
};

std::string to_string(const Type& t);

// Keys mentioned in a type (in ciphertext types and nonce-type names of
// kind key, used for the well-formedness check keys(T) <= dom(Gamma)).
void collect_keys(const Type& t, std::vector<Atom>& out);

// Ordered typing environment; insertion order is kept so reports and the
// derived attacker frame are stable.
class TypeEnv {
 public:
  bool contains(const Atom& a) const { return find(a) != nullptr; }
  const Type* find(const Atom& a) const;
  void bind(const Atom& a, Type t);
  size_t size() const { return items_.size(); }
  const std::vector<std::pair<Atom, Type>>& items() const { return items_; }

  bool operator==(const TypeEnv& o) const;

  // Equal on the intersection of the domains.
  static bool compatible(const TypeEnv& a, const TypeEnv& b);
  // Left-biased union of compatible environments.
  static TypeEnv merge(const TypeEnv& a, const TypeEnv& b);

 private:
  std::vector<std::pair<Atom, Type>> items_;
};

std::string to_string(const TypeEnv& env);

// Decides the subtyping relation of the paper's axioms and congruences
// (reflexivity, T <: HL, LL*LL <: LL, HH*T <: HH, T*HH <: HH,
// key^l(T) <: l, pair/ciphertext congruences, transitive closure).
// Syntax-directed; completeness follows from the inversion properties.
bool subtype(const Type& a, const Type& b);

// GNil / GNonce / GVar / GKey.
bool well_formed(const TypeEnv& env);

// All choices of one disjunct per top-level union chain.
std::vector<Type> branches(const Type& t);
std::vector<TypeEnv> branches(const TypeEnv& env);

// [T]^n — expansion to n sessions. Infinite refinements become the n-way
// union of their indexed finite copies.
Type expand_type(const Type& t, int n);

// [Gamma]_i — renaming for session i: x -> x_i (type unchanged), infinite
// nonces m -> m_i : tau^{l,1}_{m_i}, finite nonces and keys unchanged.
TypeEnv rename_env(const TypeEnv& env, int i);

// [Gamma]_i^n — renaming followed by type expansion on variables and keys.
TypeEnv expand_env(const TypeEnv& env, int i, int n);

// Infinite-nonce families of an environment (atoms mapped to tau^{l,inf}).
std::vector<Atom> infinite_families(const TypeEnv& env);

Type exchange_indices(const Type& t, int i, int j);
TypeEnv exchange_indices(const TypeEnv& env, int i, int j);

}  // namespace tq

template <>
struct std::hash<tq::Type> {
  size_t operator()(const tq::Type& t) const { return t.null() ? 0 : t.hash(); }
};
