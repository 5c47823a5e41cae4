#include "types.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace tq {

const char* to_string(Label l) {
  switch (l) {
    case Label::LL: return "LL";
    case Label::HL: return "HL";
    case Label::HH: return "HH";
  }
  return "?";
}

std::string to_string(const NonceType& nt) {
  std::string s = "t{";
  s += to_string(nt.label);
  s += ",";
  s += nt.mult == Mult::One ? "1" : "inf";
  s += ",";
  s += to_string(nt.name);
  s += "}";
  return s;
}

namespace {

size_t mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

size_t nt_hash(const NonceType& nt) {
  size_t h = hash_of(nt.name);
  h = mix(h, static_cast<size_t>(nt.label));
  h = mix(h, static_cast<size_t>(nt.mult));
  return h;
}

}  // namespace

Type Type::label(Label l) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::Label;
  n->lab = l;
  n->hash = mix(0x11, static_cast<size_t>(l));
  Type t;
  t.node_ = std::move(n);
  return t;
}

Type Type::pair(Type a, Type b) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::Pair;
  n->hash = mix(mix(0x22, a.hash()), b.hash());
  n->sub = {std::move(a), std::move(b)};
  Type t;
  t.node_ = std::move(n);
  return t;
}

Type Type::key(Label l, Type payload) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::Key;
  n->lab = l;
  n->hash = mix(mix(0x33, static_cast<size_t>(l)), payload.hash());
  n->sub = {std::move(payload)};
  Type t;
  t.node_ = std::move(n);
  return t;
}

Type Type::senc(Type payload, Atom k) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::SEnc;
  n->hash = mix(mix(0x44, payload.hash()), hash_of(k));
  n->sub = {std::move(payload)};
  n->key = std::move(k);
  Type t;
  t.node_ = std::move(n);
  return t;
}

Type Type::aenc(Type payload, Atom k) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::AEnc;
  n->hash = mix(mix(0x55, payload.hash()), hash_of(k));
  n->sub = {std::move(payload)};
  n->key = std::move(k);
  Type t;
  t.node_ = std::move(n);
  return t;
}

Type Type::refine(NonceType l, NonceType r) {
  assert(l.mult == r.mult);
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::Refine;
  n->hash = mix(mix(0x66, nt_hash(l)), nt_hash(r));
  n->ref[0] = std::move(l);
  n->ref[1] = std::move(r);
  Type t;
  t.node_ = std::move(n);
  return t;
}

Type Type::union_of(Type a, Type b) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::Union;
  n->hash = mix(mix(0x77, a.hash()), b.hash());
  n->sub = {std::move(a), std::move(b)};
  Type t;
  t.node_ = std::move(n);
  return t;
}

bool Type::operator==(const Type& o) const {
  if (node_ == o.node_) return true;
  if (!node_ || !o.node_) return false;
  if (node_->hash != o.node_->hash || node_->kind != o.node_->kind) return false;
  switch (node_->kind) {
    case TypeKind::Label:
      return node_->lab == o.node_->lab;
    case TypeKind::Pair:
    case TypeKind::Union:
      return node_->sub[0] == o.node_->sub[0] && node_->sub[1] == o.node_->sub[1];
    case TypeKind::Key:
      return node_->lab == o.node_->lab && node_->sub[0] == o.node_->sub[0];
    case TypeKind::SEnc:
    case TypeKind::AEnc:
      return node_->key == o.node_->key && node_->sub[0] == o.node_->sub[0];
    case TypeKind::Refine:
      return node_->ref[0] == o.node_->ref[0] && node_->ref[1] == o.node_->ref[1];
  }
  return false;
}

namespace {

int type_prec(const Type& t) {
  switch (t.kind()) {
    case TypeKind::Union: return 1;
    case TypeKind::Pair: return 2;
    default: return 3;
  }
}

// * binds tighter than \/; both are right-associative.
void print_type(const Type& t, std::ostringstream& os, int min_prec) {
  bool parens = type_prec(t) < min_prec;
  if (parens) os << '(';
  switch (t.kind()) {
    case TypeKind::Label:
      os << to_string(t.lab());
      break;
    case TypeKind::Pair:
      print_type(t.left(), os, 3);
      os << " * ";
      print_type(t.right(), os, 2);
      break;
    case TypeKind::Key:
      os << "key^" << to_string(t.lab()) << "(";
      print_type(t.payload(), os, 0);
      os << ")";
      break;
    case TypeKind::SEnc:
      os << "enc(";
      print_type(t.payload(), os, 0);
      os << "," << to_string(t.key_atom()) << ")";
      break;
    case TypeKind::AEnc:
      os << "aenc(";
      print_type(t.payload(), os, 0);
      os << "," << to_string(t.key_atom()) << ")";
      break;
    case TypeKind::Refine:
      if (t.is_nonce_type()) {
        os << to_string(t.ref_left());
      } else {
        os << "[" << to_string(t.ref_left()) << " ; " << to_string(t.ref_right()) << "]";
      }
      break;
    case TypeKind::Union:
      print_type(t.left(), os, 2);
      os << " \\/ ";
      print_type(t.right(), os, 1);
      break;
  }
  if (parens) os << ')';
}

}  // namespace

std::string to_string(const Type& t) {
  if (t.null()) return "<null>";
  std::ostringstream os;
  print_type(t, os, 0);
  return os.str();
}

void collect_keys(const Type& t, std::vector<Atom>& out) {
  switch (t.kind()) {
    case TypeKind::Label:
      return;
    case TypeKind::Pair:
    case TypeKind::Union:
      collect_keys(t.left(), out);
      collect_keys(t.right(), out);
      return;
    case TypeKind::Key:
      collect_keys(t.payload(), out);
      return;
    case TypeKind::SEnc:
    case TypeKind::AEnc:
      out.push_back(t.key_atom());
      collect_keys(t.payload(), out);
      return;
    case TypeKind::Refine:
      if (t.ref_left().name.kind == AtomKind::Key) out.push_back(t.ref_left().name);
      if (t.ref_right().name.kind == AtomKind::Key) out.push_back(t.ref_right().name);
      return;
  }
}

const Type* TypeEnv::find(const Atom& a) const {
  for (const auto& [k, v] : items_)
    if (k == a) return &v;
  return nullptr;
}

void TypeEnv::bind(const Atom& a, Type t) {
  for (auto& [k, v] : items_) {
    if (k == a) {
      v = std::move(t);
      return;
    }
  }
  items_.emplace_back(a, std::move(t));
}

bool TypeEnv::operator==(const TypeEnv& o) const {
  if (items_.size() != o.items_.size()) return false;
  for (const auto& [k, v] : items_) {
    const Type* t = o.find(k);
    if (!t || *t != v) return false;
  }
  return true;
}

bool TypeEnv::compatible(const TypeEnv& a, const TypeEnv& b) {
  const TypeEnv& small = a.size() <= b.size() ? a : b;
  const TypeEnv& big = a.size() <= b.size() ? b : a;
  for (const auto& [k, v] : small.items()) {
    const Type* t = big.find(k);
    if (t && *t != v) return false;
  }
  return true;
}

TypeEnv TypeEnv::merge(const TypeEnv& a, const TypeEnv& b) {
  TypeEnv r = a;
  for (const auto& [k, v] : b.items()) {
    if (!r.contains(k)) r.bind(k, v);
  }
  return r;
}

std::string to_string(const TypeEnv& env) {
  std::string s = "{";
  bool first = true;
  for (const auto& [k, v] : env.items()) {
    if (!first) s += ", ";
    first = false;
    s += to_string(k) + ":" + to_string(v);
  }
  s += "}";
  return s;
}

bool subtype(const Type& a, const Type& b) {
  if (a == b) return true;                    // SRefl
  if (b.is_label(Label::HL)) return true;     // SHigh
  switch (b.kind()) {
    case TypeKind::Label:
      if (b.lab() == Label::LL) {
        // T <: LL: LL itself, key^LL(T'), or a pair with both halves <: LL.
        if (a.kind() == TypeKind::Key) return a.lab() == Label::LL;
        if (a.kind() == TypeKind::Pair)
          return subtype(a.left(), b) && subtype(a.right(), b);
        return false;
      }
      // b = HH: HH itself, key^HH(T'), or a pair with one half <: HH.
      if (a.kind() == TypeKind::Key) return a.lab() == Label::HH;
      if (a.kind() == TypeKind::Pair)
        return subtype(a.left(), b) || subtype(a.right(), b);
      return false;
    case TypeKind::Pair:
      return a.kind() == TypeKind::Pair && subtype(a.left(), b.left()) &&
             subtype(a.right(), b.right());
    case TypeKind::SEnc:
      return a.kind() == TypeKind::SEnc && a.key_atom() == b.key_atom() &&
             subtype(a.payload(), b.payload());
    case TypeKind::AEnc:
      return a.kind() == TypeKind::AEnc && a.key_atom() == b.key_atom() &&
             subtype(a.payload(), b.payload());
    case TypeKind::Key:
    case TypeKind::Refine:
    case TypeKind::Union:
      // Only reflexivity reaches these, handled above.
      return false;
  }
  return false;
}

bool well_formed(const TypeEnv& env) {
  TypeEnv seen;
  for (const auto& [a, t] : env.items()) {
    switch (a.kind) {
      case AtomKind::BoundNonce: {
        // GNonce: a nonce maps to its own nonce type.
        if (t.kind() != TypeKind::Refine || !t.is_nonce_type()) return false;
        if (t.ref_left().name != a) return false;
        break;
      }
      case AtomKind::Key: {
        if (t.kind() != TypeKind::Key) return false;
        std::vector<Atom> ks;
        collect_keys(t.payload(), ks);
        for (const Atom& k : ks)
          if (!seen.contains(k)) return false;
        break;
      }
      case AtomKind::Var: {
        std::vector<Atom> ks;
        collect_keys(t, ks);
        for (const Atom& k : ks)
          if (!seen.contains(k)) return false;
        break;
      }
      default:
        return false;  // constants, free nonces and frame vars are not declared
    }
    seen.bind(a, t);
  }
  return true;
}

namespace {

void flatten_union(const Type& t, std::vector<Type>& out) {
  if (t.kind() == TypeKind::Union) {
    flatten_union(t.left(), out);
    flatten_union(t.right(), out);
  } else {
    out.push_back(t);
  }
}

}  // namespace

std::vector<Type> branches(const Type& t) {
  std::vector<Type> out;
  flatten_union(t, out);
  return out;
}

std::vector<TypeEnv> branches(const TypeEnv& env) {
  std::vector<TypeEnv> acc;
  acc.emplace_back();
  for (const auto& [a, t] : env.items()) {
    std::vector<Type> choices = branches(t);
    if (choices.size() == 1) {
      for (TypeEnv& e : acc) e.bind(a, t);
      continue;
    }
    std::vector<TypeEnv> next;
    next.reserve(acc.size() * choices.size());
    for (const TypeEnv& e : acc) {
      for (const Type& c : choices) {
        TypeEnv e2 = e;
        e2.bind(a, c);
        next.push_back(std::move(e2));
      }
    }
    acc = std::move(next);
  }
  return acc;
}

Type expand_type(const Type& t, int n) {
  switch (t.kind()) {
    case TypeKind::Label:
      return t;
    case TypeKind::Pair:
      return Type::pair(expand_type(t.left(), n), expand_type(t.right(), n));
    case TypeKind::Union:
      return Type::union_of(expand_type(t.left(), n), expand_type(t.right(), n));
    case TypeKind::Key:
      return Type::key(t.lab(), expand_type(t.payload(), n));
    case TypeKind::SEnc:
      return Type::senc(expand_type(t.payload(), n), t.key_atom());
    case TypeKind::AEnc:
      return Type::aenc(expand_type(t.payload(), n), t.key_atom());
    case TypeKind::Refine: {
      if (t.is_finite_refinement()) return t;
      // [[tau^{l,inf}_m ; tau^{l',inf}_p]]^n = \/_{j=1..n} [[tau^{l,1}_{m_j} ; tau^{l',1}_{p_j}]]
      Type acc;
      for (int j = 1; j <= n; ++j) {
        NonceType l = t.ref_left();
        NonceType r = t.ref_right();
        l.mult = Mult::One;
        r.mult = Mult::One;
        l.name.session = j;
        r.name.session = j;
        Type part = Type::refine(l, r);
        acc = acc.null() ? part : Type::union_of(acc, part);
      }
      return acc;
    }
  }
  return t;
}

std::vector<Atom> infinite_families(const TypeEnv& env) {
  std::vector<Atom> fams;
  for (const auto& [a, t] : env.items()) {
    if (a.kind == AtomKind::BoundNonce && t.kind() == TypeKind::Refine &&
        t.is_nonce_type() && t.ref_left().mult == Mult::Many)
      fams.push_back(a);
  }
  return fams;
}

TypeEnv rename_env(const TypeEnv& env, int i) {
  TypeEnv out;
  for (const auto& [a, t] : env.items()) {
    if (a.kind == AtomKind::Var) {
      Atom ai = a;
      ai.session = i;
      out.bind(ai, t);
    } else if (a.kind == AtomKind::BoundNonce && t.kind() == TypeKind::Refine &&
               t.is_nonce_type() && t.ref_left().mult == Mult::Many) {
      Atom ai = a;
      ai.session = i;
      NonceType nt = t.ref_left();
      nt.mult = Mult::One;
      nt.name = ai;
      out.bind(ai, Type::nonce(nt));
    } else {
      out.bind(a, t);
    }
  }
  return out;
}

TypeEnv expand_env(const TypeEnv& env, int i, int n) {
  TypeEnv renamed = rename_env(env, i);
  TypeEnv out;
  for (const auto& [a, t] : renamed.items()) {
    if (a.kind == AtomKind::Var || a.kind == AtomKind::Key)
      out.bind(a, expand_type(t, n));
    else
      out.bind(a, t);
  }
  return out;
}

namespace {

Atom swap_idx(const Atom& a, int i, int j) {
  Atom r = a;
  if (r.session == i)
    r.session = j;
  else if (r.session == j)
    r.session = i;
  return r;
}

NonceType swap_idx(const NonceType& nt, int i, int j) {
  NonceType r = nt;
  r.name = swap_idx(r.name, i, j);
  return r;
}

}  // namespace

Type exchange_indices(const Type& t, int i, int j) {
  if (i == j) return t;
  switch (t.kind()) {
    case TypeKind::Label:
      return t;
    case TypeKind::Pair:
      return Type::pair(exchange_indices(t.left(), i, j), exchange_indices(t.right(), i, j));
    case TypeKind::Union:
      return Type::union_of(exchange_indices(t.left(), i, j),
                            exchange_indices(t.right(), i, j));
    case TypeKind::Key:
      return Type::key(t.lab(), exchange_indices(t.payload(), i, j));
    case TypeKind::SEnc:
      return Type::senc(exchange_indices(t.payload(), i, j), t.key_atom());
    case TypeKind::AEnc:
      return Type::aenc(exchange_indices(t.payload(), i, j), t.key_atom());
    case TypeKind::Refine:
      return Type::refine(swap_idx(t.ref_left(), i, j), swap_idx(t.ref_right(), i, j));
  }
  return t;
}

TypeEnv exchange_indices(const TypeEnv& env, int i, int j) {
  if (i == j) return env;
  TypeEnv out;
  for (const auto& [a, t] : env.items())
    out.bind(swap_idx(a, i, j), exchange_indices(t, i, j));
  return out;
}

}  // namespace tq
