#pragma once

#include <random>
#include <vector>

#include "term.hpp"
#include "types.hpp"

namespace tqtest {

using namespace tq;

// Deterministic generators for the property suites.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(uint64_t seed) : rng(seed) {}

  int pick(int n) { return static_cast<int>(rng() % static_cast<uint64_t>(n)); }
  bool coin() { return pick(2) == 0; }

  Atom nonce(int i) { return make_atom(AtomKind::BoundNonce, "n" + std::to_string(i)); }
  Atom key(int i) { return make_atom(AtomKind::Key, "k" + std::to_string(i)); }
  Atom var(int i) { return make_atom(AtomKind::Var, "x" + std::to_string(i)); }
  Atom constant(int i) { return make_atom(AtomKind::Constant, "c" + std::to_string(i)); }
  Atom freenonce(int i) { return make_atom(AtomKind::FreeNonce, "fn" + std::to_string(i)); }

  Atom any_atom(bool with_vars) {
    switch (pick(with_vars ? 5 : 4)) {
      case 0: return nonce(pick(3));
      case 1: return key(pick(3));
      case 2: return constant(pick(2));
      case 3: return freenonce(pick(2));
      default: return var(pick(3));
    }
  }

  // Arbitrary term (constructors and destructors) of bounded depth.
  Term term(int depth, bool with_vars = true) {
    if (depth <= 0 || pick(3) == 0) return Term::atom(any_atom(with_vars));
    switch (pick(12)) {
      case 0: return Term::pk(term(depth - 1, with_vars));
      case 1: return Term::vk(term(depth - 1, with_vars));
      case 2: return Term::hash(term(depth - 1, with_vars));
      case 3: return Term::pair(term(depth - 1, with_vars), term(depth - 1, with_vars));
      case 4: return Term::enc(term(depth - 1, with_vars), term(depth - 1, with_vars));
      case 5: return Term::aenc(term(depth - 1, with_vars), term(depth - 1, with_vars));
      case 6: return Term::sign(term(depth - 1, with_vars), term(depth - 1, with_vars));
      case 7: return Term::make(Op::Dec, {term(depth - 1, with_vars), term(depth - 1, with_vars)});
      case 8: return Term::make(Op::Adec, {term(depth - 1, with_vars), term(depth - 1, with_vars)});
      case 9: return Term::make(Op::Check, {term(depth - 1, with_vars), term(depth - 1, with_vars)});
      case 10: return Term::make(Op::Fst, {term(depth - 1, with_vars)});
      default: return Term::make(Op::Snd, {term(depth - 1, with_vars)});
    }
  }

  // Terms that evaluate more often: keys in key positions.
  Term friendly_term(int depth, bool with_vars = true) {
    if (depth <= 0 || pick(3) == 0) return Term::atom(any_atom(with_vars));
    Term k = Term::atom(key(pick(3)));
    switch (pick(11)) {
      case 0: return Term::pk(k);
      case 1: return Term::vk(k);
      case 2: return Term::hash(friendly_term(depth - 1, with_vars));
      case 3:
        return Term::pair(friendly_term(depth - 1, with_vars),
                          friendly_term(depth - 1, with_vars));
      case 4: return Term::enc(friendly_term(depth - 1, with_vars), k);
      case 5: return Term::aenc(friendly_term(depth - 1, with_vars), Term::pk(k));
      case 6: return Term::sign(friendly_term(depth - 1, with_vars), k);
      case 7:
        return Term::make(Op::Dec, {friendly_term(depth - 1, with_vars), k});
      case 8:
        return Term::make(Op::Adec, {friendly_term(depth - 1, with_vars), k});
      case 9:
        return Term::make(Op::Check, {friendly_term(depth - 1, with_vars), Term::vk(k)});
      default:
        return Term::make(pick(2) ? Op::Fst : Op::Snd,
                          {friendly_term(depth - 1, with_vars)});
    }
  }

  // Ground message of bounded depth.
  Term message(int depth) {
    if (depth <= 0 || pick(3) == 0) {
      switch (pick(4)) {
        case 0: return Term::atom(nonce(pick(3)));
        case 1: return Term::atom(key(pick(3)));
        case 2: return Term::atom(constant(pick(2)));
        default: return Term::atom(freenonce(pick(2)));
      }
    }
    Term k = Term::atom(key(pick(3)));
    switch (pick(7)) {
      case 0: return Term::pk(k);
      case 1: return Term::vk(k);
      case 2: return Term::hash(message(depth - 1));
      case 3: return Term::pair(message(depth - 1), message(depth - 1));
      case 4: return Term::enc(message(depth - 1), k);
      case 5: return Term::aenc(message(depth - 1), Term::pk(k));
      default: return Term::sign(message(depth - 1), k);
    }
  }

  Label label() {
    switch (pick(3)) {
      case 0: return Label::LL;
      case 1: return Label::HL;
      default: return Label::HH;
    }
  }

  NonceType nonce_type(bool allow_inf = true) {
    NonceType nt;
    nt.label = label();
    nt.mult = allow_inf && coin() ? Mult::Many : Mult::One;
    nt.name = nonce(pick(4));
    return nt;
  }

  Type type(int depth) {
    if (depth <= 0 || pick(3) == 0) return Type::label(label());
    switch (pick(7)) {
      case 0: return Type::pair(type(depth - 1), type(depth - 1));
      case 1: return Type::key(label(), type(depth - 1));
      case 2: return Type::senc(type(depth - 1), key(pick(3)));
      case 3: return Type::aenc(type(depth - 1), key(pick(3)));
      case 4: {
        NonceType a = nonce_type();
        NonceType b = nonce_type();
        b.mult = a.mult;
        return Type::refine(a, b);
      }
      case 5: return Type::union_of(type(depth - 1), type(depth - 1));
      default: return Type::label(label());
    }
  }
};

}  // namespace tqtest
