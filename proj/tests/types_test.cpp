#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "parser.hpp"
#include "testutil.hpp"
#include "types.hpp"

using namespace tq;
using tqtest::Gen;

namespace {

Atom N(const char* s, int session = 0) {
  return make_atom(AtomKind::BoundNonce, s, session);
}
Atom K(const char* s) { return make_atom(AtomKind::Key, s); }
Atom V(const char* s) { return make_atom(AtomKind::Var, s); }

const Type LL = Type::label(Label::LL);
const Type HL = Type::label(Label::HL);
const Type HH = Type::label(Label::HH);

NonceType nt(Label l, Mult m, Atom a) {
  NonceType n;
  n.label = l;
  n.mult = m;
  n.name = std::move(a);
  return n;
}

// enumerate supertypes by axiom application, for the completeness oracle
Type random_supertype(Gen& g, const Type& t, int steps) {
  Type cur = t;
  for (int s = 0; s < steps; ++s) {
    switch (g.pick(4)) {
      case 0:
        break;  // SRefl
      case 1:
        cur = HL;  // SHigh
        break;
      case 2: {
        if (cur.kind() == TypeKind::Pair) {
          Type a = random_supertype(g, cur.left(), 1);
          Type b = random_supertype(g, cur.right(), 1);
          cur = Type::pair(a, b);  // SPair
          if (cur.left() == LL && cur.right() == LL && g.coin()) cur = LL;  // SPairL
          else if (cur.left() == HH && g.coin()) cur = HH;                  // SPairS
          else if (cur.kind() == TypeKind::Pair && cur.right() == HH && g.coin())
            cur = HH;  // SPairS'
        } else if (cur.kind() == TypeKind::Key) {
          cur = Type::label(cur.lab());  // SKey
        } else if (cur.kind() == TypeKind::SEnc) {
          cur = Type::senc(random_supertype(g, cur.payload(), 1), cur.key_atom());
        } else if (cur.kind() == TypeKind::AEnc) {
          cur = Type::aenc(random_supertype(g, cur.payload(), 1), cur.key_atom());
        }
        break;
      }
      default:
        break;
    }
  }
  return cur;
}

std::string env_key(const TypeEnv& e) {
  std::vector<std::string> parts;
  for (const auto& [a, t] : e.items()) parts.push_back(to_string(a) + ":" + to_string(t));
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const std::string& p : parts) out += p + ",";
  return out;
}

std::set<std::string> env_set(const std::vector<TypeEnv>& es) {
  std::set<std::string> out;
  for (const TypeEnv& e : es) out.insert(env_key(e));
  return out;
}

}  // namespace

TEST_CASE("subtyping axioms and key examples") {
  CHECK(subtype(Type::pair(LL, LL), LL));       // SPairL
  CHECK(subtype(Type::key(Label::HH, LL), HH)); // SKey
  CHECK(subtype(Type::key(Label::LL, HH), LL));
  CHECK_FALSE(subtype(HH, LL));
  CHECK_FALSE(subtype(LL, HH));
  CHECK(subtype(LL, HL));  // SHigh: HL is the top
  CHECK(subtype(HH, HL));
  CHECK_FALSE(subtype(HL, HH));
  CHECK(subtype(Type::pair(HH, LL), HH));  // SPairS
  CHECK(subtype(Type::pair(LL, HH), HH));  // SPairS'
  CHECK_FALSE(subtype(Type::pair(LL, LL), HH));
  // congruences
  Atom k = K("k");
  CHECK(subtype(Type::senc(Type::pair(LL, LL), k), Type::senc(LL, k)));
  CHECK_FALSE(subtype(Type::senc(LL, k), Type::senc(LL, K("k2"))));
  CHECK(subtype(Type::aenc(Type::key(Label::HH, LL), k), Type::aenc(HH, k)));
  // refinements are only subtypes of themselves and HL
  Type r = Type::refine(nt(Label::HH, Mult::One, N("m")), nt(Label::HH, Mult::One, N("p")));
  CHECK(subtype(r, r));
  CHECK(subtype(r, HL));
  CHECK_FALSE(subtype(r, HH));
  CHECK_FALSE(subtype(HH, r));
}

TEST_CASE("subtyping property suite") {
  Gen g(11);
  int derived = 0;
  for (int i = 0; i < 10000; ++i) {
    Type a = g.type(4);
    // reflexivity
    CHECK(subtype(a, a));
    // SHigh universality
    CHECK(subtype(a, HL));
    // completeness against random axiom derivations, and transitivity
    Type b = random_supertype(g, a, 1 + g.pick(2));
    Type c = random_supertype(g, b, 1 + g.pick(2));
    if (!(a == b)) ++derived;
    CHECK(subtype(a, b));
    CHECK(subtype(b, c));
    CHECK(subtype(a, c));

    // inversion facts (Lemma 1 items 1-6)
    if (subtype(a, b)) {
      if (a == HL) CHECK(b == HL);                     // 1
      if (a == LL) CHECK((b == LL || b == HL));        // 2
      if (a == HH) CHECK((b == HH || b == HL));        // 3
      if (a.kind() == TypeKind::Pair)                  // 4
        CHECK((b.kind() == TypeKind::Label || b.kind() == TypeKind::Pair));
      if (b.kind() == TypeKind::Pair) {                // 5
        REQUIRE(a.kind() == TypeKind::Pair);
        CHECK(subtype(a.left(), b.left()));
        CHECK(subtype(a.right(), b.right()));
      }
      if (a.kind() == TypeKind::Pair && b == LL) {     // 6
        CHECK(subtype(a.left(), LL));
        CHECK(subtype(a.right(), LL));
      }
    }
    // item 6 converse
    Type p = Type::pair(g.type(2), g.type(2));
    CHECK(subtype(p, LL) == (subtype(p.left(), LL) && subtype(p.right(), LL)));
  }
  CHECK(derived > 3000);
}

TEST_CASE("well-formedness of environments") {
  TypeEnv e;
  e.bind(K("k"), Type::key(Label::HH, LL));
  CHECK(well_formed(e));
  TypeEnv e2;
  e2.bind(V("x"), Type::senc(LL, K("k")));  // k undeclared
  CHECK_FALSE(well_formed(e2));
  TypeEnv e3;
  CHECK(well_formed(e3));  // GNil
  TypeEnv e4;
  e4.bind(K("k"), Type::key(Label::HH, LL));
  e4.bind(V("x"), Type::senc(LL, K("k")));
  e4.bind(N("n"), Type::nonce(nt(Label::HH, Mult::One, N("n"))));
  CHECK(well_formed(e4));
  // GNonce: a nonce must map to its own type
  TypeEnv e5;
  e5.bind(N("n"), Type::nonce(nt(Label::HH, Mult::One, N("m"))));
  CHECK_FALSE(well_formed(e5));
}

TEST_CASE("branches of types and environments") {
  Type t1 = LL, t2 = HH;
  TypeEnv e;
  e.bind(V("x"), Type::union_of(t1, t2));
  auto bs = branches(e);
  REQUIRE(bs.size() == 2);
  CHECK(*bs[0].find(V("x")) == t1);
  CHECK(*bs[1].find(V("x")) == t2);

  TypeEnv plain;
  plain.bind(V("x"), t1);
  CHECK(branches(plain).size() == 1);

  TypeEnv two;
  two.bind(V("x"), Type::union_of(t1, t2));
  two.bind(V("y"), Type::union_of(t2, Type::pair(t1, t1)));
  CHECK(branches(two).size() == 4);

  // brute-force cross-check of the 4-way enumeration
  std::set<std::string> got = env_set(branches(two));
  std::set<std::string> expect;
  for (const Type& a : {t1, t2}) {
    for (const Type& b : {t2, Type::pair(t1, t1)}) {
      TypeEnv g;
      g.bind(V("x"), a);
      g.bind(V("y"), b);
      expect.insert(env_key(g));
    }
  }
  CHECK(got == expect);

  // unions nested under other constructors are not split
  TypeEnv nested;
  nested.bind(V("x"), Type::pair(Type::union_of(t1, t2), t1));
  CHECK(branches(nested).size() == 1);
}

TEST_CASE("type expansion to n sessions") {
  Atom m = N("m"), p = N("p");
  Type inf_ref =
      Type::refine(nt(Label::LL, Mult::Many, m), nt(Label::LL, Mult::Many, p));
  Type e2 = expand_type(inf_ref, 2);
  Type expect = Type::union_of(
      Type::refine(nt(Label::LL, Mult::One, N("m", 1)), nt(Label::LL, Mult::One, N("p", 1))),
      Type::refine(nt(Label::LL, Mult::One, N("m", 2)), nt(Label::LL, Mult::One, N("p", 2))));
  CHECK(e2 == expect);

  CHECK(expand_type(LL, 5) == LL);
  Type kt = Type::key(Label::HH, inf_ref);
  CHECK(expand_type(kt, 2) == Type::key(Label::HH, e2));

  // n = 1 degenerates to the single indexed refinement, no union
  Type e1 = expand_type(inf_ref, 1);
  CHECK(e1 == Type::refine(nt(Label::LL, Mult::One, N("m", 1)),
                           nt(Label::LL, Mult::One, N("p", 1))));

  // finite refinements expand to themselves
  Type fin = Type::refine(nt(Label::HH, Mult::One, m), nt(Label::HH, Mult::One, p));
  CHECK(expand_type(fin, 3) == fin);
}

TEST_CASE("environment renaming and expansion") {
  Atom m = N("m");
  TypeEnv e;
  e.bind(m, Type::nonce(nt(Label::HH, Mult::Many, m)));
  TypeEnv r1 = rename_env(e, 1);
  REQUIRE(r1.size() == 1);
  Atom m1 = N("m", 1);
  const Type* t = r1.find(m1);
  REQUIRE(t);
  CHECK(*t == Type::nonce(nt(Label::HH, Mult::One, m1)));

  TypeEnv keys;
  keys.bind(K("k"), Type::key(Label::HH, LL));
  CHECK(env_key(rename_env(keys, 3)) == env_key(keys));
  CHECK(env_key(expand_env(keys, 1, 4)) == env_key(keys));

  // the worked expansion example: a variable with an infinite refinement
  Atom p = N("p"), x = V("x");
  TypeEnv g;
  g.bind(x, Type::refine(nt(Label::HH, Mult::Many, m), nt(Label::HH, Mult::Many, p)));
  TypeEnv g12 = expand_env(g, 1, 2);
  Atom x1 = make_atom(AtomKind::Var, "x", 1);
  const Type* xt = g12.find(x1);
  REQUIRE(xt);
  CHECK(*xt == Type::union_of(Type::refine(nt(Label::HH, Mult::One, N("m", 1)),
                                           nt(Label::HH, Mult::One, N("p", 1))),
                              Type::refine(nt(Label::HH, Mult::One, N("m", 2)),
                                           nt(Label::HH, Mult::One, N("p", 2)))));
  CHECK(branches(g12).size() == 2);
}

// branches(expand(Gamma)) equals the union over branches(Gamma) of
// branches(expand(branch)) — brute-force enumeration.
TEST_CASE("branches commute with expansion") {
  Gen g(99);
  for (int iter = 0; iter < 500; ++iter) {
    TypeEnv env;
    int unions = 0;
    int vars = 1 + g.pick(3);
    for (int v = 0; v < vars; ++v) {
      Type t;
      switch (g.pick(4)) {
        case 0: {
          NonceType a = g.nonce_type();
          NonceType b = g.nonce_type();
          b.mult = a.mult;
          t = Type::refine(a, b);
          break;
        }
        case 1:
          if (unions < 2) {
            ++unions;
            NonceType a = g.nonce_type();
            NonceType b = g.nonce_type();
            b.mult = a.mult;
            t = Type::union_of(g.type(1), Type::refine(a, b));
            break;
          }
          [[fallthrough]];
        default:
          t = g.type(2);
          if (t.kind() == TypeKind::Union && unions >= 2) t = Type::label(g.label());
          if (t.kind() == TypeKind::Union) ++unions;
          break;
      }
      env.bind(g.var(v), t);
    }
    int n = 1 + g.pick(3);
    int i = 1 + g.pick(n);
    std::set<std::string> lhs;
    for (const TypeEnv& b : branches(env))
      for (const TypeEnv& bb : branches(expand_env(b, i, n))) lhs.insert(env_key(bb));
    std::set<std::string> rhs = env_set(branches(expand_env(env, i, n)));
    CHECK(lhs == rhs);
  }
}

TEST_CASE("type syntax round-trips") {
  Gen g(123);
  std::map<std::string, Atom> sym;
  for (int i = 0; i < 4; ++i) {
    sym["n" + std::to_string(i)] = N(("n" + std::to_string(i)).c_str());
    sym["k" + std::to_string(i)] = K(("k" + std::to_string(i)).c_str());
  }
  for (int i = 0; i < 500; ++i) {
    Type t = g.type(4);
    auto back = parse_type(to_string(t), sym);
    REQUIRE_MESSAGE(std::holds_alternative<Type>(back), to_string(t));
    CHECK(std::get<Type>(back) == t);
  }
}
