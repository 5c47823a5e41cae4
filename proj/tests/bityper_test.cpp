#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "bityper.hpp"
#include "parser.hpp"
#include "testutil.hpp"

using namespace tq;
using tqtest::Gen;

namespace {

Atom N(const char* s) { return make_atom(AtomKind::BoundNonce, s); }
Atom K(const char* s) { return make_atom(AtomKind::Key, s); }
Atom V(const char* s) { return make_atom(AtomKind::Var, s); }
Atom C(const char* s) { return make_atom(AtomKind::Constant, s); }
Term at(const Atom& a) { return Term::atom(a); }

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

Type nonceT(Label l, Mult m, const Atom& a) { return Type::nonce(nt(l, m, a)); }

ProtocolFile parse_ok(const std::string& src) {
  auto r = parse_protocol(src);
  if (auto* e = std::get_if<ParseError>(&r)) FAIL(e->str());
  return std::get<ProtocolFile>(r);
}

// The simplified Helios voters of the overview section: server-supplied
// randomness x/y, votes swapped between the sides.
const char* kHeliosVoters =
    "const zero, one.\n"
    "key ka : key^HH( aenc([t{LL,1,zero} ; t{LL,1,one}] * HL * t{HH,1,rpa}, ks) ).\n"
    "key kb : key^HH( aenc([t{LL,1,one} ; t{LL,1,zero}] * HL * t{HH,1,rpb}, ks) ).\n"
    "key ks : key^HH( ([t{LL,1,zero} ; t{LL,1,one}] * HL * t{HH,1,rpa}) \\/ "
    "([t{LL,1,one} ; t{LL,1,zero}] * HL * t{HH,1,rpb}) ).\n"
    "process P = new rpa : HH^1 . new rpb : HH^1 . (\n"
    "  in(x) . out(sign(aenc(<choice[zero,one], x, rpa>, pk(ks)), ka)) . 0\n"
    "  | in(y) . out(sign(aenc(<choice[one,zero], y, rpb>, pk(ks)), kb)) . 0\n"
    ")\n"
    "query equivalence\n";

}  // namespace

TEST_CASE("term typing: nonces, constants, keys") {
  BiTyper ty;
  TypeEnv env;
  env.bind(N("n"), nonceT(Label::HH, Mult::One, N("n")));
  env.bind(N("m"), nonceT(Label::HH, Mult::One, N("m")));

  // TNonce: two secret nonces of the same label are related at HH
  auto c = ty.check_term(env, at(N("n")), at(N("m")), HH);
  REQUIRE(c.has_value());
  CHECK(c->empty());
  // but not at LL
  CHECK_FALSE(ty.check_term(env, at(N("n")), at(N("m")), LL).has_value());

  // TCstFN
  auto c2 = ty.check_term(env, at(C("a")), at(C("a")), LL);
  REQUIRE(c2.has_value());
  CHECK(c2->empty());
  CHECK_FALSE(ty.check_term(env, at(C("a")), at(C("b")), LL).has_value());

  // TPubKey / TVKey need the key declared
  TypeEnv envk = env;
  envk.bind(K("k"), Type::key(Label::HH, LL));
  CHECK(ty.check_term(envk, Term::pk(at(K("k"))), Term::pk(at(K("k"))), LL).has_value());
  CHECK_FALSE(ty.check_term(env, Term::pk(at(K("k"))), Term::pk(at(K("k"))), LL).has_value());

  // THigh applies to anything in scope
  CHECK(ty.check_term(env, at(N("n")), Term::hash(at(N("m"))), HL).has_value());
  CHECK_FALSE(ty.check_term(env, at(N("n")), at(N("zzz")), HL).has_value());
}

TEST_CASE("term typing: encryption under an honest key emits the ciphertext") {
  BiTyper ty;
  TypeEnv env;
  env.bind(K("k"), Type::key(Label::HH, HH));
  env.bind(N("n"), nonceT(Label::HH, Mult::One, N("n")));
  env.bind(N("m"), nonceT(Label::HH, Mult::One, N("m")));

  Term l = Term::enc(at(N("n")), at(K("k")));
  Term r = Term::enc(at(N("m")), at(K("k")));
  auto c = ty.check_term(env, l, r, LL);
  REQUIRE(c.has_value());
  REQUIRE(c->size() == 1);
  CHECK((*c)[0].left == l);
  CHECK((*c)[0].right == r);

  // under a low key the payload must be public
  TypeEnv low;
  low.bind(K("k"), Type::key(Label::LL, LL));
  low.bind(N("n"), nonceT(Label::HH, Mult::One, N("n")));
  CHECK_FALSE(ty.check_term(low, Term::enc(at(N("n")), at(K("k"))),
                            Term::enc(at(N("n")), at(K("k"))), LL)
                  .has_value());
  auto cl = ty.check_term(low, Term::enc(at(C("a")), at(K("k"))),
                          Term::enc(at(C("a")), at(K("k"))), LL);
  REQUIRE(cl.has_value());
  CHECK(cl->empty());  // TEncL adds nothing
}

TEST_CASE("term typing: hashes prefer THashL") {
  BiTyper ty;
  TypeEnv env;
  env.bind(N("n"), nonceT(Label::HH, Mult::One, N("n")));
  // public argument: no constraint
  auto c = ty.check_term(env, Term::hash(at(C("a"))), Term::hash(at(C("a"))), LL);
  REQUIRE(c.has_value());
  CHECK(c->empty());
  // secret argument: THash emits the hash pair
  auto c2 = ty.check_term(env, Term::hash(at(N("n"))), Term::hash(at(N("n"))), LL);
  REQUIRE(c2.has_value());
  REQUIRE(c2->size() == 1);
  CHECK((*c2)[0].left == Term::hash(at(N("n"))));
}

TEST_CASE("destructor typing") {
  BiTyper ty;
  TypeEnv env;
  env.bind(K("k"), Type::key(Label::HH, Type::pair(LL, HH)));
  env.bind(K("kl"), Type::key(Label::LL, LL));
  env.bind(V("x"), LL);
  env.bind(V("p"), Type::pair(HH, LL));

  DestructorApp adec{Op::Adec, V("x"), K("k")};
  auto t = ty.type_destructor(env, adec);
  REQUIRE(t.has_value());
  CHECK(*t == Type::union_of(Type::pair(LL, HH), LL));  // DAdecH: T v LL

  DestructorApp dec{Op::Dec, V("x"), K("k")};
  auto t2 = ty.type_destructor(env, dec);
  REQUIRE(t2.has_value());
  CHECK(*t2 == Type::pair(LL, HH));  // DDecH: no v LL for symmetric

  DestructorApp fst{Op::Fst, V("p"), Atom{}};
  auto t3 = ty.type_destructor(env, fst);
  REQUIRE(t3.has_value());
  CHECK(*t3 == HH);  // DFst

  DestructorApp sndl{Op::Snd, V("x"), Atom{}};
  auto t4 = ty.type_destructor(env, sndl);
  REQUIRE(t4.has_value());
  CHECK(*t4 == LL);  // DSndL

  DestructorApp decl{Op::Dec, V("x"), K("kl")};
  auto t5 = ty.type_destructor(env, decl);
  REQUIRE(t5.has_value());
  CHECK(*t5 == LL);  // DDecL

  // ciphertext-typed argument uses the transparent rule
  TypeEnv envc;
  envc.bind(K("k"), Type::key(Label::HH, LL));
  envc.bind(V("y"), Type::senc(Type::pair(LL, LL), K("k")));
  DestructorApp dect{Op::Dec, V("y"), K("k")};
  auto t6 = ty.type_destructor(envc, dect);
  REQUIRE(t6.has_value());
  CHECK(*t6 == Type::pair(LL, LL));  // DDecT

  // no rule: refinement arguments are handled at the process level
  TypeEnv envr;
  envr.bind(V("z"), Type::refine(nt(Label::HH, Mult::One, N("n")),
                                 nt(Label::HH, Mult::One, N("n"))));
  DestructorApp fr{Op::Fst, V("z"), Atom{}};
  CHECK_FALSE(ty.type_destructor(envr, fr).has_value());
}

TEST_CASE("process typing: zero and output") {
  BiTyper ty;
  TypeEnv env;
  env.bind(K("k"), Type::key(Label::HH, LL));
  auto c = ty.check_process(env, Proc::zero());
  REQUIRE(std::holds_alternative<ConstraintSet>(c));
  auto entries = std::get<ConstraintSet>(c).entries();
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].constraints.empty());
  CHECK(entries[0].env == env);
}

TEST_CASE("process typing: the simplified Helios voters emit the overview constraints") {
  ProtocolFile f = parse_ok(kHeliosVoters);
  BiTyper ty;
  auto res = ty.check_process(f.key_env, f.biprocess);
  if (auto* fail = std::get_if<TypeFailure>(&res)) FAIL(fail->message);
  auto entries = std::get<ConstraintSet>(res).entries();
  REQUIRE(entries.size() == 1);
  const ConstraintEntry& e = entries[0];

  // environments [x:LL, y:LL]
  const Type* xt = e.env.find(V("x"));
  const Type* yt = e.env.find(V("y"));
  REQUIRE(xt);
  REQUIRE(yt);
  CHECK(*xt == LL);
  CHECK(*yt == LL);

  // the four overview constraints, verbatim
  std::map<std::string, Atom> sym;
  for (const Atom& a : f.constants) sym[a.base] = a;
  for (const auto& [k, t] : f.key_env.items()) sym[k.base] = k;
  sym["x"] = V("x");
  sym["y"] = V("y");
  sym["rpa"] = N("rpa");
  sym["rpb"] = N("rpb");
  auto T = [&](const std::string& s) {
    auto r = parse_term(s, sym);
    REQUIRE(std::holds_alternative<Term>(r));
    return std::get<Term>(r);
  };
  std::vector<Constraint> expected = {
      {T("sign(aenc(<zero,x,rpa>,pk(ks)),ka)"), T("sign(aenc(<one,x,rpa>,pk(ks)),ka)")},
      {T("aenc(<zero,x,rpa>,pk(ks))"), T("aenc(<one,x,rpa>,pk(ks))")},
      {T("sign(aenc(<one,y,rpb>,pk(ks)),kb)"), T("sign(aenc(<zero,y,rpb>,pk(ks)),kb)")},
      {T("aenc(<one,y,rpb>,pk(ks))"), T("aenc(<zero,y,rpb>,pk(ks))")},
  };
  CHECK(e.constraints.size() == 4);
  for (const Constraint& want : expected) {
    bool found = false;
    for (const Constraint& got : e.constraints) found = found || got == want;
    CHECK_MESSAGE(found, ("missing: " + to_string(want)));
  }
}

TEST_CASE("process typing: a public/secret guard types only the else branch") {
  // if x = n with x public and n secret can never take the then branch
  ProtocolFile f = parse_ok(
      "const a, b.\n"
      "process P = new n : HH^1 . in(x) . if x = n then out(choice[a,b]) else out(a)\n"
      "query equivalence\n");
  BiTyper ty;
  auto res = ty.check_process(f.key_env, f.biprocess);
  REQUIRE(std::holds_alternative<ConstraintSet>(res));
  // choice[a,b] in the then branch would not type; PIfS skips it
  auto entries = std::get<ConstraintSet>(res).entries();
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].constraints.empty());
}

TEST_CASE("process typing: replication is rejected outside the replicated query") {
  ProtocolFile f = parse_ok("process P = !(0)\nquery equivalence replicated\n");
  BiTyper ty;
  auto res = ty.check_process(f.key_env, f.biprocess);
  REQUIRE(std::holds_alternative<TypeFailure>(res));
}

TEST_CASE("type_replicated: the hash counterexample's sets") {
  // C = {({h(m) ~ h(p)}, [m: HH^inf, p: HH^1])} from out(h(m)) vs out(h(p))
  BiTyper ty;
  TypeEnv env;
  env.bind(N("m"), nonceT(Label::HH, Mult::Many, N("m")));
  env.bind(N("p"), nonceT(Label::HH, Mult::One, N("p")));
  Proc repl = Proc::out(BiTerm(Term::hash(at(N("m"))), Term::hash(at(N("p")))), Proc::zero());
  auto res = ty.type_replicated(env, repl, Proc::zero());
  REQUIRE(std::holds_alternative<BiTyper::ReplicatedSets>(res));
  const auto& sets = std::get<BiTyper::ReplicatedSets>(res);
  auto centries = sets.replicated.entries();
  REQUIRE(centries.size() == 1);
  REQUIRE(centries[0].constraints.size() == 1);
  CHECK(centries[0].constraints[0].left == Term::hash(at(N("m"))));
  CHECK(centries[0].constraints[0].right == Term::hash(at(N("p"))));
  auto sentries = sets.sequential.entries();
  REQUIRE(sentries.size() == 1);
  CHECK(sentries[0].constraints.empty());
}

// Appendix "type LL implies same head symbol": sampled over random ground
// message pairs accepted at LL.
TEST_CASE("LL typing forces matching heads") {
  Gen g(31337);
  BiTyper ty;
  TypeEnv env;
  for (int i = 0; i < 3; ++i) {
    env.bind(g.nonce(i), nonceT(g.coin() ? Label::LL : Label::HH, Mult::One, g.nonce(i)));
    env.bind(g.key(i), Type::key(g.coin() ? Label::LL : Label::HH,
                                 g.coin() ? LL : Type::pair(LL, HL)));
  }
  int successes = 0;
  for (int i = 0; i < 60000 && successes < 1200; ++i) {
    Term l = g.message(3);
    Term r = g.coin() ? l : g.message(3);
    auto c = ty.check_term(env, l, r, LL);
    if (!c) continue;
    ++successes;
    if (l.is_atom() || r.is_atom()) {
      CHECK(l == r);
      continue;
    }
    CHECK(l.op() == r.op());
    if (l.op() == Op::Enc || l.op() == Op::Sign || l.op() == Op::Aenc)
      CHECK(l.args()[1] == r.args()[1]);
  }
  CHECK(successes >= 1000);
}

// Constraint-entry environments never contain union types, contain the
// typing environment's bindings, and stay within dom(Gamma) plus the bound
// atoms of the process.
TEST_CASE("constraint entry environments are branch-shaped") {
  ProtocolFile f = parse_ok(
      "const a, b.\n"
      "key ks : key^HH( ([t{LL,1,a} ; t{LL,1,b}] * HL) \\/ LL ).\n"
      "process P = new r : HH^1 . in(x) . let w = adec(x, ks) in "
      "(out(h(r)) | out(a)) else out(b)\n"
      "query equivalence\n");
  BiTyper ty;
  auto res = ty.check_process(f.key_env, f.biprocess);
  REQUIRE(std::holds_alternative<ConstraintSet>(res));
  std::vector<Atom> bv;
  bound_vars(f.biprocess, bv);
  std::vector<std::pair<Atom, NonceAnnotation>> bn;
  bound_nonces(f.biprocess, bn);
  auto entries = std::get<ConstraintSet>(res).entries();
  CHECK(!entries.empty());
  for (const ConstraintEntry& e : entries) {
    for (const auto& [atom, t] : e.env.items()) {
      CHECK(t.kind() != TypeKind::Union);
      bool in_gamma = f.key_env.contains(atom);
      bool is_bound = false;
      for (const Atom& v : bv) is_bound = is_bound || v == atom;
      for (const auto& [n, ann] : bn) is_bound = is_bound || n == atom;
      CHECK((in_gamma || is_bound));
    }
    // contains a branch of Gamma: every key of Gamma appears with its type
    for (const auto& [k, t] : f.key_env.items()) {
      const Type* got = e.env.find(k);
      REQUIRE(got);
      CHECK(*got == t);
    }
    // and the constraints' variables are covered
    for (const Constraint& c : e.constraints) {
      for (const Atom& v : term_vars(c.left)) CHECK(e.env.contains(v));
      for (const Atom& v : term_vars(c.right)) CHECK(e.env.contains(v));
    }
  }
}
