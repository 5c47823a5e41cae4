#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parser.hpp"
#include "process.hpp"
#include "testutil.hpp"

using namespace tq;

namespace {

ProtocolFile parse_ok(const std::string& src) {
  auto r = parse_protocol(src);
  if (auto* e = std::get_if<ParseError>(&r)) FAIL(e->str());
  return std::get<ProtocolFile>(r);
}

const char* kVoterSrc =
    "const v.\n"
    "key ka : key^HH(aenc(LL * t{HH,1,r}, ks)).\n"
    "key ks : key^HH(LL).\n"
    "left  P = new r : HH^1 . out(sign(aenc(<v,r>,pk(ks)),ka)) . 0\n"
    "right Q = new r : HH^1 . out(sign(aenc(<v,r>,pk(ks)),ka)) . 0\n"
    "query equivalence\n";

}  // namespace

TEST_CASE("parsing the voter process") {
  ProtocolFile f = parse_ok(kVoterSrc);
  const Proc& p = f.biprocess;
  REQUIRE(p.kind() == ProcKind::New);
  REQUIRE(p.first().kind() == ProcKind::Out);
  CHECK(p.first().payload().same());
  CHECK(p.first().first().kind() == ProcKind::Zero);
  CHECK(to_string(p.first().payload().left) == "sign(aenc(<v,r>,pk(ks)),ka)");
  CHECK_FALSE(f.replicated_query);
}

TEST_CASE("parsing trivial processes") {
  ProtocolFile f = parse_ok(
      "left P = 0\n"
      "right Q = 0\n"
      "query equivalence\n");
  CHECK(f.biprocess.kind() == ProcKind::Zero);

  ProtocolFile g = parse_ok(
      "left P = in(x) . if x = x then 0 else 0\n"
      "right Q = in(x) . if x = x then 0 else 0\n"
      "query equivalence\n");
  REQUIRE(g.biprocess.kind() == ProcKind::In);
  const Proc& ifp = g.biprocess.first();
  REQUIRE(ifp.kind() == ProcKind::IfEq);
  CHECK(ifp.lhs() == ifp.rhs());
}

TEST_CASE("parse errors carry positions") {
  auto r = parse_protocol("left P = out(nope) right Q = 0 query equivalence");
  REQUIRE(std::holds_alternative<ParseError>(r));
  ParseError e = std::get<ParseError>(r);
  CHECK(e.line == 1);
  CHECK(e.message.find("undeclared") != std::string::npos);
}

TEST_CASE("zipping aligned processes") {
  // choice payload built from two sides that differ only in output terms
  ProtocolFile f = parse_ok(
      "const a, b.\n"
      "left P = new r : HH^1 . out(<a,r>) . 0\n"
      "right Q = new r : HH^1 . out(<b,r>) . 0\n"
      "query equivalence\n");
  const Proc& p = f.biprocess;
  REQUIRE(p.kind() == ProcKind::New);
  const BiTerm& t = p.first().payload();
  CHECK_FALSE(t.same());
  CHECK(to_string(t) == "choice[<a,r>,<b,r>]");

  // identical sides zip to an all-same biprocess
  Proc l = erase_left(p);
  auto z = pair_processes(l, l);
  REQUIRE(std::holds_alternative<Proc>(z));
  CHECK(std::get<Proc>(z) == l);

  // head mismatch is reported with a position
  ProtocolFile g1 = parse_ok(
      "const a.\nleft P = out(a)\nright Q = out(a)\nquery equivalence\n");
  ProtocolFile g2 = parse_ok(
      "left P = in(x)\nright Q = in(x)\nquery equivalence\n");
  auto bad = pair_processes(g1.biprocess, g2.biprocess);
  REQUIRE(std::holds_alternative<ShapeMismatch>(bad));
  CHECK(std::get<ShapeMismatch>(bad).where.find("head constructors differ") !=
        std::string::npos);
}

TEST_CASE("round trip: erase then re-pair") {
  ProtocolFile f = parse_ok(
      "const a, b.\n"
      "key k : key^HH(LL).\n"
      "left P = new r : HH^1 . in(x) . let y = dec(x,k) in out(choice[a,b]) else (0 | out(r))\n"
      "right Q = new r : HH^1 . in(x) . let y = dec(x,k) in out(choice[a,b]) else (0 | out(r))\n"
      "query equivalence\n");
  // NB: parsing left/right separately zips choice[a,b] as written on both
  // sides; the zipped payload takes left of the left and right of the right.
  auto z = pair_processes(erase_left(f.biprocess), erase_right(f.biprocess));
  REQUIRE(std::holds_alternative<Proc>(z));
  CHECK(std::get<Proc>(z) == f.biprocess);
}

TEST_CASE("protocol files pretty-print and reparse") {
  const char* srcs[] = {
      kVoterSrc,
      "const a.\nfreename fn.\nkey k : key^LL(LL).\n"
      "process P = !(in(x) . let y = dec(x,k) in (out(y) | out(a)) else "
      "if x = a then out(a) else 0)\nquery equivalence replicated\n",
  };
  for (const char* src : srcs) {
    ProtocolFile f = parse_ok(src);
    std::string printed = print_protocol(f);
    ProtocolFile f2 = parse_ok(printed);
    CHECK(print_protocol(f2) == printed);
    CHECK(f2.biprocess == f.biprocess);
  }
}

TEST_CASE("session renaming of processes") {
  ProtocolFile f = parse_ok(
      "process P = new m : HH^inf . out(h(m))\n"
      "query equivalence replicated\n");
  TypeEnv empty;
  Proc r2 = rename_session(f.biprocess, 2, empty);
  REQUIRE(r2.kind() == ProcKind::New);
  CHECK(r2.binder() == make_atom(AtomKind::BoundNonce, "m", 2));
  CHECK(r2.ann().mult == Mult::One);
  CHECK(to_string(r2.first().payload().left) == "h(m#2)");

  // finite nonces are untouched, variables are renamed
  ProtocolFile g = parse_ok(
      "process P = new p : HH^1 . in(x) . out(h(p))\n"
      "query equivalence\n");
  Proc r5 = rename_session(g.biprocess, 5, empty);
  CHECK(r5.binder() == make_atom(AtomKind::BoundNonce, "p"));
  CHECK(r5.first().binder() == make_atom(AtomKind::Var, "x", 5));

  CHECK(rename_session(Proc::zero(), 3, empty) == Proc::zero());

  // renaming for i then exchanging i and j equals renaming for j
  ProtocolFile h = parse_ok(
      "process P = new m : LL^inf . in(x) . out(<h(m),x>)\n"
      "query equivalence replicated\n");
  Proc ri = rename_session(h.biprocess, 1, empty);
  Proc rj = rename_session(h.biprocess, 3, empty);
  std::function<void(const Proc&, const Proc&)> cmp = [&](const Proc& a, const Proc& b) {
    REQUIRE(a.kind() == b.kind());
    if (a.kind() == ProcKind::Out)
      CHECK(exchange_indices(a.payload().left, 1, 3) == b.payload().left);
    if (a.kind() != ProcKind::Zero) cmp(a.first(), b.first());
  };
  cmp(ri, rj);
}

TEST_CASE("splitting the replication shape") {
  ProtocolFile f = parse_ok(
      "key k : key^HH(LL).\n"
      "process P = new r : HH^1 . ( !(in(x) . 0) | out(h(r)) )\n"
      "query equivalence replicated\n");
  auto s = split_replication(f.biprocess);
  REQUIRE(std::holds_alternative<SplitReplication>(s));
  const auto& parts = std::get<SplitReplication>(s);
  CHECK(parts.replicated.kind() == ProcKind::In);
  CHECK(parts.sequential.kind() == ProcKind::Out);
  REQUIRE(parts.shared_nonces.size() == 1);
  CHECK(parts.shared_nonces[0].first.base == "r");

  // bare replication: sequential part is 0
  ProtocolFile g = parse_ok("process P = !(in(x) . 0)\nquery equivalence replicated\n");
  auto s2 = split_replication(g.biprocess);
  REQUIRE(std::holds_alternative<SplitReplication>(s2));
  CHECK(std::get<SplitReplication>(s2).sequential.kind() == ProcKind::Zero);

  // replication under an input is out of the fragment
  ProtocolFile h = parse_ok("process P = in(x) . !(0)\nquery equivalence replicated\n");
  auto s3 = split_replication(h.biprocess);
  CHECK(std::holds_alternative<UnsupportedShape>(s3));

  // the replicated component must bind only infinite nonces
  ProtocolFile u = parse_ok(
      "process P = !(new m : HH^1 . out(h(m)))\nquery equivalence replicated\n");
  auto s4 = split_replication(u.biprocess);
  CHECK(std::holds_alternative<UnsupportedShape>(s4));

  // and the sequential component only finite ones
  ProtocolFile v = parse_ok(
      "process P = ( !(in(x).0) | new m : HH^inf . out(h(m)) )\n"
      "query equivalence replicated\n");
  auto s5 = split_replication(v.biprocess);
  CHECK(std::holds_alternative<UnsupportedShape>(s5));
}

TEST_CASE("duplicate binders are freshened, ambiguous type references rejected") {
  ProtocolFile f = parse_ok(
      "process P = (new r : HH^1 . out(h(r))) | (new r : HH^1 . out(h(r)))\n"
      "query equivalence\n");
  std::vector<std::pair<Atom, NonceAnnotation>> ns;
  bound_nonces(f.biprocess, ns);
  REQUIRE(ns.size() == 2);
  CHECK(ns[0].first != ns[1].first);

  auto bad = parse_protocol(
      "key k : key^HH(t{HH,1,r}).\n"
      "process P = (new r : HH^1 . out(h(r))) | (new r : HH^1 . out(h(r)))\n"
      "query equivalence\n");
  REQUIRE(std::holds_alternative<ParseError>(bad));
  CHECK(std::get<ParseError>(bad).message.find("ambiguous") != std::string::npos);
}
