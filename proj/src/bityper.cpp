#include "bityper.hpp"

#include <algorithm>

namespace tq {

namespace {

const Type kLL = Type::label(Label::LL);
const Type kHL = Type::label(Label::HL);
const Type kHH = Type::label(Label::HH);

std::vector<Constraint> merge(std::vector<Constraint> a, const std::vector<Constraint>& b) {
  a.insert(a.end(), b.begin(), b.end());
  sort_unique(a);
  return a;
}

bool nonce_typed(const TypeEnv& env, const Term& t, NonceType& out) {
  if (!t.is_atom(AtomKind::BoundNonce)) return false;
  const Type* ty = env.find(t.leaf());
  if (!ty || ty->kind() != TypeKind::Refine || !ty->is_nonce_type()) return false;
  out = ty->ref_left();
  return true;
}

}  // namespace

void BiTyper::note_failure(int depth, const std::string& msg) {
  if (depth > failure_depth_) {
    failure_depth_ = depth;
    failure_ = msg;
  }
}

bool BiTyper::scope_ok(const TypeEnv& env, const Term& t) {
  if (t.is_atom()) {
    const Atom& a = t.leaf();
    switch (a.kind) {
      case AtomKind::Constant:
      case AtomKind::FreeNonce:
        return true;
      case AtomKind::BoundNonce:
      case AtomKind::Key:
      case AtomKind::Var:
        return env.contains(a);
      case AtomKind::FrameVar:
        return false;
    }
  }
  for (const Term& a : t.args())
    if (!scope_ok(env, a)) return false;
  return true;
}

std::optional<Type> BiTyper::refinement_candidate(const TypeEnv& env, const Term& l,
                                                  const Term& r) {
  if (l.is_atom() && r.is_atom() && !l.is_atom(AtomKind::Var) &&
      !r.is_atom(AtomKind::Var)) {
    auto side = [&](const Term& t) -> std::optional<NonceType> {
      NonceType nt;
      if (nonce_typed(env, t, nt)) return nt;
      if (t.is_atom(AtomKind::Constant) || t.is_atom(AtomKind::FreeNonce)) {
        NonceType c;
        c.label = Label::LL;
        c.mult = Mult::One;
        c.name = t.leaf();
        return c;
      }
      return std::nullopt;
    };
    auto ln = side(l);
    auto rn = side(r);
    if (!ln || !rn) return std::nullopt;
    if (ln->mult != rn->mult) return std::nullopt;
    // TLR1 admits constants and free nonces only at multiplicity one.
    return Type::refine(*ln, *rn);
  }
  if (l.is_atom(AtomKind::Var) && r.is_atom(AtomKind::Var)) {
    const Type* tl = env.find(l.leaf());
    const Type* tr = env.find(r.leaf());
    if (!tl || !tr) return std::nullopt;
    if (l == r) {
      if (tl->kind() == TypeKind::Refine) return *tl;
      return std::nullopt;
    }
    // TLRVar: left refinement of the left variable, right of the right.
    if (tl->kind() == TypeKind::Refine && tl->is_finite_refinement() &&
        tr->kind() == TypeKind::Refine && tr->is_finite_refinement())
      return Type::refine(tl->ref_left(), tr->ref_right());
    return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::vector<Constraint>> BiTyper::check_term(const TypeEnv& env,
                                                           const Term& l, const Term& r,
                                                           const Type& target) {
  return check_term_at(env, l, r, target, 0);
}

std::optional<std::vector<Constraint>> BiTyper::check_term_at(const TypeEnv& env,
                                                              const Term& l, const Term& r,
                                                              const Type& t, int depth) {
  auto fail = [&](const std::string& why) -> std::optional<std::vector<Constraint>> {
    note_failure(depth, to_string(l) + " ~ " + to_string(r) + " : " + to_string(t) +
                            " — " + why);
    return std::nullopt;
  };
  const std::vector<Constraint> none;

  switch (t.kind()) {
    case TypeKind::Union: {
      if (auto c = check_term_at(env, l, r, t.left(), depth + 1)) return c;
      if (auto c = check_term_at(env, l, r, t.right(), depth + 1)) return c;
      return fail("neither disjunct applies");
    }

    case TypeKind::Refine: {
      auto cand = refinement_candidate(env, l, r);
      if (cand && *cand == t) return none;
      // TVar on an identical variable whose declared type is exactly t is
      // covered by refinement_candidate; anything else has no rule.
      return fail("no refinement rule applies");
    }

    case TypeKind::Label:
      switch (t.lab()) {
        case Label::HL:
          // THigh
          if (scope_ok(env, l) && scope_ok(env, r)) return none;
          return fail("terms mention undeclared atoms");
        case Label::HH: {
          // TNonce
          NonceType nl, nr;
          if (nonce_typed(env, l, nl) && nonce_typed(env, r, nr) && nl.label == Label::HH &&
              nr.label == Label::HH && nl.mult == nr.mult)
            return none;
          if (l == r && l.is_atom()) {
            const Type* ty = env.find(l.leaf());
            if (ty) {
              if (subtype(*ty, kHH)) return none;  // TKey / TVar + TSub
              // TVar + TLR' elimination
              if (ty->kind() == TypeKind::Refine && ty->ref_left().label == Label::HH &&
                  ty->ref_right().label == Label::HH)
                return none;
            }
          }
          if (l.is_atom(AtomKind::Var) && r.is_atom(AtomKind::Var)) {
            // TLRVar then TLR'
            auto cand = refinement_candidate(env, l, r);
            if (cand && cand->ref_left().label == Label::HH &&
                cand->ref_right().label == Label::HH)
              return none;
          }
          if (!l.is_atom() && !r.is_atom() && l.op() == Op::Pair && r.op() == Op::Pair) {
            // TPair + SPairS / SPairS'
            if (auto c1 = check_term_at(env, l.args()[0], r.args()[0], kHH, depth + 1)) {
              if (auto c2 = check_term_at(env, l.args()[1], r.args()[1], kHL, depth + 1))
                return merge(*c1, *c2);
            }
            if (auto c1 = check_term_at(env, l.args()[0], r.args()[0], kHL, depth + 1)) {
              if (auto c2 = check_term_at(env, l.args()[1], r.args()[1], kHH, depth + 1))
                return merge(*c1, *c2);
            }
          }
          return fail("not derivably secret of high integrity");
        }
        case Label::LL: {
          // identical public atoms
          if (l == r && l.is_atom()) {
            const Atom& a = l.leaf();
            if (a.kind == AtomKind::Constant || a.kind == AtomKind::FreeNonce)
              return none;  // TCstFN
            if (a.kind == AtomKind::BoundNonce) {
              NonceType nt;
              if (nonce_typed(env, l, nt) && nt.label == Label::LL) return none;  // TNonceL
              return fail("nonce is not public");
            }
            if (a.kind == AtomKind::Key || a.kind == AtomKind::Var) {
              const Type* ty = env.find(a);
              if (!ty) return fail("atom not in the environment");
              if (subtype(*ty, kLL)) return none;  // TKey/TVar + TSub
              // TLRL'
              if (ty->kind() == TypeKind::Refine && ty->is_nonce_type() &&
                  ty->ref_left().label == Label::LL)
                return none;
              // a variable holding a ciphertext can be published when the
              // ciphertext type itself can (TEncH/TEncL/TAencH/TAencL with
              // a TVar premise)
              if (ty->kind() == TypeKind::SEnc) {
                auto klab = env.find(ty->key_atom());
                if (klab && klab->kind() == TypeKind::Key) {
                  if (klab->lab() == Label::LL && subtype(ty->payload(), kLL))
                    return none;  // TEncL
                  if (klab->lab() == Label::HH && subtype(ty->payload(), klab->payload()))
                    return std::vector<Constraint>{{l, r}};  // TEncH
                }
              }
              if (ty->kind() == TypeKind::AEnc) {
                auto klab = env.find(ty->key_atom());
                if (klab && klab->kind() == TypeKind::Key) {
                  if (subtype(ty->payload(), kLL)) return none;  // TAencL
                  if (klab->lab() == Label::HH && subtype(ty->payload(), klab->payload()))
                    return std::vector<Constraint>{{l, r}};  // TAencH
                }
              }
              return fail("variable/key type is not public");
            }
            return fail("frame variables cannot be typed");
          }
          if (l.is_atom(AtomKind::Var) && r.is_atom(AtomKind::Var) && l != r) {
            // TLRVar + TLRL': same public nonce on the left of the left
            // variable and the right of the right variable.
            auto cand = refinement_candidate(env, l, r);
            if (cand && cand->is_nonce_type() && cand->ref_left().label == Label::LL)
              return none;
            return fail("variables do not share a public refinement");
          }
          if (l.is_atom() || r.is_atom())
            return fail("left and right heads differ");
          if (l.op() != r.op()) return fail("left and right heads differ");
          switch (l.op()) {
            case Op::Pair: {
              auto c1 = check_term_at(env, l.args()[0], r.args()[0], kLL, depth + 1);
              if (!c1) return fail("first components not public");
              auto c2 = check_term_at(env, l.args()[1], r.args()[1], kLL, depth + 1);
              if (!c2) return fail("second components not public");
              return merge(*c1, *c2);
            }
            case Op::Pk:
            case Op::Vk:
              // TPubKey / TVKey
              if (l == r && l.args()[0].is_atom(AtomKind::Key) &&
                  env.contains(l.args()[0].leaf()))
                return none;
              return fail("public/verification keys must match a declared key");
            case Op::Hash: {
              // THashL first: fewer constraints.
              if (auto c = check_term_at(env, l.args()[0], r.args()[0], kLL, depth + 1))
                return c;
              if (scope_ok(env, l.args()[0]) && scope_ok(env, r.args()[0]))
                return std::vector<Constraint>{{l, r}};  // THash
              return fail("hash arguments mention undeclared atoms");
            }
            case Op::Enc: {
              const Term& kl = l.args()[1];
              if (kl != r.args()[1] || !kl.is_atom(AtomKind::Key))
                return fail("symmetric keys differ or are not atomic");
              const Type* kt = env.find(kl.leaf());
              if (!kt || kt->kind() != TypeKind::Key)
                return fail("encryption key is not declared");
              if (kt->lab() == Label::LL) {
                // TEncL
                if (auto c = check_term_at(env, l.args()[0], r.args()[0], kLL, depth + 1))
                  return c;
                return fail("payload under a low key must be public");
              }
              if (kt->lab() == Label::HH) {
                // TEncH
                if (auto c =
                        check_term_at(env, l.args()[0], r.args()[0], kt->payload(), depth + 1))
                  return merge(*c, {{l, r}});
                return fail("payload does not match the key's payload type");
              }
              return fail("key label HL has no encryption rule");
            }
            case Op::Aenc: {
              const Term& kl = l.args()[1];
              if (kl != r.args()[1] || kl.op() != Op::Pk ||
                  !kl.args()[0].is_atom(AtomKind::Key))
                return fail("asymmetric keys differ or are not pk(k)");
              const Atom& k = kl.args()[0].leaf();
              const Type* kt = env.find(k);
              if (!kt || kt->kind() != TypeKind::Key)
                return fail("encryption key is not declared");
              // TAencL first: the attacker can always encrypt public data.
              if (auto c = check_term_at(env, l.args()[0], r.args()[0], kLL, depth + 1))
                return c;
              if (kt->lab() == Label::HH) {
                // TAencH
                if (auto c =
                        check_term_at(env, l.args()[0], r.args()[0], kt->payload(), depth + 1))
                  return merge(*c, {{l, r}});
              }
              return fail("payload is neither public nor of the key's payload type");
            }
            case Op::Sign: {
              const Term& kl = l.args()[1];
              if (kl != r.args()[1] || !kl.is_atom(AtomKind::Key))
                return fail("signing keys differ or are not atomic");
              const Type* kt = env.find(kl.leaf());
              if (!kt || kt->kind() != TypeKind::Key)
                return fail("signing key is not declared");
              if (kt->lab() == Label::LL) {
                // TSignL
                if (auto c = check_term_at(env, l.args()[0], r.args()[0], kLL, depth + 1))
                  return c;
                return fail("payload under a low signing key must be public");
              }
              if (kt->lab() == Label::HH) {
                // TSignH: signatures do not hide their payload.
                auto c1 =
                    check_term_at(env, l.args()[0], r.args()[0], kt->payload(), depth + 1);
                if (!c1) return fail("payload does not match the key's payload type");
                auto c2 = check_term_at(env, l.args()[0], r.args()[0], kLL, depth + 1);
                if (!c2) return fail("signed payload must also be publishable");
                return merge(merge(*c1, *c2), {{l, r}});
              }
              return fail("key label HL has no signing rule");
            }
            default:
              return fail("destructors cannot appear in messages");
          }
        }
      }
      return fail("unhandled label");

    case TypeKind::Pair: {
      if (!l.is_atom() && !r.is_atom() && l.op() == Op::Pair && r.op() == Op::Pair) {
        auto c1 = check_term_at(env, l.args()[0], r.args()[0], t.left(), depth + 1);
        if (!c1) return fail("first components do not fit");
        auto c2 = check_term_at(env, l.args()[1], r.args()[1], t.right(), depth + 1);
        if (!c2) return fail("second components do not fit");
        return merge(*c1, *c2);
      }
      if (l == r && l.is_atom()) {
        const Type* ty = env.find(l.leaf());
        if (ty && subtype(*ty, t)) return none;
      }
      return fail("no pair rule applies");
    }

    case TypeKind::Key: {
      if (l == r && l.is_atom()) {
        const Type* ty = env.find(l.leaf());
        if (ty && *ty == t) return none;  // TKey / TVar (key types are invariant)
      }
      return fail("key types hold only the declared key");
    }

    case TypeKind::SEnc: {
      if (!l.is_atom() && !r.is_atom() && l.op() == Op::Enc && r.op() == Op::Enc &&
          l.args()[1] == r.args()[1] && l.args()[1].is_atom(AtomKind::Key) &&
          l.args()[1].leaf() == t.key_atom()) {
        // TEnc
        if (auto c = check_term_at(env, l.args()[0], r.args()[0], t.payload(), depth + 1))
          return c;
        return fail("payload does not fit the ciphertext type");
      }
      if (l == r && l.is_atom()) {
        const Type* ty = env.find(l.leaf());
        if (ty && subtype(*ty, t)) return none;
      }
      return fail("no symmetric ciphertext rule applies");
    }

    case TypeKind::AEnc: {
      if (!l.is_atom() && !r.is_atom() && l.op() == Op::Aenc && r.op() == Op::Aenc &&
          l.args()[1] == r.args()[1] && l.args()[1].op() == Op::Pk &&
          l.args()[1].args()[0].is_atom(AtomKind::Key) &&
          l.args()[1].args()[0].leaf() == t.key_atom()) {
        // TAenc
        if (auto c = check_term_at(env, l.args()[0], r.args()[0], t.payload(), depth + 1))
          return c;
        return fail("payload does not fit the ciphertext type");
      }
      if (l == r && l.is_atom()) {
        const Type* ty = env.find(l.leaf());
        if (ty && subtype(*ty, t)) return none;
      }
      return fail("no asymmetric ciphertext rule applies");
    }
  }
  return fail("no rule applies");
}

std::optional<Type> BiTyper::type_destructor(const TypeEnv& env, const DestructorApp& d) {
  const Type* ty = env.find(d.arg);
  if (!ty) return std::nullopt;
  auto key_type = [&]() -> const Type* {
    const Type* kt = env.find(d.key);
    return kt && kt->kind() == TypeKind::Key ? kt : nullptr;
  };
  switch (d.op) {
    case Op::Dec: {
      if (ty->is_label(Label::LL)) {
        const Type* kt = key_type();
        if (!kt) return std::nullopt;
        if (kt->lab() == Label::HH) return kt->payload();  // DDecH
        if (kt->lab() == Label::LL) return Type::label(Label::LL);  // DDecL
        return std::nullopt;
      }
      if (ty->kind() == TypeKind::SEnc && ty->key_atom() == d.key)
        return ty->payload();  // DDecT
      return std::nullopt;
    }
    case Op::Adec: {
      if (ty->is_label(Label::LL)) {
        const Type* kt = key_type();
        if (!kt) return std::nullopt;
        if (kt->lab() == Label::HH)
          return Type::union_of(kt->payload(), Type::label(Label::LL));  // DAdecH
        if (kt->lab() == Label::LL) return Type::label(Label::LL);       // DAdecL
        return std::nullopt;
      }
      if (ty->kind() == TypeKind::AEnc && ty->key_atom() == d.key)
        return ty->payload();  // DAdecT
      return std::nullopt;
    }
    case Op::Check: {
      if (!ty->is_label(Label::LL)) return std::nullopt;
      const Type* kt = key_type();
      if (!kt) return std::nullopt;
      if (kt->lab() == Label::HH) return kt->payload();           // DCheckH
      if (kt->lab() == Label::LL) return Type::label(Label::LL);  // DCheckL
      return std::nullopt;
    }
    case Op::Fst:
    case Op::Snd: {
      if (ty->kind() == TypeKind::Pair)
        return d.op == Op::Fst ? ty->left() : ty->right();  // DFst / DSnd
      if (ty->is_label(Label::LL)) return Type::label(Label::LL);  // DFstL / DSndL
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

std::variant<ConstraintSet, TypeFailure> BiTyper::bind_and_check(const TypeEnv& env,
                                                                 const Atom& var,
                                                                 const Type& t,
                                                                 const Proc& cont) {
  // POr applied eagerly: a union binding splits the derivation immediately.
  std::vector<Type> parts = branches(t);
  ConstraintSet acc;
  for (const Type& part : parts) {
    TypeEnv e2 = env;
    e2.bind(var, part);
    auto sub = check_process(e2, cont);
    if (auto* f = std::get_if<TypeFailure>(&sub)) return *f;
    ConstraintSet cs = std::get<ConstraintSet>(sub);
    acc = acc.null() ? cs : ConstraintSet::sum(acc, cs);
  }
  return acc;
}

std::variant<ConstraintSet, TypeFailure> BiTyper::check_if(const TypeEnv& env,
                                                           const Proc& p) {
  const BiTerm& m1 = p.lhs();
  const BiTerm& m2 = p.rhs();
  auto then_else = [&](bool which) -> const Proc& { return which ? p.first() : p.second(); };

  std::optional<Type> r1 = refinement_candidate(env, m1.left, m1.right);
  std::optional<Type> r2 = refinement_candidate(env, m2.left, m2.right);

  // PIfLR: both operands carry singleton refinements; only the branch
  // combination that will actually run is typed.
  if (r1 && r2 && r1->is_finite_refinement() && r2->is_finite_refinement()) {
    bool b = r1->ref_left() == r2->ref_left();
    bool b2 = r1->ref_right() == r2->ref_right();
    if (b == b2) return check_process(env, then_else(b));
    Proc lhs = erase_left(then_else(b));
    Proc rhs = erase_right(then_else(b2));
    auto zipped = pair_processes(lhs, rhs);
    if (auto* pr = std::get_if<Proc>(&zipped)) return check_process(env, *pr);
    // mixed branches have different shapes: fall through to other rules
  }

  // PIfLR'*: the refined values differ on both sides; only else runs.
  if (r1 && r2 && r1->ref_left().mult == r1->ref_right().mult &&
      r1->ref_left() != r2->ref_left() && r1->ref_right() != r2->ref_right())
    return check_process(env, p.second());

  // PIfLR*: same infinite refinement on both operands; the test yields the
  // same verdict on both sides but the value is unknown.
  if (r1 && r2 && r1->is_infinite_refinement() && *r1 == *r2) {
    auto a = check_process(env, p.first());
    if (std::holds_alternative<TypeFailure>(a)) return a;
    auto b = check_process(env, p.second());
    if (std::holds_alternative<TypeFailure>(b)) return b;
    return ConstraintSet::sum(std::get<ConstraintSet>(a), std::get<ConstraintSet>(b));
  }

  // PIfS: public against secret of high integrity can never be equal.
  if (check_term(env, m1.left, m1.right, Type::label(Label::LL)) &&
      check_term(env, m2.left, m2.right, Type::label(Label::HH)))
    return check_process(env, p.second());

  // PIfI: a pair can never equal a nonce or constant.
  if (r2) {
    bool pairish = false;
    if (!m1.left.is_atom() && m1.left.op() == Op::Pair && !m1.right.is_atom() &&
        m1.right.op() == Op::Pair) {
      pairish = check_term(env, m1.left, m1.right,
                           Type::pair(Type::label(Label::HL), Type::label(Label::HL)))
                    .has_value();
    } else if (m1.left == m1.right && m1.left.is_atom()) {
      const Type* ty = env.find(m1.left.leaf());
      pairish = ty && ty->kind() == TypeKind::Pair;
    }
    if (pairish) return check_process(env, p.second());
  }

  // PIfP: comparison with a public atom; both branches, no constraints.
  if (m2.left == m2.right && m2.left.is_atom() &&
      (m2.left.is_atom(AtomKind::Key) || m2.left.is_atom(AtomKind::BoundNonce) ||
       m2.left.is_atom(AtomKind::FreeNonce) || m2.left.is_atom(AtomKind::Constant))) {
    if (check_term(env, m1.left, m1.right, Type::label(Label::LL)) &&
        check_term(env, m2.left, m2.right, Type::label(Label::LL))) {
      auto a = check_process(env, p.first());
      if (std::holds_alternative<TypeFailure>(a)) return a;
      auto b = check_process(env, p.second());
      if (std::holds_alternative<TypeFailure>(b)) return b;
      return ConstraintSet::sum(std::get<ConstraintSet>(a), std::get<ConstraintSet>(b));
    }
  }

  // PIfL: both operands public; the attacker could run the test himself.
  auto c1 = check_term(env, m1.left, m1.right, Type::label(Label::LL));
  auto c2 = check_term(env, m2.left, m2.right, Type::label(Label::LL));
  if (c1 && c2) {
    auto a = check_process(env, p.first());
    if (std::holds_alternative<TypeFailure>(a)) return a;
    auto b = check_process(env, p.second());
    if (std::holds_alternative<TypeFailure>(b)) return b;
    return ConstraintSet::sum(std::get<ConstraintSet>(a), std::get<ConstraintSet>(b))
        .add_all(merge(*c1, *c2));
  }
  return TypeFailure{"no conditional rule applies to if " + to_string(m1) + " = " +
                     to_string(m2) + (failure_.empty() ? "" : " (deepest: " + failure_ + ")")};
}

std::variant<ConstraintSet, TypeFailure> BiTyper::check_process(const TypeEnv& env,
                                                                const Proc& p) {
  switch (p.kind()) {
    case ProcKind::Zero: {
      // PZero: the environment flows into the constraint entry.
      return ConstraintSet::single(env);
    }
    case ProcKind::New: {
      NonceType nt;
      nt.label = p.ann().label;
      nt.mult = p.ann().mult;
      nt.name = p.binder();
      TypeEnv e2 = env;
      e2.bind(p.binder(), Type::nonce(nt));
      return check_process(e2, p.first());
    }
    case ProcKind::In: {
      TypeEnv e2 = env;
      e2.bind(p.binder(), Type::label(Label::LL));
      return check_process(e2, p.first());
    }
    case ProcKind::Out: {
      auto c = check_term(env, p.payload().left, p.payload().right, Type::label(Label::LL));
      if (!c)
        return TypeFailure{"output is not publishable: " + to_string(p.payload()) +
                           (failure_.empty() ? "" : " (deepest: " + failure_ + ")")};
      auto sub = check_process(env, p.first());
      if (std::holds_alternative<TypeFailure>(sub)) return sub;
      return std::get<ConstraintSet>(sub).add_all(*c);
    }
    case ProcKind::Par: {
      auto a = check_process(env, p.first());
      if (std::holds_alternative<TypeFailure>(a)) return a;
      auto b = check_process(env, p.second());
      if (std::holds_alternative<TypeFailure>(b)) return b;
      return ConstraintSet::product(std::get<ConstraintSet>(a), std::get<ConstraintSet>(b));
    }
    case ProcKind::Let: {
      const Type* ty = env.find(p.dapp().arg);
      if (!ty) return TypeFailure{"let argument " + to_string(p.dapp().arg) + " is unbound"};
      if (ty->kind() == TypeKind::Refine) {
        // PLetLR: destructors always fail on a nonce; only else runs.
        return check_process(env, p.second());
      }
      auto t = type_destructor(env, p.dapp());
      if (!t)
        return TypeFailure{"no destructor rule for " + to_string(p.dapp()) + " with " +
                           to_string(p.dapp().arg) + " : " + to_string(*ty)};
      auto then_c = bind_and_check(env, p.binder(), *t, p.first());
      if (std::holds_alternative<TypeFailure>(then_c)) return then_c;
      auto else_c = check_process(env, p.second());
      if (std::holds_alternative<TypeFailure>(else_c)) return else_c;
      return ConstraintSet::sum(std::get<ConstraintSet>(then_c),
                                std::get<ConstraintSet>(else_c));
    }
    case ProcKind::IfEq:
      return check_if(env, p);
    case ProcKind::Repl:
      return TypeFailure{"replication has no typing rule; use the replicated query"};
  }
  return TypeFailure{"unreachable"};
}

std::variant<BiTyper::ReplicatedSets, TypeFailure> BiTyper::type_replicated(
    const TypeEnv& env, const Proc& repl, const Proc& seq) {
  auto a = check_process(env, repl);
  if (auto* f = std::get_if<TypeFailure>(&a)) return *f;
  auto b = check_process(env, seq);
  if (auto* f = std::get_if<TypeFailure>(&b)) return *f;
  ReplicatedSets out;
  out.replicated = std::get<ConstraintSet>(a);
  out.sequential = std::get<ConstraintSet>(b);
  return out;
}

}  // namespace tq
