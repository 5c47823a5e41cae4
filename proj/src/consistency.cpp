#include "consistency.hpp"

#include <algorithm>
#include <deque>

namespace tq {

namespace {

bool occurs(const Atom& x, const Term& t) {
  if (t.is_atom()) return t.leaf() == x;
  for (const Term& a : t.args())
    if (occurs(x, a)) return true;
  return false;
}

bool unify(const Term& a, const Term& b, Substitution& s);

bool bind_var(const Atom& x, const Term& t, Substitution& s) {
  if (t.is_atom() && t.leaf() == x) return true;
  if (occurs(x, t)) return false;
  // keep idempotency: substitute x in existing images
  Substitution one{{x, t}};
  for (auto& [v, img] : s) img = tq::apply(one, img);
  s[x] = t;
  return true;
}

bool unify(const Term& a, const Term& b, Substitution& s) {
  Term u = tq::apply(s, a);
  Term v = tq::apply(s, b);
  if (u == v) return true;
  if (u.is_atom(AtomKind::Var)) return bind_var(u.leaf(), v, s);
  if (v.is_atom(AtomKind::Var)) return bind_var(v.leaf(), u, s);
  if (u.is_atom() || v.is_atom()) return false;
  if (u.op() != v.op()) return false;
  for (size_t i = 0; i < u.args().size(); ++i)
    if (!unify(u.args()[i], v.args()[i], s)) return false;
  return true;
}

}  // namespace

std::optional<Substitution> mgu(const Term& a, const Term& b) {
  Substitution s;
  if (!unify(a, b, s)) return std::nullopt;
  return s;
}

Step1Result step1(const std::vector<Constraint>& c, const TypeEnv& env) {
  Substitution left_sub, right_sub;
  for (const auto& [a, t] : env.items()) {
    if (a.kind == AtomKind::Var && t.kind() == TypeKind::Refine &&
        t.is_finite_refinement()) {
      left_sub[a] = Term::atom(t.ref_left().name);
      right_sub[a] = Term::atom(t.ref_right().name);
    }
  }
  Step1Result r;
  for (const Constraint& cc : c)
    r.constraints.push_back({tq::apply(left_sub, cc.left), tq::apply(right_sub, cc.right)});
  sort_unique(r.constraints);

  // Environment: drop the instantiated variables, keep everything else,
  // and record a nonce binding for every finite nonce type occurring
  // anywhere in the environment.
  std::vector<std::pair<Atom, NonceType>> mentioned;
  std::function<void(const Type&)> scan = [&](const Type& t) {
    switch (t.kind()) {
      case TypeKind::Refine:
        for (const NonceType* nt : {&t.ref_left(), &t.ref_right()}) {
          if (nt->mult == Mult::One && nt->name.kind == AtomKind::BoundNonce)
            mentioned.emplace_back(nt->name, *nt);
        }
        return;
      case TypeKind::Pair:
      case TypeKind::Union:
        scan(t.left());
        scan(t.right());
        return;
      case TypeKind::Key:
      case TypeKind::SEnc:
      case TypeKind::AEnc:
        scan(t.payload());
        return;
      case TypeKind::Label:
        return;
    }
  };
  for (const auto& [a, t] : env.items()) {
    if (left_sub.count(a)) {
      scan(t);
      continue;
    }
    r.env.bind(a, t);
    scan(t);
  }
  for (const auto& [n, nt] : mentioned) {
    if (!r.env.contains(n)) r.env.bind(n, Type::nonce(nt));
  }
  return r;
}

namespace {

std::optional<Label> key_label(const TypeEnv& env, const Atom& k) {
  const Type* t = env.find(k);
  if (!t || t->kind() != TypeKind::Key) return std::nullopt;
  return t->lab();
}

}  // namespace

std::vector<Constraint> step2(const std::vector<Constraint>& c, const TypeEnv& env) {
  std::deque<Constraint> work(c.begin(), c.end());
  std::vector<Constraint> normal;   // c1: fully opened constraints
  std::vector<Constraint> shelved;  // c2: honest signatures kept aside
  while (!work.empty()) {
    Constraint cc = work.front();
    work.pop_front();
    const Term& u = cc.left;
    const Term& v = cc.right;
    if (!u.is_atom() && !v.is_atom() && u.op() == v.op()) {
      if (u.op() == Op::Pair) {
        work.push_back({u.args()[0], v.args()[0]});
        work.push_back({u.args()[1], v.args()[1]});
        continue;
      }
      if (u.op() == Op::Enc || u.op() == Op::Sign) {
        const Term& ku = u.args()[1];
        const Term& kv = v.args()[1];
        if (ku == kv && ku.is_atom(AtomKind::Key)) {
          auto lab = key_label(env, ku.leaf());
          if (lab == Label::LL) {
            work.push_back({u.args()[0], v.args()[0]});
            continue;
          }
          if (u.op() == Op::Sign && lab == Label::HH) {
            shelved.push_back(cc);
            work.push_back({u.args()[0], v.args()[0]});
            continue;
          }
        }
      }
      if (u.op() == Op::Aenc) {
        const Term& ku = u.args()[1];
        const Term& kv = v.args()[1];
        if (ku == kv && ku.op() == Op::Pk && ku.args()[0].is_atom(AtomKind::Key)) {
          auto lab = key_label(env, ku.args()[0].leaf());
          if (lab == Label::LL) {
            work.push_back({u.args()[0], v.args()[0]});
            continue;
          }
        }
      }
    }
    normal.push_back(cc);
  }
  normal.insert(normal.end(), shelved.begin(), shelved.end());
  sort_unique(normal);
  return normal;
}

namespace {

bool is_low_nonce(const TypeEnv& env, const Term& t) {
  if (!t.is_atom(AtomKind::BoundNonce)) return false;
  const Type* ty = env.find(t.leaf());
  return ty && ty->kind() == TypeKind::Refine && ty->is_nonce_type() &&
         ty->ref_left().label == Label::LL;
}

bool is_public_atom_shape(const Term& t) {
  if (t.is_atom(AtomKind::Constant) || t.is_atom(AtomKind::FreeNonce)) return true;
  if ((t.op() == Op::Pk || t.op() == Op::Vk) && t.args()[0].is_atom(AtomKind::Key))
    return true;
  return false;
}

// Leaves of the maximal pair spine.
void pair_spine(const Term& t, std::vector<Term>& out) {
  if (!t.is_atom() && t.op() == Op::Pair) {
    pair_spine(t.args()[0], out);
    pair_spine(t.args()[1], out);
    return;
  }
  out.push_back(t);
}

bool contains_secret_under_pairs(const TypeEnv& env, const Term& t) {
  std::vector<Term> leaves;
  pair_spine(t, leaves);
  for (const Term& l : leaves) {
    if (l.is_atom(AtomKind::BoundNonce)) {
      const Type* ty = env.find(l.leaf());
      if (ty && ty->kind() == TypeKind::Refine && ty->is_nonce_type() &&
          ty->ref_left().label == Label::HH)
        return true;
    }
    if (l.is_atom(AtomKind::Key)) {
      auto lab = key_label(env, l.leaf());
      if (lab == Label::HH) return true;
    }
  }
  return false;
}

}  // namespace

std::optional<Constraint> step3(const std::vector<Constraint>& c, const TypeEnv& env) {
  for (const Constraint& cc : c) {
    const Term& u = cc.left;
    const Term& v = cc.right;
    // low keys, low nonces, public keys, verification keys, constants:
    // identical on both sides and known to the attacker.
    if (u == v) {
      if (u.is_atom(AtomKind::Key) && key_label(env, u.leaf()) == Label::LL) continue;
      if (is_low_nonce(env, u)) continue;
      if (is_public_atom_shape(u)) continue;
    }
    if (!u.is_atom() && !v.is_atom() && u.op() == v.op()) {
      if (u.op() == Op::Enc && u.args()[1] == v.args()[1] &&
          u.args()[1].is_atom(AtomKind::Key) &&
          key_label(env, u.args()[1].leaf()) == Label::HH)
        continue;
      if (u.op() == Op::Sign && u.args()[1] == v.args()[1] &&
          u.args()[1].is_atom(AtomKind::Key) &&
          key_label(env, u.args()[1].leaf()) == Label::HH)
        continue;
      if (u.op() == Op::Hash) {
        if (contains_secret_under_pairs(env, u.args()[0]) &&
            contains_secret_under_pairs(env, v.args()[0]))
          continue;
      }
      if (u.op() == Op::Aenc && u.args()[1] == v.args()[1] &&
          u.args()[1].op() == Op::Pk && u.args()[1].args()[0].is_atom(AtomKind::Key) &&
          key_label(env, u.args()[1].args()[0].leaf()) == Label::HH) {
        if (contains_secret_under_pairs(env, u.args()[0]) &&
            contains_secret_under_pairs(env, v.args()[0]))
          continue;
      }
    }
    return cc;
  }
  return std::nullopt;
}

namespace {

// In dom(mu), variables with an infinite refinement type must map to a
// variable or to an indexed copy of their own left (resp. right) family.
bool infinite_side_condition(const Substitution& mu, const TypeEnv& env, bool left_side) {
  for (const auto& [x, img] : mu) {
    const Type* tx = env.find(x);
    if (!tx || tx->kind() != TypeKind::Refine || !tx->is_infinite_refinement()) continue;
    if (img.is_atom(AtomKind::Var)) continue;
    const NonceType& fam = left_side ? tx->ref_left() : tx->ref_right();
    if (img.is_atom(AtomKind::BoundNonce)) {
      const Atom& a = img.leaf();
      if (a.session >= 1 && a.base == fam.name.base && a.tag == fam.name.tag) continue;
    }
    return false;
  }
  return true;
}

// theta maps x to the index-mirrored copy of the other family; alpha keeps
// the LL-variable-to-nonce bindings of mu.
Substitution mirror_and_low(const Substitution& mu, const TypeEnv& env, bool left_side) {
  Substitution out;
  for (const auto& [x, img] : mu) {
    const Type* tx = env.find(x);
    if (tx && tx->kind() == TypeKind::Refine && tx->is_infinite_refinement()) {
      const NonceType& fam = left_side ? tx->ref_left() : tx->ref_right();
      const NonceType& other = left_side ? tx->ref_right() : tx->ref_left();
      if (img.is_atom(AtomKind::BoundNonce) && img.leaf().session >= 1 &&
          img.leaf().base == fam.name.base && img.leaf().tag == fam.name.tag) {
        Atom mirrored = other.name;
        mirrored.session = img.leaf().session;
        out[x] = Term::atom(mirrored);
      }
      continue;
    }
    if (tx && tx->is_label(Label::LL) &&
        (img.is_atom(AtomKind::BoundNonce) || img.is_atom(AtomKind::FreeNonce))) {
      out[x] = img;
    }
  }
  return out;
}

}  // namespace

std::optional<Step4Failure> step4(const std::vector<Constraint>& c, const TypeEnv& env) {
  for (size_t i = 0; i < c.size(); ++i) {
    for (size_t j = 0; j < c.size(); ++j) {
      // left sides unify -> adjusted right sides must be equal
      if (auto mu = mgu(c[i].left, c[j].left)) {
        if (infinite_side_condition(*mu, env, true)) {
          Substitution adj = mirror_and_low(*mu, env, true);
          if (tq::apply(adj, c[i].right) != tq::apply(adj, c[j].right))
            return Step4Failure{c[i], c[j], *mu, false};
        }
      }
      // and symmetrically for the right sides
      if (auto mu = mgu(c[i].right, c[j].right)) {
        if (infinite_side_condition(*mu, env, false)) {
          Substitution adj = mirror_and_low(*mu, env, false);
          if (tq::apply(adj, c[i].left) != tq::apply(adj, c[j].left))
            return Step4Failure{c[i], c[j], *mu, true};
        }
      }
    }
  }
  return std::nullopt;
}

std::optional<ConsistencyFailure> check_entry(const ConstraintEntry& e) {
  Step1Result s1 = step1(e.constraints, e.env);
  std::vector<Constraint> opened = step2(s1.constraints, s1.env);
  if (auto bad = step3(opened, s1.env)) {
    ConsistencyFailure f;
    f.step = 3;
    f.detail = "step3: constraint " + to_string(*bad) + " has no admissible shape";
    f.entry = e;
    return f;
  }
  if (auto bad = step4(opened, s1.env)) {
    ConsistencyFailure f;
    f.step = 4;
    std::string side = bad->right_sides_unified ? "right" : "left";
    f.detail = "step4: " + side + " sides of " + to_string(bad->a) + " and " +
               to_string(bad->b) + " unify under {";
    bool first = true;
    for (const auto& [x, img] : bad->unifier) {
      if (!first) f.detail += ", ";
      first = false;
      f.detail += to_string(img) + "/" + to_string(x);
    }
    f.detail += "} but the other sides differ";
    f.entry = e;
    return f;
  }
  return std::nullopt;
}

namespace {

std::optional<ConsistencyFailure> check_pairwise(const ConstraintSet& c) {
  std::optional<ConsistencyFailure> failure;
  c.visit_cooccurring_pairs(
      [&](const ConstraintEntry& a, const ConstraintEntry& b) -> bool {
        ConstraintEntry merged;
        if (&a == &b) {
          merged = a;
        } else {
          merged.constraints = a.constraints;
          merged.constraints.insert(merged.constraints.end(), b.constraints.begin(),
                                    b.constraints.end());
          sort_unique(merged.constraints);
          merged.env = TypeEnv::merge(a.env, b.env);
        }
        failure = check_entry(merged);
        return !failure.has_value();
      });
  return failure;
}

}  // namespace

std::optional<ConsistencyFailure> check_const(const ConstraintSet& c) {
  if (c.null()) return std::nullopt;
  if (c.products_compatible()) return check_pairwise(c);
  // Cross-factor type conflicts exist: products may cancel entries, so
  // fall back to the explicit expansion.
  for (const ConstraintEntry& e : c.entries()) {
    if (auto f = check_entry(e)) return f;
  }
  return std::nullopt;
}

bool check_const_ok(const ConstraintSet& c) { return !check_const(c).has_value(); }

std::optional<ConsistencyFailure> check_replicated(const ConstraintSet& c,
                                                   const ConstraintSet& seq) {
  ConstraintSet big = ConstraintSet::product(
      ConstraintSet::product(rename_constraints(c, 1), rename_constraints(c, 2)),
      rename_constraints(seq, 1));
  return check_const(big);
}

}  // namespace tq
