#include "term.hpp"

#include <cassert>
#include <functional>
#include <sstream>
#include <tuple>

namespace tq {

bool Atom::operator<(const Atom& o) const {
  return std::tie(kind, base, session, ordinal, tag) <
         std::tie(o.kind, o.base, o.session, o.ordinal, o.tag);
}

Atom make_atom(AtomKind kind, std::string base, int session, int tag) {
  Atom a;
  a.kind = kind;
  a.base = std::move(base);
  a.session = session;
  a.tag = tag;
  return a;
}

Atom frame_var(int ordinal) {
  Atom a;
  a.kind = AtomKind::FrameVar;
  a.base = "ax";
  a.ordinal = ordinal;
  return a;
}

std::string to_string(const Atom& a) {
  std::string s;
  if (a.kind == AtomKind::FrameVar) {
    s = "ax" + std::to_string(a.ordinal);
    return s;
  }
  s = a.base;
  if (a.tag > 0) s += "~" + std::to_string(a.tag);
  if (a.session > 0) s += "#" + std::to_string(a.session);
  return s;
}

bool is_constructor(Op op) {
  switch (op) {
    case Op::Pk:
    case Op::Vk:
    case Op::Enc:
    case Op::Aenc:
    case Op::Sign:
    case Op::Pair:
    case Op::Hash:
      return true;
    default:
      return false;
  }
}

bool is_destructor(Op op) {
  switch (op) {
    case Op::Dec:
    case Op::Adec:
    case Op::Check:
    case Op::Fst:
    case Op::Snd:
      return true;
    default:
      return false;
  }
}

int arity(Op op) {
  switch (op) {
    case Op::Leaf:
      return 0;
    case Op::Pk:
    case Op::Vk:
    case Op::Hash:
    case Op::Fst:
    case Op::Snd:
      return 1;
    default:
      return 2;
  }
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "";
    case Op::Pk: return "pk";
    case Op::Vk: return "vk";
    case Op::Enc: return "enc";
    case Op::Aenc: return "aenc";
    case Op::Sign: return "sign";
    case Op::Pair: return "pair";
    case Op::Hash: return "h";
    case Op::Dec: return "dec";
    case Op::Adec: return "adec";
    case Op::Check: return "checksign";
    case Op::Fst: return "fst";
    case Op::Snd: return "snd";
  }
  return "";
}

namespace {

size_t hash_mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

}  // namespace

size_t hash_of(const Atom& a) {
  size_t h = std::hash<std::string>{}(a.base);
  h = hash_mix(h, static_cast<size_t>(a.kind));
  h = hash_mix(h, static_cast<size_t>(a.session));
  h = hash_mix(h, static_cast<size_t>(a.ordinal));
  h = hash_mix(h, static_cast<size_t>(a.tag));
  return h;
}

Term Term::atom(const Atom& a) {
  auto n = std::make_shared<Node>();
  n->op = Op::Leaf;
  n->atom = a;
  n->hash = hash_of(a);
  n->size = 1;
  Term t;
  t.node_ = std::move(n);
  return t;
}

Term Term::make(Op op, std::vector<Term> args) {
  assert(op != Op::Leaf);
  assert(static_cast<int>(args.size()) == arity(op));
  auto n = std::make_shared<Node>();
  n->op = op;
  size_t h = static_cast<size_t>(op) * 0x100000001b3ull;
  size_t sz = 1;
  for (const Term& a : args) {
    h = hash_mix(h, a.hash());
    sz += a.size();
  }
  n->args = std::move(args);
  n->hash = h;
  n->size = sz;
  Term t;
  t.node_ = std::move(n);
  return t;
}

bool Term::operator==(const Term& o) const {
  if (node_ == o.node_) return true;
  if (!node_ || !o.node_) return false;
  if (node_->hash != o.node_->hash || node_->op != o.node_->op) return false;
  if (node_->op == Op::Leaf) return node_->atom == o.node_->atom;
  for (size_t i = 0; i < node_->args.size(); ++i)
    if (node_->args[i] != o.node_->args[i]) return false;
  return true;
}

bool Term::operator<(const Term& o) const {
  if (*this == o) return false;
  if (node_->op != o.node_->op) return node_->op < o.node_->op;
  if (node_->op == Op::Leaf) return node_->atom < o.node_->atom;
  for (size_t i = 0; i < node_->args.size(); ++i) {
    if (node_->args[i] != o.node_->args[i]) return node_->args[i] < o.node_->args[i];
  }
  return false;
}

std::optional<Term> evaluate(const Term& t) {
  if (t.is_atom()) return t;
  std::vector<std::optional<Term>> sub;
  sub.reserve(t.args().size());
  for (const Term& a : t.args()) sub.push_back(evaluate(a));

  auto is_key = [](const std::optional<Term>& u) {
    return u && u->is_atom(AtomKind::Key);
  };
  switch (t.op()) {
    case Op::Pk:
    case Op::Vk:
      if (is_key(sub[0])) return Term::make(t.op(), {*sub[0]});
      return std::nullopt;
    case Op::Hash:
      if (sub[0]) return Term::hash(*sub[0]);
      return std::nullopt;
    case Op::Pair:
      if (sub[0] && sub[1]) return Term::pair(*sub[0], *sub[1]);
      return std::nullopt;
    case Op::Enc:
    case Op::Sign:
      if (sub[0] && is_key(sub[1])) return Term::make(t.op(), {*sub[0], *sub[1]});
      return std::nullopt;
    case Op::Aenc:
      if (sub[0] && sub[1] && sub[1]->op() == Op::Pk &&
          sub[1]->args()[0].is_atom(AtomKind::Key))
        return Term::aenc(*sub[0], *sub[1]);
      return std::nullopt;
    case Op::Fst:
      if (sub[0] && sub[0]->op() == Op::Pair) return sub[0]->args()[0];
      return std::nullopt;
    case Op::Snd:
      if (sub[0] && sub[0]->op() == Op::Pair) return sub[0]->args()[1];
      return std::nullopt;
    case Op::Dec:
      if (sub[0] && sub[1] && sub[0]->op() == Op::Enc && sub[0]->args()[1] == *sub[1])
        return sub[0]->args()[0];
      return std::nullopt;
    case Op::Adec:
      if (sub[0] && sub[1] && sub[0]->op() == Op::Aenc &&
          sub[0]->args()[1].op() == Op::Pk && sub[0]->args()[1].args()[0] == *sub[1])
        return sub[0]->args()[0];
      return std::nullopt;
    case Op::Check:
      if (sub[0] && sub[1] && sub[0]->op() == Op::Sign && sub[1]->op() == Op::Vk &&
          sub[1]->args()[0] == sub[0]->args()[1])
        return sub[0]->args()[0];
      return std::nullopt;
    case Op::Leaf:
      break;
  }
  return std::nullopt;
}

bool is_message(const Term& t) {
  if (t.is_atom()) return true;
  if (is_destructor(t.op())) return false;
  switch (t.op()) {
    case Op::Pk:
    case Op::Vk:
      return t.args()[0].is_atom(AtomKind::Key);
    case Op::Enc:
    case Op::Sign:
      return is_message(t.args()[0]) && t.args()[1].is_atom(AtomKind::Key);
    case Op::Aenc:
      return is_message(t.args()[0]) && t.args()[1].op() == Op::Pk &&
             t.args()[1].args()[0].is_atom(AtomKind::Key);
    default:
      for (const Term& a : t.args())
        if (!is_message(a)) return false;
      return true;
  }
}

bool is_ground(const Term& t) {
  if (t.is_atom())
    return t.leaf().kind != AtomKind::Var && t.leaf().kind != AtomKind::FrameVar;
  for (const Term& a : t.args())
    if (!is_ground(a)) return false;
  return true;
}

Term apply(const Substitution& s, const Term& t) {
  if (t.is_atom()) {
    const Atom& a = t.leaf();
    if (a.kind == AtomKind::Var || a.kind == AtomKind::FrameVar) {
      auto it = s.find(a);
      if (it != s.end()) return it->second;
    }
    return t;
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  bool changed = false;
  for (const Term& a : t.args()) {
    Term r = apply(s, a);
    changed = changed || r != a;
    args.push_back(std::move(r));
  }
  if (!changed) return t;
  return Term::make(t.op(), std::move(args));
}

Term rename_atoms(const Term& t, const std::map<Atom, Atom>& ren) {
  if (t.is_atom()) {
    auto it = ren.find(t.leaf());
    if (it != ren.end()) return Term::atom(it->second);
    return t;
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  bool changed = false;
  for (const Term& a : t.args()) {
    Term r = rename_atoms(a, ren);
    changed = changed || r != a;
    args.push_back(std::move(r));
  }
  if (!changed) return t;
  return Term::make(t.op(), std::move(args));
}

Term exchange_indices(const Term& t, int i, int j) {
  if (i == j) return t;
  if (t.is_atom()) {
    Atom a = t.leaf();
    if (a.session == i)
      a.session = j;
    else if (a.session == j)
      a.session = i;
    else
      return t;
    return Term::atom(a);
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const Term& a : t.args()) args.push_back(exchange_indices(a, i, j));
  return Term::make(t.op(), std::move(args));
}

Term rename_session(const Term& t, int i, const std::vector<Atom>& families) {
  if (t.is_atom()) {
    Atom a = t.leaf();
    if (a.kind == AtomKind::Var) {
      a.session = i;
      return Term::atom(a);
    }
    if (a.kind == AtomKind::BoundNonce) {
      for (const Atom& f : families) {
        if (a == f) {
          a.session = i;
          return Term::atom(a);
        }
      }
    }
    return t;
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const Term& a : t.args()) args.push_back(rename_session(a, i, families));
  return Term::make(t.op(), std::move(args));
}

void collect_atoms(const Term& t, std::vector<Atom>& out) {
  if (t.is_atom()) {
    out.push_back(t.leaf());
    return;
  }
  for (const Term& a : t.args()) collect_atoms(a, out);
}

std::vector<Atom> term_vars(const Term& t) {
  std::vector<Atom> all;
  collect_atoms(t, all);
  std::vector<Atom> vars;
  for (Atom& a : all) {
    if (a.kind != AtomKind::Var && a.kind != AtomKind::FrameVar) continue;
    bool seen = false;
    for (const Atom& v : vars) seen = seen || v == a;
    if (!seen) vars.push_back(std::move(a));
  }
  return vars;
}

namespace {

void print_term(const Term& t, std::ostringstream& os) {
  if (t.is_atom()) {
    os << to_string(t.leaf());
    return;
  }
  if (t.op() == Op::Pair) {
    os << '<';
    print_term(t.args()[0], os);
    os << ',';
    print_term(t.args()[1], os);
    os << '>';
    return;
  }
  os << op_name(t.op()) << '(';
  for (size_t i = 0; i < t.args().size(); ++i) {
    if (i) os << ',';
    print_term(t.args()[i], os);
  }
  os << ')';
}

}  // namespace

std::string to_string(const Term& t) {
  if (t.null()) return "<null>";
  std::ostringstream os;
  print_term(t, os);
  return os.str();
}

}  // namespace tq

size_t std::hash<tq::Atom>::operator()(const tq::Atom& a) const {
  return tq::hash_of(a);
}
