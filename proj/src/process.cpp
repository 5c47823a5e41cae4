#include "process.hpp"

#include <cassert>
#include <functional>
#include <sstream>

namespace tq {

std::string to_string(const BiTerm& t) {
  if (t.same()) return to_string(t.left);
  return "choice[" + to_string(t.left) + "," + to_string(t.right) + "]";
}

std::string to_string(const DestructorApp& d) {
  std::string s = op_name(d.op);
  s += "(";
  s += to_string(d.arg);
  if (d.op == Op::Dec || d.op == Op::Adec) {
    s += "," + to_string(d.key);
  } else if (d.op == Op::Check) {
    s += ",vk(" + to_string(d.key) + ")";
  }
  s += ")";
  return s;
}

Proc Proc::zero() {
  Proc p;
  auto n = std::make_shared<Node>();
  n->kind = ProcKind::Zero;
  p.node_ = std::move(n);
  return p;
}

Proc Proc::make_new(Atom nonce, NonceAnnotation ann, Proc cont) {
  Proc p;
  auto n = std::make_shared<Node>();
  n->kind = ProcKind::New;
  n->binder = std::move(nonce);
  n->ann = ann;
  n->sub = {std::move(cont)};
  p.node_ = std::move(n);
  return p;
}

Proc Proc::out(BiTerm payload, Proc cont) {
  Proc p;
  auto n = std::make_shared<Node>();
  n->kind = ProcKind::Out;
  n->terms = {std::move(payload)};
  n->sub = {std::move(cont)};
  p.node_ = std::move(n);
  return p;
}

Proc Proc::in(Atom var, Proc cont) {
  Proc p;
  auto n = std::make_shared<Node>();
  n->kind = ProcKind::In;
  n->binder = std::move(var);
  n->sub = {std::move(cont)};
  p.node_ = std::move(n);
  return p;
}

Proc Proc::par(Proc a, Proc b) {
  Proc p;
  auto n = std::make_shared<Node>();
  n->kind = ProcKind::Par;
  n->sub = {std::move(a), std::move(b)};
  p.node_ = std::move(n);
  return p;
}

Proc Proc::let(Atom var, DestructorApp d, Proc then_p, Proc else_p) {
  Proc p;
  auto n = std::make_shared<Node>();
  n->kind = ProcKind::Let;
  n->binder = std::move(var);
  n->dapp = std::move(d);
  n->sub = {std::move(then_p), std::move(else_p)};
  p.node_ = std::move(n);
  return p;
}

Proc Proc::ifeq(BiTerm a, BiTerm b, Proc then_p, Proc else_p) {
  Proc p;
  auto n = std::make_shared<Node>();
  n->kind = ProcKind::IfEq;
  n->terms = {std::move(a), std::move(b)};
  n->sub = {std::move(then_p), std::move(else_p)};
  p.node_ = std::move(n);
  return p;
}

Proc Proc::repl(Proc body) {
  Proc p;
  auto n = std::make_shared<Node>();
  n->kind = ProcKind::Repl;
  n->sub = {std::move(body)};
  p.node_ = std::move(n);
  return p;
}

bool Proc::operator==(const Proc& o) const {
  if (node_ == o.node_) return true;
  if (!node_ || !o.node_) return false;
  if (node_->kind != o.node_->kind) return false;
  switch (node_->kind) {
    case ProcKind::Zero:
      return true;
    case ProcKind::New:
      if (!(node_->binder == o.node_->binder) || !(node_->ann == o.node_->ann))
        return false;
      break;
    case ProcKind::In:
      if (!(node_->binder == o.node_->binder)) return false;
      break;
    case ProcKind::Out:
      if (!(node_->terms[0] == o.node_->terms[0])) return false;
      break;
    case ProcKind::IfEq:
      if (!(node_->terms[0] == o.node_->terms[0]) ||
          !(node_->terms[1] == o.node_->terms[1]))
        return false;
      break;
    case ProcKind::Let:
      if (!(node_->binder == o.node_->binder) || !(node_->dapp == o.node_->dapp))
        return false;
      break;
    case ProcKind::Par:
    case ProcKind::Repl:
      break;
  }
  for (size_t i = 0; i < node_->sub.size(); ++i)
    if (!(node_->sub[i] == o.node_->sub[i])) return false;
  return true;
}

namespace {

std::string ann_string(const NonceAnnotation& a) {
  std::string s = to_string(a.label);
  s += "^";
  s += a.mult == Mult::One ? "1" : "inf";
  return s;
}

void print_proc(const Proc& p, std::ostringstream& os, int indent) {
  auto pad = [&] { for (int i = 0; i < indent; ++i) os << "  "; };
  pad();
  switch (p.kind()) {
    case ProcKind::Zero:
      os << "0";
      return;
    case ProcKind::New:
      os << "new " << to_string(p.binder()) << " : " << ann_string(p.ann()) << " .\n";
      print_proc(p.first(), os, indent);
      return;
    case ProcKind::Out:
      os << "out(" << to_string(p.payload()) << ") .\n";
      print_proc(p.first(), os, indent);
      return;
    case ProcKind::In:
      os << "in(" << to_string(p.binder()) << ") .\n";
      print_proc(p.first(), os, indent);
      return;
    case ProcKind::Par:
      os << "(\n";
      print_proc(p.first(), os, indent + 1);
      os << "\n";
      pad();
      os << "|\n";
      print_proc(p.second(), os, indent + 1);
      os << "\n";
      pad();
      os << ")";
      return;
    case ProcKind::Let:
      os << "let " << to_string(p.binder()) << " = " << to_string(p.dapp()) << " in\n";
      print_proc(p.first(), os, indent + 1);
      os << "\n";
      pad();
      os << "else\n";
      print_proc(p.second(), os, indent + 1);
      return;
    case ProcKind::IfEq:
      os << "if " << to_string(p.lhs()) << " = " << to_string(p.rhs()) << " then\n";
      print_proc(p.first(), os, indent + 1);
      os << "\n";
      pad();
      os << "else\n";
      print_proc(p.second(), os, indent + 1);
      return;
    case ProcKind::Repl:
      os << "!(\n";
      print_proc(p.first(), os, indent + 1);
      os << "\n";
      pad();
      os << ")";
      return;
  }
}

}  // namespace

std::string to_string(const Proc& p) {
  if (p.null()) return "<null>";
  std::ostringstream os;
  print_proc(p, os, 0);
  return os.str();
}

namespace {

Proc erase(const Proc& p, bool left) {
  auto side = [&](const BiTerm& b) { return BiTerm(left ? b.left : b.right); };
  switch (p.kind()) {
    case ProcKind::Zero:
      return Proc::zero();
    case ProcKind::New:
      return Proc::make_new(p.binder(), p.ann(), erase(p.first(), left));
    case ProcKind::Out:
      return Proc::out(side(p.payload()), erase(p.first(), left));
    case ProcKind::In:
      return Proc::in(p.binder(), erase(p.first(), left));
    case ProcKind::Par:
      return Proc::par(erase(p.first(), left), erase(p.second(), left));
    case ProcKind::Let:
      return Proc::let(p.binder(), p.dapp(), erase(p.first(), left), erase(p.second(), left));
    case ProcKind::IfEq:
      return Proc::ifeq(side(p.lhs()), side(p.rhs()), erase(p.first(), left),
                        erase(p.second(), left));
    case ProcKind::Repl:
      return Proc::repl(erase(p.first(), left));
  }
  return Proc::zero();
}

const char* kind_name(ProcKind k) {
  switch (k) {
    case ProcKind::Zero: return "0";
    case ProcKind::New: return "new";
    case ProcKind::Out: return "out";
    case ProcKind::In: return "in";
    case ProcKind::Par: return "|";
    case ProcKind::Let: return "let";
    case ProcKind::IfEq: return "if";
    case ProcKind::Repl: return "!";
  }
  return "?";
}

// Positional binder alignment: maps the right process's binders onto the
// left process's atoms while zipping.
std::variant<Proc, ShapeMismatch> zip(const Proc& l, const Proc& r,
                                      std::map<Atom, Atom>& ren,
                                      const std::string& path) {
  auto fail = [&](const std::string& msg) {
    return ShapeMismatch{path.empty() ? msg : path + ": " + msg};
  };
  if (l.kind() != r.kind())
    return fail(std::string("head constructors differ (") + kind_name(l.kind()) + " vs " +
                kind_name(r.kind()) + ")");
  auto ralign = [&](const Term& t) { return rename_atoms(t, ren); };
  switch (l.kind()) {
    case ProcKind::Zero:
      return Proc::zero();
    case ProcKind::New: {
      if (!(l.ann() == r.ann())) return fail("nonce annotations differ");
      if (!(l.binder() == r.binder())) ren[r.binder()] = l.binder();
      auto sub = zip(l.first(), r.first(), ren, path + "/new");
      if (auto* m = std::get_if<ShapeMismatch>(&sub)) return *m;
      return Proc::make_new(l.binder(), l.ann(), std::get<Proc>(sub));
    }
    case ProcKind::In: {
      if (!(l.binder() == r.binder())) ren[r.binder()] = l.binder();
      auto sub = zip(l.first(), r.first(), ren, path + "/in");
      if (auto* m = std::get_if<ShapeMismatch>(&sub)) return *m;
      return Proc::in(l.binder(), std::get<Proc>(sub));
    }
    case ProcKind::Out: {
      auto sub = zip(l.first(), r.first(), ren, path + "/out");
      if (auto* m = std::get_if<ShapeMismatch>(&sub)) return *m;
      return Proc::out(BiTerm(l.payload().left, ralign(r.payload().right)),
                       std::get<Proc>(sub));
    }
    case ProcKind::Par: {
      auto a = zip(l.first(), r.first(), ren, path + "/par.1");
      if (auto* m = std::get_if<ShapeMismatch>(&a)) return *m;
      auto b = zip(l.second(), r.second(), ren, path + "/par.2");
      if (auto* m = std::get_if<ShapeMismatch>(&b)) return *m;
      return Proc::par(std::get<Proc>(a), std::get<Proc>(b));
    }
    case ProcKind::Let: {
      DestructorApp rd = r.dapp();
      auto it = ren.find(rd.arg);
      if (it != ren.end()) rd.arg = it->second;
      DestructorApp ld = l.dapp();
      if (!(ld == rd)) return fail("destructor applications differ");
      if (!(l.binder() == r.binder())) ren[r.binder()] = l.binder();
      auto a = zip(l.first(), r.first(), ren, path + "/let.then");
      if (auto* m = std::get_if<ShapeMismatch>(&a)) return *m;
      auto b = zip(l.second(), r.second(), ren, path + "/let.else");
      if (auto* m = std::get_if<ShapeMismatch>(&b)) return *m;
      return Proc::let(l.binder(), ld, std::get<Proc>(a), std::get<Proc>(b));
    }
    case ProcKind::IfEq: {
      auto a = zip(l.first(), r.first(), ren, path + "/if.then");
      if (auto* m = std::get_if<ShapeMismatch>(&a)) return *m;
      auto b = zip(l.second(), r.second(), ren, path + "/if.else");
      if (auto* m = std::get_if<ShapeMismatch>(&b)) return *m;
      return Proc::ifeq(BiTerm(l.lhs().left, ralign(r.lhs().right)),
                        BiTerm(l.rhs().left, ralign(r.rhs().right)), std::get<Proc>(a),
                        std::get<Proc>(b));
    }
    case ProcKind::Repl: {
      auto sub = zip(l.first(), r.first(), ren, path + "/!");
      if (auto* m = std::get_if<ShapeMismatch>(&sub)) return *m;
      return Proc::repl(std::get<Proc>(sub));
    }
  }
  return fail("unreachable");
}

}  // namespace

Proc erase_left(const Proc& p) { return erase(p, true); }
Proc erase_right(const Proc& p) { return erase(p, false); }

std::variant<Proc, ShapeMismatch> pair_processes(const Proc& left, const Proc& right) {
  std::map<Atom, Atom> ren;
  return zip(left, right, ren, "");
}

Proc rename_session(const Proc& p, int i, const TypeEnv& env) {
  std::vector<Atom> families = infinite_families(env);
  // Collect the infinite binders of p as additional families.
  std::vector<std::pair<Atom, NonceAnnotation>> binders;
  bound_nonces(p, binders);
  for (const auto& [a, ann] : binders)
    if (ann.mult == Mult::Many) families.push_back(a);

  std::function<Proc(const Proc&)> go = [&](const Proc& q) -> Proc {
    auto rt = [&](const BiTerm& b) {
      return BiTerm(rename_session(b.left, i, families),
                    rename_session(b.right, i, families));
    };
    auto ri = [&](Atom a) {
      a.session = i;
      return a;
    };
    switch (q.kind()) {
      case ProcKind::Zero:
        return Proc::zero();
      case ProcKind::New: {
        Atom b = q.binder();
        NonceAnnotation ann = q.ann();
        if (ann.mult == Mult::Many) {
          b.session = i;
          ann.mult = Mult::One;
        }
        return Proc::make_new(b, ann, go(q.first()));
      }
      case ProcKind::Out:
        return Proc::out(rt(q.payload()), go(q.first()));
      case ProcKind::In:
        return Proc::in(ri(q.binder()), go(q.first()));
      case ProcKind::Par:
        return Proc::par(go(q.first()), go(q.second()));
      case ProcKind::Let: {
        DestructorApp d = q.dapp();
        d.arg = ri(d.arg);
        return Proc::let(ri(q.binder()), d, go(q.first()), go(q.second()));
      }
      case ProcKind::IfEq:
        return Proc::ifeq(rt(q.lhs()), rt(q.rhs()), go(q.first()), go(q.second()));
      case ProcKind::Repl:
        return Proc::repl(go(q.first()));
    }
    return Proc::zero();
  };
  return go(p);
}

bool contains_repl(const Proc& p) {
  if (p.null()) return false;
  if (p.kind() == ProcKind::Repl) return true;
  switch (p.kind()) {
    case ProcKind::Zero:
      return false;
    case ProcKind::Par:
    case ProcKind::Let:
    case ProcKind::IfEq:
      return contains_repl(p.first()) || contains_repl(p.second());
    default:
      return contains_repl(p.first());
  }
}

void bound_vars(const Proc& p, std::vector<Atom>& out) {
  if (p.null()) return;
  switch (p.kind()) {
    case ProcKind::Zero:
      return;
    case ProcKind::In:
    case ProcKind::Let:
      out.push_back(p.binder());
      break;
    default:
      break;
  }
  switch (p.kind()) {
    case ProcKind::Zero:
      return;
    case ProcKind::Par:
    case ProcKind::Let:
    case ProcKind::IfEq:
      bound_vars(p.first(), out);
      bound_vars(p.second(), out);
      return;
    default:
      bound_vars(p.first(), out);
      return;
  }
}

void bound_nonces(const Proc& p, std::vector<std::pair<Atom, NonceAnnotation>>& out) {
  if (p.null()) return;
  switch (p.kind()) {
    case ProcKind::Zero:
      return;
    case ProcKind::New:
      out.emplace_back(p.binder(), p.ann());
      bound_nonces(p.first(), out);
      return;
    case ProcKind::Par:
    case ProcKind::Let:
    case ProcKind::IfEq:
      bound_nonces(p.first(), out);
      bound_nonces(p.second(), out);
      return;
    default:
      bound_nonces(p.first(), out);
      return;
  }
}

std::variant<SplitReplication, UnsupportedShape> split_replication(const Proc& p) {
  SplitReplication res;
  Proc cur = p;
  while (!cur.null() && cur.kind() == ProcKind::New) {
    res.shared_nonces.emplace_back(cur.binder(), cur.ann());
    cur = cur.first();
  }
  // Flatten the top-level parallel composition.
  std::vector<Proc> comps;
  std::function<void(const Proc&)> flat = [&](const Proc& q) {
    if (q.kind() == ProcKind::Par) {
      flat(q.first());
      flat(q.second());
    } else {
      comps.push_back(q);
    }
  };
  flat(cur);

  std::vector<Proc> repl, seq;
  for (const Proc& c : comps) {
    if (c.kind() == ProcKind::Repl)
      repl.push_back(c.first());
    else
      seq.push_back(c);
  }
  if (repl.empty())
    return UnsupportedShape{"no replicated component under the top-level restrictions"};
  if (repl.size() > 1)
    return UnsupportedShape{"more than one replicated component"};
  res.replicated = repl[0];
  if (seq.empty()) {
    res.sequential = Proc::zero();
  } else {
    Proc acc = seq.back();
    for (size_t i = seq.size() - 1; i-- > 0;) acc = Proc::par(seq[i], acc);
    res.sequential = acc;
  }

  if (contains_repl(res.replicated))
    return UnsupportedShape{"nested replication in the replicated component"};
  if (contains_repl(res.sequential))
    return UnsupportedShape{"replication outside the single !P component"};

  std::vector<std::pair<Atom, NonceAnnotation>> ns;
  bound_nonces(res.replicated, ns);
  for (const auto& [a, ann] : ns) {
    if (ann.mult != Mult::Many)
      return UnsupportedShape{"replicated component binds the finite nonce " + to_string(a)};
  }
  ns.clear();
  bound_nonces(res.sequential, ns);
  for (const auto& [a, ann] : ns) {
    if (ann.mult != Mult::One)
      return UnsupportedShape{"sequential component binds the infinite nonce " + to_string(a)};
  }
  for (const auto& [a, ann] : res.shared_nonces) {
    if (ann.mult != Mult::One)
      return UnsupportedShape{"shared restriction " + to_string(a) + " has an infinite type"};
  }

  std::vector<Atom> v1, v2;
  bound_vars(res.replicated, v1);
  bound_vars(res.sequential, v2);
  for (const Atom& a : v1)
    for (const Atom& b : v2)
      if (a == b) return UnsupportedShape{"components share the variable " + to_string(a)};
  return res;
}

}  // namespace tq
