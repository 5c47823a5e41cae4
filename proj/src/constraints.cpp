#include "constraints.hpp"

#include <algorithm>
#include <map>

namespace tq {

std::string to_string(const Constraint& c) {
  return to_string(c.left) + " ~ " + to_string(c.right);
}

std::string to_string(const ConstraintEntry& e) {
  std::string s = "{";
  for (size_t i = 0; i < e.constraints.size(); ++i) {
    if (i) s += "; ";
    s += to_string(e.constraints[i]);
  }
  s += "} | Gamma = " + to_string(e.env);
  return s;
}

void sort_unique(std::vector<Constraint>& cs) {
  std::sort(cs.begin(), cs.end());
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
}

ConstraintSet ConstraintSet::leaf(std::vector<ConstraintEntry> entries) {
  for (ConstraintEntry& e : entries) sort_unique(e.constraints);
  ConstraintSet s;
  auto n = std::make_shared<Node>();
  n->k = K::Leaf;
  n->entries = std::move(entries);
  s.node_ = std::move(n);
  return s;
}

ConstraintSet ConstraintSet::single(TypeEnv env) {
  ConstraintEntry e;
  e.env = std::move(env);
  return leaf({std::move(e)});
}

ConstraintSet ConstraintSet::sum(ConstraintSet a, ConstraintSet b) {
  ConstraintSet s;
  auto n = std::make_shared<Node>();
  n->k = K::Sum;
  n->kids = {std::move(a), std::move(b)};
  s.node_ = std::move(n);
  return s;
}

ConstraintSet ConstraintSet::product(ConstraintSet a, ConstraintSet b) {
  ConstraintSet s;
  auto n = std::make_shared<Node>();
  n->k = K::Product;
  n->kids = {std::move(a), std::move(b)};
  s.node_ = std::move(n);
  return s;
}

ConstraintSet ConstraintSet::add_all(const std::vector<Constraint>& c) const {
  if (c.empty()) return *this;
  switch (node_->k) {
    case K::Leaf: {
      std::vector<ConstraintEntry> es = node_->entries;
      for (ConstraintEntry& e : es) {
        e.constraints.insert(e.constraints.end(), c.begin(), c.end());
        sort_unique(e.constraints);
      }
      return leaf(std::move(es));
    }
    case K::Sum:
      return sum(node_->kids[0].add_all(c), node_->kids[1].add_all(c));
    case K::Product:
      // adding to one factor adds to every expanded entry
      return product(node_->kids[0].add_all(c), node_->kids[1]);
  }
  return *this;
}

ConstraintSet ConstraintSet::map_entries(
    const std::function<std::vector<ConstraintEntry>(const ConstraintEntry&)>& f) const {
  switch (node_->k) {
    case K::Leaf: {
      std::vector<ConstraintEntry> out;
      for (const ConstraintEntry& e : node_->entries) {
        std::vector<ConstraintEntry> m = f(e);
        out.insert(out.end(), m.begin(), m.end());
      }
      return leaf(std::move(out));
    }
    case K::Sum:
      return sum(node_->kids[0].map_entries(f), node_->kids[1].map_entries(f));
    case K::Product:
      return product(node_->kids[0].map_entries(f), node_->kids[1].map_entries(f));
  }
  return *this;
}

std::vector<ConstraintEntry> union_times(const std::vector<ConstraintEntry>& a,
                                         const std::vector<ConstraintEntry>& b) {
  std::vector<ConstraintEntry> out;
  for (const ConstraintEntry& x : a) {
    for (const ConstraintEntry& y : b) {
      if (!TypeEnv::compatible(x.env, y.env)) continue;
      ConstraintEntry e;
      e.constraints = x.constraints;
      e.constraints.insert(e.constraints.end(), y.constraints.begin(), y.constraints.end());
      sort_unique(e.constraints);
      e.env = TypeEnv::merge(x.env, y.env);
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<ConstraintEntry> union_forall(std::vector<ConstraintEntry> c,
                                          const std::vector<Constraint>& add) {
  for (ConstraintEntry& e : c) {
    e.constraints.insert(e.constraints.end(), add.begin(), add.end());
    sort_unique(e.constraints);
  }
  return c;
}

std::vector<ConstraintEntry> ConstraintSet::entries() const {
  switch (node_->k) {
    case K::Leaf:
      return node_->entries;
    case K::Sum: {
      std::vector<ConstraintEntry> out = node_->kids[0].entries();
      std::vector<ConstraintEntry> b = node_->kids[1].entries();
      out.insert(out.end(), b.begin(), b.end());
      return out;
    }
    case K::Product:
      return union_times(node_->kids[0].entries(), node_->kids[1].entries());
  }
  return {};
}

uint64_t ConstraintSet::entry_count_bound() const {
  switch (node_->k) {
    case K::Leaf:
      return node_->entries.size();
    case K::Sum: {
      uint64_t a = node_->kids[0].entry_count_bound();
      uint64_t b = node_->kids[1].entry_count_bound();
      return a > UINT64_MAX - b ? UINT64_MAX : a + b;
    }
    case K::Product: {
      uint64_t a = node_->kids[0].entry_count_bound();
      uint64_t b = node_->kids[1].entry_count_bound();
      if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
      return a * b;
    }
  }
  return 0;
}

uint64_t ConstraintSet::constraint_count() const {
  switch (node_->k) {
    case K::Leaf: {
      uint64_t n = 0;
      for (const ConstraintEntry& e : node_->entries) n += e.constraints.size();
      return n;
    }
    default: {
      uint64_t n = 0;
      for (const ConstraintSet& k : node_->kids) n += k.constraint_count();
      return n;
    }
  }
}

void ConstraintSet::collect_leaf_entries(std::vector<const ConstraintEntry*>& out) const {
  switch (node_->k) {
    case K::Leaf:
      for (const ConstraintEntry& e : node_->entries) out.push_back(&e);
      return;
    default:
      for (const ConstraintSet& k : node_->kids) k.collect_leaf_entries(out);
      return;
  }
}

bool ConstraintSet::visit_cooccurring_pairs(
    const std::function<bool(const ConstraintEntry&, const ConstraintEntry&)>& f) const {
  switch (node_->k) {
    case K::Leaf:
      for (const ConstraintEntry& e : node_->entries)
        if (!f(e, e)) return false;
      return true;
    case K::Sum:
      return node_->kids[0].visit_cooccurring_pairs(f) &&
             node_->kids[1].visit_cooccurring_pairs(f);
    case K::Product: {
      if (!node_->kids[0].visit_cooccurring_pairs(f)) return false;
      if (!node_->kids[1].visit_cooccurring_pairs(f)) return false;
      std::vector<const ConstraintEntry*> a, b;
      node_->kids[0].collect_leaf_entries(a);
      node_->kids[1].collect_leaf_entries(b);
      for (const ConstraintEntry* x : a)
        for (const ConstraintEntry* y : b)
          if (TypeEnv::compatible(x->env, y->env))
            if (!f(*x, *y)) return false;
      return true;
    }
  }
  return true;
}

bool ConstraintSet::products_compatible() const {
  std::vector<const ConstraintEntry*> all;
  collect_leaf_entries(all);
  std::map<Atom, const Type*> seen;
  for (const ConstraintEntry* e : all) {
    for (const auto& [a, t] : e->env.items()) {
      auto it = seen.find(a);
      if (it == seen.end())
        seen.emplace(a, &t);
      else if (*it->second != t)
        return false;
    }
  }
  return true;
}

ConstraintEntry rename_entry(const ConstraintEntry& e, int i) {
  std::vector<Atom> fams = infinite_families(e.env);
  ConstraintEntry out;
  for (const Constraint& c : e.constraints)
    out.constraints.push_back(
        {rename_session(c.left, i, fams), rename_session(c.right, i, fams)});
  sort_unique(out.constraints);
  out.env = rename_env(e.env, i);
  return out;
}

ConstraintSet rename_constraints(const ConstraintSet& c, int i) {
  return c.map_entries([i](const ConstraintEntry& e) {
    return std::vector<ConstraintEntry>{rename_entry(e, i)};
  });
}

std::vector<ConstraintEntry> expand_entry(const ConstraintEntry& e, int i, int n) {
  std::vector<Atom> fams = infinite_families(e.env);
  std::vector<Constraint> cs;
  for (const Constraint& c : e.constraints)
    cs.push_back({rename_session(c.left, i, fams), rename_session(c.right, i, fams)});
  sort_unique(cs);
  std::vector<ConstraintEntry> out;
  for (TypeEnv& g : branches(expand_env(e.env, i, n))) {
    ConstraintEntry entry;
    entry.constraints = cs;
    entry.env = std::move(g);
    out.push_back(std::move(entry));
  }
  return out;
}

ConstraintSet expand_constraints(const ConstraintSet& c, int i, int n) {
  return c.map_entries(
      [i, n](const ConstraintEntry& e) { return expand_entry(e, i, n); });
}

AttackerKnowledge attacker_knowledge(const TypeEnv& env) {
  AttackerKnowledge k;
  for (const auto& [a, t] : env.items()) {
    if (a.kind == AtomKind::BoundNonce) k.restricted.push_back(a);
  }
  for (const auto& [a, t] : env.items()) {
    if (a.kind == AtomKind::Key && t.kind() == TypeKind::Key && t.lab() == Label::LL)
      k.terms.push_back(Term::atom(a));
  }
  for (const auto& [a, t] : env.items()) {
    if (a.kind == AtomKind::Key) {
      k.terms.push_back(Term::pk(Term::atom(a)));
      k.terms.push_back(Term::vk(Term::atom(a)));
    }
  }
  for (const auto& [a, t] : env.items()) {
    if (a.kind == AtomKind::BoundNonce && t.kind() == TypeKind::Refine &&
        t.is_nonce_type() && t.ref_left().label == Label::LL)
      k.terms.push_back(Term::atom(a));
  }
  return k;
}

}  // namespace tq
