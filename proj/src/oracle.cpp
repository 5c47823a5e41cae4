#include "oracle.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <chrono>
#include <cstdio>
#include <atomic>
#include <thread>
#include <cstdlib>

namespace tq {

namespace {

// Exact structural interning: equal terms get equal ids, distinct terms
// distinct ids. State keys and value vectors are built from ids instead of
// printed terms.
struct TermInterner {
  std::unordered_map<Term, int> ids;
  int id(const Term& t) {
    auto [it, fresh] = ids.try_emplace(t, static_cast<int>(ids.size()) + 1);
    return it->second;
  }
  int id(const std::optional<Term>& t) { return t ? id(*t) : 0; }
};

void append_int(std::string& out, int v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}

void proc_key_fast(const Proc& p, TermInterner& in, std::string& out) {
  out.push_back(static_cast<char>(static_cast<int>(p.kind()) + 1));
  switch (p.kind()) {
    case ProcKind::Zero:
      return;
    case ProcKind::New:
      out += to_string(p.binder());
      out.push_back(static_cast<char>(static_cast<int>(p.ann().label) + 1));
      out.push_back(p.ann().mult == Mult::One ? 1 : 2);
      break;
    case ProcKind::Out:
      append_int(out, in.id(p.payload().left));
      break;
    case ProcKind::In:
      out += to_string(p.binder());
      break;
    case ProcKind::Let:
      out += to_string(p.binder());
      out += to_string(p.dapp());
      break;
    case ProcKind::IfEq:
      append_int(out, in.id(p.lhs().left));
      append_int(out, in.id(p.rhs().left));
      break;
    default:
      break;
  }
  proc_key_fast(p.first(), in, out);
  if (p.kind() == ProcKind::Par || p.kind() == ProcKind::Let || p.kind() == ProcKind::IfEq)
    proc_key_fast(p.second(), in, out);
}

std::string config_key(const Configuration& c, TermInterner& in) {
  std::vector<std::string> procs;
  for (const auto& [p, budget] : c.active) {
    std::string ps;
    append_int(ps, budget);
    proc_key_fast(p, in, ps);
    procs.push_back(std::move(ps));
  }
  std::sort(procs.begin(), procs.end());
  std::string out;
  for (std::string& s : procs) {
    out += s;
    out.push_back('\x01');
  }
  out.push_back('F');
  for (const Term& t : c.frame) append_int(out, in.id(t));
  out.push_back('S');
  for (const auto& [a, t] : c.store) {
    out += to_string(a);
    append_int(out, in.id(t));
  }
  return out;
}

struct SearchCtx {
  TermInterner terms;
  std::unordered_map<std::string, std::vector<Configuration>> closure_memo;
  std::unordered_map<std::string, std::unordered_map<Term, std::optional<Term>>> eval_memo;

  std::string frame_key(const std::vector<Term>& f) {
    std::string k;
    for (const Term& t : f) append_int(k, terms.id(t));
    return k;
  }
};

void live_vars(const Proc& p, std::vector<Atom>& out) {
  switch (p.kind()) {
    case ProcKind::Zero:
      return;
    case ProcKind::Out:
      for (const Atom& a : term_vars(p.payload().left)) out.push_back(a);
      live_vars(p.first(), out);
      return;
    case ProcKind::IfEq:
      for (const Atom& a : term_vars(p.lhs().left)) out.push_back(a);
      for (const Atom& a : term_vars(p.rhs().left)) out.push_back(a);
      live_vars(p.first(), out);
      live_vars(p.second(), out);
      return;
    case ProcKind::Let:
      out.push_back(p.dapp().arg);
      live_vars(p.first(), out);
      live_vars(p.second(), out);
      return;
    case ProcKind::Par:
      live_vars(p.first(), out);
      live_vars(p.second(), out);
      return;
    default:
      live_vars(p.first(), out);
      return;
  }
}

// Store entries no remaining process mentions can never be observed again;
// dropping them merges junk-input states.
void gc_store(Configuration& c) {
  if (c.store.empty()) return;
  std::vector<Atom> live;
  for (const auto& [p, budget] : c.active) live_vars(p, live);
  for (auto it = c.store.begin(); it != c.store.end();) {
    bool used = false;
    for (const Atom& a : live) used = used || a == it->first;
    if (used)
      ++it;
    else
      it = c.store.erase(it);
  }
}

// Unfolding a replication copies the body with fresh (indexed) binders.
// All bound names are pairwise distinct in the source, so one flat
// renaming map suffices.
Proc freshen_copy(const Proc& p, int idx) {
  std::map<Atom, Atom> ren;
  std::function<Proc(const Proc&)> go = [&](const Proc& q) -> Proc {
    auto rt = [&](const BiTerm& b) {
      return BiTerm(rename_atoms(b.left, ren), rename_atoms(b.right, ren));
    };
    auto rebind = [&](const Atom& a) {
      Atom b = a;
      b.session = idx;
      ren[a] = b;
      return b;
    };
    switch (q.kind()) {
      case ProcKind::Zero:
        return Proc::zero();
      case ProcKind::New: {
        Atom b = rebind(q.binder());
        return Proc::make_new(b, q.ann(), go(q.first()));
      }
      case ProcKind::Out:
        return Proc::out(rt(q.payload()), go(q.first()));
      case ProcKind::In: {
        Atom b = rebind(q.binder());
        return Proc::in(b, go(q.first()));
      }
      case ProcKind::Par:
        return Proc::par(go(q.first()), go(q.second()));
      case ProcKind::Let: {
        DestructorApp d = q.dapp();
        auto it = ren.find(d.arg);
        if (it != ren.end()) d.arg = it->second;
        Atom b = rebind(q.binder());
        return Proc::let(b, d, go(q.first()), go(q.second()));
      }
      case ProcKind::IfEq:
        return Proc::ifeq(rt(q.lhs()), rt(q.rhs()), go(q.first()), go(q.second()));
      case ProcKind::Repl:
        return Proc::repl(go(q.first()));
    }
    return q;
  };
  return go(p);
}

std::vector<Configuration> tau_closure_impl(const Configuration& c, SearchCtx& ctx,
                                            int max_states) {
  std::vector<Configuration> out;
  std::unordered_set<std::string> seen;
  std::deque<Configuration> work;
  work.push_back(c);
  seen.insert(config_key(c, ctx.terms));
  while (!work.empty() && static_cast<int>(out.size()) < max_states) {
    Configuration cur = work.front();
    work.pop_front();
    out.push_back(cur);
    for (size_t i = 0; i < cur.active.size(); ++i) {
      const auto& [p, budget] = cur.active[i];
      auto push = [&](Configuration next) {
        gc_store(next);
        if (seen.insert(config_key(next, ctx.terms)).second)
          work.push_back(std::move(next));
      };
      switch (p.kind()) {
        case ProcKind::Zero: {
          Configuration next = cur;
          next.active.erase(next.active.begin() + i);
          push(std::move(next));
          break;
        }
        case ProcKind::Par: {
          Configuration next = cur;
          Proc a = p.first(), b = p.second();
          int bud = budget;
          next.active.erase(next.active.begin() + i);
          next.active.push_back({a, bud});
          next.active.push_back({b, bud});
          push(std::move(next));
          break;
        }
        case ProcKind::New: {
          Configuration next = cur;
          Proc cont = p.first();
          Atom n = p.binder();
          int bud = budget;
          next.active.erase(next.active.begin() + i);
          next.private_names.push_back(n);
          next.active.push_back({cont, bud});
          push(std::move(next));
          break;
        }
        case ProcKind::Let: {
          const DestructorApp& d = p.dapp();
          Term arg = tq::apply(cur.store, Term::atom(d.arg));
          if (!is_ground(arg)) break;  // ill-scoped: stuck
          Term call;
          if (d.op == Op::Check)
            call = Term::make(Op::Check, {arg, Term::vk(Term::atom(d.key))});
          else if (d.op == Op::Dec || d.op == Op::Adec)
            call = Term::make(d.op, {arg, Term::atom(d.key)});
          else
            call = Term::make(d.op, {arg});
          auto v = evaluate(call);
          Configuration next = cur;
          Proc cont = v ? p.first() : p.second();
          Atom binder = p.binder();
          int bud = budget;
          next.active.erase(next.active.begin() + i);
          if (v) next.store[binder] = *v;
          next.active.push_back({cont, bud});
          push(std::move(next));
          break;
        }
        case ProcKind::IfEq: {
          Term a = tq::apply(cur.store, p.lhs().left);
          Term b = tq::apply(cur.store, p.rhs().left);
          if (!is_ground(a) || !is_ground(b)) break;
          Configuration next = cur;
          Proc cont = a == b ? p.first() : p.second();
          int bud = budget;
          next.active.erase(next.active.begin() + i);
          next.active.push_back({cont, bud});
          push(std::move(next));
          break;
        }
        case ProcKind::Repl: {
          if (budget <= 0) break;
          Configuration next = cur;
          Proc body = p.first();
          Proc whole = cur.active[i].first;
          int bud = budget;
          next.active.erase(next.active.begin() + i);
          next.unfold_count += 1;
          Proc copy = freshen_copy(body, next.unfold_count);
          next.active.push_back({copy, bud});
          next.active.push_back({whole, bud - 1});
          push(std::move(next));
          break;
        }
        default:
          break;
      }
    }
  }
  return out;
}

// All tau steps are local to one active process and the store is
// write-once per variable, so tau reduction is confluent: reducing to the
// normal form preserves every reachable frame and visible action. The
// search explores normal forms only, which merges states that differ in
// data the processes discard.
Configuration tau_normalize(const Configuration& c, SearchCtx& ctx) {
  Configuration cur = c;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < cur.active.size() && !changed; ++i) {
      const auto& [p, budget] = cur.active[i];
      switch (p.kind()) {
        case ProcKind::Zero: {
          cur.active.erase(cur.active.begin() + i);
          changed = true;
          break;
        }
        case ProcKind::Par: {
          Proc a = p.first(), b = p.second();
          int bud = budget;
          cur.active.erase(cur.active.begin() + i);
          cur.active.push_back({a, bud});
          cur.active.push_back({b, bud});
          changed = true;
          break;
        }
        case ProcKind::New: {
          Proc cont = p.first();
          Atom n = p.binder();
          int bud = budget;
          cur.active.erase(cur.active.begin() + i);
          cur.private_names.push_back(n);
          cur.active.push_back({cont, bud});
          changed = true;
          break;
        }
        case ProcKind::Let: {
          const DestructorApp& d = p.dapp();
          Term arg = tq::apply(cur.store, Term::atom(d.arg));
          if (!is_ground(arg)) break;
          Term call;
          if (d.op == Op::Check)
            call = Term::make(Op::Check, {arg, Term::vk(Term::atom(d.key))});
          else if (d.op == Op::Dec || d.op == Op::Adec)
            call = Term::make(d.op, {arg, Term::atom(d.key)});
          else
            call = Term::make(d.op, {arg});
          auto v = evaluate(call);
          Proc cont = v ? p.first() : p.second();
          Atom binder = p.binder();
          int bud = budget;
          cur.active.erase(cur.active.begin() + i);
          if (v) cur.store[binder] = *v;
          cur.active.push_back({cont, bud});
          changed = true;
          break;
        }
        case ProcKind::IfEq: {
          Term a = tq::apply(cur.store, p.lhs().left);
          Term b = tq::apply(cur.store, p.rhs().left);
          if (!is_ground(a) || !is_ground(b)) break;
          Proc cont = a == b ? p.first() : p.second();
          int bud = budget;
          cur.active.erase(cur.active.begin() + i);
          cur.active.push_back({cont, bud});
          changed = true;
          break;
        }
        case ProcKind::Repl: {
          if (budget <= 0) break;
          Proc body = p.first();
          Proc whole = p;
          int bud = budget;
          cur.active.erase(cur.active.begin() + i);
          cur.unfold_count += 1;
          Proc copy = freshen_copy(body, cur.unfold_count);
          cur.active.push_back({copy, bud});
          cur.active.push_back({whole, bud - 1});
          changed = true;
          break;
        }
        default:
          break;
      }
    }
  }
  gc_store(cur);
  (void)ctx;
  return cur;
}

std::vector<Configuration> tau_closure_memo(const Configuration& c, SearchCtx& ctx) {
  std::string k = config_key(c, ctx.terms);
  auto it = ctx.closure_memo.find(k);
  if (it != ctx.closure_memo.end()) return it->second;
  std::vector<Configuration> r = tau_closure_impl(c, ctx, 100000);
  ctx.closure_memo.emplace(std::move(k), r);
  return r;
}

}  // namespace

std::string Configuration::key() const {
  std::ostringstream os;
  std::vector<std::string> procs;
  for (const auto& [p, budget] : active)
    procs.push_back(std::to_string(budget) + ":" + to_string(p));
  std::sort(procs.begin(), procs.end());
  for (const std::string& s : procs) os << s << '|';
  os << 'F';
  for (const Term& t : frame) os << to_string(t) << ';';
  os << 'S';
  for (const auto& [a, t] : store) os << to_string(a) << '=' << to_string(t) << ';';
  return os.str();
}

std::string to_string(const Action& a) {
  if (a.is_input) return "in(" + to_string(a.recipe) + ")";
  return "out(ax" + std::to_string(a.out_ordinal) + ")";
}

std::vector<Configuration> tau_closure(const Configuration& c, int max_states) {
  SearchCtx ctx;
  return tau_closure_impl(c, ctx, max_states);
}

std::vector<std::pair<Action, Configuration>> visible_steps(const Configuration& c,
                                                            const OracleBounds& b) {
  std::vector<std::pair<Action, Configuration>> out;
  for (size_t i = 0; i < c.active.size(); ++i) {
    const auto& [p, budget] = c.active[i];
    if (p.kind() == ProcKind::Out) {
      Term t = tq::apply(c.store, p.payload().left);
      if (!is_ground(t)) continue;
      Configuration next = c;
      next.active.erase(next.active.begin() + i);
      next.active.push_back({p.first(), budget});
      next.frame.push_back(t);
      gc_store(next);
      Action a;
      a.is_input = false;
      a.out_ordinal = static_cast<int>(next.frame.size());
      out.push_back({a, std::move(next)});
    }
    // Inputs are expanded by the caller, which owns the recipe pool.
  }
  return out;
}

namespace {


// One evaluation step on already-evaluated arguments (messages or bot).
std::optional<Term> eval_step(Op op, const std::optional<Term>& a,
                              const std::optional<Term>& b) {
  auto is_key = [](const std::optional<Term>& u) {
    return u && u->is_atom(AtomKind::Key);
  };
  switch (op) {
    case Op::Pk:
    case Op::Vk:
      if (is_key(a)) return Term::make(op, {*a});
      return std::nullopt;
    case Op::Hash:
      if (a) return Term::hash(*a);
      return std::nullopt;
    case Op::Pair:
      if (a && b) return Term::pair(*a, *b);
      return std::nullopt;
    case Op::Enc:
    case Op::Sign:
      if (a && is_key(b)) return Term::make(op, {*a, *b});
      return std::nullopt;
    case Op::Aenc:
      if (a && b && b->op() == Op::Pk && b->args()[0].is_atom(AtomKind::Key))
        return Term::aenc(*a, *b);
      return std::nullopt;
    case Op::Fst:
      if (a && !a->is_atom() && a->op() == Op::Pair) return a->args()[0];
      return std::nullopt;
    case Op::Snd:
      if (a && !a->is_atom() && a->op() == Op::Pair) return a->args()[1];
      return std::nullopt;
    case Op::Dec:
      if (a && b && !a->is_atom() && a->op() == Op::Enc && a->args()[1] == *b)
        return a->args()[0];
      return std::nullopt;
    case Op::Adec:
      if (a && b && !a->is_atom() && a->op() == Op::Aenc && a->args()[1].op() == Op::Pk &&
          a->args()[1].args()[0] == *b)
        return a->args()[0];
      return std::nullopt;
    case Op::Check:
      if (a && b && !a->is_atom() && a->op() == Op::Sign && !b->is_atom() &&
          b->op() == Op::Vk && b->args()[0] == a->args()[1])
        return a->args()[0];
      return std::nullopt;
    case Op::Leaf:
      return std::nullopt;
  }
  return std::nullopt;
}

// evaluate a recipe against a ground frame
std::optional<Term> eval_recipe(const Term& recipe, const std::vector<Term>& frame) {
  Substitution s;
  for (size_t i = 0; i < frame.size(); ++i) s[frame_var(static_cast<int>(i) + 1)] = frame[i];
  Term t = tq::apply(s, recipe);
  // unresolved frame variables make the recipe invalid
  for (const Atom& v : term_vars(t))
    if (v.kind == AtomKind::FrameVar) return std::nullopt;
  return evaluate(t);
}

struct RecipeValue {
  Term recipe;
  std::optional<Term> v1;  // value on the left frame
  std::optional<Term> v2;  // value on the right frame (when used pairwise)
};

// Bottom-up recipe/value enumeration over one or two frames, deduplicated
// by value vector (exact: interned ids). Values are computed incrementally
// from the arguments' values, one table step per candidate.
std::vector<RecipeValue> enumerate_recipes(const std::vector<Term>& f1,
                                           const std::vector<Term>* f2,
                                           const OracleBounds& b, TermInterner& in) {
  std::vector<RecipeValue> reps;
  std::unordered_set<uint64_t> seen;
  auto add = [&](Term recipe, std::optional<Term> v1, std::optional<Term> v2) {
    uint64_t k = (static_cast<uint64_t>(in.id(v1)) << 32) |
                 static_cast<uint32_t>(f2 ? in.id(v2) : 0);
    if (!seen.insert(k).second) return;
    RecipeValue rv;
    rv.recipe = std::move(recipe);
    rv.v1 = std::move(v1);
    rv.v2 = std::move(v2);
    reps.push_back(std::move(rv));
  };
  for (size_t i = 0; i < f1.size(); ++i)
    add(Term::atom(frame_var(i + 1)), f1[i], f2 ? std::optional<Term>((*f2)[i]) : std::nullopt);
  for (const Atom& a : b.free_nonces)
    add(Term::atom(a), Term::atom(a), f2 ? std::optional<Term>(Term::atom(a)) : std::nullopt);
  for (const Atom& a : b.constants)
    add(Term::atom(a), Term::atom(a), f2 ? std::optional<Term>(Term::atom(a)) : std::nullopt);

  size_t prev_end = 0;
  for (int d = 2; d <= b.recipe_depth; ++d) {
    size_t level_end = reps.size();
    for (Op op : {Op::Pk, Op::Vk, Op::Hash, Op::Fst, Op::Snd}) {
      for (size_t i = 0; i < level_end; ++i) {
        const RecipeValue& a = reps[i];
        std::optional<Term> v1 = eval_step(op, a.v1, std::nullopt);
        std::optional<Term> v2 = f2 ? eval_step(op, a.v2, std::nullopt) : std::nullopt;
        if (!v1 && (!f2 || !v2)) continue;
        add(Term::make(op, {a.recipe}), std::move(v1), std::move(v2));
      }
    }
    for (Op op : {Op::Pair, Op::Enc, Op::Aenc, Op::Sign, Op::Dec, Op::Adec, Op::Check}) {
      for (size_t i = 0; i < level_end; ++i) {
        for (size_t j = 0; j < level_end; ++j) {
          if (i < prev_end && j < prev_end) continue;  // both args from older levels
          const RecipeValue& a = reps[i];
          const RecipeValue& x = reps[j];
          std::optional<Term> v1 =
              a.v1 && x.v1 ? eval_step(op, a.v1, x.v1) : std::nullopt;
          std::optional<Term> v2 =
              f2 && a.v2 && x.v2 ? eval_step(op, a.v2, x.v2) : std::nullopt;
          if (!v1 && (!f2 || !v2)) continue;
          add(Term::make(op, {a.recipe, x.recipe}), std::move(v1), std::move(v2));
        }
      }
    }
    prev_end = level_end;
  }
  return reps;
}


// Input recipes in canonical order: sizes ascending, destructor
// applications before constructions, generated lazily up to the value cap.
// Only successfully evaluating recipes are kept (evaluation is strict, so
// failing recipes are useless both as inputs and as subterms).
std::vector<RecipeValue> enumerate_inputs(const std::vector<Term>& f,
                                          const OracleBounds& b, SearchCtx& ctx,
                                          bool& truncated) {
  std::vector<RecipeValue> out;
  std::unordered_set<int> seen;
  size_t budget =
      b.max_input_values > 0 ? static_cast<size_t>(b.max_input_values) : SIZE_MAX;
  struct Cand {
    Term recipe;
    Term value;
    int depth;
  };
  auto add = [&](const Term& recipe, const Term& value) {
    if (!seen.insert(ctx.terms.id(value)).second) return true;
    if (out.size() >= budget) {
      truncated = true;
      return false;
    }
    RecipeValue rv;
    rv.recipe = recipe;
    rv.v1 = value;
    out.push_back(std::move(rv));
    return true;
  };
  std::vector<std::vector<Cand>> by_size(2);
  for (size_t i = 0; i < f.size(); ++i)
    by_size[1].push_back({Term::atom(frame_var(i + 1)), f[i], 1});
  for (const Atom& a : b.free_nonces) by_size[1].push_back({Term::atom(a), Term::atom(a), 1});
  for (const Atom& a : b.constants) by_size[1].push_back({Term::atom(a), Term::atom(a), 1});
  for (const Cand& c : by_size[1])
    if (!add(c.recipe, c.value)) return out;
  for (size_t size = 2; size <= 1 + 2 * static_cast<size_t>(b.recipe_depth); ++size) {
    by_size.emplace_back();
    auto& level = by_size[size];
    for (Op op : {Op::Fst, Op::Snd, Op::Hash, Op::Pk, Op::Vk}) {
      for (const Cand& a : by_size[size - 1]) {
        if (a.depth + 1 > b.recipe_depth) continue;
        auto v = eval_step(op, a.value, std::nullopt);
        if (!v) continue;
        level.push_back({Term::make(op, {a.recipe}), *v, a.depth + 1});
        if (!add(level.back().recipe, level.back().value)) return out;
      }
    }
    for (Op op : {Op::Check, Op::Dec, Op::Adec, Op::Enc, Op::Aenc, Op::Sign, Op::Pair}) {
      for (size_t sa = 1; sa + 1 < size; ++sa) {
        size_t sb = size - 1 - sa;
        if (sb >= by_size.size() || sb < 1) continue;
        for (const Cand& a : by_size[sa]) {
          for (const Cand& x : by_size[sb]) {
            int d = std::max(a.depth, x.depth) + 1;
            if (d > b.recipe_depth) continue;
            auto v = eval_step(op, a.value, x.value);
            if (!v) continue;
            level.push_back({Term::make(op, {a.recipe, x.recipe}), *v, d});
            if (!add(level.back().recipe, level.back().value)) return out;
          }
        }
      }
    }
    if (level.empty() && size > 3) break;
  }
  return out;
}

std::optional<Term> eval_recipe_memo(const Term& recipe, const std::vector<Term>& frame,
                                     SearchCtx& ctx) {
  auto& cache = ctx.eval_memo[ctx.frame_key(frame)];
  auto it = cache.find(recipe);
  if (it != cache.end()) return it->second;
  auto v = eval_recipe(recipe, frame);
  cache.emplace(recipe, v);
  return v;
}

std::optional<Distinguished> static_equiv_impl(const Frame& f1, const Frame& f2,
                                               const OracleBounds& b, TermInterner& in) {
  if (f1.bindings.size() != f2.bindings.size())
    return Distinguished{Term::atom(frame_var(1)), Term::atom(frame_var(1))};
  std::vector<RecipeValue> reps = enumerate_recipes(f1.bindings, &f2.bindings, b, in);
  // a recipe with v1 = bot xor v2 = bot is directly observable via (R, <R,R>)
  for (const RecipeValue& r : reps) {
    if (r.v1.has_value() != r.v2.has_value())
      return Distinguished{r.recipe, Term::pair(r.recipe, r.recipe)};
  }
  // otherwise the value partitions must agree
  std::unordered_map<int, std::pair<int, Term>> l2r, r2l;
  for (const RecipeValue& r : reps) {
    int k1 = in.id(r.v1);
    int k2 = in.id(r.v2);
    auto [it1, new1] = l2r.try_emplace(k1, std::make_pair(k2, r.recipe));
    if (!new1 && it1->second.first != k2) return Distinguished{r.recipe, it1->second.second};
    auto [it2, new2] = r2l.try_emplace(k2, std::make_pair(k1, r.recipe));
    if (!new2 && it2->second.first != k1) return Distinguished{r.recipe, it2->second.second};
  }
  return std::nullopt;
}

struct ProductState {
  Configuration left;
  std::vector<Configuration> rights;
  std::vector<Action> word;
};

Frame frame_of(const Configuration& c) {
  Frame f;
  f.restricted = c.private_names;
  f.bindings = c.frame;
  return f;
}

std::string rights_key(const std::vector<Configuration>& rights, SearchCtx& ctx) {
  std::vector<std::string> ks;
  for (const Configuration& r : rights) ks.push_back(config_key(r, ctx.terms));
  std::sort(ks.begin(), ks.end());
  std::string out;
  for (const std::string& k : ks) out += k + "\x03";
  return out;
}

// Exact behavioural key: the tau-closure set determines every reachable
// frame and visible step, so states with equal closure sets are
// interchangeable; this merges inputs the processes discard.
std::string closure_set_key(const Configuration& c, SearchCtx& ctx) {
  std::vector<std::string> ks;
  for (const Configuration& cc : tau_closure_memo(c, ctx))
    ks.push_back(config_key(cc, ctx.terms));
  std::sort(ks.begin(), ks.end());
  std::string out;
  for (const std::string& k : ks) {
    out += k;
    out.push_back('\x02');
  }
  return out;
}

std::string rights_closure_key(const std::vector<Configuration>& rights, SearchCtx& ctx) {
  std::unordered_set<std::string> s;
  std::vector<std::string> ks;
  for (const Configuration& r : rights)
    for (const Configuration& rc : tau_closure_memo(r, ctx)) {
      std::string k = config_key(rc, ctx.terms);
      if (s.insert(k).second) ks.push_back(std::move(k));
    }
  std::sort(ks.begin(), ks.end());
  std::string out;
  for (const std::string& k : ks) {
    out += k;
    out.push_back('\x02');
  }
  return out;
}

// One direction of the bounded check: every trace of `left` must be
// matched by `right`.
std::optional<AttackWitness> search_direction(const Proc& left, const Proc& right,
                                              const OracleBounds& b, bool from_left,
                                              bool& complete,
                                              std::atomic<bool>* stop = nullptr) {
  SearchCtx ctx;
  Configuration l0, r0;
  l0.active.push_back({left, b.repl_bound});
  r0.active.push_back({right, b.repl_bound});

  ProductState init;
  init.left = tau_normalize(l0, ctx);
  init.rights = {tau_normalize(r0, ctx)};

  std::deque<ProductState> work;
  std::unordered_set<std::string> visited;
  work.push_back(std::move(init));

  // static-equivalence memo over frame pairs (interned)
  long states = 0, se_calls = 0, in_classes = 0;
  double t_se_pre = 0;
  std::unordered_map<std::string, bool> se_memo;
  auto statically_ok = [&](const Configuration& lc, const Configuration& rc) {
    // identical frames are statically equivalent
    if (lc.frame == rc.frame) return true;
    std::string k;
    for (const Term& t : lc.frame) append_int(k, ctx.terms.id(t));
    k.push_back('\x04');
    for (const Term& t : rc.frame) append_int(k, ctx.terms.id(t));
    auto it = se_memo.find(k);
    if (it != se_memo.end()) return it->second;
    ++se_calls;
    auto ts = std::chrono::steady_clock::now();
    bool ok = !static_equiv_impl(frame_of(lc), frame_of(rc), b, ctx.terms).has_value();
    t_se_pre +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - ts)
            .count();
    se_memo.emplace(std::move(k), ok);
    return ok;
  };

  double t_enum = 0, t_vec = 0, t_keys = 0, t_push = 0;
  double& t_se = t_se_pre;
  auto now = [] { return std::chrono::steady_clock::now(); };
  auto acc = [](double& slot, std::chrono::steady_clock::time_point t0) {
    slot += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
  };
  auto frame_match = [&](const ProductState& ps) -> bool {
    for (const Configuration& rc : ps.rights) {
      if (rc.frame.size() != ps.left.frame.size()) continue;
      if (statically_ok(ps.left, rc)) return true;
    }
    return false;
  };

  {
    ProductState& ps = work.front();
    if (!frame_match(ps)) {
      AttackWitness w;
      w.from_left = from_left;
      w.detail = "no statically equivalent frame on the other side";
      return w;
    }
  }

  while (!work.empty()) {
    if (stop && stop->load(std::memory_order_relaxed)) return std::nullopt;
    // depth-first: witness candidates reach the depth bound quickly, and
    // the exhaustive sweep does the same total work either way
    ProductState st = std::move(work.back());
    work.pop_back();
    if (getenv("TQ_ORACLE_TRACE")) {
      fprintf(stderr, "[pop] word=%zu |rights|=%zu left-active=%zu frame=%zu\n",
              st.word.size(), st.rights.size(), st.left.active.size(),
              st.left.frame.size());
      for (const Action& a : st.word) fprintf(stderr, "   act %s\n", to_string(a).c_str());
      for (const auto& [p2, bud2] : st.left.active)
        fprintf(stderr, "   L: %s\n", to_string(p2).c_str());
      for (const auto& rc2 : st.rights)
        fprintf(stderr, "   R(%zu procs, frame %zu)\n", rc2.active.size(), rc2.frame.size());
    }
    if (++states % 2000 == 0 && getenv("TQ_ORACLE_STATS"))
      fprintf(stderr,
              "[stats] states=%ld se=%ld classes=%ld queue=%zu terms=%zu word=%zu "
              "enum=%.0f vec=%.0f keys=%.0f se=%.0f push=%.0f\n",
              states, se_calls, in_classes, work.size(), ctx.terms.ids.size(),
              st.word.size(), t_enum, t_vec, t_keys, t_se, t_push);

    std::vector<Configuration> lclo = {st.left};
    const std::vector<Configuration>& rclo_all = st.rights;

    if (static_cast<int>(st.word.size()) >= b.trace_depth) continue;

    // outputs
    for (const Configuration& lc : lclo) {
      for (auto& [act, lnext0] : visible_steps(lc, b)) {
        Configuration lnext = tau_normalize(lnext0, ctx);
        std::vector<Configuration> rnext;
        std::unordered_set<std::string> seen;
        for (const Configuration& rc : rclo_all) {
          for (auto& [ract, rn0] : visible_steps(rc, b)) {
            if (ract.is_input != act.is_input) continue;
            Configuration rn = tau_normalize(rn0, ctx);
            if (seen.insert(config_key(rn, ctx.terms)).second)
              rnext.push_back(std::move(rn));
          }
        }
        ProductState nst;
        nst.left = lnext;
        nst.rights = std::move(rnext);
        nst.word = st.word;
        nst.word.push_back(act);
        if (nst.rights.empty()) {
          AttackWitness w;
          w.actions = nst.word;
          w.from_left = from_left;
          w.detail = "the other side cannot follow this action";
          return w;
        }
        if (!frame_match(nst)) {
          AttackWitness w;
          w.actions = nst.word;
          w.from_left = from_left;
          w.detail = "no statically equivalent frame on the other side";
          return w;
        }
        std::string vk = config_key(nst.left, ctx.terms) + "\x05" +
                         rights_key(nst.rights, ctx) + "\x06" +
                         std::to_string(nst.word.size());
        if (visited.insert(vk).second) work.push_back(std::move(nst));
      }
    }

    // inputs: recipes enumerated over the left frame, deduplicated by the
    // value vector across the left and all right configurations
    for (const Configuration& lc : lclo) {
      bool has_in = false;
      for (const auto& [p, budget] : lc.active)
        if (p.kind() == ProcKind::In) has_in = true;
      if (!has_in) continue;

      bool truncated = false;
      std::vector<RecipeValue> reps = enumerate_inputs(lc.frame, b, ctx, truncated);
      if (truncated) complete = false;
      std::unordered_set<std::string> vecseen;
      for (const RecipeValue& r : reps) {
        std::string vec;
        append_int(vec, ctx.terms.id(*r.v1));
        for (const Configuration& rc : rclo_all) {
          auto v = eval_recipe_memo(r.recipe, rc.frame, ctx);
          append_int(vec, ctx.terms.id(v));
        }
        if (!vecseen.insert(vec).second) continue;
        ++in_classes;

        for (size_t i = 0; i < lc.active.size(); ++i) {
          const auto& [p, budget] = lc.active[i];
          if (p.kind() != ProcKind::In) continue;
          auto tp = now();
          Configuration lnext = lc;
          lnext.active.erase(lnext.active.begin() + i);
          lnext.store[p.binder()] = *r.v1;
          lnext.active.push_back({p.first(), budget});
          lnext = tau_normalize(lnext, ctx);
          acc(t_push, tp);

          std::vector<Configuration> rnext;
          std::unordered_set<std::string> seen;
          for (const Configuration& rc : rclo_all) {
            auto v = eval_recipe_memo(r.recipe, rc.frame, ctx);
            if (!v) continue;
            for (size_t j = 0; j < rc.active.size(); ++j) {
              const auto& [q, qbudget] = rc.active[j];
              if (q.kind() != ProcKind::In) continue;
              Configuration rn = rc;
              rn.active.erase(rn.active.begin() + j);
              rn.store[q.binder()] = *v;
              rn.active.push_back({q.first(), qbudget});
              rn = tau_normalize(rn, ctx);
              if (seen.insert(config_key(rn, ctx.terms)).second)
                rnext.push_back(std::move(rn));
            }
          }
          Action act;
          act.is_input = true;
          act.recipe = r.recipe;
          ProductState nst;
          nst.left = std::move(lnext);
          nst.rights = std::move(rnext);
          nst.word = st.word;
          nst.word.push_back(act);
          if (nst.rights.empty()) {
            AttackWitness w;
            w.actions = nst.word;
            w.from_left = from_left;
            w.detail = "the other side cannot follow this input";
            return w;
          }
          if (!frame_match(nst)) {
            AttackWitness w;
            w.actions = nst.word;
            w.from_left = from_left;
            w.detail = "no statically equivalent frame on the other side";
            return w;
          }
          auto tk = now();
          std::string vk = config_key(nst.left, ctx.terms) + "\x05" +
                           rights_key(nst.rights, ctx) + "\x06" +
                           std::to_string(nst.word.size());
          acc(t_keys, tk);
          if (visited.insert(vk).second) work.push_back(std::move(nst));
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Distinguished> static_equiv(const Frame& f1, const Frame& f2,
                                          const OracleBounds& b) {
  TermInterner in;
  return static_equiv_impl(f1, f2, b, in);
}

TraceSearchResult trace_equiv_bounded(const Proc& left, const Proc& right,
                                      const OracleBounds& b) {
  // the two inclusion directions are independent searches; an attack in
  // one cancels the other
  TraceSearchResult res;
  bool complete1 = true, complete2 = true;
  std::optional<AttackWitness> a1, a2;
  std::atomic<bool> stop{false};
  std::thread t([&] {
    a1 = search_direction(left, right, b, true, complete1, &stop);
    if (a1) stop.store(true);
  });
  a2 = search_direction(right, left, b, false, complete2, &stop);
  if (a2) stop.store(true);
  t.join();
  res.complete = complete1 && complete2;
  res.attack = a1 ? std::move(a1) : std::move(a2);
  return res;
}

std::optional<AttackWitness> replay(const Proc& left, const Proc& right,
                                    const std::vector<Action>& word,
                                    const OracleBounds& b) {
  SearchCtx ctx;
  Configuration l0, r0;
  l0.active.push_back({left, b.repl_bound});
  r0.active.push_back({right, b.repl_bound});
  std::vector<Configuration> ls = {l0}, rs = {r0};

  auto advance = [&](std::vector<Configuration> cs,
                     const Action& a) -> std::vector<Configuration> {
    std::vector<Configuration> out;
    std::unordered_set<std::string> seen;
    for (const Configuration& c0 : cs) {
      Configuration nc = tau_normalize(c0, ctx);
      for (const Configuration& cc : {nc}) {
        if (a.is_input) {
          auto v = eval_recipe(a.recipe, cc.frame);
          if (!v) continue;
          for (size_t i = 0; i < cc.active.size(); ++i) {
            if (cc.active[i].first.kind() != ProcKind::In) continue;
            Configuration next = cc;
            next.store[next.active[i].first.binder()] = *v;
            Proc cont = next.active[i].first.first();
            int budget = next.active[i].second;
            next.active.erase(next.active.begin() + i);
            next.active.push_back({cont, budget});
            gc_store(next);
            if (seen.insert(config_key(next, ctx.terms)).second)
              out.push_back(std::move(next));
          }
        } else {
          for (auto& [act, next] : visible_steps(cc, b)) {
            if (seen.insert(config_key(next, ctx.terms)).second)
              out.push_back(std::move(next));
          }
        }
      }
    }
    return out;
  };

  std::vector<Action> sofar;
  for (const Action& a : word) {
    sofar.push_back(a);
    ls = advance(std::move(ls), a);
    rs = advance(std::move(rs), a);
    if (ls.empty() && rs.empty()) {
      AttackWitness w;
      w.actions = sofar;
      w.detail = "neither side can follow the recorded action";
      return w;
    }
    if (ls.empty() || rs.empty()) {
      AttackWitness w;
      w.actions = sofar;
      w.from_left = rs.empty();
      w.detail = "one side cannot follow the recorded action";
      return w;
    }
  }
  for (const Configuration& lc : ls) {
    bool matched = false;
    for (const Configuration& rc : rs) {
      if (lc.frame.size() == rc.frame.size() &&
          !static_equiv_impl(frame_of(lc), frame_of(rc), b, ctx.terms))
        matched = true;
    }
    if (!matched) {
      AttackWitness w;
      w.actions = word;
      w.detail = "frames are not statically equivalent after the replayed word";
      return w;
    }
  }
  return std::nullopt;
}

}  // namespace tq
