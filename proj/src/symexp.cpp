#include "ctrel/symexp.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <vector>

namespace ctrel::sym {

namespace {

struct Flattened {
  std::vector<Term> pos, neg;
  BitVec offset{32, 0};
};

void flatten(Term t, bool positive, Flattened& out) {
  if (t->is_const()) {
    out.offset = positive ? out.offset.add(t->cst) : out.offset.sub(t->cst);
    return;
  }
  if (t->kind == TermKind::Bin && t->bin == ir::BinOp::Add) {
    flatten(t->a, positive, out);
    flatten(t->b, positive, out);
    return;
  }
  if (t->kind == TermKind::Bin && t->bin == ir::BinOp::Sub) {
    flatten(t->a, positive, out);
    flatten(t->b, !positive, out);
    return;
  }
  if (t->kind == TermKind::Un && t->un == ir::UnOp::Neg) {
    flatten(t->a, !positive, out);
    return;
  }
  (positive ? out.pos : out.neg).push_back(t);
}

}  // namespace

NormTerm normalize(TermContext& ctx, Term t) {
  if (t->width != 32) return {t, BitVec(32, 0)};
  Flattened f;
  flatten(t, true, f);
  auto by_id = [](Term a, Term b) { return a->id < b->id; };
  std::sort(f.pos.begin(), f.pos.end(), by_id);
  std::sort(f.neg.begin(), f.neg.end(), by_id);
  if (f.pos.empty() && f.neg.empty()) return {nullptr, f.offset};

  Term base;
  size_t pi = 0;
  if (!f.pos.empty()) {
    base = f.pos[pi++];
  } else {
    base = ctx.unop(ir::UnOp::Neg, 0, 0, f.neg[0]);
    f.neg.erase(f.neg.begin());
  }
  for (; pi < f.pos.size(); pi++) base = ctx.add(base, f.pos[pi]);
  for (Term n : f.neg) base = ctx.sub(base, n);
  return {base, f.offset};
}

Tri compare(const NormTerm& a, const NormTerm& b) {
  if (a.base == b.base) return a.offset == b.offset ? Tri::True : Tri::False;
  return Tri::Unknown;
}

RelMemory RelMemory::initial(TermContext& ctx, const std::string& name) {
  RelMemory m;
  m.root_l = m.root_r = m.left = m.right = ctx.array_var(name);
  return m;
}

RelMemory rel_store(TermContext& ctx, const RelMemory& m, Term idx, RelExpr val) {
  RelMemory out = m;
  out.left = ctx.store(m.left, idx, val.left());
  out.right = ctx.store(m.right, idx, val.right());
  auto e = std::make_shared<StoreEntry>();
  e->next = m.history;
  e->idx = normalize(ctx, idx);
  e->value = val;
  out.history = std::move(e);
  return out;
}

RelMemory rel_store_dup(TermContext& ctx, const RelMemory& m, Term idx_l, Term idx_r,
                        RelExpr val) {
  RelMemory out = m;
  out.left = ctx.store(m.left, idx_l, val.left());
  out.right = ctx.store(m.right, idx_r, val.right());
  auto e = std::make_shared<StoreEntry>();
  e->next = m.history;
  e->value = val;
  e->opaque = true;
  out.history = std::move(e);
  return out;
}

RelExpr select_pair(TermContext& ctx, const RelMemory& m, Term idx_l, Term idx_r) {
  return RelExpr::pair(ctx.select(m.left, idx_l), ctx.select(m.right, idx_r));
}

RelExpr lookup(TermContext& ctx, const RelMemory& m, Term idx) {
  NormTerm i = normalize(ctx, idx);
  for (const StoreEntry* e = m.history.get(); e; e = e->next.get()) {
    if (e->opaque) return select_pair(ctx, m, idx, idx);
    switch (compare(i, e->idx)) {
      case Tri::True:
        return e->value;
      case Tri::False:
        continue;
      case Tri::Unknown:
        return select_pair(ctx, m, idx, idx);
    }
  }
  // Past the whole history: select from the initial arrays. When both sides
  // share the initial array the result is simple.
  return RelExpr::pair(ctx.select(m.root_l, idx), ctx.select(m.root_r, idx));
}

namespace {

// Canonical binding shapes for inlining: v, c, v + c, c + v, v - c.
bool is_canonical(Term t) {
  if (t->is_var() || t->is_const()) return true;
  if (t->kind != TermKind::Bin) return false;
  if (t->bin == ir::BinOp::Add)
    return (t->a->is_var() && t->b->is_const()) || (t->a->is_const() && t->b->is_var());
  if (t->bin == ir::BinOp::Sub) return t->a->is_var() && t->b->is_const();
  return false;
}

Term inline_rec(TermContext& ctx, const RegMap& regs, Term t, std::set<std::string>& visiting) {
  switch (t->kind) {
    case TermKind::Const:
      return t;
    case TermKind::Var: {
      auto it = regs.find(t->name);
      if (it == regs.end() || !it->second.is_simple()) return t;
      Term bound = it->second.left();
      if (bound == t || !is_canonical(bound) || visiting.count(t->name)) return t;
      visiting.insert(t->name);
      Term result = inline_rec(ctx, regs, bound, visiting);
      visiting.erase(t->name);
      return result;
    }
    case TermKind::Un: {
      Term a = inline_rec(ctx, regs, t->a, visiting);
      return a == t->a ? t : ctx.unop(t->un, t->p0, t->p1, a);
    }
    case TermKind::Bin: {
      Term a = inline_rec(ctx, regs, t->a, visiting);
      Term b = inline_rec(ctx, regs, t->b, visiting);
      return (a == t->a && b == t->b) ? t : ctx.binop(t->bin, a, b);
    }
    case TermKind::Select: {
      Term a = inline_rec(ctx, regs, t->a, visiting);
      return a == t->a ? t : ctx.select(t->arr, a);
    }
  }
  return t;
}

}  // namespace

Term inline_canonical(TermContext& ctx, const RegMap& regs, Term t) {
  std::set<std::string> visiting;
  return inline_rec(ctx, regs, t, visiting);
}

namespace {

Term resolve(const UntaintCache& cache, Term t) {
  while (true) {
    auto it = cache.repl.find(t);
    if (it == cache.repl.end()) return t;
    t = it->second;
  }
}

void deduce(TermContext& ctx, UntaintCache& cache, Term l, Term r) {
  if (l == r || l->width != r->width) return;
  if (l->is_var() && r->is_var()) {
    if (!cache.repl.count(r)) cache.repl.emplace(r, resolve(cache, l));
    return;
  }
  if (l->kind == TermKind::Un && r->kind == TermKind::Un && l->un == r->un && l->p0 == r->p0 &&
      l->p1 == r->p1) {
    switch (l->un) {
      case ir::UnOp::Neg:
      case ir::UnOp::Not:
      case ir::UnOp::ZExt:
      case ir::UnOp::SExt:
        deduce(ctx, cache, l->a, r->a);
        return;
      case ir::UnOp::Extract:
        return;  // not injective
    }
  }
  if (l->kind == TermKind::Bin && r->kind == TermKind::Bin && l->bin == r->bin) {
    bool invertible =
        l->bin == ir::BinOp::Add || l->bin == ir::BinOp::Sub || l->bin == ir::BinOp::Xor;
    if (!invertible) return;
    if (l->b == r->b && l->b->is_const()) {
      deduce(ctx, cache, l->a, r->a);
    } else if (l->a == r->a && l->a->is_const()) {
      deduce(ctx, cache, l->b, r->b);
    }
  }
}

Term apply_rec(TermContext& ctx, const UntaintCache& cache, Term t,
               std::unordered_map<Term, Term>& memo);

ArrayTerm apply_array(TermContext& ctx, const UntaintCache& cache, ArrayTerm a,
                      std::unordered_map<Term, Term>& memo) {
  if (!a->is_store) return a;
  ArrayTerm base = apply_array(ctx, cache, a->base, memo);
  Term idx = apply_rec(ctx, cache, a->idx, memo);
  Term val = apply_rec(ctx, cache, a->val, memo);
  return (base == a->base && idx == a->idx && val == a->val) ? a : ctx.store(base, idx, val);
}

Term apply_rec(TermContext& ctx, const UntaintCache& cache, Term t,
               std::unordered_map<Term, Term>& memo) {
  auto it = memo.find(t);
  if (it != memo.end()) return it->second;
  Term out = t;
  switch (t->kind) {
    case TermKind::Const:
      break;
    case TermKind::Var:
      out = resolve(cache, t);
      break;
    case TermKind::Un: {
      Term a = apply_rec(ctx, cache, t->a, memo);
      if (a != t->a) out = ctx.unop(t->un, t->p0, t->p1, a);
      break;
    }
    case TermKind::Bin: {
      Term a = apply_rec(ctx, cache, t->a, memo);
      Term b = apply_rec(ctx, cache, t->b, memo);
      if (a != t->a || b != t->b) out = ctx.binop(t->bin, a, b);
      break;
    }
    case TermKind::Select: {
      Term a = apply_rec(ctx, cache, t->a, memo);
      ArrayTerm arr = apply_array(ctx, cache, t->arr, memo);
      if (a != t->a || arr != t->arr) out = ctx.select(arr, a);
      break;
    }
  }
  memo.emplace(t, out);
  return out;
}

}  // namespace

void untaint_deduce(TermContext& ctx, UntaintCache& cache, const RelExpr& leaked) {
  if (leaked.is_simple()) return;
  deduce(ctx, cache, leaked.left(), leaked.right());
}

Term untaint_apply(TermContext& ctx, const UntaintCache& cache, Term t) {
  if (cache.empty()) return t;
  std::unordered_map<Term, Term> memo;
  return apply_rec(ctx, cache, t, memo);
}

RelExpr untaint_apply(TermContext& ctx, const UntaintCache& cache, const RelExpr& e) {
  if (cache.empty() || e.is_simple()) return e;
  return RelExpr::pair(e.left(), untaint_apply(ctx, cache, e.right()));
}

void untaint(TermContext& ctx, UntaintCache& cache, RegMap& regs, const RelExpr& leaked) {
  size_t before = cache.repl.size();
  untaint_deduce(ctx, cache, leaked);
  if (cache.repl.size() == before) return;
  for (auto& [name, value] : regs) value = untaint_apply(ctx, cache, value);
}

}  // namespace ctrel::sym
