#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "ctrel/term.hpp"

namespace ctrel::sym {

/// Relational formula: a shared term or a left/right pair. Pairs whose sides
/// are the same hash-consed node are shared by construction, so is_simple()
/// is exactly structural equality of the projections.
struct RelExpr {
  Term l = nullptr;
  Term r = nullptr;

  static RelExpr simple(Term t) { return {t, t}; }
  static RelExpr pair(Term l, Term r) { return {l, r}; }

  bool is_simple() const { return l == r; }
  Term left() const { return l; }
  Term right() const { return r; }
  uint32_t width() const { return l->width; }

  bool operator==(const RelExpr& o) const { return l == o.l && r == o.r; }
};

/// Normalized address form base + offset, offset modulo 2^32.
/// A null base denotes a pure constant.
struct NormTerm {
  Term base = nullptr;
  BitVec offset{32, 0};

  bool operator==(const NormTerm& o) const { return base == o.base && offset == o.offset; }
};

/// Rewrites a 32-bit term into base + offset: add/sub/neg chains are
/// flattened, constants fold into the offset, the residual subterms are
/// recombined in a fixed order. Total; falls back to (t, 0).
NormTerm normalize(TermContext& ctx, Term t);

enum class Tri { True, False, Unknown };

/// Syntactic address comparison: True/False only when equality/disequality
/// holds under every interpretation, Unknown otherwise.
Tri compare(const NormTerm& a, const NormTerm& b);

/// Pair-of-arrays symbolic memory with the history of relational stores,
/// newest first. History nodes are shared between forked states.
struct StoreEntry {
  std::shared_ptr<const StoreEntry> next;
  NormTerm idx;
  RelExpr value;
  // A store through a genuinely duplicated index: lookups abort rather than
  // walk past it.
  bool opaque = false;
};

struct RelMemory {
  ArrayTerm root_l = nullptr, root_r = nullptr;
  ArrayTerm left = nullptr, right = nullptr;
  std::shared_ptr<const StoreEntry> history;

  /// Fresh memory whose two sides are the same array variable.
  static RelMemory initial(TermContext& ctx, const std::string& name);

  size_t history_size() const {
    size_t n = 0;
    for (auto e = history.get(); e; e = e->next.get()) n++;
    return n;
  }
};

/// Store at a shared index.
RelMemory rel_store(TermContext& ctx, const RelMemory& m, Term idx, RelExpr val);

/// Store at a duplicated index (left/right differ syntactically); recorded
/// as an opaque history entry.
RelMemory rel_store_dup(TermContext& ctx, const RelMemory& m, Term idx_l, Term idx_r, RelExpr val);

/// Read-over-write lookup: walks the store history with syntactic index
/// comparison; on an inconclusive comparison returns the unsimplified select
/// pair over the current arrays.
RelExpr lookup(TermContext& ctx, const RelMemory& m, Term idx);

/// Plain duplicated select over the current arrays (no history walk).
RelExpr select_pair(TermContext& ctx, const RelMemory& m, Term idx_l, Term idx_r);

using RegMap = std::map<std::string, RelExpr>;

/// Substitutes registers bound to canonical forms (variable, constant, or
/// variable +/- constant) into t, recursively. Other bindings are left
/// untouched to avoid term growth.
Term inline_canonical(TermContext& ctx, const RegMap& regs, Term t);

/// Cache of proven left=right variable equalities, substituted into right
/// components when relational expressions are built or read.
struct UntaintCache {
  std::map<Term, Term> repl;  // right-copy variable -> left-copy variable

  bool empty() const { return repl.empty(); }
};

/// Deduces variable equalities from a leaked duplicated expression that was
/// just proven secure (left = right under the path predicate). Rules: direct
/// variable pairs; identical injective unary operators; add/sub/xor with an
/// identical constant operand.
void untaint_deduce(TermContext& ctx, UntaintCache& cache, const RelExpr& leaked);

/// Applies the cache substitution to a term (bottom-up, memoized per call).
Term untaint_apply(TermContext& ctx, const UntaintCache& cache, Term t);

/// Applies the cache to the right component; collapses to simple when the
/// sides meet.
RelExpr untaint_apply(TermContext& ctx, const UntaintCache& cache, const RelExpr& e);

/// Full untaint step: deduce equalities from a secure duplicated leak and
/// rewrite the register map in place. Memory values are rewritten lazily,
/// when lookups read them through the same cache.
void untaint(TermContext& ctx, UntaintCache& cache, RegMap& regs, const RelExpr& leaked);

}  // namespace ctrel::sym
