#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctrel/bitvec.hpp"
#include "ctrel/ir.hpp"

namespace ctrel::sym {

enum class TermKind { Const, Var, Un, Bin, Select };

struct ArrayNode;
using ArrayTerm = const ArrayNode*;

/// Hash-consed term node. Nodes are interned by a TermContext: structurally
/// equal terms are the same pointer, so equality is pointer comparison.
struct TermNode {
  TermKind kind;
  uint32_t width;
  uint64_t id;  // creation index within the owning context

  BitVec cst{1, 0};    // Const
  std::string name;    // Var
  ir::UnOp un{};       // Un
  uint32_t p0 = 0;     // ZExt/SExt target width, Extract hi
  uint32_t p1 = 0;     // Extract lo
  ir::BinOp bin{};     // Bin
  const TermNode* a = nullptr;
  const TermNode* b = nullptr;
  ArrayTerm arr = nullptr;  // Select

  bool is_const() const { return kind == TermKind::Const; }
  bool is_var() const { return kind == TermKind::Var; }
};

using Term = const TermNode*;

/// Array-sorted term: either a named array variable or a store chain.
struct ArrayNode {
  bool is_store;
  uint64_t id;
  std::string name;                // ArrayVar
  const ArrayNode* base = nullptr; // Store
  Term idx = nullptr;
  Term val = nullptr;
};

/// Interning context. All terms built through one context live as long as the
/// context and may be compared by pointer. A context must be confined to one
/// analysis thread.
class TermContext {
public:
  TermContext() = default;
  TermContext(const TermContext&) = delete;
  TermContext& operator=(const TermContext&) = delete;

  Term constant(BitVec v);
  Term constant(uint32_t width, uint64_t value) { return constant(BitVec(width, value)); }
  Term var(const std::string& name, uint32_t width);
  Term unop(ir::UnOp op, uint32_t p0, uint32_t p1, Term a);
  Term binop(ir::BinOp op, Term a, Term b);
  Term select(ArrayTerm arr, Term idx);

  ArrayTerm array_var(const std::string& name);
  ArrayTerm store(ArrayTerm base, Term idx, Term val);

  Term add(Term a, Term b) { return binop(ir::BinOp::Add, a, b); }
  Term sub(Term a, Term b) { return binop(ir::BinOp::Sub, a, b); }
  Term eq(Term a, Term b) { return binop(ir::BinOp::Eq, a, b); }

  /// t + delta with constant folding; delta interpreted modulo 2^width.
  Term offset(Term t, uint64_t delta);

  size_t size() const { return terms_.size(); }

private:
  struct Key {
    TermKind kind;
    uint32_t width;
    uint64_t cst;
    std::string name;
    int un, bin;
    uint32_t p0, p1;
    const void* a;
    const void* b;
    const void* arr;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    size_t operator()(const Key& k) const;
  };
  struct ArrKey {
    bool is_store;
    std::string name;
    const void* base;
    const void* idx;
    const void* val;
    bool operator==(const ArrKey&) const = default;
  };
  struct ArrKeyHash {
    size_t operator()(const ArrKey& k) const;
  };

  Term intern(TermNode n);
  Term fold_unop(ir::UnOp op, uint32_t p0, uint32_t p1, Term a);
  Term fold_binop(ir::BinOp op, Term a, Term b);

  std::deque<TermNode> terms_;
  std::deque<ArrayNode> arrays_;
  std::unordered_map<Key, Term, KeyHash> term_index_;
  std::unordered_map<ArrKey, ArrayTerm, ArrKeyHash> array_index_;
  uint64_t next_id_ = 0;
};

/// Concrete valuation of symbolic variables and arrays.
struct Assignment {
  std::map<std::string, BitVec> vars;
  struct ArrayVal {
    std::map<uint64_t, uint8_t> bytes;
    uint8_t default_byte = 0;
  };
  std::map<std::string, ArrayVal> arrays;
};

/// Evaluates a term under an assignment; throws std::out_of_range on
/// unassigned variables. Semantics match the SMT backend bit for bit.
BitVec eval_term(Term t, const Assignment& env);

/// All free bitvector variables and array roots of a term.
void collect_symbols(Term t, std::map<std::string, uint32_t>& vars, std::set<std::string>& arrays);
void collect_symbols(ArrayTerm a, std::map<std::string, uint32_t>& vars,
                     std::set<std::string>& arrays);

std::string to_string(Term t);

}  // namespace ctrel::sym
