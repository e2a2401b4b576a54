#include "ctrel/term.hpp"

#include <functional>
#include <sstream>

namespace ctrel::sym {

namespace {

size_t hash_mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

}  // namespace

size_t TermContext::KeyHash::operator()(const Key& k) const {
  size_t h = std::hash<int>{}(static_cast<int>(k.kind));
  h = hash_mix(h, k.width);
  h = hash_mix(h, std::hash<uint64_t>{}(k.cst));
  h = hash_mix(h, std::hash<std::string>{}(k.name));
  h = hash_mix(h, static_cast<size_t>(k.un * 31 + k.bin));
  h = hash_mix(h, k.p0 * 131u + k.p1);
  h = hash_mix(h, std::hash<const void*>{}(k.a));
  h = hash_mix(h, std::hash<const void*>{}(k.b));
  h = hash_mix(h, std::hash<const void*>{}(k.arr));
  return h;
}

size_t TermContext::ArrKeyHash::operator()(const ArrKey& k) const {
  size_t h = std::hash<bool>{}(k.is_store);
  h = hash_mix(h, std::hash<std::string>{}(k.name));
  h = hash_mix(h, std::hash<const void*>{}(k.base));
  h = hash_mix(h, std::hash<const void*>{}(k.idx));
  h = hash_mix(h, std::hash<const void*>{}(k.val));
  return h;
}

Term TermContext::intern(TermNode n) {
  Key k{n.kind,
        n.width,
        n.kind == TermKind::Const ? n.cst.value() : 0,
        n.name,
        static_cast<int>(n.un),
        static_cast<int>(n.bin),
        n.p0,
        n.p1,
        n.a,
        n.b,
        n.arr};
  auto it = term_index_.find(k);
  if (it != term_index_.end()) return it->second;
  n.id = next_id_++;
  terms_.push_back(std::move(n));
  Term t = &terms_.back();
  term_index_.emplace(std::move(k), t);
  return t;
}

Term TermContext::constant(BitVec v) {
  TermNode n;
  n.kind = TermKind::Const;
  n.width = v.width();
  n.cst = v;
  return intern(std::move(n));
}

Term TermContext::var(const std::string& name, uint32_t width) {
  TermNode n;
  n.kind = TermKind::Var;
  n.width = width;
  n.name = name;
  return intern(std::move(n));
}

Term TermContext::fold_unop(ir::UnOp op, uint32_t p0, uint32_t p1, Term a) {
  if (a->is_const()) {
    switch (op) {
      case ir::UnOp::Neg: return constant(a->cst.neg());
      case ir::UnOp::Not: return constant(a->cst.not_());
      case ir::UnOp::ZExt: return constant(a->cst.zext(p0));
      case ir::UnOp::SExt: return constant(a->cst.sext(p0));
      case ir::UnOp::Extract: return constant(a->cst.extract(p0, p1));
    }
  }
  if ((op == ir::UnOp::ZExt || op == ir::UnOp::SExt) && p0 == a->width) return a;
  if (op == ir::UnOp::Extract && p0 == a->width - 1 && p1 == 0) return a;
  return nullptr;
}

Term TermContext::unop(ir::UnOp op, uint32_t p0, uint32_t p1, Term a) {
  if (Term f = fold_unop(op, p0, p1, a)) return f;
  TermNode n;
  n.kind = TermKind::Un;
  n.un = op;
  n.p0 = p0;
  n.p1 = p1;
  n.a = a;
  switch (op) {
    case ir::UnOp::Neg:
    case ir::UnOp::Not: n.width = a->width; break;
    case ir::UnOp::ZExt:
    case ir::UnOp::SExt:
      if (p0 < a->width) throw ir::WidthError("extend target below operand width");
      n.width = p0;
      break;
    case ir::UnOp::Extract:
      if (p0 >= a->width || p1 > p0) throw ir::WidthError("extract range invalid");
      n.width = p0 - p1 + 1;
      break;
  }
  return intern(std::move(n));
}

Term TermContext::fold_binop(ir::BinOp op, Term a, Term b) {
  using ir::BinOp;
  if (a->is_const() && b->is_const()) {
    switch (op) {
      case BinOp::Add: return constant(a->cst.add(b->cst));
      case BinOp::Sub: return constant(a->cst.sub(b->cst));
      case BinOp::Mul: return constant(a->cst.mul(b->cst));
      case BinOp::UDiv: return constant(a->cst.udiv(b->cst));
      case BinOp::And: return constant(a->cst.and_(b->cst));
      case BinOp::Or: return constant(a->cst.or_(b->cst));
      case BinOp::Xor: return constant(a->cst.xor_(b->cst));
      case BinOp::Shl: return constant(a->cst.shl(b->cst));
      case BinOp::Shr: return constant(a->cst.lshr(b->cst));
      case BinOp::Concat: return constant(a->cst.concat(b->cst));
      case BinOp::Eq: return constant(a->cst.eq(b->cst));
      case BinOp::Ult: return constant(a->cst.ult(b->cst));
      case BinOp::Slt: return constant(a->cst.slt(b->cst));
    }
  }
  bool a0 = a->is_const() && a->cst.is_zero();
  bool b0 = b->is_const() && b->cst.is_zero();
  bool a1 = a->is_const() && a->cst == BitVec(a->cst.width(), 1);
  bool b1 = b->is_const() && b->cst == BitVec(b->cst.width(), 1);
  bool a_ones = a->is_const() && a->cst == BitVec::ones(a->cst.width());
  bool b_ones = b->is_const() && b->cst == BitVec::ones(b->cst.width());
  switch (op) {
    case BinOp::Add:
      if (a0) return b;
      if (b0) return a;
      break;
    case BinOp::Sub:
      if (b0) return a;
      if (a == b) return constant(BitVec::zeros(a->width));
      break;
    case BinOp::Mul:
      if (a0 || b0) return constant(BitVec::zeros(a->width));
      if (a1) return b;
      if (b1) return a;
      break;
    case BinOp::And:
      if (a0 || b0) return constant(BitVec::zeros(a->width));
      if (a_ones) return b;
      if (b_ones) return a;
      if (a == b) return a;
      break;
    case BinOp::Or:
      if (a0) return b;
      if (b0) return a;
      if (a == b) return a;
      break;
    case BinOp::Xor:
      if (a0) return b;
      if (b0) return a;
      if (a == b) return constant(BitVec::zeros(a->width));
      break;
    case BinOp::Shl:
    case BinOp::Shr:
      if (b0) return a;
      if (b->is_const() && b->cst.value() >= a->width)
        return constant(BitVec::zeros(a->width));
      break;
    case BinOp::Eq:
      if (a == b) return constant(BitVec::bit(true));
      break;
    case BinOp::Ult:
    case BinOp::Slt:
      if (a == b) return constant(BitVec::bit(false));
      break;
    default:
      break;
  }
  return nullptr;
}

Term TermContext::binop(ir::BinOp op, Term a, Term b) {
  using ir::BinOp;
  uint32_t width;
  if (op == BinOp::Concat) {
    if (a->width + b->width > 64) throw ir::WidthError("concat exceeds 64 bits");
    width = a->width + b->width;
  } else {
    if (a->width != b->width)
      throw ir::WidthError("binop operand widths differ: " + std::to_string(a->width) + " vs " +
                           std::to_string(b->width));
    width = (op == BinOp::Eq || op == BinOp::Ult || op == BinOp::Slt) ? 1 : a->width;
  }
  if (Term f = fold_binop(op, a, b)) return f;
  TermNode n;
  n.kind = TermKind::Bin;
  n.bin = op;
  n.a = a;
  n.b = b;
  n.width = width;
  return intern(std::move(n));
}

Term TermContext::select(ArrayTerm arr, Term idx) {
  if (idx->width != 32) throw ir::WidthError("select index must have width 32");
  TermNode n;
  n.kind = TermKind::Select;
  n.width = 8;
  n.arr = arr;
  n.a = idx;
  return intern(std::move(n));
}

ArrayTerm TermContext::array_var(const std::string& name) {
  ArrKey k{false, name, nullptr, nullptr, nullptr};
  auto it = array_index_.find(k);
  if (it != array_index_.end()) return it->second;
  ArrayNode n;
  n.is_store = false;
  n.name = name;
  n.id = next_id_++;
  arrays_.push_back(std::move(n));
  ArrayTerm t = &arrays_.back();
  array_index_.emplace(std::move(k), t);
  return t;
}

ArrayTerm TermContext::store(ArrayTerm base, Term idx, Term val) {
  if (idx->width != 32) throw ir::WidthError("store index must have width 32");
  if (val->width != 8) throw ir::WidthError("store value must have width 8");
  ArrKey k{true, "", base, idx, val};
  auto it = array_index_.find(k);
  if (it != array_index_.end()) return it->second;
  ArrayNode n;
  n.is_store = true;
  n.base = base;
  n.idx = idx;
  n.val = val;
  n.id = next_id_++;
  arrays_.push_back(std::move(n));
  ArrayTerm t = &arrays_.back();
  array_index_.emplace(std::move(k), t);
  return t;
}

Term TermContext::offset(Term t, uint64_t delta) {
  if (BitVec(t->width, delta).is_zero()) return t;
  return binop(ir::BinOp::Add, t, constant(BitVec(t->width, delta)));
}

namespace {

BitVec eval_array(ArrayTerm a, uint64_t idx, const Assignment& env) {
  while (a->is_store) {
    if (eval_term(a->idx, env).value() == idx) return eval_term(a->val, env);
    a = a->base;
  }
  auto it = env.arrays.find(a->name);
  if (it == env.arrays.end()) return BitVec(8, 0);
  auto bit = it->second.bytes.find(idx);
  return BitVec(8, bit == it->second.bytes.end() ? it->second.default_byte : bit->second);
}

}  // namespace

BitVec eval_term(Term t, const Assignment& env) {
  switch (t->kind) {
    case TermKind::Const:
      return t->cst;
    case TermKind::Var: {
      auto it = env.vars.find(t->name);
      if (it == env.vars.end()) throw std::out_of_range("unassigned variable " + t->name);
      if (it->second.width() != t->width)
        throw std::out_of_range("assignment width mismatch for " + t->name);
      return it->second;
    }
    case TermKind::Un: {
      BitVec a = eval_term(t->a, env);
      switch (t->un) {
        case ir::UnOp::Neg: return a.neg();
        case ir::UnOp::Not: return a.not_();
        case ir::UnOp::ZExt: return a.zext(t->p0);
        case ir::UnOp::SExt: return a.sext(t->p0);
        case ir::UnOp::Extract: return a.extract(t->p0, t->p1);
      }
      break;
    }
    case TermKind::Bin: {
      BitVec a = eval_term(t->a, env);
      BitVec b = eval_term(t->b, env);
      switch (t->bin) {
        case ir::BinOp::Add: return a.add(b);
        case ir::BinOp::Sub: return a.sub(b);
        case ir::BinOp::Mul: return a.mul(b);
        case ir::BinOp::UDiv: return a.udiv(b);
        case ir::BinOp::And: return a.and_(b);
        case ir::BinOp::Or: return a.or_(b);
        case ir::BinOp::Xor: return a.xor_(b);
        case ir::BinOp::Shl: return a.shl(b);
        case ir::BinOp::Shr: return a.lshr(b);
        case ir::BinOp::Concat: return a.concat(b);
        case ir::BinOp::Eq: return a.eq(b);
        case ir::BinOp::Ult: return a.ult(b);
        case ir::BinOp::Slt: return a.slt(b);
      }
      break;
    }
    case TermKind::Select:
      return eval_array(t->arr, eval_term(t->a, env).value(), env);
  }
  throw std::logic_error("malformed term");
}

void collect_symbols(Term t, std::map<std::string, uint32_t>& vars, std::set<std::string>& arrays) {
  switch (t->kind) {
    case TermKind::Const:
      return;
    case TermKind::Var:
      vars.emplace(t->name, t->width);
      return;
    case TermKind::Un:
      collect_symbols(t->a, vars, arrays);
      return;
    case TermKind::Bin:
      collect_symbols(t->a, vars, arrays);
      collect_symbols(t->b, vars, arrays);
      return;
    case TermKind::Select:
      collect_symbols(t->a, vars, arrays);
      collect_symbols(t->arr, vars, arrays);
      return;
  }
}

void collect_symbols(ArrayTerm a, std::map<std::string, uint32_t>& vars,
                     std::set<std::string>& arrays) {
  while (a->is_store) {
    collect_symbols(a->idx, vars, arrays);
    collect_symbols(a->val, vars, arrays);
    a = a->base;
  }
  arrays.insert(a->name);
}

namespace {

void print_term(std::ostringstream& os, Term t) {
  switch (t->kind) {
    case TermKind::Const:
      os << t->cst.value() << ":" << t->width;
      return;
    case TermKind::Var:
      os << t->name;
      return;
    case TermKind::Un:
      os << "(" << ir::to_string(t->un);
      if (t->un == ir::UnOp::ZExt || t->un == ir::UnOp::SExt)
        os << ":" << t->p0;
      else if (t->un == ir::UnOp::Extract)
        os << ":" << t->p0 << ":" << t->p1;
      os << " ";
      print_term(os, t->a);
      os << ")";
      return;
    case TermKind::Bin:
      os << "(";
      print_term(os, t->a);
      os << " " << ir::to_string(t->bin) << " ";
      print_term(os, t->b);
      os << ")";
      return;
    case TermKind::Select: {
      os << "select(";
      ArrayTerm a = t->arr;
      int stores = 0;
      while (a->is_store) {
        stores++;
        a = a->base;
      }
      os << a->name;
      if (stores) os << "+" << stores << "st";
      os << ", ";
      print_term(os, t->a);
      os << ")";
      return;
    }
  }
}

}  // namespace

std::string to_string(Term t) {
  std::ostringstream os;
  print_term(os, t);
  return os.str();
}

}  // namespace ctrel::sym
