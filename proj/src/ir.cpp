#include "ctrel/ir.hpp"

#include <sstream>

namespace ctrel::ir {

bool is_valid_width(uint32_t w) {
  return w == 1 || w == 8 || w == 16 || w == 32 || w == 64;
}

namespace {

[[noreturn]] void width_fail(const std::string& what, uint32_t a, uint32_t b) {
  throw WidthError(what + ": " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

uint32_t width_of(const Expr& e) {
  // Widths are resolved at construction; recompute from children to keep
  // this total and checkable on hand-built nodes.
  switch (e.kind) {
    case Expr::Kind::Const:
      return e.cst.width();
    case Expr::Kind::Var:
      if (e.width == 0) throw WidthError("variable " + e.name + " has no width");
      return e.width;
    case Expr::Kind::Load:
      if (!e.a || width_of(*e.a) != 32) throw WidthError("load address must have width 32");
      return 8;
    case Expr::Kind::Un: {
      uint32_t w = width_of(*e.a);
      switch (e.un) {
        case UnOp::Neg:
        case UnOp::Not:
          return w;
        case UnOp::ZExt:
        case UnOp::SExt:
          if (e.p0 < w) width_fail("extend target below operand width", e.p0, w);
          return e.p0;
        case UnOp::Extract:
          if (e.p0 >= w || e.p1 > e.p0) throw WidthError("extract range invalid");
          return e.p0 - e.p1 + 1;
      }
      throw WidthError("bad unary op");
    }
    case Expr::Kind::Bin: {
      uint32_t wa = width_of(*e.a), wb = width_of(*e.b);
      switch (e.bin) {
        case BinOp::Concat:
          return wa + wb;
        case BinOp::Eq:
        case BinOp::Ult:
        case BinOp::Slt:
          if (wa != wb) width_fail("comparison operand widths differ", wa, wb);
          return 1;
        default:
          if (wa != wb) width_fail("operand widths differ", wa, wb);
          return wa;
      }
    }
  }
  throw WidthError("bad expression node");
}

ExprPtr Expr::constant(BitVec v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Const;
  e->cst = v;
  e->width = v.width();
  return e;
}

ExprPtr Expr::var(std::string name, uint32_t width) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Var;
  e->name = std::move(name);
  e->width = width;
  return width_of(*e), e;
}

ExprPtr Expr::load(ExprPtr addr) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Load;
  e->a = std::move(addr);
  e->width = width_of(*e);
  return e;
}

ExprPtr Expr::unop(UnOp op, uint32_t p0, uint32_t p1, ExprPtr operand) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Un;
  e->un = op;
  e->p0 = p0;
  e->p1 = p1;
  e->a = std::move(operand);
  e->width = width_of(*e);
  return e;
}

ExprPtr Expr::binop(BinOp op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Bin;
  e->bin = op;
  e->a = std::move(a);
  e->b = std::move(b);
  e->width = width_of(*e);
  return e;
}

Instr Instr::assign(std::string dst, ExprPtr rhs) {
  Instr i;
  i.kind = Kind::Assign;
  i.dst = std::move(dst);
  i.rhs = std::move(rhs);
  return i;
}

Instr Instr::store(ExprPtr idx, ExprPtr val) {
  Instr i;
  i.kind = Kind::Store;
  if (width_of(*idx) != 32) throw WidthError("store index must have width 32");
  if (width_of(*val) != 8) throw WidthError("store value must have width 8");
  i.idx = std::move(idx);
  i.val = std::move(val);
  return i;
}

Instr Instr::jmp(Loc target) {
  Instr i;
  i.kind = Kind::Goto;
  i.target = target;
  return i;
}

Instr Instr::djump(ExprPtr target) {
  Instr i;
  i.kind = Kind::DJump;
  if (width_of(*target) != 32) throw WidthError("djump target must have width 32");
  i.jump = std::move(target);
  return i;
}

Instr Instr::ite(ExprPtr cond, Loc then_t, Loc else_t) {
  Instr i;
  i.kind = Kind::Ite;
  if (width_of(*cond) != 1) throw WidthError("ite condition must have width 1");
  i.cond = std::move(cond);
  i.target = then_t;
  i.target_else = else_t;
  return i;
}

Instr Instr::halt() { return Instr{}; }

std::string to_string(UnOp op) {
  switch (op) {
    case UnOp::Neg: return "neg";
    case UnOp::Not: return "not";
    case UnOp::ZExt: return "zext";
    case UnOp::SExt: return "sext";
    case UnOp::Extract: return "extract";
  }
  return "?";
}

std::string to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::UDiv: return "/u";
    case BinOp::And: return "&";
    case BinOp::Or: return "|";
    case BinOp::Xor: return "^";
    case BinOp::Shl: return "<<";
    case BinOp::Shr: return ">>";
    case BinOp::Concat: return "::";
    case BinOp::Eq: return "=";
    case BinOp::Ult: return "<u";
    case BinOp::Slt: return "<s";
  }
  return "?";
}

namespace {

void print_expr(std::ostream& os, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Const:
      os << e.cst.value() << ":" << e.cst.width();
      break;
    case Expr::Kind::Var:
      os << e.name << ":" << e.width;
      break;
    case Expr::Kind::Load:
      os << "@[";
      print_expr(os, *e.a);
      os << "]";
      break;
    case Expr::Kind::Un:
      os << "(" << to_string(e.un);
      if (e.un == UnOp::ZExt || e.un == UnOp::SExt)
        os << ":" << e.p0;
      else if (e.un == UnOp::Extract)
        os << ":" << e.p0 << ":" << e.p1;
      os << " ";
      print_expr(os, *e.a);
      os << ")";
      break;
    case Expr::Kind::Bin:
      os << "(";
      print_expr(os, *e.a);
      os << " " << to_string(e.bin) << " ";
      print_expr(os, *e.b);
      os << ")";
      break;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e);
  return os.str();
}

std::string to_string(const Instr& i) {
  std::ostringstream os;
  switch (i.kind) {
    case Instr::Kind::Assign:
      os << i.dst << ":" << width_of(*i.rhs) << " := " << to_string(*i.rhs);
      break;
    case Instr::Kind::Store:
      os << "@[" << to_string(*i.idx) << "] := " << to_string(*i.val);
      break;
    case Instr::Kind::Goto:
      os << "goto " << i.target;
      break;
    case Instr::Kind::DJump:
      os << "djump " << to_string(*i.jump);
      break;
    case Instr::Kind::Ite:
      os << "ite " << to_string(*i.cond) << " ? " << i.target << " : " << i.target_else;
      break;
    case Instr::Kind::Halt:
      os << "halt";
      break;
  }
  return os.str();
}

std::string to_text(const Program& p) {
  std::ostringstream os;
  os << "entry " << p.entry << "\n";
  for (const auto& [name, v] : p.init_regs)
    os << "reg " << name << ":" << v.width() << " = " << v.value() << "\n";
  for (const auto& r : p.highs)
    os << "high " << r.base_reg << " " << r.offset << " " << r.length << "\n";
  for (const auto& r : p.lows)
    os << "low " << r.base_reg << " " << r.offset << " " << r.length << "\n";
  for (const auto& [loc, instr] : p.code)
    os << loc << ": " << to_string(instr) << "\n";
  return os.str();
}

}  // namespace ctrel::ir
