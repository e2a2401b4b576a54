#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctrel/bitvec.hpp"

namespace ctrel::ir {

using Loc = uint32_t;

enum class UnOp { Neg, Not, ZExt, SExt, Extract };
enum class BinOp { Add, Sub, Mul, UDiv, And, Or, Xor, Shl, Shr, Concat, Eq, Ult, Slt };

struct WidthError : std::runtime_error {
  explicit WidthError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression tree of the IR. Nodes are immutable; every node carries its
/// statically resolved width. Memory is byte-addressed: a Load has a 32-bit
/// address operand and an 8-bit result.
struct Expr {
  enum class Kind { Const, Var, Load, Un, Bin };

  Kind kind;
  uint32_t width;

  BitVec cst{1, 0};   // Const
  std::string name;   // Var
  UnOp un{};          // Un
  uint32_t p0 = 0;    // ZExt/SExt target width, Extract hi
  uint32_t p1 = 0;    // Extract lo
  BinOp bin{};        // Bin
  ExprPtr a, b;       // operands; Load uses a as the address

  static ExprPtr constant(BitVec v);
  static ExprPtr var(std::string name, uint32_t width);
  static ExprPtr load(ExprPtr addr);
  static ExprPtr unop(UnOp op, uint32_t p0, uint32_t p1, ExprPtr e);
  static ExprPtr binop(BinOp op, ExprPtr a, ExprPtr b);
};

/// Static width of a well-formed expression.
uint32_t width_of(const Expr& e);

struct Instr {
  enum class Kind { Assign, Store, Goto, DJump, Ite, Halt };

  Kind kind = Kind::Halt;
  std::string dst;      // Assign
  ExprPtr rhs;          // Assign
  ExprPtr idx, val;     // Store
  Loc target = 0;       // Goto / Ite then-target
  Loc target_else = 0;  // Ite else-target
  ExprPtr cond;         // Ite (width 1)
  ExprPtr jump;         // DJump (width 32)

  static Instr assign(std::string dst, ExprPtr rhs);
  static Instr store(ExprPtr idx, ExprPtr val);
  static Instr jmp(Loc target);
  static Instr djump(ExprPtr target);
  static Instr ite(ExprPtr cond, Loc then_t, Loc else_t);
  static Instr halt();
};

struct InputRegion {
  std::string base_reg;
  int64_t offset = 0;   // bytes, relative to the base register value
  uint32_t length = 1;  // bytes
  bool high = false;
};

struct Program {
  Loc entry = 0;
  std::map<Loc, Instr> code;
  std::vector<InputRegion> highs;
  std::vector<InputRegion> lows;
  std::map<std::string, BitVec> init_regs;
  // Every register mentioned anywhere in the program, with its width.
  std::map<std::string, uint32_t> reg_widths;
  // Source line of each instruction, for diagnostics.
  std::map<Loc, int> lines;

  const Instr* at(Loc l) const {
    auto it = code.find(l);
    return it == code.end() ? nullptr : &it->second;
  }
};

bool is_valid_width(uint32_t w);  // the IR width set {1,8,16,32,64}

std::string to_string(UnOp op);
std::string to_string(BinOp op);
std::string to_string(const Expr& e);
std::string to_string(const Instr& i);
/// Canonical text of a whole program; parses back to an equal Program.
std::string to_text(const Program& p);

}  // namespace ctrel::ir
