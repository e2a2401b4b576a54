#include "ctrel/parser.hpp"

#include <cctype>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

namespace ctrel::ir {

namespace {

struct Token {
  enum class Kind { Ident, Num, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  uint64_t num = 0;
  int line = 0, col = 0;
};

const std::set<std::string> kKeywords = {"entry", "reg",  "high", "low",     "goto", "djump",
                                         "ite",   "halt", "neg",  "not",     "zext", "sext",
                                         "extract"};

class Lexer {
public:
  Lexer(const std::string& src, int line) : src_(src), line_(line) {}

  std::vector<Token> all() {
    std::vector<Token> out;
    for (Token t = next(); t.kind != Token::Kind::End; t = next()) out.push_back(t);
    Token end;
    end.kind = Token::Kind::End;
    end.line = line_;
    end.col = static_cast<int>(pos_) + 1;
    out.push_back(end);
    return out;
  }

private:
  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) pos_++;
    if (pos_ >= src_.size() || src_[pos_] == '#') return Token{};
    Token t;
    t.line = line_;
    t.col = static_cast<int>(pos_) + 1;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        pos_++;
      t.kind = Token::Kind::Ident;
      t.text = src_.substr(start, pos_ - start);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      int base = 10;
      if (c == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
        base = 16;
        pos_ += 2;
      }
      size_t digits = pos_;
      while (pos_ < src_.size() &&
             (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
              (base == 16 && std::isxdigit(static_cast<unsigned char>(src_[pos_])))))
        pos_++;
      if (pos_ == digits) throw SyntaxError(line_, t.col, "malformed number");
      t.kind = Token::Kind::Num;
      t.text = src_.substr(start, pos_ - start);
      t.num = std::stoull(src_.substr(digits, pos_ - digits), nullptr, base);
      return t;
    }
    // Punctuation; longest match first.
    static const char* two[] = {":=", "<<", ">>", "<u", "<s", "/u", "::"};
    for (const char* op : two) {
      if (src_.compare(pos_, 2, op) == 0) {
        t.kind = Token::Kind::Punct;
        t.text = op;
        pos_ += 2;
        return t;
      }
    }
    static const std::string one = "()[]@:?,+-*&|^=";
    if (one.find(c) != std::string::npos) {
      t.kind = Token::Kind::Punct;
      t.text = std::string(1, c);
      pos_++;
      return t;
    }
    throw SyntaxError(line_, t.col, std::string("unexpected character '") + c + "'");
  }

  const std::string& src_;
  int line_;
  size_t pos_ = 0;
};

class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) {}

  Program run() {
    split_lines();
    collect_widths();
    for (auto& ln : lines_) parse_line(ln);
    if (!entry_seen_) throw SyntaxError(1, 1, "missing entry declaration");
    validate_program(prog_);
    return prog_;
  }

private:
  struct Line {
    int number;
    std::vector<Token> toks;
    size_t at = 0;
  };

  void split_lines() {
    std::istringstream is(text_);
    std::string raw;
    int n = 0;
    while (std::getline(is, raw)) {
      n++;
      Lexer lex(raw, n);
      auto toks = lex.all();
      if (toks.size() <= 1) continue;  // blank or comment-only
      lines_.push_back(Line{n, std::move(toks)});
    }
  }

  // First pass: record declared register widths from `reg` lines and from
  // every `name:width` occurrence, so plain uses can be resolved later.
  void collect_widths() {
    for (auto& ln : lines_) {
      const auto& t = ln.toks;
      for (size_t i = 0; i + 2 < t.size(); i++) {
        if (t[i].kind == Token::Kind::Ident && !kKeywords.count(t[i].text) &&
            t[i + 1].kind == Token::Kind::Punct && t[i + 1].text == ":" &&
            t[i + 2].kind == Token::Kind::Num) {
          record_width(t[i], static_cast<uint32_t>(t[i + 2].num));
        }
      }
    }
  }

  void record_width(const Token& ident, uint32_t w) {
    if (!is_valid_width(w))
      throw WidthError("register " + ident.text + " declared with unsupported width " +
                       std::to_string(w));
    auto [it, inserted] = prog_.reg_widths.emplace(ident.text, w);
    if (!inserted && it->second != w)
      throw WidthError("register " + ident.text + " used with widths " +
                       std::to_string(it->second) + " and " + std::to_string(w));
  }

  // --- token helpers ------------------------------------------------------

  const Token& peek(const Line& ln) const { return ln.toks[ln.at]; }

  const Token& take(Line& ln) { return ln.toks[ln.at++]; }

  bool accept(Line& ln, const std::string& punct) {
    const Token& t = peek(ln);
    if (t.kind == Token::Kind::Punct && t.text == punct) {
      ln.at++;
      return true;
    }
    return false;
  }

  void expect(Line& ln, const std::string& punct) {
    const Token& t = peek(ln);
    if (t.kind != Token::Kind::Punct || t.text != punct)
      throw SyntaxError(t.line, t.col, "expected '" + punct + "'");
    ln.at++;
  }

  uint64_t expect_num(Line& ln, const char* what) {
    const Token& t = peek(ln);
    if (t.kind != Token::Kind::Num) throw SyntaxError(t.line, t.col, std::string("expected ") + what);
    ln.at++;
    return t.num;
  }

  std::string expect_ident(Line& ln, const char* what) {
    const Token& t = peek(ln);
    if (t.kind != Token::Kind::Ident)
      throw SyntaxError(t.line, t.col, std::string("expected ") + what);
    ln.at++;
    return t.text;
  }

  void expect_end(Line& ln) {
    const Token& t = peek(ln);
    if (t.kind != Token::Kind::End) throw SyntaxError(t.line, t.col, "trailing tokens");
  }

  int64_t signed_num(Line& ln, const char* what) {
    bool negative = accept(ln, "-");
    uint64_t v = expect_num(ln, what);
    return negative ? -static_cast<int64_t>(v) : static_cast<int64_t>(v);
  }

  // --- line forms ---------------------------------------------------------

  void parse_line(Line& ln) {
    const Token& first = peek(ln);
    if (first.kind == Token::Kind::Ident) {
      if (first.text == "entry") {
        take(ln);
        prog_.entry = static_cast<Loc>(expect_num(ln, "entry location"));
        entry_seen_ = true;
        expect_end(ln);
        return;
      }
      if (first.text == "reg") {
        take(ln);
        std::string name = expect_ident(ln, "register name");
        expect(ln, ":");
        uint32_t w = static_cast<uint32_t>(expect_num(ln, "register width"));
        record_width(ln.toks[ln.at - 3], w);
        expect(ln, "=");
        uint64_t v = expect_num(ln, "initial value");
        prog_.init_regs.emplace(name, BitVec(w, v));
        expect_end(ln);
        return;
      }
      if (first.text == "high" || first.text == "low") {
        bool high = first.text == "high";
        take(ln);
        InputRegion r;
        r.high = high;
        r.base_reg = expect_ident(ln, "base register");
        r.offset = signed_num(ln, "region offset");
        uint64_t len = expect_num(ln, "region length");
        if (len == 0) throw SyntaxError(first.line, first.col, "region length must be >= 1");
        r.length = static_cast<uint32_t>(len);
        (high ? prog_.highs : prog_.lows).push_back(r);
        if (!prog_.reg_widths.count(r.base_reg)) record_width_default(r.base_reg);
        expect_end(ln);
        return;
      }
      throw SyntaxError(first.line, first.col, "unknown directive '" + first.text + "'");
    }
    if (first.kind != Token::Kind::Num)
      throw SyntaxError(first.line, first.col, "expected location or directive");
    parse_instruction(ln);
  }

  void record_width_default(const std::string& reg) {
    // Region base registers are addresses.
    prog_.reg_widths.emplace(reg, 32);
  }

  void add_instr(Loc loc, Instr instr, int line) {
    if (prog_.code.count(loc)) throw DuplicateLocation(loc);
    prog_.code.emplace(loc, std::move(instr));
    prog_.lines.emplace(loc, line);
  }

  void parse_instruction(Line& ln) {
    Loc loc = static_cast<Loc>(expect_num(ln, "location"));
    expect(ln, ":");
    const Token& head = peek(ln);
    if (head.kind == Token::Kind::Ident) {
      if (head.text == "halt") {
        take(ln);
        add_instr(loc, Instr::halt(), ln.number);
        expect_end(ln);
        return;
      }
      if (head.text == "goto") {
        take(ln);
        add_instr(loc, Instr::jmp(static_cast<Loc>(expect_num(ln, "goto target"))), ln.number);
        expect_end(ln);
        return;
      }
      if (head.text == "djump") {
        take(ln);
        ExprPtr t = parse_expr(ln);
        if (width_of(*t) != 32)
          throw WidthError("djump target at location " + std::to_string(loc) +
                           " must have width 32");
        add_instr(loc, Instr::djump(std::move(t)), ln.number);
        expect_end(ln);
        return;
      }
      if (head.text == "ite") {
        take(ln);
        ExprPtr c = parse_expr(ln);
        if (width_of(*c) > 1)
          c = Expr::unop(UnOp::Not, 0, 0,
                         Expr::binop(BinOp::Eq, c, Expr::constant(BitVec(width_of(*c), 0))));
        expect(ln, "?");
        Loc then_t = static_cast<Loc>(expect_num(ln, "then target"));
        expect(ln, ":");
        Loc else_t = static_cast<Loc>(expect_num(ln, "else target"));
        add_instr(loc, Instr::ite(std::move(c), then_t, else_t), ln.number);
        expect_end(ln);
        return;
      }
      // Assignment: name[:width] := expr
      std::string dst = expect_ident(ln, "destination register");
      if (accept(ln, ":")) {
        uint32_t w = static_cast<uint32_t>(expect_num(ln, "destination width"));
        record_width(head, w);
      }
      expect(ln, ":=");
      ExprPtr rhs = parse_expr(ln);
      auto it = prog_.reg_widths.find(dst);
      if (it == prog_.reg_widths.end())
        prog_.reg_widths.emplace(dst, width_of(*rhs));
      else if (it->second != width_of(*rhs))
        throw WidthError("assignment to " + dst + " at location " + std::to_string(loc) +
                         ": expected width " + std::to_string(it->second) + ", found " +
                         std::to_string(width_of(*rhs)));
      add_instr(loc, Instr::assign(dst, std::move(rhs)), ln.number);
      expect_end(ln);
      return;
    }
    if (head.kind == Token::Kind::Punct && head.text == "@") {
      take(ln);
      expect(ln, "[");
      ExprPtr idx = parse_expr(ln);
      uint32_t bytes = 1;
      if (accept(ln, ",")) bytes = parse_byte_count(ln);
      expect(ln, "]");
      expect(ln, ":=");
      ExprPtr val = parse_expr(ln);
      if (width_of(*idx) != 32)
        throw WidthError("store index at location " + std::to_string(loc) +
                         " must have width 32, found " + std::to_string(width_of(*idx)));
      if (width_of(*val) != bytes * 8)
        throw WidthError("store value at location " + std::to_string(loc) + ": expected width " +
                         std::to_string(bytes * 8) + ", found " + std::to_string(width_of(*val)));
      // Multi-byte stores lower to one byte store per location, little-endian,
      // occupying locations loc .. loc+bytes-1.
      for (uint32_t i = 0; i < bytes; i++) {
        ExprPtr bi = idx;
        ExprPtr vi = val;
        if (i > 0) bi = Expr::binop(BinOp::Add, idx, Expr::constant(BitVec(32, i)));
        if (bytes > 1) vi = Expr::unop(UnOp::Extract, 8 * i + 7, 8 * i, val);
        add_instr(loc + i, Instr::store(std::move(bi), std::move(vi)), ln.number);
      }
      expect_end(ln);
      return;
    }
    throw SyntaxError(head.line, head.col, "expected instruction");
  }

  uint32_t parse_byte_count(Line& ln) {
    const Token& t = peek(ln);
    uint64_t n = expect_num(ln, "byte count");
    if (n != 1 && n != 2 && n != 4 && n != 8)
      throw SyntaxError(t.line, t.col, "byte count must be 1, 2, 4 or 8");
    return static_cast<uint32_t>(n);
  }

  // --- expressions --------------------------------------------------------

  static std::optional<BinOp> binop_of(const std::string& s) {
    if (s == "+") return BinOp::Add;
    if (s == "-") return BinOp::Sub;
    if (s == "*") return BinOp::Mul;
    if (s == "/u") return BinOp::UDiv;
    if (s == "&") return BinOp::And;
    if (s == "|") return BinOp::Or;
    if (s == "^") return BinOp::Xor;
    if (s == "<<") return BinOp::Shl;
    if (s == ">>") return BinOp::Shr;
    if (s == "::") return BinOp::Concat;
    if (s == "=") return BinOp::Eq;
    if (s == "<u") return BinOp::Ult;
    if (s == "<s") return BinOp::Slt;
    return std::nullopt;
  }

  ExprPtr parse_expr(Line& ln) { return parse_primary(ln); }

  // A parenthesized form holds either one binary application `(a OP b)`,
  // one unary application `(op a)`, or a grouped expression `(a)`.
  ExprPtr parse_paren(Line& ln) {
    const Token& head = peek(ln);
    if (head.kind == Token::Kind::Ident &&
        (head.text == "neg" || head.text == "not" || head.text == "zext" || head.text == "sext" ||
         head.text == "extract")) {
      take(ln);
      uint32_t p0 = 0, p1 = 0;
      UnOp op;
      if (head.text == "neg") {
        op = UnOp::Neg;
      } else if (head.text == "not") {
        op = UnOp::Not;
      } else if (head.text == "extract") {
        op = UnOp::Extract;
        expect(ln, ":");
        p0 = static_cast<uint32_t>(expect_num(ln, "extract high bit"));
        expect(ln, ":");
        p1 = static_cast<uint32_t>(expect_num(ln, "extract low bit"));
      } else {
        op = head.text == "zext" ? UnOp::ZExt : UnOp::SExt;
        expect(ln, ":");
        p0 = static_cast<uint32_t>(expect_num(ln, "extension width"));
      }
      ExprPtr a = parse_primary(ln);
      expect(ln, ")");
      try {
        return Expr::unop(op, p0, p1, std::move(a));
      } catch (const WidthError& e) {
        throw SyntaxError(head.line, head.col, e.what());
      }
    }
    ExprPtr a = parse_primary(ln);
    if (accept(ln, ")")) return a;
    const Token& op_tok = take(ln);
    auto op = op_tok.kind == Token::Kind::Punct ? binop_of(op_tok.text) : std::nullopt;
    if (!op) throw SyntaxError(op_tok.line, op_tok.col, "expected binary operator");
    // Operators may carry a redundant width annotation, e.g. `-32`.
    if (peek(ln).kind == Token::Kind::Num && width_annotation_follows(ln)) {
      uint32_t w = static_cast<uint32_t>(take(ln).num);
      if (w != width_of(*a))
        throw WidthError("operator width annotation " + std::to_string(w) +
                         " does not match operand width " + std::to_string(width_of(*a)));
    }
    ExprPtr b = parse_primary(ln);
    expect(ln, ")");
    return Expr::binop(*op, std::move(a), std::move(b));
  }

  // Distinguishes `(a -32 8:32)` (annotated minus) from `(a - 8:32)`:
  // an annotation is a number immediately followed by another operand token.
  bool width_annotation_follows(Line& ln) {
    const Token& n = ln.toks[ln.at];
    if (n.kind != Token::Kind::Num || (n.num != 1 && n.num != 8 && n.num != 16 && n.num != 32 && n.num != 64))
      return false;
    const Token& after = ln.toks[ln.at + 1];
    if (after.kind == Token::Kind::Punct && (after.text == ":" || after.text == ")")) return false;
    return true;
  }

  ExprPtr parse_primary(Line& ln) {
    const Token& t = peek(ln);
    if (accept(ln, "(")) return parse_paren(ln);
    if (t.kind == Token::Kind::Punct && t.text == "@") {
      take(ln);
      expect(ln, "[");
      ExprPtr addr = parse_expr(ln);
      uint32_t bytes = 1;
      if (accept(ln, ",")) bytes = parse_byte_count(ln);
      expect(ln, "]");
      if (width_of(*addr) != 32)
        throw SyntaxError(t.line, t.col, "load address must have width 32, found " +
                                             std::to_string(width_of(*addr)));
      // Little-endian multi-byte load: byte at addr is least significant.
      ExprPtr acc = Expr::load(addr);
      for (uint32_t i = 1; i < bytes; i++) {
        ExprPtr bi = Expr::load(Expr::binop(BinOp::Add, addr, Expr::constant(BitVec(32, i))));
        acc = Expr::binop(BinOp::Concat, std::move(bi), std::move(acc));
      }
      return acc;
    }
    if (t.kind == Token::Kind::Num) {
      take(ln);
      expect(ln, ":");
      uint32_t w = static_cast<uint32_t>(expect_num(ln, "constant width"));
      if (!is_valid_width(w))
        throw WidthError("constant width " + std::to_string(w) + " not in {1,8,16,32,64}");
      if (w < 64 && t.num >= (uint64_t{1} << w))
        throw SyntaxError(t.line, t.col, "constant does not fit in width " + std::to_string(w));
      return Expr::constant(BitVec(w, t.num));
    }
    if (t.kind == Token::Kind::Ident) {
      take(ln);
      uint32_t w;
      if (accept(ln, ":")) {
        w = static_cast<uint32_t>(expect_num(ln, "variable width"));
      } else {
        auto it = prog_.reg_widths.find(t.text);
        if (it == prog_.reg_widths.end())
          throw SyntaxError(t.line, t.col,
                            "unknown width for register '" + t.text + "' (annotate as " + t.text +
                                ":<width>)");
        w = it->second;
      }
      return Expr::var(t.text, w);
    }
    throw SyntaxError(t.line, t.col, "expected expression");
  }

  const std::string& text_;
  std::vector<Line> lines_;
  Program prog_;
  bool entry_seen_ = false;
};

std::optional<int64_t> region_base(const Program& p, const InputRegion& r) {
  auto it = p.init_regs.find(r.base_reg);
  if (it == p.init_regs.end()) return std::nullopt;
  return static_cast<int64_t>(it->second.value());
}

}  // namespace

void validate_program(const Program& p) {
  if (!p.code.count(p.entry)) throw DanglingTarget(p.entry);
  for (const auto& [loc, instr] : p.code) {
    switch (instr.kind) {
      case Instr::Kind::Goto:
        if (!p.code.count(instr.target)) throw DanglingTarget(instr.target);
        break;
      case Instr::Kind::Ite:
        if (!p.code.count(instr.target)) throw DanglingTarget(instr.target);
        if (!p.code.count(instr.target_else)) throw DanglingTarget(instr.target_else);
        if (width_of(*instr.cond) != 1) throw WidthError("ite condition must have width 1");
        break;
      case Instr::Kind::Assign:
      case Instr::Kind::Store:
        // Fall-through target must exist.
        if (!p.code.count(loc + 1)) throw DanglingTarget(loc + 1);
        break;
      case Instr::Kind::DJump:
      case Instr::Kind::Halt:
        break;
    }
  }
  // Regions must be pairwise disjoint whenever their ranges are resolvable.
  std::vector<InputRegion> all = p.highs;
  all.insert(all.end(), p.lows.begin(), p.lows.end());
  for (size_t i = 0; i < all.size(); i++) {
    for (size_t j = i + 1; j < all.size(); j++) {
      const auto& a = all[i];
      const auto& b = all[j];
      auto ba = region_base(p, a);
      auto bb = region_base(p, b);
      int64_t sa, sb;
      if (ba && bb) {
        sa = *ba + a.offset;
        sb = *bb + b.offset;
      } else if (a.base_reg == b.base_reg) {
        sa = a.offset;
        sb = b.offset;
      } else {
        continue;  // not resolvable; checked again concretely at analysis setup
      }
      if (sa < sb + static_cast<int64_t>(b.length) && sb < sa + static_cast<int64_t>(a.length))
        throw std::runtime_error("input regions overlap (offsets " + std::to_string(a.offset) +
                                 " and " + std::to_string(b.offset) + ")");
    }
  }
}

Program parse_program(const std::string& text) { return Parser(text).run(); }

}  // namespace ctrel::ir
