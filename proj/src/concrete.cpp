#include "ctrel/concrete.hpp"

#include <algorithm>
#include <sstream>

namespace ctrel::conc {

namespace {

// Internal signal for division by zero during expression evaluation.
struct DivByZero {};

BitVec reg_value(const ConcState& s, const std::string& name, uint32_t width) {
  auto it = s.regs.find(name);
  if (it != s.regs.end()) return it->second;
  return BitVec(width, 0);
}

BitVec eval(const ConcState& s, const ir::Expr& e, Leakage& leak) {
  using ir::Expr;
  switch (e.kind) {
    case Expr::Kind::Const:
      return e.cst;
    case Expr::Kind::Var:
      return reg_value(s, e.name, e.width);
    case Expr::Kind::Load: {
      BitVec addr = eval(s, *e.a, leak);
      leak.push_back({LeakEvent::Kind::MemAccess, addr});
      return BitVec(8, s.load_byte(static_cast<uint32_t>(addr.value())));
    }
    case Expr::Kind::Un: {
      BitVec a = eval(s, *e.a, leak);
      switch (e.un) {
        case ir::UnOp::Neg: return a.neg();
        case ir::UnOp::Not: return a.not_();
        case ir::UnOp::ZExt: return a.zext(e.p0);
        case ir::UnOp::SExt: return a.sext(e.p0);
        case ir::UnOp::Extract: return a.extract(e.p0, e.p1);
      }
      break;
    }
    case Expr::Kind::Bin: {
      BitVec a = eval(s, *e.a, leak);
      BitVec b = eval(s, *e.b, leak);
      switch (e.bin) {
        case ir::BinOp::Add: return a.add(b);
        case ir::BinOp::Sub: return a.sub(b);
        case ir::BinOp::Mul: return a.mul(b);
        case ir::BinOp::UDiv:
          if (b.is_zero()) throw DivByZero{};
          return a.udiv(b);
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
  }
  throw std::logic_error("malformed expression");
}

}  // namespace

std::string to_string(const LeakEvent& e) {
  std::ostringstream os;
  switch (e.kind) {
    case LeakEvent::Kind::MemAccess: os << "mem@"; break;
    case LeakEvent::Kind::Branch: os << "branch:"; break;
    case LeakEvent::Kind::JumpTarget: os << "jump@"; break;
  }
  os << "0x" << std::hex << e.value.value();
  return os.str();
}

ConcState initial_state(const ir::Program& p) {
  ConcState s;
  s.loc = p.entry;
  for (const auto& [name, w] : p.reg_widths) s.regs.emplace(name, BitVec(w, 0));
  for (const auto& [name, v] : p.init_regs) s.regs.insert_or_assign(name, v);
  return s;
}

StepResult conc_step(const ir::Program& p, const ConcState& s) {
  StepResult r;
  r.state = s;
  const ir::Instr* instr = p.at(s.loc);
  if (!instr) {
    r.error = RunError{RunErrorKind::StuckNoInstruction, s.loc};
    r.halted = true;
    return r;
  }
  try {
    using K = ir::Instr::Kind;
    switch (instr->kind) {
      case K::Assign: {
        BitVec v = eval(s, *instr->rhs, r.leak);
        r.state.regs.insert_or_assign(instr->dst, v);
        r.state.loc = s.loc + 1;
        break;
      }
      case K::Store: {
        BitVec idx = eval(s, *instr->idx, r.leak);
        BitVec val = eval(s, *instr->val, r.leak);
        r.leak.push_back({LeakEvent::Kind::MemAccess, idx});
        r.state.store_byte(static_cast<uint32_t>(idx.value()), static_cast<uint8_t>(val.value()));
        r.state.loc = s.loc + 1;
        break;
      }
      case K::Goto:
        r.state.loc = instr->target;
        break;
      case K::DJump: {
        BitVec tgt = eval(s, *instr->jump, r.leak);
        r.leak.push_back({LeakEvent::Kind::JumpTarget, tgt});
        r.state.loc = static_cast<ir::Loc>(tgt.value());
        break;
      }
      case K::Ite: {
        BitVec c = eval(s, *instr->cond, r.leak);
        r.leak.push_back({LeakEvent::Kind::Branch, c});
        r.state.loc = c.is_zero() ? instr->target_else : instr->target;
        break;
      }
      case K::Halt:
        r.halted = true;
        break;
    }
  } catch (const DivByZero&) {
    // Partial leakage of the faulting instruction is discarded; the machine
    // halts in the pre-instruction state.
    r.state = s;
    r.leak.clear();
    r.error = RunError{RunErrorKind::DivisionByZero, s.loc};
    r.halted = true;
  }
  return r;
}

RunResult conc_run(const ir::Program& p, ConcState s0, uint64_t k) {
  RunResult r;
  r.state = std::move(s0);
  for (uint64_t i = 0; i < k; i++) {
    StepResult st = conc_step(p, r.state);
    r.leak.insert(r.leak.end(), st.leak.begin(), st.leak.end());
    r.state = std::move(st.state);
    if (st.error) {
      r.error = st.error;
      r.error->step = i;
      r.halted = true;
      return r;
    }
    if (st.halted) {
      r.halted = true;
      return r;
    }
    r.steps++;
  }
  return r;
}

namespace {

struct ResolvedRegion {
  uint32_t start;
  uint32_t length;
  bool high;
};

std::vector<ResolvedRegion> resolve_regions(const ir::Program& p, const ConcState& s) {
  std::vector<ResolvedRegion> out;
  auto resolve = [&](const ir::InputRegion& r) {
    auto it = s.regs.find(r.base_reg);
    if (it == s.regs.end())
      throw std::runtime_error("region base register " + r.base_reg + " has no value");
    uint32_t base = static_cast<uint32_t>(it->second.value());
    out.push_back(
        {static_cast<uint32_t>(base + static_cast<uint32_t>(r.offset)), r.length, r.high});
  };
  for (const auto& r : p.highs) resolve(r);
  for (const auto& r : p.lows) resolve(r);
  return out;
}

bool in_high(const std::vector<ResolvedRegion>& regions, uint32_t addr) {
  for (const auto& r : regions)
    if (r.high && addr - r.start < r.length) return true;
  return false;
}

}  // namespace

bool low_equivalent(const ir::Program& p, const ConcState& a, const ConcState& b) {
  if (a.regs.size() != b.regs.size()) return false;
  for (const auto& [name, v] : a.regs) {
    auto it = b.regs.find(name);
    if (it == b.regs.end() || it->second != v) return false;
  }
  auto regions = resolve_regions(p, a);
  auto check = [&](const ConcState& x, const ConcState& y) {
    for (const auto& [addr, v] : x.mem) {
      if (in_high(regions, addr)) continue;
      if (y.load_byte(addr) != v) return false;
    }
    return true;
  };
  return a.default_byte == b.default_byte && check(a, b) && check(b, a);
}

namespace {

struct RegionBytes {
  std::vector<uint32_t> high_addrs;
  std::vector<uint32_t> low_addrs;
};

RegionBytes region_bytes(const ir::Program& p, const ConcState& s) {
  RegionBytes rb;
  for (const auto& r : resolve_regions(p, s)) {
    for (uint32_t i = 0; i < r.length; i++)
      (r.high ? rb.high_addrs : rb.low_addrs).push_back(r.start + i);
  }
  return rb;
}

void write_bytes(ConcState& s, const std::vector<uint32_t>& addrs,
                 const std::vector<uint8_t>& vals) {
  for (size_t i = 0; i < addrs.size(); i++) s.store_byte(addrs[i], vals[i]);
}

// Enumerates assignments of `count` bytes, each ranging over 2^bits values.
struct ByteCounter {
  std::vector<uint8_t> bytes;
  uint32_t bits;
  bool done = false;

  ByteCounter(size_t count, uint32_t bits) : bytes(count, 0), bits(bits) {}

  void advance() {
    const uint8_t max = static_cast<uint8_t>((1u << bits) - 1);
    for (size_t i = 0; i < bytes.size(); i++) {
      if (bytes[i] != max) {
        bytes[i]++;
        return;
      }
      bytes[i] = 0;
    }
    done = true;
  }
};

}  // namespace

OracleVerdict ct_oracle(const ir::Program& p, const OracleOptions& opt) {
  ConcState base = initial_state(p);
  RegionBytes rb = region_bytes(p, base);
  uint64_t total_bits = opt.bits_per_byte * (2 * rb.high_addrs.size() + rb.low_addrs.size());
  if (total_bits > opt.max_total_bits) throw BudgetExceeded(static_cast<uint32_t>(total_bits));

  OracleVerdict verdict;
  auto run_with = [&](const std::vector<uint8_t>& lows,
                      const std::vector<uint8_t>& highs) -> Leakage {
    ConcState s = base;
    write_bytes(s, rb.low_addrs, lows);
    write_bytes(s, rb.high_addrs, highs);
    verdict.runs++;
    return conc_run(p, std::move(s), opt.k).leak;
  };

  for (ByteCounter low(rb.low_addrs.size(), opt.bits_per_byte); !low.done; low.advance()) {
    // All runs in a low-class must produce identical leakage; compare each
    // high assignment against the first one.
    std::optional<Leakage> reference;
    std::vector<uint8_t> ref_highs;
    for (ByteCounter high(rb.high_addrs.size(), opt.bits_per_byte); !high.done; high.advance()) {
      Leakage l = run_with(low.bytes, high.bytes);
      if (!reference) {
        reference = std::move(l);
        ref_highs = high.bytes;
        continue;
      }
      if (l != *reference) {
        OracleWitness w;
        w.high_left = ref_highs;
        w.high_right = high.bytes;
        w.low_shared = low.bytes;
        w.leak_left = *reference;
        w.leak_right = l;
        size_t n = std::min(reference->size(), l.size());
        size_t d = 0;
        while (d < n && (*reference)[d] == l[d]) d++;
        w.divergence_index = d;
        verdict.ct = false;
        verdict.witness = std::move(w);
        return verdict;
      }
    }
  }
  return verdict;
}

std::pair<ConcState, ConcState> witness_states(const ir::Program& p, const OracleWitness& w) {
  ConcState left = initial_state(p);
  ConcState right = left;
  RegionBytes rb = region_bytes(p, left);
  write_bytes(left, rb.low_addrs, w.low_shared);
  write_bytes(right, rb.low_addrs, w.low_shared);
  write_bytes(left, rb.high_addrs, w.high_left);
  write_bytes(right, rb.high_addrs, w.high_right);
  return {std::move(left), std::move(right)};
}

}  // namespace ctrel::conc
