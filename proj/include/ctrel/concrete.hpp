#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctrel/ir.hpp"

namespace ctrel::conc {

struct LeakEvent {
  enum class Kind { MemAccess, Branch, JumpTarget };
  Kind kind;
  BitVec value;

  bool operator==(const LeakEvent& o) const { return kind == o.kind && value == o.value; }
  bool operator!=(const LeakEvent& o) const { return !(*this == o); }
};

using Leakage = std::vector<LeakEvent>;

std::string to_string(const LeakEvent& e);

/// Concrete machine state: location, registers, byte memory. The memory is
/// total; unwritten addresses read as default_byte.
struct ConcState {
  ir::Loc loc = 0;
  std::map<std::string, BitVec> regs;
  std::unordered_map<uint32_t, uint8_t> mem;
  uint8_t default_byte = 0;

  uint8_t load_byte(uint32_t a) const {
    auto it = mem.find(a);
    return it == mem.end() ? default_byte : it->second;
  }
  void store_byte(uint32_t a, uint8_t v) { mem[a] = v; }
};

/// Initial state for a program: init_regs applied, all other mentioned
/// registers zeroed, empty memory.
ConcState initial_state(const ir::Program& p);

enum class RunErrorKind { StuckNoInstruction, DivisionByZero };

struct RunError {
  RunErrorKind kind;
  ir::Loc loc;
  uint64_t step = 0;
};

struct StepResult {
  ConcState state;
  Leakage leak;
  bool halted = false;
  std::optional<RunError> error;
};

/// One deterministic step. Loads and stores leak the accessed address, ite
/// leaks the 1-bit condition value, djump leaks the 32-bit target. Errors
/// halt the machine in place.
StepResult conc_step(const ir::Program& p, const ConcState& s);

struct RunResult {
  ConcState state;
  Leakage leak;
  uint64_t steps = 0;
  bool halted = false;
  std::optional<RunError> error;
};

/// Runs up to k steps, stopping early at halt or error; leakage is the
/// concatenation of the per-step leakages.
RunResult conc_run(const ir::Program& p, ConcState s0, uint64_t k);

/// Equality of all registers and of every memory byte outside the declared
/// high regions.
bool low_equivalent(const ir::Program& p, const ConcState& a, const ConcState& b);

// --- brute-force constant-time oracle --------------------------------------

struct OracleOptions {
  uint64_t k = 64;              // step bound per run
  uint32_t bits_per_byte = 8;   // each region byte ranges over its low bits
  uint32_t max_total_bits = 24; // enumeration budget guard
};

struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(uint32_t bits)
      : std::runtime_error("oracle would enumerate " + std::to_string(bits) +
                           " input bits, over budget") {}
};

struct OracleWitness {
  // Byte values for the declared regions, in declaration order
  // (all high regions first, then all low regions).
  std::vector<uint8_t> high_left;
  std::vector<uint8_t> high_right;
  std::vector<uint8_t> low_shared;
  uint64_t divergence_index = 0;  // first differing leak event
  Leakage leak_left, leak_right;
};

struct OracleVerdict {
  bool ct = true;
  std::optional<OracleWitness> witness;
  uint64_t runs = 0;
};

/// Decides constant-time up to k by exhaustive enumeration of all pairs of
/// low-equivalent initial states over the (restricted) region bytes.
/// Registers outside init_regs are fixed to zero and memory outside the
/// regions to zero, so the verdict is exact for programs whose behavior
/// depends only on the declared inputs.
OracleVerdict ct_oracle(const ir::Program& p, const OracleOptions& opt);

/// Builds the two initial states of an oracle witness (for replay/reporting).
std::pair<ConcState, ConcState> witness_states(const ir::Program& p, const OracleWitness& w);

}  // namespace ctrel::conc
