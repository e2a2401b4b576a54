#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ctrel/concrete.hpp"
#include "ctrel/ir.hpp"
#include "ctrel/solver.hpp"
#include "ctrel/symexp.hpp"

namespace ctrel::eng {

/// Analysis modes. Full is relational exploration with all three
/// optimizations; RelSE disables them; SC additionally duplicates low inputs
/// behind an input-equality precondition; SE follows a single execution and
/// performs no leak checks at all.
enum class Mode { Full, RelSE, SC, SE };

std::string to_string(Mode m);
std::optional<Mode> mode_of(const std::string& name);

struct AnalysisConfig {
  Mode mode = Mode::Full;
  bool flyrow = true;
  bool untaint = true;
  bool fault_pack = true;
  uint64_t depth = 1u << 16;       // instructions per path
  uint32_t djump_enum_bound = 16;  // enumerated targets per dynamic jump
  int solver_timeout_ms = 30000;
  double global_timeout_s = 0;  // 0 = unlimited
  bool stop_at_first = false;
  // Re-verify a sample of secure duplicated leaks on an independent solver
  // process (test builds).
  bool recheck_secure = false;
  double recheck_rate = 0.1;
  uint64_t recheck_seed = 7;

  /// Canonical flag settings for a mode.
  static AnalysisConfig preset(Mode m);
};

using LeakKind = conc::LeakEvent::Kind;

/// Concrete counterexample: one value per symbolic bitvector variable plus
/// the initial-memory bytes the replay reads.
struct Model {
  std::map<std::string, BitVec> vars;
  std::map<uint32_t, uint8_t> mem0;
};

struct Violation {
  ir::Loc loc = 0;
  LeakKind kind = LeakKind::MemAccess;
  bool packed = false;
  std::vector<ir::Loc> covered;  // leak sites grouped into this check (packed)
  std::vector<ir::Loc> trace;    // locations executed from entry, in order
  Model model;
};

enum class UnknownReason { None, Timeout, Bound, SolverUnknown, BadLocation };

std::string to_string(UnknownReason r);

struct Metrics {
  uint64_t instrs = 0;
  double instrs_per_sec = 0;
  uint64_t queries_explore = 0;
  uint64_t queries_insecurity = 0;
  uint64_t queries_total = 0;
  double time_s = 0;
  uint64_t timeouts = 0;
  uint64_t paths = 0;
  uint64_t dup_index_accesses = 0;  // read-over-write bypasses
};

struct Verdict {
  enum class Status { Secure, Insecure, Unknown };
  Status status = Status::Unknown;
  uint64_t depth = 0;      // bound the verdict holds up to
  bool exhausted = false;  // every path halted before the bound
  UnknownReason reason = UnknownReason::None;
  std::string reason_detail;
  std::vector<Violation> violations;
  Metrics metrics;
};

std::string to_string(Verdict::Status s);

/// Relational symbolic execution over one program. The heavy lifting lives
/// in step(); explore()/run() drive the depth-first search. Individual
/// pieces are public so they can be exercised directly in tests.
class Explorer {
public:
  struct PendingCheck {
    ir::Loc loc;
    LeakKind kind;
    sym::RelExpr expr;
  };

  struct State {
    ir::Loc loc = 0;
    sym::RegMap regs;
    sym::RelMemory mem;
    std::vector<sym::Term> path;  // path predicate conjuncts, width 1
    uint64_t depth = 0;
    std::vector<PendingCheck> pending;
    sym::UntaintCache untaint;
    std::vector<ir::Loc> trace;
  };

  Explorer(const ir::Program& p, AnalysisConfig cfg, solver::SolverProcess& proc);

  /// Initial symbolic state: registers from init_regs become constants,
  /// other registers fresh shared variables; high region bytes are stored as
  /// fresh pairs, low bytes as shared variables (duplicated with an equality
  /// precondition in SC mode).
  const State& initial() const { return init_; }

  sym::TermContext& ctx() { return ctx_; }

  /// Evaluates an expression, performing (or deferring) the leak check of
  /// every load address on the way.
  sym::RelExpr eval_expr(State& s, const ir::Expr& e);

  /// Leak check for one relational expression: shared expressions are secure
  /// without a query; duplicated ones cost one insecurity query.
  enum class Leak { Secure, Insecure, Unknown };
  Leak secleak(State& s, ir::Loc loc, LeakKind kind, const sym::RelExpr& e);

  /// Discharges the pending checks of the current block in one disjunctive
  /// query.
  Leak flush_checks(State& s);

  /// Executes the instruction at s.loc; returns successor states (empty on
  /// halt or error). Conditions and jump targets are leaked before forking;
  /// both sides of the pair follow the same branch.
  std::vector<State> step(State s);

  Verdict run();

  const Metrics& metrics() const { return metrics_; }
  const std::map<std::string, uint32_t>& declared_vars() const { return declared_vars_; }

private:
  struct LeakCheckOutcome {
    Leak result;
    std::optional<Violation> violation;
  };

  State make_initial();
  sym::RelExpr read_reg(State& s, const std::string& name, uint32_t width);
  LeakCheckOutcome check_pairs(State& s, ir::Loc loc, LeakKind kind,
                               const std::vector<PendingCheck>& checks, bool packed);
  void record_violation(State& s, Violation v);
  Model extract_model(const State& s);
  void note_unknown(UnknownReason r, const std::string& detail);
  void recheck_secure_leak(const State& s, const sym::RelExpr& e);
  bool timed_out() const;

  const ir::Program& prog_;
  AnalysisConfig cfg_;
  solver::SolverProcess& proc_;
  sym::TermContext ctx_;
  solver::QueryCounters counters_;
  std::unique_ptr<solver::SmtSession> session_;
  std::unique_ptr<solver::SolverProcess> recheck_proc_;
  std::map<std::string, uint32_t> declared_vars_;
  State init_;
  Metrics metrics_;
  std::vector<Violation> violations_;
  UnknownReason unknown_ = UnknownReason::None;
  std::string unknown_detail_;
  bool exhausted_ = true;
  bool stop_ = false;
  std::mt19937_64 recheck_rng_;
  std::chrono::steady_clock::time_point start_;
};

/// Runs a full analysis; convenience wrapper around Explorer.
Verdict explore(const ir::Program& p, const AnalysisConfig& cfg, solver::SolverProcess& proc);

/// Replays a violation concretely: rebuilds the two low-equivalent initial
/// states from the model and checks that their leakages diverge within
/// the traced prefix.
bool validate_violation(const ir::Program& p, const Violation& v);

/// The two concrete initial states encoded by a violation model.
std::pair<conc::ConcState, conc::ConcState> model_states(const ir::Program& p, const Model& m);

}  // namespace ctrel::eng
