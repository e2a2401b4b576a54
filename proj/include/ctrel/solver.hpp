#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctrel/symexp.hpp"
#include "ctrel/term.hpp"

namespace ctrel::solver {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The solver process died or stopped answering; the owning analysis should
/// surface Unknown.
struct SolverCrashed : SolverError {
  using SolverError::SolverError;
};

struct SolverConfig {
  std::vector<std::string> command;  // argv of an SMT-LIB 2 solver reading stdin
  int query_timeout_ms = 30000;      // per check-sat
};

/// Finds a usable solver command: $CTREL_SOLVER, then z3 on PATH, then the
/// bundled Node.js wrapper looked up near the executable and the working
/// directory. Throws SolverError with guidance if none is found.
SolverConfig default_solver(const std::string& argv0 = "");

/// A spawned solver subprocess speaking SMT-LIB 2 on stdin/stdout.
class SolverProcess {
public:
  explicit SolverProcess(SolverConfig cfg);
  ~SolverProcess();
  SolverProcess(const SolverProcess&) = delete;
  SolverProcess& operator=(const SolverProcess&) = delete;

  void send(const std::string& text);
  std::string read_line(int timeout_ms);
  std::string read_sexpr(int timeout_ms);
  bool alive();
  void restart();
  const SolverConfig& config() const { return cfg_; }

private:
  void spawn();
  void shutdown();
  bool fill_buffer(int timeout_ms);

  SolverConfig cfg_;
  int64_t pid_ = -1;
  int to_solver_ = -1;
  int from_solver_ = -1;
  std::string buf_;
};

enum class Sat { Sat, Unsat, Unknown };

enum class QueryKind { Explore, Insecurity, Other };

struct QueryCounters {
  uint64_t explore = 0;
  uint64_t insecurity = 0;
  uint64_t other = 0;
  uint64_t total() const { return explore + insecurity + other; }
};

/// One logical QF_ABV session on a solver process. Construction resets the
/// solver. Declarations are tracked so symbols are declared exactly once,
/// at the frame depth current when first seen.
class SmtSession {
public:
  explicit SmtSession(SolverProcess& proc, QueryCounters* counters = nullptr);

  void declare_var(const std::string& name, uint32_t width);
  void declare_array(const std::string& name);
  /// Declares every free symbol of t not yet declared.
  void declare_for(sym::Term t);

  void push();
  void pop();
  int depth() const { return depth_; }

  void assert_eq_true(sym::Term t);
  void assert_eq(sym::Term a, sym::Term b);
  void assert_distinct(sym::Term a, sym::Term b);
  void assert_any_distinct(const std::vector<std::pair<sym::Term, sym::Term>>& pairs);

  Sat check_sat(QueryKind kind);

  /// Concrete value of t in the current model; only after a sat check_sat.
  BitVec value_of(sym::Term t);

private:
  void command(const std::string& text);  // no reply expected

  SolverProcess& proc_;
  QueryCounters* counters_;
  std::set<std::string> declared_;
  int depth_ = 0;
};

}  // namespace ctrel::solver
