#include "ctrel/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "ctrel/smt_writer.hpp"

namespace ctrel::solver {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

bool on_path(const std::string& exe) {
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::istringstream is(path);
  std::string dir;
  while (std::getline(is, dir, ':')) {
    if (dir.empty()) continue;
    std::error_code ec;
    fs::path cand = fs::path(dir) / exe;
    if (fs::exists(cand, ec) && ::access(cand.c_str(), X_OK) == 0) return true;
  }
  return false;
}

std::optional<std::string> find_wrapper(const std::string& argv0) {
  std::vector<fs::path> roots;
  if (!argv0.empty()) {
    std::error_code ec;
    fs::path exe = fs::canonical(argv0, ec);
    if (!ec) {
      fs::path dir = exe.parent_path();
      for (int up = 0; up < 4; up++) {
        roots.push_back(dir);
        dir = dir.parent_path();
      }
    }
  }
  roots.push_back(fs::current_path());
  for (const auto& root : roots) {
    fs::path cand = root / "tools" / "solver" / "z3smt2.mjs";
    std::error_code ec;
    if (fs::exists(cand, ec)) return cand.string();
  }
  return std::nullopt;
}

}  // namespace

SolverConfig default_solver(const std::string& argv0) {
  SolverConfig cfg;
  if (const char* env = std::getenv("CTREL_SOLVER"); env && *env) {
    cfg.command = split_ws(env);
    if (!cfg.command.empty()) return cfg;
  }
  if (on_path("z3")) {
    cfg.command = {"z3", "-in", "-smt2"};
    return cfg;
  }
  if (on_path("node")) {
    if (auto wrapper = find_wrapper(argv0)) {
      cfg.command = {"node", *wrapper};
      return cfg;
    }
  }
  throw SolverError(
      "no SMT solver found: set CTREL_SOLVER to a command speaking SMT-LIB 2 on stdin "
      "(e.g. \"z3 -in -smt2\"), or run `npm install` in tools/solver to enable the bundled "
      "backend");
}

SolverProcess::SolverProcess(SolverConfig cfg) : cfg_(std::move(cfg)) { spawn(); }

SolverProcess::~SolverProcess() { shutdown(); }

void SolverProcess::spawn() {
  if (cfg_.command.empty()) throw SolverError("empty solver command");
  int to_child[2], from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0) throw SolverCrashed("pipe failed");
  pid_t pid = fork();
  if (pid < 0) throw SolverCrashed("fork failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    std::vector<char*> argv;
    for (auto& a : cfg_.command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    std::perror("ctrel: exec solver");
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  pid_ = pid;
  to_solver_ = to_child[1];
  from_solver_ = from_child[0];
  buf_.clear();
}

void SolverProcess::shutdown() {
  if (to_solver_ >= 0) {
    // Polite exit first; the write may fail if the process already died.
    ssize_t ignored = ::write(to_solver_, "(exit)\n", 7);
    (void)ignored;
    close(to_solver_);
    to_solver_ = -1;
  }
  if (from_solver_ >= 0) {
    close(from_solver_);
    from_solver_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; i++) {
      if (waitpid(static_cast<pid_t>(pid_), &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      usleep(10000);
    }
    kill(static_cast<pid_t>(pid_), SIGKILL);
    waitpid(static_cast<pid_t>(pid_), &status, 0);
    pid_ = -1;
  }
}

void SolverProcess::restart() {
  shutdown();
  spawn();
}

bool SolverProcess::alive() {
  if (pid_ <= 0) return false;
  int status = 0;
  return waitpid(static_cast<pid_t>(pid_), &status, WNOHANG) == 0;
}

void SolverProcess::send(const std::string& text) {
  size_t off = 0;
  while (off < text.size()) {
    ssize_t n = ::write(to_solver_, text.data() + off, text.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SolverCrashed("solver stdin closed: " + std::string(strerror(errno)));
    }
    off += static_cast<size_t>(n);
  }
}

bool SolverProcess::fill_buffer(int timeout_ms) {
  pollfd pfd{from_solver_, POLLIN, 0};
  int rc = poll(&pfd, 1, timeout_ms);
  if (rc == 0) return false;
  if (rc < 0) throw SolverCrashed("poll failed");
  char chunk[4096];
  ssize_t n = ::read(from_solver_, chunk, sizeof chunk);
  if (n <= 0) throw SolverCrashed("solver stdout closed");
  buf_.append(chunk, static_cast<size_t>(n));
  return true;
}

std::string SolverProcess::read_line(int timeout_ms) {
  while (true) {
    size_t nl = buf_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buf_.substr(0, nl);
      buf_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    if (!fill_buffer(timeout_ms)) throw SolverCrashed("solver reply timed out");
  }
}

std::string SolverProcess::read_sexpr(int timeout_ms) {
  // Reads one balanced s-expression (or a bare atom line).
  size_t pos = 0;
  int depth = 0;
  bool started = false;
  while (true) {
    for (; pos < buf_.size(); pos++) {
      char c = buf_[pos];
      if (!started) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c != '(') return read_line(timeout_ms);
        started = true;
      }
      if (c == '(') depth++;
      if (c == ')') {
        depth--;
        if (depth == 0) {
          std::string s = buf_.substr(0, pos + 1);
          buf_.erase(0, pos + 1);
          return s;
        }
      }
    }
    if (!fill_buffer(timeout_ms)) throw SolverCrashed("solver reply timed out");
  }
}

SmtSession::SmtSession(SolverProcess& proc, QueryCounters* counters)
    : proc_(proc), counters_(counters) {
  if (!proc_.alive()) proc_.restart();
  std::string preamble = "(reset)\n(set-option :produce-models true)\n(set-logic QF_ABV)\n";
  if (proc_.config().query_timeout_ms > 0)
    preamble += "(set-option :timeout " + std::to_string(proc_.config().query_timeout_ms) + ")\n";
  command(preamble);
}

void SmtSession::command(const std::string& text) { proc_.send(text + "\n"); }

void SmtSession::declare_var(const std::string& name, uint32_t width) {
  if (!declared_.insert(name).second) return;
  command(smt::declare_var(name, width));
}

void SmtSession::declare_array(const std::string& name) {
  if (!declared_.insert(name).second) return;
  command(smt::declare_array(name));
}

void SmtSession::declare_for(sym::Term t) {
  std::map<std::string, uint32_t> vars;
  std::set<std::string> arrays;
  sym::collect_symbols(t, vars, arrays);
  for (const auto& [name, w] : vars) declare_var(name, w);
  for (const auto& name : arrays) declare_array(name);
}

void SmtSession::push() {
  command("(push 1)");
  depth_++;
}

void SmtSession::pop() {
  if (depth_ <= 0) throw SolverError("pop below session frame");
  command("(pop 1)");
  depth_--;
}

void SmtSession::assert_eq_true(sym::Term t) { command(smt::assert_eq_true(t)); }

void SmtSession::assert_eq(sym::Term a, sym::Term b) { command(smt::assert_eq(a, b)); }

void SmtSession::assert_distinct(sym::Term a, sym::Term b) {
  command(smt::assert_distinct(a, b));
}

void SmtSession::assert_any_distinct(const std::vector<std::pair<sym::Term, sym::Term>>& pairs) {
  if (pairs.empty()) throw SolverError("empty disjunction");
  command(smt::assert_any_distinct(pairs));
}

Sat SmtSession::check_sat(QueryKind kind) {
  if (counters_) {
    switch (kind) {
      case QueryKind::Explore: counters_->explore++; break;
      case QueryKind::Insecurity: counters_->insecurity++; break;
      case QueryKind::Other: counters_->other++; break;
    }
  }
  command("(check-sat)");
  int deadline = proc_.config().query_timeout_ms > 0 ? proc_.config().query_timeout_ms * 4 + 2000
                                                     : 120000;
  std::string line = proc_.read_line(deadline);
  if (line == "sat") return Sat::Sat;
  if (line == "unsat") return Sat::Unsat;
  if (line == "unknown" || line == "timeout") return Sat::Unknown;
  throw SolverError("unexpected solver reply: " + line);
}

namespace {

// Minimal s-expression reader for get-value replies.
struct Sexpr {
  std::string atom;
  std::vector<Sexpr> kids;
  bool is_atom() const { return kids.empty() && !atom.empty(); }
};

Sexpr parse_sexpr(const std::string& s, size_t& pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) pos++;
  Sexpr e;
  if (pos >= s.size()) return e;
  if (s[pos] == '(') {
    pos++;
    while (pos < s.size() && s[pos] != ')') {
      e.kids.push_back(parse_sexpr(s, pos));
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) pos++;
    }
    if (pos < s.size()) pos++;  // ')'
    return e;
  }
  size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '(' &&
         s[pos] != ')')
    pos++;
  e.atom = s.substr(start, pos - start);
  return e;
}

std::optional<BitVec> parse_bv_literal(const Sexpr& e, uint32_t width) {
  if (e.is_atom()) {
    const std::string& a = e.atom;
    if (a.size() > 2 && a[0] == '#' && a[1] == 'x')
      return BitVec(width, std::stoull(a.substr(2), nullptr, 16));
    if (a.size() > 2 && a[0] == '#' && a[1] == 'b')
      return BitVec(width, std::stoull(a.substr(2), nullptr, 2));
    return std::nullopt;
  }
  // (_ bvN W)
  if (e.kids.size() == 3 && e.kids[0].atom == "_" && e.kids[1].atom.rfind("bv", 0) == 0)
    return BitVec(width, std::stoull(e.kids[1].atom.substr(2)));
  return std::nullopt;
}

}  // namespace

BitVec SmtSession::value_of(sym::Term t) {
  command("(get-value (" + smt::serialize(t) + "))");
  int deadline = proc_.config().query_timeout_ms > 0 ? proc_.config().query_timeout_ms * 4 + 2000
                                                     : 120000;
  std::string reply = proc_.read_sexpr(deadline);
  if (reply.rfind("(error", 0) == 0) throw SolverError("get-value failed: " + reply);
  size_t pos = 0;
  Sexpr root = parse_sexpr(reply, pos);
  if (root.kids.size() != 1 || root.kids[0].kids.size() < 2)
    throw SolverError("malformed get-value reply: " + reply);
  auto v = parse_bv_literal(root.kids[0].kids.back(), t->width);
  if (!v) throw SolverError("cannot parse model value in: " + reply);
  return *v;
}

}  // namespace ctrel::solver
