#pragma once

#include <stdexcept>
#include <string>

#include "ctrel/ir.hpp"

namespace ctrel::ir {

struct SyntaxError : std::runtime_error {
  SyntaxError(int line, int col, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line, col;
};

struct DuplicateLocation : std::runtime_error {
  explicit DuplicateLocation(Loc loc)
      : std::runtime_error("duplicate location " + std::to_string(loc)), loc(loc) {}
  Loc loc;
};

struct DanglingTarget : std::runtime_error {
  explicit DanglingTarget(Loc loc)
      : std::runtime_error("jump target " + std::to_string(loc) + " is not a program location"),
        loc(loc) {}
  Loc loc;
};

/// Parses the textual IR format. See README for the grammar. Throws
/// SyntaxError, WidthError, DuplicateLocation or DanglingTarget.
Program parse_program(const std::string& text);

/// Re-checks all structural Program invariants; throws on violation.
/// parse_program runs this before returning.
void validate_program(const Program& p);

}  // namespace ctrel::ir
