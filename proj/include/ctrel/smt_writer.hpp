#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ctrel/symexp.hpp"
#include "ctrel/term.hpp"

namespace ctrel::smt {

/// SMT-LIB 2 text for a term. Subterms referenced more than once are bound
/// through nested lets, so the output is linear in the size of the DAG.
/// Serialization is deterministic: equal terms yield identical text.
std::string serialize(sym::Term t);

std::string declare_var(const std::string& name, uint32_t width);
std::string declare_array(const std::string& name);

std::string assert_eq_true(sym::Term t);  // t must have width 1
std::string assert_eq(sym::Term a, sym::Term b);
std::string assert_distinct(sym::Term a, sym::Term b);
std::string assert_any_distinct(const std::vector<std::pair<sym::Term, sym::Term>>& pairs);

std::string bitvec_literal(const BitVec& v);

}  // namespace ctrel::smt
