#include "ctrel/smt_writer.hpp"

#include <sstream>
#include <unordered_map>

namespace ctrel::smt {

namespace {

const char* binop_smt(ir::BinOp op) {
  switch (op) {
    case ir::BinOp::Add: return "bvadd";
    case ir::BinOp::Sub: return "bvsub";
    case ir::BinOp::Mul: return "bvmul";
    case ir::BinOp::UDiv: return "bvudiv";
    case ir::BinOp::And: return "bvand";
    case ir::BinOp::Or: return "bvor";
    case ir::BinOp::Xor: return "bvxor";
    case ir::BinOp::Shl: return "bvshl";
    case ir::BinOp::Shr: return "bvlshr";
    case ir::BinOp::Concat: return "concat";
    default: return nullptr;  // comparisons handled separately
  }
}

/// Serializer with let extraction. Shared non-leaf nodes become sequential
/// let bindings in first-complete (post-order) order, so inner bindings are
/// available to outer ones.
class Writer {
public:
  std::string run(sym::Term root) {
    count_term(root);
    std::ostringstream body;
    emit_term(body, root);
    std::ostringstream out;
    for (const auto& b : bindings_) out << "(let ((" << b.first << " " << b.second << ")) ";
    out << body.str();
    for (size_t i = 0; i < bindings_.size(); i++) out << ")";
    return out.str();
  }

private:
  void count_term(sym::Term t) {
    auto& c = term_refs_[t];
    if (++c > 1) return;
    switch (t->kind) {
      case sym::TermKind::Const:
      case sym::TermKind::Var:
        break;
      case sym::TermKind::Un:
        count_term(t->a);
        break;
      case sym::TermKind::Bin:
        count_term(t->a);
        count_term(t->b);
        break;
      case sym::TermKind::Select:
        count_term(t->a);
        count_array(t->arr);
        break;
    }
  }

  void count_array(sym::ArrayTerm a) {
    auto& c = array_refs_[a];
    if (++c > 1) return;
    if (a->is_store) {
      count_array(a->base);
      count_term(a->idx);
      count_term(a->val);
    }
  }

  bool leaf(sym::Term t) const {
    return t->kind == sym::TermKind::Const || t->kind == sym::TermKind::Var;
  }

  void emit_term(std::ostream& os, sym::Term t) {
    if (!leaf(t)) {
      auto it = term_names_.find(t);
      if (it != term_names_.end()) {
        os << it->second;
        return;
      }
    }
    std::ostringstream s;
    emit_term_body(s, t);
    if (!leaf(t) && term_refs_[t] > 1) {
      std::string name = "$t" + std::to_string(bindings_.size());
      bindings_.emplace_back(name, s.str());
      term_names_.emplace(t, name);
      os << name;
    } else {
      os << s.str();
    }
  }

  void emit_term_body(std::ostream& os, sym::Term t) {
    switch (t->kind) {
      case sym::TermKind::Const:
        os << bitvec_literal(t->cst);
        return;
      case sym::TermKind::Var:
        os << t->name;
        return;
      case sym::TermKind::Un:
        switch (t->un) {
          case ir::UnOp::Neg:
            os << "(bvneg ";
            emit_term(os, t->a);
            os << ")";
            return;
          case ir::UnOp::Not:
            os << "(bvnot ";
            emit_term(os, t->a);
            os << ")";
            return;
          case ir::UnOp::ZExt:
          case ir::UnOp::SExt:
            os << "((_ " << (t->un == ir::UnOp::ZExt ? "zero_extend" : "sign_extend") << " "
               << (t->p0 - t->a->width) << ") ";
            emit_term(os, t->a);
            os << ")";
            return;
          case ir::UnOp::Extract:
            os << "((_ extract " << t->p0 << " " << t->p1 << ") ";
            emit_term(os, t->a);
            os << ")";
            return;
        }
        return;
      case sym::TermKind::Bin: {
        if (t->bin == ir::BinOp::Eq || t->bin == ir::BinOp::Ult || t->bin == ir::BinOp::Slt) {
          const char* pred = t->bin == ir::BinOp::Eq ? "=" : t->bin == ir::BinOp::Ult ? "bvult"
                                                                                      : "bvslt";
          os << "(ite (" << pred << " ";
          emit_term(os, t->a);
          os << " ";
          emit_term(os, t->b);
          os << ") #b1 #b0)";
          return;
        }
        os << "(" << binop_smt(t->bin) << " ";
        emit_term(os, t->a);
        os << " ";
        emit_term(os, t->b);
        os << ")";
        return;
      }
      case sym::TermKind::Select:
        os << "(select ";
        emit_array(os, t->arr);
        os << " ";
        emit_term(os, t->a);
        os << ")";
        return;
    }
  }

  void emit_array(std::ostream& os, sym::ArrayTerm a) {
    if (a->is_store) {
      auto it = array_names_.find(a);
      if (it != array_names_.end()) {
        os << it->second;
        return;
      }
      std::ostringstream s;
      s << "(store ";
      emit_array(s, a->base);
      s << " ";
      emit_term(s, a->idx);
      s << " ";
      emit_term(s, a->val);
      s << ")";
      if (array_refs_[a] > 1) {
        std::string name = "$a" + std::to_string(bindings_.size());
        bindings_.emplace_back(name, s.str());
        array_names_.emplace(a, name);
        os << name;
      } else {
        os << s.str();
      }
      return;
    }
    os << a->name;
  }

  std::unordered_map<sym::Term, int> term_refs_;
  std::unordered_map<sym::ArrayTerm, int> array_refs_;
  std::unordered_map<sym::Term, std::string> term_names_;
  std::unordered_map<sym::ArrayTerm, std::string> array_names_;
  std::vector<std::pair<std::string, std::string>> bindings_;
};

}  // namespace

std::string bitvec_literal(const BitVec& v) {
  std::ostringstream os;
  if (v.width() % 4 == 0) {
    os << "#x";
    for (int d = static_cast<int>(v.width()) / 4 - 1; d >= 0; d--)
      os << "0123456789abcdef"[(v.value() >> (4 * d)) & 0xf];
  } else {
    os << "#b";
    for (int i = static_cast<int>(v.width()) - 1; i >= 0; i--) os << ((v.value() >> i) & 1);
  }
  return os.str();
}

std::string serialize(sym::Term t) { return Writer().run(t); }

std::string declare_var(const std::string& name, uint32_t width) {
  return "(declare-const " + name + " (_ BitVec " + std::to_string(width) + "))";
}

std::string declare_array(const std::string& name) {
  return "(declare-const " + name + " (Array (_ BitVec 32) (_ BitVec 8)))";
}

std::string assert_eq_true(sym::Term t) {
  if (t->width != 1) throw ir::WidthError("asserted term must have width 1");
  return "(assert (= " + serialize(t) + " #b1))";
}

std::string assert_eq(sym::Term a, sym::Term b) {
  return "(assert (= " + serialize(a) + " " + serialize(b) + "))";
}

std::string assert_distinct(sym::Term a, sym::Term b) {
  return "(assert (distinct " + serialize(a) + " " + serialize(b) + "))";
}

std::string assert_any_distinct(const std::vector<std::pair<sym::Term, sym::Term>>& pairs) {
  if (pairs.size() == 1) return assert_distinct(pairs[0].first, pairs[0].second);
  std::string s = "(assert (or";
  for (const auto& [a, b] : pairs) s += " (distinct " + serialize(a) + " " + serialize(b) + ")";
  return s + "))";
}

}  // namespace ctrel::smt
