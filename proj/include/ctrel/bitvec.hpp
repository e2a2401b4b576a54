#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ctrel {

/// Fixed-size bitvector value, 1..64 bits, stored reduced modulo 2^width.
///
/// All operations follow SMT-LIB fixed-size bitvector semantics exactly
/// (in particular: shift amounts are unsigned full-width values, shifts of
/// width or more yield 0, and udiv by zero yields the all-ones vector).
/// The concrete interpreter, the term evaluator and the SMT backend must
/// agree on these corner cases, so keep them in one place.
class BitVec {
public:
  BitVec(uint32_t width, uint64_t value) : width_(width), value_(reduce(width, value)) {
    if (width < 1 || width > 64)
      throw std::invalid_argument("BitVec width out of range: " + std::to_string(width));
  }

  static BitVec zeros(uint32_t width) { return BitVec(width, 0); }
  static BitVec ones(uint32_t width) { return BitVec(width, ~uint64_t{0}); }
  static BitVec bit(bool b) { return BitVec(1, b ? 1 : 0); }

  uint32_t width() const { return width_; }
  uint64_t value() const { return value_; }
  bool is_zero() const { return value_ == 0; }

  /// Value sign-extended to a signed 64-bit integer.
  int64_t signed_value() const {
    if (width_ == 64) return static_cast<int64_t>(value_);
    uint64_t sign = uint64_t{1} << (width_ - 1);
    return static_cast<int64_t>((value_ ^ sign)) - static_cast<int64_t>(sign);
  }

  BitVec add(const BitVec& o) const { return same(o), BitVec(width_, value_ + o.value_); }
  BitVec sub(const BitVec& o) const { return same(o), BitVec(width_, value_ - o.value_); }
  BitVec mul(const BitVec& o) const { return same(o), BitVec(width_, value_ * o.value_); }

  /// SMT-LIB bvudiv: division by zero yields all ones.
  BitVec udiv(const BitVec& o) const {
    same(o);
    if (o.value_ == 0) return ones(width_);
    return BitVec(width_, value_ / o.value_);
  }

  BitVec and_(const BitVec& o) const { return same(o), BitVec(width_, value_ & o.value_); }
  BitVec or_(const BitVec& o) const { return same(o), BitVec(width_, value_ | o.value_); }
  BitVec xor_(const BitVec& o) const { return same(o), BitVec(width_, value_ ^ o.value_); }

  BitVec shl(const BitVec& o) const {
    same(o);
    if (o.value_ >= width_) return zeros(width_);
    return BitVec(width_, value_ << o.value_);
  }
  BitVec lshr(const BitVec& o) const {
    same(o);
    if (o.value_ >= width_) return zeros(width_);
    return BitVec(width_, value_ >> o.value_);
  }

  BitVec not_() const { return BitVec(width_, ~value_); }
  BitVec neg() const { return BitVec(width_, ~value_ + 1); }

  /// Concatenation; *this* provides the high bits.
  BitVec concat(const BitVec& o) const {
    if (width_ + o.width_ > 64)
      throw std::invalid_argument("BitVec concat exceeds 64 bits");
    return BitVec(width_ + o.width_, (value_ << o.width_) | o.value_);
  }

  BitVec extract(uint32_t hi, uint32_t lo) const {
    if (hi >= width_ || lo > hi)
      throw std::invalid_argument("BitVec extract range invalid");
    return BitVec(hi - lo + 1, value_ >> lo);
  }

  BitVec zext(uint32_t to) const {
    if (to < width_) throw std::invalid_argument("BitVec zext target smaller than width");
    return BitVec(to, value_);
  }
  BitVec sext(uint32_t to) const {
    if (to < width_) throw std::invalid_argument("BitVec sext target smaller than width");
    return BitVec(to, static_cast<uint64_t>(signed_value()));
  }

  BitVec eq(const BitVec& o) const { return same(o), bit(value_ == o.value_); }
  BitVec ult(const BitVec& o) const { return same(o), bit(value_ < o.value_); }
  BitVec slt(const BitVec& o) const { return same(o), bit(signed_value() < o.signed_value()); }

  bool operator==(const BitVec& o) const { return width_ == o.width_ && value_ == o.value_; }
  bool operator!=(const BitVec& o) const { return !(*this == o); }

  std::string to_string() const;  // "<value>:<width>", hex for wide values

private:
  static uint64_t reduce(uint32_t width, uint64_t v) {
    return width >= 64 ? v : (v & ((uint64_t{1} << width) - 1));
  }
  bool same(const BitVec& o) const {
    if (width_ != o.width_)
      throw std::invalid_argument("BitVec width mismatch: " + std::to_string(width_) + " vs " +
                                  std::to_string(o.width_));
    return true;
  }

  uint32_t width_;
  uint64_t value_;
};

}  // namespace ctrel
