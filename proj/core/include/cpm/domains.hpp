// SPDX-License-Identifier: MIT
#ifndef CPM_DOMAINS_HPP
#define CPM_DOMAINS_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "cpm/ast.hpp"
#include "cpm/ints.hpp"
#include "cpm/memory.hpp"

// Abstract value domains: intervals over unbounded integers, a four-point
// Boolean lattice, sets of run-time-system exception names, and their
// pairings.  Every operation is strict (bottom in, bottom out) and pure.

namespace cpm {

// ---------------------------------------------------------------------------
// Interval endpoints: an unbounded integer or one of the two infinities.
// ---------------------------------------------------------------------------

class Bound {
 public:
  static Bound neg_inf() { return Bound(-1, 0); }
  static Bound pos_inf() { return Bound(+1, 0); }
  static Bound finite(Int v) { return Bound(0, std::move(v)); }

  bool is_neg_inf() const { return inf_ < 0; }
  bool is_pos_inf() const { return inf_ > 0; }
  bool is_finite() const { return inf_ == 0; }
  bool is_infinite() const { return inf_ != 0; }

  // Valid only when finite.
  const Int& value() const;

  // Total order: −∞ < every integer < +∞.
  friend bool operator==(const Bound& a, const Bound& b) {
    return a.inf_ == b.inf_ && (a.inf_ != 0 || a.v_ == b.v_);
  }
  friend bool operator<(const Bound& a, const Bound& b) {
    if (a.inf_ != b.inf_) return a.inf_ < b.inf_;
    return a.inf_ == 0 && a.v_ < b.v_;
  }
  friend bool operator<=(const Bound& a, const Bound& b) { return !(b < a); }
  friend bool operator>(const Bound& a, const Bound& b) { return b < a; }
  friend bool operator>=(const Bound& a, const Bound& b) { return !(a < b); }

  std::string render() const;  // "-∞", "+∞", or the decimal value

 private:
  Bound(int inf, Int v) : inf_(inf), v_(std::move(v)) {}

  int inf_;  // −1, 0, +1
  Int v_;    // meaningful only when inf_ == 0
};

Bound min(const Bound& a, const Bound& b);
Bound max(const Bound& a, const Bound& b);

// ---------------------------------------------------------------------------
// Integer intervals with infinite endpoints.
// ---------------------------------------------------------------------------

class AbsInt {
 public:
  // Default-constructed is bottom: the natural start of a join accumulation.
  AbsInt() = default;

  static AbsInt bottom() { return AbsInt(); }
  static AbsInt top() { return interval(Bound::neg_inf(), Bound::pos_inf()); }
  static AbsInt interval(Bound lo, Bound hi);
  static AbsInt singleton(const Int& v);
  static AbsInt at_least(const Int& lo);  // [lo, +∞]
  static AbsInt at_most(const Int& hi);   // [−∞, hi]

  bool is_bottom() const { return bottom_; }
  bool is_top() const {
    return !bottom_ && lo_.is_neg_inf() && hi_.is_pos_inf();
  }

  // Valid only when not bottom.
  const Bound& lo() const;
  const Bound& hi() const;

  bool contains(const Int& v) const;  // γ-membership
  std::optional<Int> as_singleton() const;

  friend bool leq(const AbsInt& a, const AbsInt& b);
  friend AbsInt join(const AbsInt& a, const AbsInt& b);
  friend AbsInt meet(const AbsInt& a, const AbsInt& b);

  // prev ∇ next: keeps the stable endpoints of prev, sends endpoints that
  // next pushes outward to the corresponding infinity.
  friend AbsInt widen(const AbsInt& prev, const AbsInt& next);

  std::string render() const;  // "⊥", "⊤", or "[lo,hi]"

  friend bool operator==(const AbsInt& a, const AbsInt& b) {
    if (a.bottom_ != b.bottom_) return false;
    return a.bottom_ || (a.lo_ == b.lo_ && a.hi_ == b.hi_);
  }

 private:
  bool bottom_ = true;
  Bound lo_ = Bound::neg_inf();
  Bound hi_ = Bound::pos_inf();
};

// Arithmetic, sound over the concrete image (divisions quantify over nonzero
// divisors only; an empty image gives bottom).
AbsInt a_neg(const AbsInt& a);
AbsInt a_arith(ArithOp op, const AbsInt& a, const AbsInt& b);

// 0 ∝ a: whether a division by a value from this interval can trap.
bool may_be_zero(const AbsInt& a);

// ---------------------------------------------------------------------------
// Four-point Boolean lattice.
// ---------------------------------------------------------------------------

class AbsBool {
 public:
  enum class V : std::uint8_t { Bottom, False, True, Top };

  AbsBool() = default;  // bottom

  static AbsBool bottom() { return AbsBool(V::Bottom); }
  static AbsBool top() { return AbsBool(V::Top); }
  static AbsBool of(bool b) { return AbsBool(b ? V::True : V::False); }

  V v() const { return v_; }
  bool is_bottom() const { return v_ == V::Bottom; }
  bool is_top() const { return v_ == V::Top; }

  bool contains(bool b) const;
  std::optional<bool> as_singleton() const;

  friend bool leq(AbsBool a, AbsBool b);
  friend AbsBool join(AbsBool a, AbsBool b);
  friend AbsBool meet(AbsBool a, AbsBool b);
  friend AbsBool widen(AbsBool prev, AbsBool next) { return join(prev, next); }

  std::string render() const;  // "⊥", "{ff}", "{tt}", "⊤"

  friend bool operator==(AbsBool a, AbsBool b) { return a.v_ == b.v_; }

 private:
  explicit AbsBool(V v) : v_(v) {}

  V v_ = V::Bottom;
};

AbsBool a_not(AbsBool a);
AbsBool a_and(AbsBool a, AbsBool b);
AbsBool a_or(AbsBool a, AbsBool b);

// Comparison of intervals: a definite answer only when it is uniform over
// every pair of concrete values.
AbsBool a_cmp(CmpOp op, const AbsInt& a, const AbsInt& b);

// ---------------------------------------------------------------------------
// Run-time-system exception names: a finite set, or "any RTS exception".
// ---------------------------------------------------------------------------

class AbsRts {
 public:
  AbsRts() = default;  // bottom (empty set)

  static AbsRts bottom() { return AbsRts(); }
  static AbsRts top();
  static AbsRts singleton(std::string_view name);

  bool is_bottom() const { return !top_ && names_.empty(); }
  bool is_top() const { return top_; }
  const std::set<std::string, std::less<>>& names() const { return names_; }

  bool contains(std::string_view name) const;

  friend bool leq(const AbsRts& a, const AbsRts& b);
  friend AbsRts join(const AbsRts& a, const AbsRts& b);
  friend AbsRts meet(const AbsRts& a, const AbsRts& b);
  friend AbsRts widen(const AbsRts& prev, const AbsRts& next) {
    return join(prev, next);
  }

  std::string render() const;  // "⊥", "⊤", or "{name,name}"

  friend bool operator==(const AbsRts&, const AbsRts&) = default;

 private:
  bool top_ = false;
  std::set<std::string, std::less<>> names_;
};

// ---------------------------------------------------------------------------
// Storable values: the integer and Boolean components side by side.  Bottom
// iff both components are bottom.
// ---------------------------------------------------------------------------

struct AbsSVal {
  AbsInt i;
  AbsBool b;

  static AbsSVal bottom() { return {}; }
  static AbsSVal top() { return {AbsInt::top(), AbsBool::top()}; }
  static AbsSVal of_int(AbsInt v) { return {std::move(v), AbsBool::bottom()}; }
  static AbsSVal of_bool(AbsBool v) { return {AbsInt::bottom(), v}; }
  static AbsSVal of(const SVal& v);  // α on a singleton
  static AbsSVal top_of(SType t);

  bool is_bottom() const { return i.is_bottom() && b.is_bottom(); }
  bool contains(const SVal& v) const;

  // The component of the given type, the other dropped to bottom.
  AbsSVal restrict_to(SType t) const;

  std::string render() const;

  friend bool operator==(const AbsSVal&, const AbsSVal&) = default;
};

bool leq(const AbsSVal& a, const AbsSVal& b);
AbsSVal join(const AbsSVal& a, const AbsSVal& b);
AbsSVal meet(const AbsSVal& a, const AbsSVal& b);
AbsSVal widen(const AbsSVal& prev, const AbsSVal& next);

// ---------------------------------------------------------------------------
// Exceptions in flight: RTS names alongside thrown storable values.  Bottom
// iff both components are bottom.
// ---------------------------------------------------------------------------

struct AbsExcept {
  AbsRts rts;
  AbsSVal val;

  static AbsExcept bottom() { return {}; }
  static AbsExcept top() { return {AbsRts::top(), AbsSVal::top()}; }
  static AbsExcept of(const Except& x);  // α on a singleton

  bool is_bottom() const { return rts.is_bottom() && val.is_bottom(); }
  bool contains(const Except& x) const;

  std::string render() const;

  friend bool operator==(const AbsExcept&, const AbsExcept&) = default;
};

bool leq(const AbsExcept& a, const AbsExcept& b);
AbsExcept join(const AbsExcept& a, const AbsExcept& b);
AbsExcept meet(const AbsExcept& a, const AbsExcept& b);
AbsExcept widen(const AbsExcept& prev, const AbsExcept& next);

}  // namespace cpm

#endif  // CPM_DOMAINS_HPP
