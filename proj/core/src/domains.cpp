// SPDX-License-Identifier: MIT
#include "cpm/domains.hpp"

#include <algorithm>
#include <initializer_list>

#include "cpm/bug.hpp"

namespace cpm {

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

const Int& Bound::value() const {
  CPM_CHECK(inf_ == 0, "value() on an infinite bound");
  return v_;
}

std::string Bound::render() const {
  if (is_neg_inf()) return "-∞";
  if (is_pos_inf()) return "+∞";
  return v_.str();
}

Bound min(const Bound& a, const Bound& b) { return a < b ? a : b; }
Bound max(const Bound& a, const Bound& b) { return a < b ? b : a; }

namespace {

int sign_of(const Bound& b) {
  if (b.is_neg_inf()) return -1;
  if (b.is_pos_inf()) return +1;
  if (b.value() < 0) return -1;
  return b.value() > 0 ? +1 : 0;
}

Bound inf_of_sign(int s) {
  return s < 0 ? Bound::neg_inf() : Bound::pos_inf();
}

Bound b_neg(const Bound& b) {
  if (b.is_neg_inf()) return Bound::pos_inf();
  if (b.is_pos_inf()) return Bound::neg_inf();
  return Bound::finite(-b.value());
}

Bound b_add(const Bound& a, const Bound& b) {
  if (a.is_infinite()) {
    CPM_CHECK(!b.is_infinite() || sign_of(a) == sign_of(b),
              "adding opposite infinities");
    return a;
  }
  if (b.is_infinite()) return b;
  return Bound::finite(a.value() + b.value());
}

// 0·∞ = 0: sound for interval corners, since a zero endpoint contributes
// the exact product 0 regardless of the other factor.
Bound b_mul(const Bound& a, const Bound& b) {
  if ((a.is_finite() && a.value() == 0) || (b.is_finite() && b.value() == 0))
    return Bound::finite(0);
  if (a.is_infinite() || b.is_infinite())
    return inf_of_sign(sign_of(a) * sign_of(b));
  return Bound::finite(a.value() * b.value());
}

// One corner of a division: the divisor corner comes from an all-negative or
// all-positive divisor part, never zero.  An infinite divisor corner gives 0
// for finite dividends (truncation lands on 0 once |divisor| > |dividend|,
// and the part reaches such divisors); infinite/infinite corners are skipped
// by the caller.
Bound b_quot(const Bound& x, const Bound& y) {
  if (y.is_infinite()) {
    CPM_CHECK(x.is_finite(), "infinite/infinite division corner");
    return Bound::finite(0);
  }
  if (x.is_infinite()) return inf_of_sign(sign_of(x) * sign_of(y));
  return Bound::finite(int_div(x.value(), y.value()));
}

Bound b_magnitude(const Bound& b) {
  if (b.is_infinite()) return Bound::pos_inf();
  return Bound::finite(b.value() < 0 ? -b.value() : b.value());
}

}  // namespace

// ---------------------------------------------------------------------------
// AbsInt
// ---------------------------------------------------------------------------

AbsInt AbsInt::interval(Bound lo, Bound hi) {
  if (hi < lo) return bottom();
  CPM_CHECK(!lo.is_pos_inf() && !hi.is_neg_inf(), "degenerate interval");
  AbsInt r;
  r.bottom_ = false;
  r.lo_ = std::move(lo);
  r.hi_ = std::move(hi);
  return r;
}

AbsInt AbsInt::singleton(const Int& v) {
  return interval(Bound::finite(v), Bound::finite(v));
}

AbsInt AbsInt::at_least(const Int& lo) {
  return interval(Bound::finite(lo), Bound::pos_inf());
}

AbsInt AbsInt::at_most(const Int& hi) {
  return interval(Bound::neg_inf(), Bound::finite(hi));
}

const Bound& AbsInt::lo() const {
  CPM_CHECK(!bottom_, "lo() of bottom interval");
  return lo_;
}

const Bound& AbsInt::hi() const {
  CPM_CHECK(!bottom_, "hi() of bottom interval");
  return hi_;
}

bool AbsInt::contains(const Int& v) const {
  if (bottom_) return false;
  Bound b = Bound::finite(v);
  return lo_ <= b && b <= hi_;
}

std::optional<Int> AbsInt::as_singleton() const {
  if (bottom_ || !lo_.is_finite() || !(lo_ == hi_)) return std::nullopt;
  return lo_.value();
}

bool leq(const AbsInt& a, const AbsInt& b) {
  if (a.bottom_) return true;
  if (b.bottom_) return false;
  return b.lo_ <= a.lo_ && a.hi_ <= b.hi_;
}

AbsInt join(const AbsInt& a, const AbsInt& b) {
  if (a.bottom_) return b;
  if (b.bottom_) return a;
  return AbsInt::interval(min(a.lo_, b.lo_), max(a.hi_, b.hi_));
}

AbsInt meet(const AbsInt& a, const AbsInt& b) {
  if (a.bottom_ || b.bottom_) return AbsInt::bottom();
  return AbsInt::interval(max(a.lo_, b.lo_), min(a.hi_, b.hi_));
}

AbsInt widen(const AbsInt& prev, const AbsInt& next) {
  if (prev.bottom_) return next;
  if (next.bottom_) return prev;
  Bound lo = next.lo_ < prev.lo_ ? Bound::neg_inf() : prev.lo_;
  Bound hi = prev.hi_ < next.hi_ ? Bound::pos_inf() : prev.hi_;
  return AbsInt::interval(std::move(lo), std::move(hi));
}

std::string AbsInt::render() const {
  if (bottom_) return "⊥";
  if (is_top()) return "⊤";
  return "[" + lo_.render() + "," + hi_.render() + "]";
}

AbsInt a_neg(const AbsInt& a) {
  if (a.is_bottom()) return a;
  return AbsInt::interval(b_neg(a.hi()), b_neg(a.lo()));
}

bool may_be_zero(const AbsInt& a) { return a.contains(0); }

namespace {

AbsInt a_add(const AbsInt& a, const AbsInt& b) {
  return AbsInt::interval(b_add(a.lo(), b.lo()), b_add(a.hi(), b.hi()));
}

AbsInt a_sub(const AbsInt& a, const AbsInt& b) {
  return AbsInt::interval(b_add(a.lo(), b_neg(b.hi())),
                          b_add(a.hi(), b_neg(b.lo())));
}

AbsInt a_mul(const AbsInt& a, const AbsInt& b) {
  std::optional<Bound> lo, hi;
  for (const Bound& x : {a.lo(), a.hi()})
    for (const Bound& y : {b.lo(), b.hi()}) {
      Bound p = b_mul(x, y);
      lo = lo ? min(*lo, p) : p;
      hi = hi ? max(*hi, p) : p;
    }
  return AbsInt::interval(*lo, *hi);
}

// The divisor parts on either side of zero; both empty means no legal
// divisor at all and the quotient/remainder image is empty.
std::pair<AbsInt, AbsInt> divisor_parts(const AbsInt& b) {
  return {meet(b, AbsInt::at_most(-1)), meet(b, AbsInt::at_least(1))};
}

AbsInt a_div_part(const AbsInt& a, const AbsInt& part) {
  if (part.is_bottom()) return AbsInt::bottom();
  std::optional<Bound> lo, hi;
  for (const Bound& x : {a.lo(), a.hi()})
    for (const Bound& y : {part.lo(), part.hi()}) {
      if (x.is_infinite() && y.is_infinite()) continue;
      Bound q = b_quot(x, y);
      lo = lo ? min(*lo, q) : q;
      hi = hi ? max(*hi, q) : q;
    }
  CPM_CHECK(lo && hi, "no usable division corner");
  return AbsInt::interval(*lo, *hi);
}

AbsInt a_div(const AbsInt& a, const AbsInt& b) {
  auto [neg, pos] = divisor_parts(b);
  return join(a_div_part(a, neg), a_div_part(a, pos));
}

// Remainder: |r| is below both the largest divisor magnitude and the largest
// dividend magnitude, and r carries the sign of the dividend (or is zero).
AbsInt a_rem(const AbsInt& a, const AbsInt& b) {
  auto [neg, pos] = divisor_parts(b);
  if (neg.is_bottom() && pos.is_bottom()) return AbsInt::bottom();

  Bound divisor_mag = Bound::finite(0);
  if (!neg.is_bottom()) divisor_mag = b_magnitude(neg.lo());
  if (!pos.is_bottom()) divisor_mag = max(divisor_mag, b_magnitude(pos.hi()));
  if (divisor_mag.is_finite())
    divisor_mag = Bound::finite(divisor_mag.value() - 1);

  Bound cap = min(divisor_mag, max(b_magnitude(a.lo()), b_magnitude(a.hi())));
  Bound zero = Bound::finite(0);
  Bound lo = a.lo() < zero ? max(b_neg(cap), a.lo()) : zero;
  Bound hi = zero < a.hi() ? min(cap, a.hi()) : zero;
  return AbsInt::interval(lo, hi);
}

}  // namespace

AbsInt a_arith(ArithOp op, const AbsInt& a, const AbsInt& b) {
  if (a.is_bottom() || b.is_bottom()) return AbsInt::bottom();
  switch (op) {
    case ArithOp::Add: return a_add(a, b);
    case ArithOp::Sub: return a_sub(a, b);
    case ArithOp::Mul: return a_mul(a, b);
    case ArithOp::Div: return a_div(a, b);
    case ArithOp::Rem: return a_rem(a, b);
  }
  CPM_BUG("unknown arithmetic operator");
}

// ---------------------------------------------------------------------------
// AbsBool
// ---------------------------------------------------------------------------

bool AbsBool::contains(bool b) const {
  switch (v_) {
    case V::Bottom: return false;
    case V::False: return !b;
    case V::True: return b;
    case V::Top: return true;
  }
  CPM_BUG("unknown Boolean lattice point");
}

std::optional<bool> AbsBool::as_singleton() const {
  if (v_ == V::True) return true;
  if (v_ == V::False) return false;
  return std::nullopt;
}

bool leq(AbsBool a, AbsBool b) {
  return a.v_ == AbsBool::V::Bottom || b.v_ == AbsBool::V::Top || a.v_ == b.v_;
}

AbsBool join(AbsBool a, AbsBool b) {
  if (a.v_ == AbsBool::V::Bottom) return b;
  if (b.v_ == AbsBool::V::Bottom) return a;
  if (a.v_ == b.v_) return a;
  return AbsBool::top();
}

AbsBool meet(AbsBool a, AbsBool b) {
  if (a.v_ == AbsBool::V::Top) return b;
  if (b.v_ == AbsBool::V::Top) return a;
  if (a.v_ == b.v_) return a;
  return AbsBool::bottom();
}

std::string AbsBool::render() const {
  switch (v_) {
    case V::Bottom: return "⊥";
    case V::False: return "{ff}";
    case V::True: return "{tt}";
    case V::Top: return "⊤";
  }
  CPM_BUG("unknown Boolean lattice point");
}

AbsBool a_not(AbsBool a) {
  switch (a.v()) {
    case AbsBool::V::Bottom: return AbsBool::bottom();
    case AbsBool::V::False: return AbsBool::of(true);
    case AbsBool::V::True: return AbsBool::of(false);
    case AbsBool::V::Top: return AbsBool::top();
  }
  CPM_BUG("unknown Boolean lattice point");
}

// A definite ff (resp. tt) operand decides a conjunction (resp. disjunction)
// outright; γ still covers the concrete image, so this sharpening is sound.
AbsBool a_and(AbsBool a, AbsBool b) {
  if (a.is_bottom() || b.is_bottom()) return AbsBool::bottom();
  if (a == AbsBool::of(false) || b == AbsBool::of(false))
    return AbsBool::of(false);
  if (a == AbsBool::of(true) && b == AbsBool::of(true))
    return AbsBool::of(true);
  return AbsBool::top();
}

AbsBool a_or(AbsBool a, AbsBool b) {
  if (a.is_bottom() || b.is_bottom()) return AbsBool::bottom();
  if (a == AbsBool::of(true) || b == AbsBool::of(true))
    return AbsBool::of(true);
  if (a == AbsBool::of(false) && b == AbsBool::of(false))
    return AbsBool::of(false);
  return AbsBool::top();
}

AbsBool a_cmp(CmpOp op, const AbsInt& a, const AbsInt& b) {
  if (a.is_bottom() || b.is_bottom()) return AbsBool::bottom();

  auto singletons_equal = [&] {
    auto x = a.as_singleton();
    auto y = b.as_singleton();
    return x && y && *x == *y;
  };
  auto decide = [](bool when_true, bool when_false) {
    if (when_true) return AbsBool::of(true);
    if (when_false) return AbsBool::of(false);
    return AbsBool::top();
  };

  switch (op) {
    case CmpOp::Eq:
      return decide(singletons_equal(), meet(a, b).is_bottom());
    case CmpOp::Ne:
      return decide(meet(a, b).is_bottom(), singletons_equal());
    case CmpOp::Lt:
      return decide(a.hi() < b.lo(), b.hi() <= a.lo());
    case CmpOp::Le:
      return decide(a.hi() <= b.lo(), b.hi() < a.lo());
    case CmpOp::Ge:
      return decide(b.hi() <= a.lo(), a.hi() < b.lo());
    case CmpOp::Gt:
      return decide(b.hi() < a.lo(), a.hi() <= b.lo());
  }
  CPM_BUG("unknown comparison operator");
}

// ---------------------------------------------------------------------------
// AbsRts
// ---------------------------------------------------------------------------

AbsRts AbsRts::top() {
  AbsRts r;
  r.top_ = true;
  return r;
}

AbsRts AbsRts::singleton(std::string_view name) {
  AbsRts r;
  r.names_.emplace(name);
  return r;
}

bool AbsRts::contains(std::string_view name) const {
  return top_ || names_.find(name) != names_.end();
}

bool leq(const AbsRts& a, const AbsRts& b) {
  if (b.top_) return true;
  if (a.top_) return false;
  return std::includes(b.names_.begin(), b.names_.end(), a.names_.begin(),
                       a.names_.end());
}

AbsRts join(const AbsRts& a, const AbsRts& b) {
  if (a.top_ || b.top_) return AbsRts::top();
  AbsRts r = a;
  r.names_.insert(b.names_.begin(), b.names_.end());
  return r;
}

AbsRts meet(const AbsRts& a, const AbsRts& b) {
  if (a.top_) return b;
  if (b.top_) return a;
  AbsRts r;
  std::set_intersection(a.names_.begin(), a.names_.end(), b.names_.begin(),
                        b.names_.end(),
                        std::inserter(r.names_, r.names_.end()));
  return r;
}

std::string AbsRts::render() const {
  if (top_) return "⊤";
  if (names_.empty()) return "⊥";
  std::string out = "{";
  for (const auto& n : names_) {
    if (out.size() > 1) out += ",";
    out += n;
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// AbsSVal
// ---------------------------------------------------------------------------

AbsSVal AbsSVal::of(const SVal& v) {
  if (const Int* n = std::get_if<Int>(&v))
    return of_int(AbsInt::singleton(*n));
  return of_bool(AbsBool::of(std::get<bool>(v)));
}

AbsSVal AbsSVal::top_of(SType t) {
  return t == SType::Integer ? of_int(AbsInt::top()) : of_bool(AbsBool::top());
}

bool AbsSVal::contains(const SVal& v) const {
  if (const Int* n = std::get_if<Int>(&v)) return i.contains(*n);
  return b.contains(std::get<bool>(v));
}

AbsSVal AbsSVal::restrict_to(SType t) const {
  return t == SType::Integer ? of_int(i) : of_bool(b);
}

std::string AbsSVal::render() const {
  if (is_bottom()) return "⊥";
  if (i.is_top() && b.is_top()) return "⊤";
  if (b.is_bottom()) return i.render();
  if (i.is_bottom()) return b.render();
  return i.render() + "∪" + b.render();
}

bool leq(const AbsSVal& a, const AbsSVal& b) {
  return leq(a.i, b.i) && leq(a.b, b.b);
}

AbsSVal join(const AbsSVal& a, const AbsSVal& b) {
  return {join(a.i, b.i), join(a.b, b.b)};
}

AbsSVal meet(const AbsSVal& a, const AbsSVal& b) {
  return {meet(a.i, b.i), meet(a.b, b.b)};
}

AbsSVal widen(const AbsSVal& prev, const AbsSVal& next) {
  return {widen(prev.i, next.i), widen(prev.b, next.b)};
}

// ---------------------------------------------------------------------------
// AbsExcept
// ---------------------------------------------------------------------------

AbsExcept AbsExcept::of(const Except& x) {
  if (const RtsExc* r = std::get_if<RtsExc>(&x))
    return {AbsRts::singleton(r->name), AbsSVal::bottom()};
  return {AbsRts::bottom(), AbsSVal::of(std::get<SVal>(x))};
}

bool AbsExcept::contains(const Except& x) const {
  if (const RtsExc* r = std::get_if<RtsExc>(&x)) return rts.contains(r->name);
  return val.contains(std::get<SVal>(x));
}

std::string AbsExcept::render() const {
  if (is_bottom()) return "⊥";
  if (rts.is_top() && val.i.is_top() && val.b.is_top()) return "⊤";
  if (val.is_bottom()) return rts.render();
  if (rts.is_bottom()) return val.render();
  return rts.render() + "∪" + val.render();
}

bool leq(const AbsExcept& a, const AbsExcept& b) {
  return leq(a.rts, b.rts) && leq(a.val, b.val);
}

AbsExcept join(const AbsExcept& a, const AbsExcept& b) {
  return {join(a.rts, b.rts), join(a.val, b.val)};
}

AbsExcept meet(const AbsExcept& a, const AbsExcept& b) {
  return {meet(a.rts, b.rts), meet(a.val, b.val)};
}

AbsExcept widen(const AbsExcept& prev, const AbsExcept& next) {
  return {widen(prev.rts, next.rts), widen(prev.val, next.val)};
}

}  // namespace cpm
