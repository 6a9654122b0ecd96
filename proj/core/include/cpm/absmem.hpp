// SPDX-License-Identifier: MIT
#ifndef CPM_ABSMEM_HPP
#define CPM_ABSMEM_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpm/addr.hpp"
#include "cpm/ast.hpp"
#include "cpm/domains.hpp"
#include "cpm/env.hpp"
#include "cpm/memory.hpp"

// Abstract memory states: a machine-checkable over-approximation of sets of
// concrete memories.  The data segment maps (location, type) keys to value
// intervals; the stack is kept as a sequence of frames whose slots mirror the
// concrete stack word symbol-for-symbol as long as the analysis can afford
// to, and degrade into explicit "unknown suffix" summaries where control-flow
// joins or recursion make the exact shape unrepresentable.
//
// A non-bottom state concretizes to the set of memories (data map, word)
// where
//   - the word ends with the listed frames in order, separated by frame
//     links; `below_unknown` permits any number of additional frames below,
//     and a frame's `tail_unknown` permits an arbitrary link-free suffix
//     after its known slots;
//   - every known slot matches the corresponding word symbol (marker or
//     typed location) and the location's cell holds a value drawn from the
//     slot's value set (`maybe_invalid` waives this: the binding may be
//     missing or differently typed);
//   - every data cell's key maps to a member of its value set
//     (`maybe_absent` also allows the key to be missing), and the data map
//     holds no other non-stack keys;
//   - when the allocation counters are known they match exactly.
//
// Everything here is immutable-by-convention: operations take the state by
// value or const reference and return fresh states.

namespace cpm {

// One known position of a stack frame: either a frame marker or a typed
// cell holding an abstract value.
struct AbsSlot {
  enum class Kind : std::uint8_t { Marker, Cell };

  Kind kind = Kind::Marker;
  SType type{};   // Cell only
  AbsSVal val;    // Cell only
  bool maybe_invalid = false;  // Cell only: the backing binding may be
                               // missing or keyed at another type

  static AbsSlot marker() { return {}; }
  static AbsSlot cell(SType t, AbsSVal v, bool invalid = false) {
    AbsSlot s;
    s.kind = Kind::Cell;
    s.type = t;
    s.val = std::move(v);
    s.maybe_invalid = invalid;
    return s;
  }

  friend bool operator==(const AbsSlot&, const AbsSlot&) = default;
};

// A stack frame: the known slot prefix, plus optionally an unknown link-free
// suffix (the result of summarizing frames of different lengths).
struct AbsFrame {
  std::vector<AbsSlot> slots;
  bool tail_unknown = false;

  friend bool operator==(const AbsFrame&, const AbsFrame&) = default;
};

// A data-segment cell.
struct AbsDataCell {
  AbsSVal val;
  bool maybe_absent = false;   // the key may be missing entirely
  bool maybe_invalid = false;  // the binding may be missing or retyped

  friend bool operator==(const AbsDataCell&, const AbsDataCell&) = default;
};

class AbsMem {
 public:
  // Default-constructed is bottom.
  AbsMem() = default;

  static AbsMem bottom() { return AbsMem(); }
  static AbsMem initial(Limits lim = {});

  bool is_bottom() const { return bottom_; }

  // ---- component access (non-bottom only) ----

  const std::map<std::pair<Loc, SType>, AbsDataCell>& data() const;
  const std::vector<AbsFrame>& frames() const;
  bool below_unknown() const;
  const Limits& limits() const;
  std::optional<Loc> next_loc() const;
  std::optional<std::uint64_t> data_cells() const;

  // ---- lattice ----

  friend bool leq(const AbsMem& a, const AbsMem& b);
  friend AbsMem join(const AbsMem& a, const AbsMem& b);
  friend AbsMem widen(const AbsMem& prev, const AbsMem& next);

  std::string render() const;

  friend bool operator==(const AbsMem&, const AbsMem&) = default;

 private:
  bool bottom_ = true;
  std::map<std::pair<Loc, SType>, AbsDataCell> data_;
  std::vector<AbsFrame> frames_;  // index 0 = deepest kept frame
  bool below_unknown_ = false;
  std::optional<Loc> next_loc_;
  std::optional<std::uint64_t> data_cells_;
  Limits limits_;

  friend struct AbsMemOps;
};

// The success/failure pairing used by reads, writes and allocations.  Smash
// semantics: a bottom component means that branch is impossible.
struct AbsValState {
  AbsSVal val;  // bottom iff mem is bottom
  AbsMem mem;

  static AbsValState bottom() { return {}; }
  // Normalizing factory: if either component is bottom the whole state is.
  static AbsValState of(AbsSVal v, AbsMem m);

  bool is_bottom() const { return mem.is_bottom(); }

  std::string render() const;

  friend bool operator==(const AbsValState&, const AbsValState&) = default;
};

bool leq(const AbsValState& a, const AbsValState& b);
AbsValState join(const AbsValState& a, const AbsValState& b);
AbsValState widen(const AbsValState& prev, const AbsValState& next);

struct AbsExcState {
  AbsMem mem;
  AbsExcept ex;  // bottom iff mem is bottom

  static AbsExcState none() { return {}; }  // no exception possible
  static AbsExcState of(AbsMem m, AbsExcept x);

  bool is_bottom() const { return mem.is_bottom(); }

  std::string render() const;

  friend bool operator==(const AbsExcState&, const AbsExcState&) = default;
};

bool leq(const AbsExcState& a, const AbsExcState& b);
AbsExcState join(const AbsExcState& a, const AbsExcState& b);
AbsExcState widen(const AbsExcState& prev, const AbsExcState& next);

// ---------------------------------------------------------------------------
// Memory operations.  Every operation is strict in bottom and returns all
// possible outcome branches; a branch that cannot happen is bottom.
// ---------------------------------------------------------------------------

struct AbsReadOut {
  AbsValState ok;
  AbsExcState err;
};

struct AbsWriteOut {
  AbsMem ok;  // bottom: the write cannot succeed
  AbsExcState err;
};

struct AbsAllocDataOut {
  AbsMem ok;
  Loc loc = 0;  // meaningful only when ok is non-bottom
  AbsExcState err;
};

struct AbsAllocStackOut {
  AbsMem ok;
  Ind ind;  // meaningful only when ok is non-bottom
  AbsExcState err;
};

AbsReadOut a_read(const AbsMem& m, const Addr& a, SType t);
AbsWriteOut a_write(const AbsMem& m, const Addr& a, SType t,
                    const AbsSVal& v);
AbsAllocDataOut a_new_data(const AbsValState& vs);
AbsAllocStackOut a_new_stack(const AbsValState& vs);

// Frame protocol.  Protocol violations on precisely-known shapes are
// internal bugs; on summarized shapes the result is coarsened soundly.
AbsMem a_mark_stack(AbsMem m);
AbsMem a_unmark_stack(AbsMem m);
AbsMem a_link_stack(AbsMem m);
AbsMem a_unlink_stack(AbsMem m);

// Lifted to error states (identity on the exception component).
AbsExcState cleanup_data(AbsExcState e);
AbsExcState unmark_stack(AbsExcState e);
AbsExcState unlink_stack(AbsExcState e);

// External calls: the callee may rewrite the whole data map arbitrarily
// while preserving the stack word.  Every cell value goes to top and every
// binding becomes untrusted.
AbsMem a_havoc(AbsMem m);

// ---------------------------------------------------------------------------
// Refinement by a Boolean guard: returns a state covering at least the
// memories where the guard can evaluate to `want`.  Falls back to the
// identity where the guard's shape is out of reach.
// ---------------------------------------------------------------------------

AbsMem filter_guard(const Env& rho, const AbsMem& m, const Expr& e,
                    bool want);

// ---------------------------------------------------------------------------
// Splitting an exception state against a catch declaration: the part the
// clause handles and the part it lets through.
// ---------------------------------------------------------------------------

struct AbsExcSplit {
  AbsExcState matched;
  AbsExcState unmatched;
};

AbsExcSplit filter_exception(const ExceptDecl& p, const AbsExcState& e);

// The payload of a caught typed exception, restricted to the binder's type.
AbsSVal sel_payload(SType t, const AbsExcState& e);

}  // namespace cpm

#endif  // CPM_ABSMEM_HPP
