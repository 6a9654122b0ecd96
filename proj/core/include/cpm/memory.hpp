// SPDX-License-Identifier: MIT
#ifndef CPM_MEMORY_HPP
#define CPM_MEMORY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cpm/addr.hpp"
#include "cpm/ast.hpp"
#include "cpm/ints.hpp"

namespace cpm {

// Storable values: unbounded integers and booleans.
using SVal = std::variant<Int, bool>;

SType type_of(const SVal& v);
std::string to_string(const SVal& v);

// An exception in flight: a run-time-system exception (identified by name)
// or a storable value raised by a throw statement.
struct RtsExc {
  std::string name;

  friend bool operator==(const RtsExc&, const RtsExc&) = default;
  friend auto operator<=>(const RtsExc&, const RtsExc&) = default;
};

using Except = std::variant<RtsExc, SVal>;

std::string to_string(const Except& x);

// Stack word symbols.  A mark opens a frame (block entry, call entry); a
// link is a mark made opaque for the duration of a call, hiding everything
// beneath it from indirect addressing.
struct StackSym {
  enum class Kind : std::uint8_t { Location, Mark, Link };

  Kind kind = Kind::Mark;
  Loc loc = 0;  // meaningful only for Kind::Location

  static StackSym location(Loc l) { return {Kind::Location, l}; }
  static StackSym mark() { return {Kind::Mark, 0}; }
  static StackSym link() { return {Kind::Link, 0}; }

  friend bool operator==(const StackSym&, const StackSym&) = default;
};

struct Limits {
  std::uint64_t data_capacity = std::uint64_t{1} << 20;   // new_data cells
  std::uint64_t stack_capacity = std::uint64_t{1} << 16;  // word length,
                                                          // marks included
  friend bool operator==(const Limits&, const Limits&) = default;
};

// The memory state: a typed data map plus a stack word.  Cells are keyed by
// (location, type); an update must hit an existing cell of exactly the
// written type, anything else is a memerror.  Locations are handed out by a
// monotone counter, so a location never recurs with a different type and the
// abstract memory can mirror allocation address-for-address.
struct Mem {
  std::map<std::pair<Loc, SType>, SVal> data;
  std::vector<StackSym> word;
  Loc next_loc = 0;
  std::uint64_t data_cells = 0;  // live new_data allocations
  Limits limits;

  static Mem initial(Limits lim = {}) {
    Mem m;
    m.limits = lim;
    return m;
  }

  // ---- stack structure ----

  // Index into `word` where the top frame begins (just past the last link;
  // marks do not close a frame).
  std::size_t frame_begin() const;
  std::size_t frame_size() const { return word.size() - frame_begin(); }

  // w@i: the location at position i of the top frame, counting marks.
  // Nothing if i is out of range or falls on a mark.
  std::optional<Loc> loc_at(Ind ind) const;

  // ---- reads & writes (memerror on failure) ----

  std::variant<SVal, RtsExc> read(const Addr& a, SType t) const;
  std::optional<RtsExc> write(const Addr& a, SType t, const SVal& v);

  // ---- allocation ----

  // Fresh global cell holding v; datovflw leaves the state untouched.
  std::variant<Loc, RtsExc> new_data(const SVal& v);

  // Fresh stack cell holding v; the returned position is the frame size
  // before the push.  stkovflw leaves the state untouched.
  std::variant<Ind, RtsExc> new_stack(const SVal& v);

  // ---- frame protocol ----

  void mark_stack();    // push a mark (total)
  void unmark_stack();  // pop back through the last mark, dropping the
                        // popped cells from the data map
  void link_stack();    // turn the last mark into a link
  void unlink_stack();  // turn the last link back into a mark

  // ---- introspection ----

  std::string render() const;  // human-readable
  std::string digest() const;  // stable short hash for traces

  friend bool operator==(const Mem&, const Mem&) = default;
};

// The paired error state (memory, exception).
struct ExceptState {
  Mem mem;
  Except ex;
};

// Cleanup after a failed global-variable initialization: everything built so
// far is discarded and only the exception survives.
ExceptState cleanup_data(ExceptState e);

// Frame restoration lifted to error states: the block and call rules restore
// the caller's view of the stack on the exceptional paths too.
ExceptState unmark_stack(ExceptState e);
ExceptState unlink_stack(ExceptState e);

}  // namespace cpm

#endif  // CPM_MEMORY_HPP
