// SPDX-License-Identifier: MIT
#ifndef CPM_ADDR_HPP
#define CPM_ADDR_HPP

#include <compare>
#include <cstdint>
#include <variant>

namespace cpm {

// Absolute locations are opaque; freshness comes from a monotone counter in
// the memory structure, which also lets the abstract memory mirror concrete
// allocation decisions address-for-address.
using Loc = std::uint32_t;

// Indirect locator: a position in the top-most activation frame (markers
// included in the count).
struct Ind {
  std::uint32_t i = 0;
  friend bool operator==(const Ind&, const Ind&) = default;
  friend auto operator<=>(const Ind&, const Ind&) = default;
};

using Addr = std::variant<Loc, Ind>;

}  // namespace cpm

#endif  // CPM_ADDR_HPP
