// SPDX-License-Identifier: MIT
#ifndef CPM_INTS_HPP
#define CPM_INTS_HPP

#include <boost/multiprecision/cpp_int.hpp>

namespace cpm {

// Runtime integers are unbounded: the language has no arithmetic overflow
// (the only capacity-related exceptions come from memory allocation).
using Int = boost::multiprecision::cpp_int;

// Division truncates toward zero and the remainder takes the sign of the
// dividend, so that (a / b) * b + (a % b) == a always holds:
//
//   (-7) / 2 == -3     (-7) % 2 == -1
//     7  / 2 ==  3       7  % 2 ==  1
//     7 / -2 == -3       7 % -2 ==  1
//
// Callers must rule out b == 0 themselves (the evaluator raises divbyzero).
inline Int int_div(const Int& a, const Int& b) {
  // cpp_int's operator/ already truncates toward zero.
  return a / b;
}

inline Int int_mod(const Int& a, const Int& b) {
  return a - int_div(a, b) * b;
}

}  // namespace cpm

#endif  // CPM_INTS_HPP
