// SPDX-License-Identifier: MIT
#ifndef CPM_BUG_HPP
#define CPM_BUG_HPP

#include <stdexcept>
#include <string>

namespace cpm::detail {
[[noreturn]] inline void bug_fail(const char* what, const char* file,
                                  int line) {
  throw std::logic_error(std::string("internal invariant violated: ") + what +
                         " (" + file + ":" + std::to_string(line) + ")");
}
}  // namespace cpm::detail

// Always-on internal invariant checks.  A failure here is a defect in the
// evaluator or the analyzer, never a property of the program under analysis;
// user-visible errors travel as exception states instead.
#define CPM_BUG(msg) ::cpm::detail::bug_fail((msg), __FILE__, __LINE__)
#define CPM_CHECK(cond, msg)   \
  do {                         \
    if (!(cond)) CPM_BUG(msg); \
  } while (0)

#endif  // CPM_BUG_HPP
