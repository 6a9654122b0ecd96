// SPDX-License-Identifier: MIT
#ifndef CPM_HARNESS_HPP
#define CPM_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cpm/absmem.hpp"
#include "cpm/analyzer.hpp"
#include "cpm/ast.hpp"
#include "cpm/interp.hpp"
#include "cpm/memory.hpp"
#include "cpm/typecheck.hpp"

// Differential soundness checking: run the interpreter and the analyzer on
// the same program and verify that every concrete observation lies inside
// the corresponding abstract description.  The `approx` overloads decide
// that relation per judgment shape; `differential_check` drives both
// evaluators and compares the program results plus, through the
// interpreter's trace, per-label intermediate states.

namespace cpm {

// ---- the approximation relation, one overload per shape ----
//
// A concrete object is approximated by an abstract one exactly when it
// belongs to the abstract object's concretization.  Bottom approximates
// nothing.

bool approx(const SVal& v, const AbsSVal& a);
bool approx(const Except& x, const AbsExcept& a);

// Memory: the stack word must end in the listed frames (`below_unknown`
// admits extra frames underneath, `tail_unknown` an unlisted slot suffix),
// listed slots must agree with the word symbol-for-symbol on markers and
// cell types, every listed cell's content must be a member of its value
// set, and the data map may hold no keys that are neither listed nor
// reachable from the stack.  Known allocation counters match exactly;
// capacities always do.
bool approx(const Mem& m, const AbsMem& a);

// Paired exceptional state: both components.
bool approx(const ExceptState& e, const AbsExcState& a);

// Judgment terminals.  Expression values constrain the value side only
// (expressions cannot change memory).  Declaration terminals require the
// environments to agree literally, closures compared structurally with
// labels erased.  Catch terminals pair up the caught and uncaught sides.
bool approx(const ExprOut& out, const AbsExprOut& a);
bool approx(const DeclOut& out, const AbsDeclOut& a);
bool approx(const StmtOut& out, const AbsStmtOut& a);
bool approx(const CatchOut& out, const AbsCatchOut& a);

// ---- differential driver ----

struct DiffConfig {
  // Concrete side.  Its limits are imposed on the abstract side too, so the
  // two runs agree on capacities.
  InterpConfig interp;
  // Abstract side: widening delay, iteration cap, memoization, plugin.
  AnalyzerConfig analyzer;
  // Check traced per-label states against the analyzer's records (statement
  // and body phrases; the analysis merges control paths, so these are the
  // shapes where entry-consistent comparison is meaningful).  The
  // program-level result is checked regardless.
  bool per_label = true;
};

struct Verdict {
  enum class Kind : std::uint8_t { Sound, Violation, Inconclusive };
  Kind kind = Kind::Sound;

  // Violation: the first concrete observation that escaped its abstract
  // description.  `label` is 0 for whole-program comparisons.
  Label label = 0;
  std::string category;     // "entry" | "normal-exit" | "exceptional-exit" |
                            // "reached-unreachable" | "exit-value" |
                            // "uncaught" | "stuck"
  std::string witness;      // rendered concrete state
  std::string claim;        // rendered abstract description it escaped
  std::vector<Label> path;  // recently entered statements, oldest first

  // Accounting, filled on every verdict.
  bool analysis_terminated = true;  // analyzer finished under its cap
  bool budget_exhausted = false;    // interpreter ran out of budget
  std::uint64_t concrete_steps = 0;
  std::uint64_t abstract_steps = 0;

  bool sound() const { return kind == Kind::Sound; }
  std::string describe() const;  // one line, stable wording
};

// Run both evaluators and compare.  Concrete budget exhaustion yields
// Inconclusive (with `analysis_terminated` still reporting whether the
// abstract side finished); a concrete observation outside its abstract
// description yields Violation, and the first one found wins.
Verdict differential_check(const Program& prog, const TypeInfo& types,
                           const DiffConfig& cfg = {});

}  // namespace cpm

#endif  // CPM_HARNESS_HPP
