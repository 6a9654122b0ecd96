// SPDX-License-Identifier: MIT
#ifndef CPM_INTERP_HPP
#define CPM_INTERP_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "cpm/ast.hpp"
#include "cpm/env.hpp"
#include "cpm/memory.hpp"
#include "cpm/synth.hpp"
#include "cpm/typecheck.hpp"

namespace cpm {

// Divergence is realized as a finite budget: one unit per rule application.
// Exhaustion aborts the whole evaluation; it is not a program exception.
struct BudgetExhausted : std::runtime_error {
  BudgetExhausted() : std::runtime_error("evaluation budget exhausted") {}
};

// No rule applies.  Valid programs never reach this state; the error doubles
// as the stuck-state detector for the type-soundness tests.
struct StuckError : std::logic_error {
  Label label;
  StuckError(Label l, const std::string& what)
      : std::logic_error("stuck at label " + std::to_string(l) + ": " + what),
        label(l) {}
};

// How extern bodies behave.  Reject refuses to evaluate them at all (the
// front end screens them out); HavocError resolves the specified
// nondeterminism by raising the externcall RTS exception and leaving memory
// unchanged.
enum class ExternPolicy : std::uint8_t { Reject, HavocError };

struct InterpConfig {
  std::uint64_t budget = 1'000'000;
  Limits limits;
  ExternPolicy extern_policy = ExternPolicy::Reject;
};

// Rule-application trace.  Enter fires when a phrase starts evaluating
// (and once per loop iteration), Conclude when a rule's conclusion is
// known.  The pointers are valid only for the duration of the callback.
struct TraceEvent {
  enum class Phase : std::uint8_t { Enter, Conclude };
  Phase phase = Phase::Enter;
  std::string_view rule;  // empty on Enter
  Label label = 0;
  const Mem* mem = nullptr;     // Enter: input; Conclude: normal result
  const Except* ex = nullptr;   // Conclude: exceptional result
};
using TraceSink = std::function<void(const TraceEvent&)>;

// Evaluation outcomes, mirroring the shapes of the judgments.
struct DeclOk {
  Env env;
  Mem mem;
};
using ExprOut = std::variant<SVal, ExceptState>;  // values leave memory as-is
using DeclOut = std::variant<DeclOk, ExceptState>;
using StmtOut = std::variant<Mem, ExceptState>;
struct CatchOut {
  bool caught = false;
  StmtOut out;  // when uncaught, holds the original exception state
};

struct ProgramResult {
  enum class Kind : std::uint8_t { Value, Exception, OutOfBudget };
  Kind kind = Kind::Value;
  Int value;            // Kind::Value: main's result
  Except ex;            // Kind::Exception
  std::uint64_t steps = 0;  // rule applications consumed
};

std::string to_string(const ProgramResult& r);

class Interp {
 public:
  Interp(const Program& prog, const TypeInfo& types, InterpConfig cfg = {},
         TraceSink sink = {});

  // Evaluate the whole program: globals, then $x := main(), then read $x.
  ProgramResult run();

  // The individual judgments, public for tests and the differential
  // harness.  Budget accounting is shared across calls on one instance.
  ExprOut eval_expr(const Env& rho, const Expr& e, const Mem& mem);
  DeclOut eval_decl(const Env& rho, const Decl& d, Mem mem);
  DeclOut eval_glob(const Env& rho, const Glob& g, Mem mem);
  StmtOut eval_stmt(const Env& rho, const Stmt& s, Mem mem);
  StmtOut eval_body(const Env& rho, const Body& b, Mem mem);
  CatchOut eval_catch(const Env& rho, const Catch& k, ExceptState err);

  std::uint64_t steps_used() const { return steps_; }
  Synth& synth() { return synth_; }

 private:
  void tick();
  void enter(Label label, const Mem& mem);
  // Conclusion hooks; each returns its argument.
  ExprOut done_expr(std::string_view rule, Label l, const Mem& m,
                    ExprOut out);
  DeclOut done_decl(std::string_view rule, Label l, DeclOut out);
  StmtOut done_stmt(std::string_view rule, Label l, StmtOut out);

  StmtOut eval_call(const Env& rho, const Stmt& s, Mem mem);
  StmtOut eval_while(const Env& rho, const Stmt& s, Mem mem);

  const Program& prog_;
  const TypeInfo& types_;
  InterpConfig cfg_;
  TraceSink sink_;
  Synth synth_;
  std::uint64_t steps_ = 0;
};

}  // namespace cpm

#endif  // CPM_INTERP_HPP
