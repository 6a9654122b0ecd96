// SPDX-License-Identifier: MIT
#ifndef CPM_ANALYZER_HPP
#define CPM_ANALYZER_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cpm/absmem.hpp"
#include "cpm/ast.hpp"
#include "cpm/domains.hpp"
#include "cpm/env.hpp"
#include "cpm/synth.hpp"
#include "cpm/typecheck.hpp"

namespace cpm {

// Abstract evaluator.
//
// The analyzer walks the program with the same rule structure as the
// concrete interpreter, but over abstract memories: every judgment produces
// a normal outcome and an exceptional outcome side by side, joined over all
// control paths instead of chosen between.  Environments stay concrete —
// the frame layout of a phrase is fixed by its lexical position, so both
// evaluators bind an identifier to the same address, and results can be
// compared per label.
//
// Loops and recursion make the rule tree infinite.  The engine cuts it back
// to a finite one: each statement, body, and catch evaluation runs inside a
// per-label fixpoint frame, a nested request for a label that is already on
// the active stack contributes to that frame instead of expanding (taking
// the frame's current conclusion iterate as its result), and the frame
// re-evaluates until both its input and its conclusion are stable.  Inputs
// and conclusions are joined plainly for `widening_delay` rounds and widened
// afterwards, which forces stabilization.  Completed (label, input) pairs
// whose evaluation did not lean on an ancestor's iterate are memoized.

// Analysis outcomes, mirroring the shapes of the concrete judgments.  Each
// carries the joined normal part and the joined exceptional part; either
// side may be bottom ("cannot happen").
struct AbsExprOut {
  AbsValState val;
  AbsExcState exc;
  friend bool operator==(const AbsExprOut&, const AbsExprOut&) = default;
};

struct AbsDeclOut {
  Env env;  // meaningful only when mem is not bottom
  AbsMem mem = AbsMem::bottom();
  AbsExcState exc;
  friend bool operator==(const AbsDeclOut& a, const AbsDeclOut& b) {
    return a.mem == b.mem && a.exc == b.exc &&
           equal_modulo_labels(a.env, b.env);
  }
};

struct AbsStmtOut {
  AbsMem mem = AbsMem::bottom();
  AbsExcState exc;
  friend bool operator==(const AbsStmtOut&, const AbsStmtOut&) = default;
};
AbsStmtOut join(const AbsStmtOut& a, const AbsStmtOut& b);
AbsStmtOut widen(const AbsStmtOut& prev, const AbsStmtOut& next);
bool leq(const AbsStmtOut& a, const AbsStmtOut& b);

struct AbsCatchOut {
  AbsStmtOut caught;      // handler completed (normally or exceptionally)
  AbsExcState uncaught;   // exception passed through unhandled
  friend bool operator==(const AbsCatchOut&, const AbsCatchOut&) = default;
};
AbsCatchOut join(const AbsCatchOut& a, const AbsCatchOut& b);
AbsCatchOut widen(const AbsCatchOut& prev, const AbsCatchOut& next);
bool leq(const AbsCatchOut& a, const AbsCatchOut& b);

// Extra abstract rules supplied from outside.  When `supports_*` accepts a
// configuration, the standard rule still runs (so its premises contribute to
// fixpoints and per-label records), and the plugin then produces the
// conclusion; it receives the standard conclusion and may refine or replace
// it.  A plugin is trusted to be sound for the concrete semantics — the
// differential harness is the check on that trust.
class DomainPlugin {
 public:
  virtual ~DomainPlugin() = default;
  virtual std::string_view name() const = 0;

  virtual bool supports_expr(const Env&, const Expr&, const AbsMem&) const {
    return false;
  }
  virtual AbsExprOut eval_expr(const Env&, const Expr&, const AbsMem&,
                               AbsExprOut standard) const {
    return standard;
  }

  virtual bool supports_stmt(const Env&, const Stmt&, const AbsMem&) const {
    return false;
  }
  virtual AbsStmtOut eval_stmt(const Env&, const Stmt&, const AbsMem&,
                               AbsStmtOut standard) const {
    return standard;
  }
};

// Bundled sample plugin: x * x with the same variable on both sides is
// nonnegative, which the interval product alone does not see (it multiplies
// the two occurrences as if they were independent).
std::shared_ptr<const DomainPlugin> square_rule_plugin();

struct AnalyzerConfig {
  Limits limits;
  // Fixpoint rounds that join plainly before widening takes over.
  unsigned widening_delay = 2;
  // Hard cap on engine rounds, a defense against a broken widening; the
  // analysis throws IterationCapExceeded instead of spinning.
  std::uint64_t max_iterations = 1'000'000;
  bool memoize = true;
  std::shared_ptr<const DomainPlugin> plugin;  // optional, may be null
};

struct IterationCapExceeded : std::runtime_error {
  Label label;
  explicit IterationCapExceeded(Label l)
      : std::runtime_error("fixpoint iteration cap exceeded at label " +
                           std::to_string(l)),
        label(l) {}
};

// What the analysis learned about one labeled phrase, joined over every
// visit (including loop rounds and repeated calls).
struct LabelReport {
  enum class Kind : std::uint8_t { Expr, Decl, Glob, Stmt, Body, Catch };
  Kind kind = Kind::Stmt;
  Span span{};
  bool synthetic = false;            // phrase built by the evaluator itself
  AbsMem pre = AbsMem::bottom();     // memories the phrase was entered with
  AbsMem post = AbsMem::bottom();    // memories it concluded normally with
  // Exceptions born at this phrase (a division that may hit zero, a failing
  // allocation, a throw, ...) as opposed to ones merely passing through.
  AbsExcState raised;
  // Full exceptional outcome of the phrase, propagated children included.
  // `raised` pinpoints blame; this one is what the phrase's callers see.
  AbsExcState escape;
};

struct AnalysisResult {
  // Abstraction of the driver's result cell after a normal run of the whole
  // program; bottom when the program cannot terminate normally.
  AbsSVal exit_value = AbsSVal::bottom();
  AbsMem final_mem = AbsMem::bottom();
  // Exceptions the program may fail to catch.
  AbsExcState uncaught;
  std::uint64_t rule_applications = 0;
};

class Analyzer {
 public:
  Analyzer(const Program& prog, const TypeInfo& types, AnalyzerConfig cfg = {});

  // Analyze the whole program: globals, then $x := main(), then read $x.
  AnalysisResult run();

  // The individual judgments, public for tests and the differential
  // harness.  Fixpoint state and per-label records accumulate across calls
  // on one instance.
  AbsExprOut eval_expr(const Env& rho, const Expr& e, const AbsMem& mem);
  AbsDeclOut eval_decl(const Env& rho, const Decl& d, const AbsMem& mem);
  AbsDeclOut eval_glob(const Env& rho, const Glob& g, const AbsMem& mem);
  AbsStmtOut eval_stmt(const Env& rho, const Stmt& s, const AbsMem& mem);
  AbsStmtOut eval_body(const Env& rho, const Body& b, const AbsMem& mem);
  AbsCatchOut eval_catch(const Env& rho, const Catch& k,
                         const AbsExcState& err);

  const std::map<Label, LabelReport>& labels() const { return labels_; }
  std::uint64_t rule_applications() const { return rounds_; }
  Synth& synth() { return synth_; }
  const Synth& synth() const { return synth_; }

 private:
  template <class In, class Out>
  struct Engine {
    struct Frame {
      Label label;
      Env visible;  // environment restricted to the phrase's free idents
      In input;
      In next_input;        // accumulated requests seen this round
      Out conclusion;       // current iterate, starts bottom
      std::size_t depth;    // global nesting stamp, shared across engines
      unsigned rounds = 0;  // completed evaluation rounds
      bool unstable = false;   // a request this round exceeded `input`
      bool consulted = false;  // a nested request read `conclusion`
    };
    struct MemoEntry {
      In input;
      Out result;
    };
    std::deque<Frame> frames;            // active, innermost last
    std::map<Label, Frame*> active;      // at most one frame per label
    std::map<Label, std::vector<MemoEntry>> memo;
  };

  // `visible` must be the environment restricted to the phrase's free
  // identifiers: that is the part conclusions may depend on, and the part
  // that is the same on every visit (callers differ in ambient bindings the
  // phrase cannot see — a function body entered from two call sites).
  template <class In, class Out, class EvalOnce>
  Out run_fixpoint(Engine<In, Out>& eng, Label label, Env visible,
                   const In& in, EvalOnce&& once);

  template <class Node>
  const IdentSet& visible_set(Label l, const Node& n);

  // Per-node rule bodies; `eval_*` wraps them with recording, the fixpoint
  // engine, and the plugin seam.
  AbsExprOut expr_rules(const Env& rho, const Expr& e, const AbsMem& mem);
  AbsStmtOut stmt_rules(const Env& rho, const Stmt& s, const AbsMem& mem);
  AbsStmtOut body_rules(const Env& rho, const Body& b, const AbsMem& mem);
  AbsCatchOut catch_rules(const Env& rho, const Catch& k,
                          const AbsExcState& err);

  AbsStmtOut call_rules(const Env& rho, const Stmt& s, const AbsMem& mem);
  AbsStmtOut while_rules(const Env& rho, const Stmt& s, const AbsMem& mem);

  // Guard splitting shared by if/while/and/or: the input narrowed to the
  // guard being `want`, with a branch whose truth value the guard's
  // abstract value excludes dropped to bottom outright.
  AbsMem guard_split(const Env& rho, const AbsMem& mem, const Expr& guard,
                     const AbsValState& guard_val, bool want);

  LabelReport& report_slot(Label l, Span span, LabelReport::Kind kind);
  void record_pre(Label l, Span span, LabelReport::Kind kind,
                  const AbsMem& mem);
  void record_post(Label l, const AbsMem& mem);
  void record_raised(Label l, const AbsExcState& exc);
  void record_escape(Label l, const AbsExcState& exc);
  void bump_rounds(Label l);

  const Program& prog_;
  const TypeInfo& types_;
  AnalyzerConfig cfg_;
  Synth synth_;

  Engine<AbsMem, AbsStmtOut> stmt_engine_;
  Engine<AbsExcState, AbsCatchOut> catch_engine_;
  std::size_t depth_next_ = 0;
  // Shallowest frame a back edge in the current subtree reached; frames
  // deeper than that must not be memoized (their result depends on an
  // iterate that is still moving).
  std::size_t subtree_reach_ = kNoReach;
  static constexpr std::size_t kNoReach = static_cast<std::size_t>(-1);

  std::map<Label, LabelReport> labels_;
  std::map<Label, IdentSet> fi_cache_;  // free identifiers per phrase
  std::uint64_t rounds_ = 0;
};

// Labeled phrases of the source program (not synthesized ones), for
// reporting: a label the analysis never reached, or reached only with a
// bottom memory, is dead code.
std::map<Label, LabelReport> collect_label_skeleton(const Program& prog);

}  // namespace cpm

#endif  // CPM_ANALYZER_HPP
