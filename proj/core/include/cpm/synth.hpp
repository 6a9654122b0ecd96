// SPDX-License-Identifier: MIT
#ifndef CPM_SYNTH_HPP
#define CPM_SYNTH_HPP

#include <cstdint>
#include <map>
#include <utility>
#include <variant>

#include "cpm/ast.hpp"
#include "cpm/env.hpp"

namespace cpm {

// Run-time AST synthesis.
//
// Several evaluation rules build new phrases on the fly: the call protocol
// builds the parameter declaration and the return assignment, function
// declarations wrap their bodies with the captured environment, recursive
// groups rebuild closure bodies around a recursive environment literal, and
// the driver wraps the program itself.  Labels for these phrases are
// assigned ahead of time by a deterministic walk over the program, keyed by
// (origin label, role tag).  Both evaluators construct the same mapping from
// the same program, so a synthesized phrase has the same label in a concrete
// run, in an analysis, and across repeated evaluations — which keeps the set
// of phrases of a program finite and lets results be compared per label.
//
// Synthesized nodes are cached per (origin, tag).  For the nodes that embed
// an environment the cache verifies, on every hit, that the environment
// being requested matches the cached one; re-synthesis at one origin is
// deterministic by construction, and this check turns any violation of that
// reasoning into a loud failure instead of a mislabeled phrase.

// Role tags.  Values matter only for uniqueness per origin.
enum : unsigned {
  kTagDriverGSeq = 1,   // (g ; gvar $x : integer = 0)
  kTagDriverGVar,       // gvar $x : integer = 0
  kTagDriverZero,       // the literal 0 above
  kTagDriverCall,       // $x := main()
  kTagResultAssign,     // $0 := e, appended to a let body
  kTagCaptureEnv,       // the captured-environment literal of a closure
  kTagCaptureSeq,       // (capture ; d0)
  kTagCaptureBody,      // let (capture ; d0) in s result e
  kTagRecEnvDecl,       // rec(group \ DI(fps)) inside a rebuilt closure body
  kTagRecSeq,           // (rec-literal ; d0)
  kTagRecBody,          // the rebuilt closure body
  kTagRecLiteral,       // the rec rho_0 phrase evaluated by the rec rule
  kTagRetVarRef,        // id0 as the initializer of $0
  kTagRetAssign,        // id0 := $0 after the call returns
  kTagRetAssignVar,     // the $0 reference in the line above
  kTagParamDecl = 0x1000,  // + j: lvar $j : sTj = ...
  kTagParamSeq = 0x2000,   // + j: the sequence spine of the parameter decl
  kTagCallDecl = 0x3000,   // cache slot for the whole parameter declaration
};

class Synth {
 public:
  explicit Synth(const Program& prog);

  // The label assigned to (origin, tag); it is a bug to ask for a pair the
  // indexing walk did not anticipate.
  Label at(Label origin, unsigned tag) const;
  Label first_unused_label() const { return next_; }

  // Chases a synthesized label's origin chain back to the source label it
  // stands in for; 0 for driver-rooted phrases, identity on source labels.
  Label source_origin(Label l) const;

  // True for the capture- and recursion-wrapped closure bodies: the
  // synthesized phrases that evaluate *in place of* a source body, so their
  // results may be attributed to it.  Other synthesized phrases (parameter
  // declarations, return assignments, the driver) are protocol steps with no
  // source counterpart.
  bool is_body_standin(Label l) const;

  // ---- driver ----

  // (g ; gvar $x : integer = 0), evaluated from the empty environment.
  GlobPtr driver_glob();
  // $x := main()
  StmtPtr driver_call();

  // ---- call protocol (origin: the call statement) ----

  // d = (lvar $0 : ret = id0 ; lvar $1 : sT1 = e1 ; ... ; lvar $n : sTn = en)
  DeclPtr call_param_decl(const Stmt& call_site, const Formals& fps,
                          SType ret_type);
  // rho_1 = {$0 -> (0, ret)} + {id_j -> (j, sTj)}
  static Env callee_env(const Formals& fps, SType ret_type);
  // id0 := $0
  StmtPtr return_assign(const Stmt& call_site);

  // ---- bodies ----

  // $0 := e for the result expression of the let body being evaluated.
  StmtPtr result_assign(const Body& let_body);

  // Closure-capture wrap: let (rho|I ; d0) in s result e.  `captured` must
  // already be restricted to FI(body0) \ DI(fps).
  BodyPtr capture_body(const Body& body0, const Env& captured);

  // ---- recursion ----

  // The rec rho_0 phrase the rec rule evaluates (origin: the rec glob).
  DeclPtr rec_literal(const Glob& rec_site, const Env& group);

  // Rebuilt closure body: let (rec(group') ; d0) in s result e, where
  // `group` must already have DI(fps) removed (origin: the body of the
  // closure being rebuilt).
  BodyPtr rec_body(const Body& closure_body, const Env& group);

 private:
  using Key = std::pair<Label, unsigned>;
  using Cached =
      std::variant<ExprPtr, DeclPtr, GlobPtr, BodyPtr, StmtPtr>;

  void assign(Label origin, unsigned tag);
  void index_call_site(Label site, std::size_t n_args);
  void index_body_chain(const Body& b, unsigned rec_depth);
  void walk_glob(const Glob& g, unsigned rec_depth);
  void walk_stmt(const Stmt& s);
  void walk_catch(const Catch& k);

  const Program& prog_;
  Label next_;
  std::map<Key, Label> labels_;
  std::map<Label, Label> origin_of_;  // synthesized label -> its origin
  std::map<Label, unsigned> tag_of_;  // synthesized label -> its role tag
  std::map<Key, Cached> cache_;
};

}  // namespace cpm

#endif  // CPM_SYNTH_HPP
