// SPDX-License-Identifier: MIT
#include "cpm/analyzer.hpp"

#include <algorithm>
#include <utility>

#include "cpm/bug.hpp"

namespace cpm {

namespace {

// The analyzer only runs on checked programs, so a binding that is missing
// or has the wrong shape is an internal fault, not a program error.
const Cell& expect_cell(const Env& rho, const Ident& id, Label l) {
  (void)l;
  const EnvVal* v = rho.lookup(id);
  CPM_CHECK(v, "unbound identifier in a checked program");
  const Cell* c = std::get_if<Cell>(v);
  CPM_CHECK(c, "identifier does not name a memory cell");
  return *c;
}

const Closure& expect_closure(const Env& rho, const Ident& id, Label l) {
  (void)l;
  const EnvVal* v = rho.lookup(id);
  CPM_CHECK(v, "unbound identifier in a checked program");
  const Closure* c = std::get_if<Closure>(v);
  CPM_CHECK(c, "identifier does not name a function");
  return *c;
}

AbsExcState rts_raise(const AbsMem& m, std::string_view name) {
  return AbsExcState::of(m, AbsExcept{AbsRts::singleton(name),
                                      AbsSVal::bottom()});
}

}  // namespace

// ----------------------------------------------------------------- outcomes

AbsStmtOut join(const AbsStmtOut& a, const AbsStmtOut& b) {
  return {join(a.mem, b.mem), join(a.exc, b.exc)};
}

AbsStmtOut widen(const AbsStmtOut& prev, const AbsStmtOut& next) {
  return {widen(prev.mem, next.mem), widen(prev.exc, next.exc)};
}

bool leq(const AbsStmtOut& a, const AbsStmtOut& b) {
  return leq(a.mem, b.mem) && leq(a.exc, b.exc);
}

AbsCatchOut join(const AbsCatchOut& a, const AbsCatchOut& b) {
  return {join(a.caught, b.caught), join(a.uncaught, b.uncaught)};
}

AbsCatchOut widen(const AbsCatchOut& prev, const AbsCatchOut& next) {
  return {widen(prev.caught, next.caught),
          widen(prev.uncaught, next.uncaught)};
}

bool leq(const AbsCatchOut& a, const AbsCatchOut& b) {
  return leq(a.caught, b.caught) && leq(a.uncaught, b.uncaught);
}

// ------------------------------------------------------------------ records

Analyzer::Analyzer(const Program& prog, const TypeInfo& types,
                   AnalyzerConfig cfg)
    : prog_(prog), types_(types), cfg_(std::move(cfg)), synth_(prog) {}

LabelReport& Analyzer::report_slot(Label l, Span span,
                                   LabelReport::Kind kind) {
  auto [it, fresh] = labels_.try_emplace(l);
  LabelReport& r = it->second;
  if (fresh) {
    r.kind = kind;
    r.span = span;
    r.synthetic = l >= prog_.first_free_label;
  }
  return r;
}

void Analyzer::bump_rounds(Label l) {
  if (++rounds_ > cfg_.max_iterations) throw IterationCapExceeded(l);
}

void Analyzer::record_pre(Label l, Span span, LabelReport::Kind kind,
                          const AbsMem& mem) {
  bump_rounds(l);
  LabelReport& r = report_slot(l, span, kind);
  r.pre = join(r.pre, mem);
}

void Analyzer::record_post(Label l, const AbsMem& mem) {
  auto it = labels_.find(l);
  CPM_CHECK(it != labels_.end(), "conclusion recorded before entry");
  it->second.post = join(it->second.post, mem);
}

void Analyzer::record_raised(Label l, const AbsExcState& exc) {
  if (exc.is_bottom()) return;
  auto it = labels_.find(l);
  CPM_CHECK(it != labels_.end(), "exception recorded before entry");
  it->second.raised = join(it->second.raised, exc);
}

void Analyzer::record_escape(Label l, const AbsExcState& exc) {
  if (exc.is_bottom()) return;
  auto it = labels_.find(l);
  CPM_CHECK(it != labels_.end(), "exception recorded before entry");
  it->second.escape = join(it->second.escape, exc);
}

// ------------------------------------------------------------------- engine

template <class Node>
const IdentSet& Analyzer::visible_set(Label l, const Node& n) {
  auto it = fi_cache_.find(l);
  if (it == fi_cache_.end()) it = fi_cache_.emplace(l, free_idents(n)).first;
  return it->second;
}

template <class In, class Out, class EvalOnce>
Out Analyzer::run_fixpoint(Engine<In, Out>& eng, Label label, Env visible,
                           const In& in, EvalOnce&& once) {
  using Frame = typename Engine<In, Out>::Frame;

  // A frame for this label is already open below us: contribute the request
  // to it and hand back its current conclusion iterate instead of expanding
  // the tree forever.
  if (auto it = eng.active.find(label); it != eng.active.end()) {
    Frame* f = it->second;
    CPM_CHECK(equal_modulo_labels(f->visible, visible),
              "one label evaluated under two visible environments");
    subtree_reach_ = std::min(subtree_reach_, f->depth);
    f->consulted = true;
    if (!leq(in, f->input)) f->unstable = true;
    f->next_input = join(f->next_input, in);
    return f->conclusion;
  }

  if (cfg_.memoize) {
    if (auto mit = eng.memo.find(label); mit != eng.memo.end())
      for (const auto& entry : mit->second)
        if (leq(in, entry.input)) return entry.result;
  }

  const std::size_t depth = depth_next_++;
  eng.frames.push_back(Frame{label, std::move(visible), in, in, Out{}, depth});
  Frame* f = &eng.frames.back();
  eng.active.emplace(label, f);
  const std::size_t outer_reach = subtree_reach_;
  subtree_reach_ = kNoReach;

  for (;;) {
    bump_rounds(label);
    f->unstable = false;
    f->consulted = false;
    f->next_input = f->input;
    const In current = f->input;
    Out got = once(current);

    const unsigned round = f->rounds++;
    Out grown = join(f->conclusion, got);
    Out next = round < cfg_.widening_delay
                   ? std::move(grown)
                   : widen(f->conclusion, grown);
    const bool concl_stable = next == f->conclusion;
    f->conclusion = std::move(next);

    // A frame nobody consulted this round needs no inner consistency: one
    // evaluation at a stable input is the whole answer.
    if (!f->unstable && (!f->consulted || concl_stable)) break;
    if (f->unstable) {
      In widened = join(f->input, f->next_input);
      f->input = round < cfg_.widening_delay
                     ? std::move(widened)
                     : widen(f->input, widened);
    }
  }

  Out result = f->conclusion;
  In final_input = f->input;
  const bool clean = subtree_reach_ >= depth;
  // Back edges into this frame are resolved here; only ones that reached
  // past it keep tainting the caller.
  subtree_reach_ =
      std::min(outer_reach, subtree_reach_ < depth ? subtree_reach_ : kNoReach);
  eng.active.erase(label);
  eng.frames.pop_back();
  --depth_next_;

  if (clean && cfg_.memoize)
    eng.memo[label].push_back({std::move(final_input), result});
  return result;
}

// ------------------------------------------------------------- entry points

AbsExprOut Analyzer::eval_expr(const Env& rho, const Expr& e,
                               const AbsMem& mem) {
  record_pre(e.label, e.span, LabelReport::Kind::Expr, mem);
  AbsExprOut out = expr_rules(rho, e, mem);
  if (cfg_.plugin && cfg_.plugin->supports_expr(rho, e, mem))
    out = cfg_.plugin->eval_expr(rho, e, mem, std::move(out));
  record_post(e.label, out.val.mem);
  record_escape(e.label, out.exc);
  return out;
}

AbsStmtOut Analyzer::eval_stmt(const Env& rho, const Stmt& s,
                               const AbsMem& mem) {
  record_pre(s.label, s.span, LabelReport::Kind::Stmt, mem);
  Env visible = rho.restricted_to(visible_set(s.label, s));
  AbsStmtOut out = run_fixpoint(
      stmt_engine_, s.label, std::move(visible), mem, [&](const AbsMem& cur) {
        AbsStmtOut c = stmt_rules(rho, s, cur);
        if (cfg_.plugin && cfg_.plugin->supports_stmt(rho, s, cur))
          c = cfg_.plugin->eval_stmt(rho, s, cur, std::move(c));
        return c;
      });
  record_post(s.label, out.mem);
  record_escape(s.label, out.exc);
  return out;
}

AbsStmtOut Analyzer::eval_body(const Env& rho, const Body& b,
                               const AbsMem& mem) {
  record_pre(b.label, b.span, LabelReport::Kind::Body, mem);
  Env visible = rho.restricted_to(visible_set(b.label, b));
  AbsStmtOut out = run_fixpoint(
      stmt_engine_, b.label, std::move(visible), mem,
      [&](const AbsMem& cur) { return body_rules(rho, b, cur); });
  record_post(b.label, out.mem);
  record_escape(b.label, out.exc);
  return out;
}

AbsCatchOut Analyzer::eval_catch(const Env& rho, const Catch& k,
                                 const AbsExcState& err) {
  record_pre(k.label, k.span, LabelReport::Kind::Catch, err.mem);
  Env visible = rho.restricted_to(visible_set(k.label, k));
  AbsCatchOut out = run_fixpoint(
      catch_engine_, k.label, std::move(visible), err,
      [&](const AbsExcState& cur) { return catch_rules(rho, k, cur); });
  record_post(k.label, out.caught.mem);
  record_escape(k.label, join(out.caught.exc, out.uncaught));
  return out;
}

// -------------------------------------------------------------- expressions

AbsMem Analyzer::guard_split(const Env& rho, const AbsMem& mem,
                             const Expr& guard, const AbsValState& guard_val,
                             bool want) {
  // The branch is dead when the guard's value rules `want` out; otherwise
  // narrow the memory by the guard as far as its shape allows.
  if (!guard_val.val.b.contains(want)) return AbsMem::bottom();
  return filter_guard(rho, mem, guard, want);
}

AbsExprOut Analyzer::expr_rules(const Env& rho, const Expr& e,
                                const AbsMem& mem) {
  const Label l = e.label;
  return std::visit(
      [&](const auto& n) -> AbsExprOut {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IntConst>) {
          return {AbsValState::of(AbsSVal::of_int(AbsInt::singleton(n.value)),
                                  mem),
                  AbsExcState::none()};
        } else if constexpr (std::is_same_v<T, BoolConst>) {
          return {AbsValState::of(AbsSVal::of_bool(AbsBool::of(n.value)), mem),
                  AbsExcState::none()};
        } else if constexpr (std::is_same_v<T, VarRef>) {
          const Cell& c = expect_cell(rho, n.id, l);
          AbsReadOut r = a_read(mem, c.addr, c.type);
          record_raised(l, r.err);
          return {r.ok, r.err};
        } else if constexpr (std::is_same_v<T, Neg>) {
          AbsExprOut a = eval_expr(rho, *n.arg, mem);
          return {AbsValState::of(AbsSVal::of_int(a_neg(a.val.val.i)),
                                  a.val.mem),
                  a.exc};
        } else if constexpr (std::is_same_v<T, Arith>) {
          AbsExprOut a = eval_expr(rho, *n.lhs, mem);
          AbsExprOut b = eval_expr(rho, *n.rhs, a.val.mem);
          AbsExcState exc = join(a.exc, b.exc);
          if ((n.op == ArithOp::Div || n.op == ArithOp::Rem) &&
              may_be_zero(b.val.val.i)) {
            AbsExcState dz = rts_raise(b.val.mem, rts::divbyzero);
            record_raised(l, dz);
            exc = join(exc, dz);
          }
          AbsInt r = a_arith(n.op, a.val.val.i, b.val.val.i);
          return {AbsValState::of(AbsSVal::of_int(r), b.val.mem), exc};
        } else if constexpr (std::is_same_v<T, Cmp>) {
          AbsExprOut a = eval_expr(rho, *n.lhs, mem);
          AbsExprOut b = eval_expr(rho, *n.rhs, a.val.mem);
          AbsBool r = a_cmp(n.op, a.val.val.i, b.val.val.i);
          return {AbsValState::of(AbsSVal::of_bool(r), b.val.mem),
                  join(a.exc, b.exc)};
        } else if constexpr (std::is_same_v<T, Not>) {
          AbsExprOut a = eval_expr(rho, *n.arg, mem);
          return {AbsValState::of(AbsSVal::of_bool(a_not(a.val.val.b)),
                                  a.val.mem),
                  a.exc};
        } else if constexpr (std::is_same_v<T, And>) {
          // Both outcomes of the left operand stay live: the short-circuit
          // false with its narrowed memory, and the right operand evaluated
          // under the memories where the left was true.
          AbsExprOut a = eval_expr(rho, *n.lhs, mem);
          AbsMem tt = guard_split(rho, mem, *n.lhs, a.val, true);
          AbsMem ff = guard_split(rho, mem, *n.lhs, a.val, false);
          AbsExprOut b = eval_expr(rho, *n.rhs, tt);
          AbsValState short_ff =
              AbsValState::of(AbsSVal::of_bool(AbsBool::of(false)), ff);
          return {join(short_ff, b.val), join(a.exc, b.exc)};
        } else {
          static_assert(std::is_same_v<T, Or>);
          AbsExprOut a = eval_expr(rho, *n.lhs, mem);
          AbsMem tt = guard_split(rho, mem, *n.lhs, a.val, true);
          AbsMem ff = guard_split(rho, mem, *n.lhs, a.val, false);
          AbsExprOut b = eval_expr(rho, *n.rhs, ff);
          AbsValState short_tt =
              AbsValState::of(AbsSVal::of_bool(AbsBool::of(true)), tt);
          return {join(short_tt, b.val), join(a.exc, b.exc)};
        }
      },
      e.node);
}

// ------------------------------------------------------------- declarations

AbsDeclOut Analyzer::eval_decl(const Env& rho, const Decl& d,
                               const AbsMem& mem) {
  record_pre(d.label, d.span, LabelReport::Kind::Decl, mem);
  const Label l = d.label;
  AbsDeclOut out = std::visit(
      [&](const auto& n) -> AbsDeclOut {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DNil>) {
          return {Env{}, mem, AbsExcState::none()};
        } else if constexpr (std::is_same_v<T, DLocal>) {
          AbsExprOut v = eval_expr(rho, *n.init, mem);
          AbsAllocStackOut alloc = a_new_stack(v.val);
          record_raised(l, alloc.err);
          Env r0;
          r0.bindings.emplace(n.id, Cell{Addr{alloc.ind}, n.type});
          // Either failure unwinds the locals allocated so far; the block
          // or body that marked the stack sees a restored shape.
          AbsExcState exc = unmark_stack(join(v.exc, alloc.err));
          return {std::move(r0), alloc.ok, std::move(exc)};
        } else if constexpr (std::is_same_v<T, DSeq>) {
          AbsDeclOut r0 = eval_decl(rho, *n.first, mem);
          AbsDeclOut r1 =
              eval_decl(rho.overridden_with(r0.env), *n.second, r0.mem);
          return {r0.env.overridden_with(r1.env), r1.mem,
                  join(r0.exc, r1.exc)};
        } else if constexpr (std::is_same_v<T, DEnv>) {
          return {*n.env, mem, AbsExcState::none()};
        } else {
          static_assert(std::is_same_v<T, DRecEnv>);
          Env r1;
          for (const auto& [id, v] : n.env->bindings) {
            const Closure* cl = std::get_if<Closure>(&v);
            CPM_CHECK(cl, "recursive group entry is not a function");
            if (std::holds_alternative<BExtern>(cl->body->node)) {
              r1.bindings.emplace(id, *cl);
              continue;
            }
            Env group = n.env->without(declared_idents(cl->params));
            r1.bindings.emplace(
                id, Closure{cl->params, synth_.rec_body(*cl->body, group),
                            cl->result});
          }
          return {std::move(r1), mem, AbsExcState::none()};
        }
      },
      d.node);
  record_post(l, out.mem);
  record_escape(l, out.exc);
  return out;
}

AbsDeclOut Analyzer::eval_glob(const Env& rho, const Glob& g,
                               const AbsMem& mem) {
  record_pre(g.label, g.span, LabelReport::Kind::Glob, mem);
  const Label l = g.label;
  AbsDeclOut out = std::visit(
      [&](const auto& n) -> AbsDeclOut {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GVar>) {
          AbsExprOut v = eval_expr(rho, *n.init, mem);
          AbsAllocDataOut alloc = a_new_data(v.val);
          record_raised(l, alloc.err);
          Env r0;
          r0.bindings.emplace(n.id, Cell{Addr{alloc.loc}, n.type});
          AbsExcState exc = cleanup_data(join(v.exc, alloc.err));
          return {std::move(r0), alloc.ok, std::move(exc)};
        } else if constexpr (std::is_same_v<T, GFun>) {
          Closure cl;
          cl.params = n.params;
          auto it = types_.fn_result.find(g.label);
          CPM_CHECK(it != types_.fn_result.end(),
                    "function without a recorded result type");
          cl.result = it->second;
          if (std::holds_alternative<BExtern>(n.body->node)) {
            cl.body = n.body;
          } else {
            IdentSet capture = free_idents(*n.body);
            for (const auto& fp : n.params) capture.erase(fp.id);
            cl.body = synth_.capture_body(*n.body, rho.restricted_to(capture));
          }
          Env r0;
          r0.bindings.emplace(n.id, std::move(cl));
          return {std::move(r0), mem, AbsExcState::none()};
        } else if constexpr (std::is_same_v<T, GRec>) {
          IdentSet fi = free_idents(*n.decls);
          IdentSet di = declared_idents(*n.decls);
          IdentSet j;
          std::set_intersection(fi.begin(), fi.end(), di.begin(), di.end(),
                                std::inserter(j, j.begin()));
          AbsDeclOut r0 = eval_glob(rho.without(j), *n.decls, mem);
          DeclPtr lit = synth_.rec_literal(g, r0.env);
          AbsDeclOut r1 = eval_decl(rho, *lit, r0.mem);
          return {r1.env, r1.mem, join(r0.exc, r1.exc)};
        } else {
          static_assert(std::is_same_v<T, GSeq>);
          AbsDeclOut r0 = eval_glob(rho, *n.first, mem);
          AbsDeclOut r1 =
              eval_glob(rho.overridden_with(r0.env), *n.second, r0.mem);
          return {r0.env.overridden_with(r1.env), r1.mem,
                  join(r0.exc, r1.exc)};
        }
      },
      g.node);
  record_post(l, out.mem);
  record_escape(l, out.exc);
  return out;
}

// --------------------------------------------------------------- statements

AbsStmtOut Analyzer::stmt_rules(const Env& rho, const Stmt& s,
                                const AbsMem& mem) {
  const Label l = s.label;
  return std::visit(
      [&](const auto& n) -> AbsStmtOut {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SNop>) {
          return {mem, AbsExcState::none()};
        } else if constexpr (std::is_same_v<T, SAssign>) {
          AbsExprOut v = eval_expr(rho, *n.expr, mem);
          const Cell& c = expect_cell(rho, n.id, l);
          AbsWriteOut w = a_write(v.val.mem, c.addr, c.type, v.val.val);
          record_raised(l, w.err);
          return {w.ok, join(v.exc, w.err)};
        } else if constexpr (std::is_same_v<T, SCall>) {
          return call_rules(rho, s, mem);
        } else if constexpr (std::is_same_v<T, SSeq>) {
          AbsStmtOut r0 = eval_stmt(rho, *n.first, mem);
          AbsStmtOut r1 = eval_stmt(rho, *n.second, r0.mem);
          return {r1.mem, join(r0.exc, r1.exc)};
        } else if constexpr (std::is_same_v<T, SBlock>) {
          AbsDeclOut rd = eval_decl(rho, *n.locals, a_mark_stack(mem));
          AbsStmtOut r1 =
              eval_stmt(rho.overridden_with(rd.env), *n.stmt, rd.mem);
          // Declaration failures already restored the stack shape; only the
          // statement's exceptions still carry the locals.
          return {a_unmark_stack(r1.mem),
                  join(rd.exc, unmark_stack(r1.exc))};
        } else if constexpr (std::is_same_v<T, SIf>) {
          AbsExprOut cv = eval_expr(rho, *n.cond, mem);
          AbsMem tt = guard_split(rho, mem, *n.cond, cv.val, true);
          AbsMem ff = guard_split(rho, mem, *n.cond, cv.val, false);
          AbsStmtOut r1 = eval_stmt(rho, *n.then_s, tt);
          AbsStmtOut r2 = eval_stmt(rho, *n.else_s, ff);
          return {join(r1.mem, r2.mem),
                  join(cv.exc, join(r1.exc, r2.exc))};
        } else if constexpr (std::is_same_v<T, SWhile>) {
          return while_rules(rho, s, mem);
        } else if constexpr (std::is_same_v<T, SThrowRts>) {
          AbsExcState ex = rts_raise(mem, n.name);
          record_raised(l, ex);
          return {AbsMem::bottom(), std::move(ex)};
        } else if constexpr (std::is_same_v<T, SThrowExpr>) {
          AbsExprOut v = eval_expr(rho, *n.expr, mem);
          AbsExcState thrown = AbsExcState::of(
              v.val.mem, AbsExcept{AbsRts::bottom(), v.val.val});
          record_raised(l, thrown);
          return {AbsMem::bottom(), join(v.exc, thrown)};
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          AbsStmtOut r0 = eval_stmt(rho, *n.body, mem);
          AbsCatchOut c = eval_catch(rho, *n.handlers, r0.exc);
          return {join(r0.mem, c.caught.mem),
                  join(c.caught.exc, c.uncaught)};
        } else {
          static_assert(std::is_same_v<T, STryFinally>);
          AbsStmtOut r0 = eval_stmt(rho, *n.body, mem);
          // The finalizer runs off both outcomes of the body; on the
          // exceptional one its normal completion re-raises the body's
          // exception with the finalizer's memory.
          AbsStmtOut after_ok = eval_stmt(rho, *n.finalizer, r0.mem);
          AbsStmtOut after_exc = eval_stmt(rho, *n.finalizer, r0.exc.mem);
          AbsExcState masked = AbsExcState::of(after_exc.mem, r0.exc.ex);
          return {after_ok.mem,
                  join(after_ok.exc, join(after_exc.exc, masked))};
        }
      },
      s.node);
}

AbsStmtOut Analyzer::while_rules(const Env& rho, const Stmt& s,
                                 const AbsMem& mem) {
  const auto& n = std::get<SWhile>(s.node);
  AbsExprOut cv = eval_expr(rho, *n.cond, mem);
  AbsMem tt = guard_split(rho, mem, *n.cond, cv.val, true);
  AbsMem ff = guard_split(rho, mem, *n.cond, cv.val, false);
  AbsStmtOut body = eval_stmt(rho, *n.body, tt);
  // The loop phrase re-evaluated from the body's result: the engine turns
  // this self-reference into the loop's fixpoint.
  AbsStmtOut rest = eval_stmt(rho, s, body.mem);
  return {join(ff, rest.mem), join(cv.exc, join(body.exc, rest.exc))};
}

AbsStmtOut Analyzer::call_rules(const Env& rho, const Stmt& s,
                                const AbsMem& mem) {
  const auto& c = std::get<SCall>(s.node);
  const Label l = s.label;
  const Closure& cl = expect_closure(rho, c.fn, l);
  const Cell& target = expect_cell(rho, c.target, l);
  CPM_CHECK(target.type == cl.result,
            "call target and function result types differ");
  CPM_CHECK(c.args.size() == cl.params.size(),
            "call arity does not match the function");

  DeclPtr d = synth_.call_param_decl(s, cl.params, cl.result);
  AbsDeclOut rd = eval_decl(rho, *d, a_mark_stack(mem));

  Env rho1 = Synth::callee_env(cl.params, cl.result);
  AbsStmtOut body =
      eval_body(rho.overridden_with(rho1), *cl.body, a_link_stack(rd.mem));

  StmtPtr ret = synth_.return_assign(s);
  AbsStmtOut r2 = eval_stmt(rho.overridden_with(rd.env), *ret,
                            a_unlink_stack(body.mem));

  AbsExcState exc = join(
      rd.exc, join(unmark_stack(unlink_stack(body.exc)),
                   unmark_stack(r2.exc)));
  return {a_unmark_stack(r2.mem), std::move(exc)};
}

// ------------------------------------------------------------------- bodies

AbsStmtOut Analyzer::body_rules(const Env& rho, const Body& b,
                                const AbsMem& mem) {
  if (std::holds_alternative<BExtern>(b.node)) {
    // The callee may return normally having rewritten every reachable cell,
    // or fail in any way at all; only the frame shape survives.
    AbsMem havoc = a_havoc(mem);
    AbsExcState ex = AbsExcState::of(havoc, AbsExcept::top());
    record_raised(b.label, ex);
    return {std::move(havoc), std::move(ex)};
  }

  const BLet& n = std::get<BLet>(b.node);
  AbsDeclOut rd = eval_decl(rho, *n.locals, a_mark_stack(mem));
  Env rho0 = rho.overridden_with(rd.env);
  AbsStmtOut r1 = eval_stmt(rho0, *n.stmt, rd.mem);
  StmtPtr ra = synth_.result_assign(b);
  AbsStmtOut r2 = eval_stmt(rho0, *ra, r1.mem);
  return {a_unmark_stack(r2.mem),
          join(rd.exc, unmark_stack(join(r1.exc, r2.exc)))};
}

// ----------------------------------------------------------- catch clauses

AbsCatchOut Analyzer::catch_rules(const Env& rho, const Catch& k,
                                  const AbsExcState& err) {
  if (const auto* seq = std::get_if<CSeq>(&k.node)) {
    AbsCatchOut c0 = eval_catch(rho, *seq->first, err);
    AbsCatchOut c1 = eval_catch(rho, *seq->second, c0.uncaught);
    return {join(c0.caught, c1.caught), c1.uncaught};
  }

  const CClause& n = std::get<CClause>(k.node);
  AbsExcSplit split = filter_exception(n.decl, err);

  if (n.decl.kind == ExceptDecl::Kind::Binder) {
    AbsSVal payload = sel_payload(n.decl.type, split.matched);
    AbsAllocStackOut alloc = a_new_stack(
        AbsValState::of(payload, a_mark_stack(split.matched.mem)));
    record_raised(k.label, alloc.err);
    Env r1;
    r1.bindings.emplace(n.decl.binder, Cell{Addr{alloc.ind}, n.decl.type});
    AbsStmtOut h = eval_stmt(rho.overridden_with(r1), *n.handler, alloc.ok);
    AbsStmtOut caught{a_unmark_stack(h.mem),
                      join(unmark_stack(alloc.err), unmark_stack(h.exc))};
    return {std::move(caught), split.unmatched};
  }

  AbsStmtOut h = eval_stmt(rho, *n.handler, split.matched.mem);
  return {AbsStmtOut{h.mem, h.exc}, split.unmatched};
}

// ------------------------------------------------------------------- driver

AnalysisResult Analyzer::run() {
  AnalysisResult res;
  GlobPtr g0 = synth_.driver_glob();
  AbsDeclOut rg = eval_glob(Env{}, *g0, AbsMem::initial(cfg_.limits));

  StmtPtr call = synth_.driver_call();
  AbsStmtOut rs = eval_stmt(rg.env, *call, rg.mem);

  res.uncaught = join(rg.exc, rs.exc);
  res.final_mem = rs.mem;
  if (!rs.mem.is_bottom()) {
    const EnvVal* v = rg.env.lookup(reserved_result());
    CPM_CHECK(v && std::holds_alternative<Cell>(*v),
              "driver result cell missing");
    const Cell& xc = std::get<Cell>(*v);
    AbsReadOut r = a_read(rs.mem, xc.addr, SType::Integer);
    res.exit_value = r.ok.val.restrict_to(SType::Integer);
  }
  res.rule_applications = rounds_;
  return res;
}

// ------------------------------------------------------------------- plugin

namespace {

// x * x is nonnegative whichever value x holds; the interval product treats
// the two occurrences as independent and cannot see that.
class SquareRulePlugin final : public DomainPlugin {
 public:
  std::string_view name() const override { return "square-rule"; }

  bool supports_expr(const Env&, const Expr& e,
                     const AbsMem&) const override {
    const auto* a = std::get_if<Arith>(&e.node);
    if (!a || a->op != ArithOp::Mul) return false;
    const auto* x = std::get_if<VarRef>(&a->lhs->node);
    const auto* y = std::get_if<VarRef>(&a->rhs->node);
    return x && y && x->id == y->id;
  }

  AbsExprOut eval_expr(const Env&, const Expr&, const AbsMem&,
                       AbsExprOut standard) const override {
    if (standard.val.is_bottom()) return standard;
    AbsSVal refined{meet(standard.val.val.i, AbsInt::at_least(Int(0))),
                    standard.val.val.b};
    standard.val = AbsValState::of(std::move(refined), standard.val.mem);
    return standard;
  }
};

}  // namespace

std::shared_ptr<const DomainPlugin> square_rule_plugin() {
  return std::make_shared<SquareRulePlugin>();
}

// ----------------------------------------------------------- label skeleton

namespace {

void skel_add(std::map<Label, LabelReport>& out, Label l, Span span,
              LabelReport::Kind kind) {
  LabelReport r;
  r.kind = kind;
  r.span = span;
  out.emplace(l, std::move(r));
}

void skel_expr(std::map<Label, LabelReport>& out, const Expr& e);
void skel_decl(std::map<Label, LabelReport>& out, const Decl& d);
void skel_glob(std::map<Label, LabelReport>& out, const Glob& g);
void skel_stmt(std::map<Label, LabelReport>& out, const Stmt& s);
void skel_body(std::map<Label, LabelReport>& out, const Body& b);
void skel_catch(std::map<Label, LabelReport>& out, const Catch& k);

void skel_expr(std::map<Label, LabelReport>& out, const Expr& e) {
  skel_add(out, e.label, e.span, LabelReport::Kind::Expr);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Neg> || std::is_same_v<T, Not>) {
          skel_expr(out, *n.arg);
        } else if constexpr (std::is_same_v<T, Arith> ||
                             std::is_same_v<T, Cmp> ||
                             std::is_same_v<T, And> ||
                             std::is_same_v<T, Or>) {
          skel_expr(out, *n.lhs);
          skel_expr(out, *n.rhs);
        }
      },
      e.node);
}

void skel_decl(std::map<Label, LabelReport>& out, const Decl& d) {
  skel_add(out, d.label, d.span, LabelReport::Kind::Decl);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DLocal>) {
          skel_expr(out, *n.init);
        } else if constexpr (std::is_same_v<T, DSeq>) {
          skel_decl(out, *n.first);
          skel_decl(out, *n.second);
        }
        // Environment literals only appear in synthesized phrases.
      },
      d.node);
}

void skel_glob(std::map<Label, LabelReport>& out, const Glob& g) {
  skel_add(out, g.label, g.span, LabelReport::Kind::Glob);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GVar>) {
          skel_expr(out, *n.init);
        } else if constexpr (std::is_same_v<T, GFun>) {
          skel_body(out, *n.body);
        } else if constexpr (std::is_same_v<T, GRec>) {
          skel_glob(out, *n.decls);
        } else if constexpr (std::is_same_v<T, GSeq>) {
          skel_glob(out, *n.first);
          skel_glob(out, *n.second);
        }
      },
      g.node);
}

void skel_stmt(std::map<Label, LabelReport>& out, const Stmt& s) {
  skel_add(out, s.label, s.span, LabelReport::Kind::Stmt);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SAssign>) {
          skel_expr(out, *n.expr);
        } else if constexpr (std::is_same_v<T, SCall>) {
          for (const auto& a : n.args) skel_expr(out, *a);
        } else if constexpr (std::is_same_v<T, SSeq>) {
          skel_stmt(out, *n.first);
          skel_stmt(out, *n.second);
        } else if constexpr (std::is_same_v<T, SBlock>) {
          skel_decl(out, *n.locals);
          skel_stmt(out, *n.stmt);
        } else if constexpr (std::is_same_v<T, SIf>) {
          skel_expr(out, *n.cond);
          skel_stmt(out, *n.then_s);
          skel_stmt(out, *n.else_s);
        } else if constexpr (std::is_same_v<T, SWhile>) {
          skel_expr(out, *n.cond);
          skel_stmt(out, *n.body);
        } else if constexpr (std::is_same_v<T, SThrowExpr>) {
          skel_expr(out, *n.expr);
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          skel_stmt(out, *n.body);
          skel_catch(out, *n.handlers);
        } else if constexpr (std::is_same_v<T, STryFinally>) {
          skel_stmt(out, *n.body);
          skel_stmt(out, *n.finalizer);
        }
      },
      s.node);
}

void skel_body(std::map<Label, LabelReport>& out, const Body& b) {
  skel_add(out, b.label, b.span, LabelReport::Kind::Body);
  if (const auto* let = std::get_if<BLet>(&b.node)) {
    skel_decl(out, *let->locals);
    skel_stmt(out, *let->stmt);
    skel_expr(out, *let->result);
  }
}

void skel_catch(std::map<Label, LabelReport>& out, const Catch& k) {
  skel_add(out, k.label, k.span, LabelReport::Kind::Catch);
  if (const auto* seq = std::get_if<CSeq>(&k.node)) {
    skel_catch(out, *seq->first);
    skel_catch(out, *seq->second);
  } else {
    skel_stmt(out, *std::get<CClause>(k.node).handler);
  }
}

}  // namespace

std::map<Label, LabelReport> collect_label_skeleton(const Program& prog) {
  std::map<Label, LabelReport> out;
  skel_glob(out, *prog.globals);
  return out;
}

}  // namespace cpm
