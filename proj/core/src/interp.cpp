// SPDX-License-Identifier: MIT
#include "cpm/interp.hpp"

#include <algorithm>
#include <utility>

#include "cpm/bug.hpp"

namespace cpm {

namespace {

RtsExc rts_exc(std::string_view name) { return RtsExc{std::string(name)}; }

const Cell& expect_cell(const Env& rho, const Ident& id, Label l) {
  const EnvVal* v = rho.lookup(id);
  if (!v) throw StuckError(l, "unbound identifier " + id.display());
  const Cell* c = std::get_if<Cell>(v);
  if (!c) throw StuckError(l, id.display() + " does not name a memory cell");
  return *c;
}

const Closure& expect_closure(const Env& rho, const Ident& id, Label l) {
  const EnvVal* v = rho.lookup(id);
  if (!v) throw StuckError(l, "unbound identifier " + id.display());
  const Closure* c = std::get_if<Closure>(v);
  if (!c) throw StuckError(l, id.display() + " does not name a function");
  return *c;
}

const Int& expect_int(const SVal& v, Label l, const char* what) {
  const Int* i = std::get_if<Int>(&v);
  if (!i) throw StuckError(l, std::string(what) + " is not an integer");
  return *i;
}

bool expect_bool(const SVal& v, Label l, const char* what) {
  const bool* b = std::get_if<bool>(&v);
  if (!b) throw StuckError(l, std::string(what) + " is not a boolean");
  return *b;
}

}  // namespace

std::string to_string(const ProgramResult& r) {
  switch (r.kind) {
    case ProgramResult::Kind::Value:
      return r.value.str();
    case ProgramResult::Kind::Exception:
      return "uncaught exception: " + to_string(r.ex);
    case ProgramResult::Kind::OutOfBudget:
      return "out of budget";
  }
  CPM_BUG("unhandled result kind");
}

Interp::Interp(const Program& prog, const TypeInfo& types, InterpConfig cfg,
               TraceSink sink)
    : prog_(prog),
      types_(types),
      cfg_(cfg),
      sink_(std::move(sink)),
      synth_(prog) {}

void Interp::tick() {
  if (steps_ >= cfg_.budget) throw BudgetExhausted{};
  ++steps_;
}

void Interp::enter(Label label, const Mem& mem) {
  if (!sink_) return;
  TraceEvent ev;
  ev.phase = TraceEvent::Phase::Enter;
  ev.label = label;
  ev.mem = &mem;
  sink_(ev);
}

ExprOut Interp::done_expr(std::string_view rule, Label l, const Mem& m,
                     ExprOut out) {
  if (sink_) {
    TraceEvent ev{TraceEvent::Phase::Conclude, rule, l, &m, nullptr};
    if (const auto* e = std::get_if<ExceptState>(&out)) {
      ev.mem = &e->mem;
      ev.ex = &e->ex;
    }
    sink_(ev);
  }
  return out;
}

DeclOut Interp::done_decl(std::string_view rule, Label l, DeclOut out) {
  if (sink_) {
    TraceEvent ev{TraceEvent::Phase::Conclude, rule, l, nullptr, nullptr};
    if (const auto* e = std::get_if<ExceptState>(&out)) {
      ev.mem = &e->mem;
      ev.ex = &e->ex;
    } else {
      ev.mem = &std::get<DeclOk>(out).mem;
    }
    sink_(ev);
  }
  return out;
}

StmtOut Interp::done_stmt(std::string_view rule, Label l, StmtOut out) {
  if (sink_) {
    TraceEvent ev{TraceEvent::Phase::Conclude, rule, l, nullptr, nullptr};
    if (const auto* e = std::get_if<ExceptState>(&out)) {
      ev.mem = &e->mem;
      ev.ex = &e->ex;
    } else {
      ev.mem = &std::get<Mem>(out);
    }
    sink_(ev);
  }
  return out;
}

// ------------------------------------------------------------- expressions

ExprOut Interp::eval_expr(const Env& rho, const Expr& e, const Mem& mem) {
  tick();
  enter(e.label, mem);
  const Label l = e.label;
  return std::visit(
      [&](const auto& n) -> ExprOut {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IntConst>) {
          return done_expr("int", l, mem, SVal{n.value});
        } else if constexpr (std::is_same_v<T, BoolConst>) {
          return done_expr("bool", l, mem, SVal{n.value});
        } else if constexpr (std::is_same_v<T, VarRef>) {
          const Cell& c = expect_cell(rho, n.id, l);
          auto r = mem.read(c.addr, c.type);
          if (const auto* rx = std::get_if<RtsExc>(&r))
            return done_expr("var-err", l, mem, ExceptState{mem, *rx});
          return done_expr("var", l, mem, std::get<SVal>(std::move(r)));
        } else if constexpr (std::is_same_v<T, Neg>) {
          ExprOut a = eval_expr(rho, *n.arg, mem);
          if (std::holds_alternative<ExceptState>(a))
            return done_expr("neg-err", l, mem, std::move(a));
          const Int& i = expect_int(std::get<SVal>(a), l, "negated operand");
          return done_expr("neg", l, mem, SVal{Int(-i)});
        } else if constexpr (std::is_same_v<T, Arith>) {
          ExprOut a = eval_expr(rho, *n.lhs, mem);
          if (std::holds_alternative<ExceptState>(a))
            return done_expr("arith-err", l, mem, std::move(a));
          ExprOut b = eval_expr(rho, *n.rhs, mem);
          if (std::holds_alternative<ExceptState>(b))
            return done_expr("arith-err", l, mem, std::move(b));
          const Int& x = expect_int(std::get<SVal>(a), l, "left operand");
          const Int& y = expect_int(std::get<SVal>(b), l, "right operand");
          if ((n.op == ArithOp::Div || n.op == ArithOp::Rem) && y == 0)
            return done_expr("div-zero", l, mem,
                        ExceptState{mem, rts_exc(rts::divbyzero)});
          Int r;
          switch (n.op) {
            case ArithOp::Add: r = x + y; break;
            case ArithOp::Sub: r = x - y; break;
            case ArithOp::Mul: r = x * y; break;
            case ArithOp::Div: r = int_div(x, y); break;
            case ArithOp::Rem: r = int_mod(x, y); break;
          }
          return done_expr("arith", l, mem, SVal{std::move(r)});
        } else if constexpr (std::is_same_v<T, Cmp>) {
          ExprOut a = eval_expr(rho, *n.lhs, mem);
          if (std::holds_alternative<ExceptState>(a))
            return done_expr("cmp-err", l, mem, std::move(a));
          ExprOut b = eval_expr(rho, *n.rhs, mem);
          if (std::holds_alternative<ExceptState>(b))
            return done_expr("cmp-err", l, mem, std::move(b));
          const Int& x = expect_int(std::get<SVal>(a), l, "left operand");
          const Int& y = expect_int(std::get<SVal>(b), l, "right operand");
          bool r = false;
          switch (n.op) {
            case CmpOp::Eq: r = x == y; break;
            case CmpOp::Ne: r = x != y; break;
            case CmpOp::Lt: r = x < y; break;
            case CmpOp::Le: r = x <= y; break;
            case CmpOp::Ge: r = x >= y; break;
            case CmpOp::Gt: r = x > y; break;
          }
          return done_expr("cmp", l, mem, SVal{r});
        } else if constexpr (std::is_same_v<T, Not>) {
          ExprOut a = eval_expr(rho, *n.arg, mem);
          if (std::holds_alternative<ExceptState>(a))
            return done_expr("not-err", l, mem, std::move(a));
          bool b = expect_bool(std::get<SVal>(a), l, "negated operand");
          return done_expr("not", l, mem, SVal{!b});
        } else if constexpr (std::is_same_v<T, And>) {
          ExprOut a = eval_expr(rho, *n.lhs, mem);
          if (std::holds_alternative<ExceptState>(a))
            return done_expr("and-err", l, mem, std::move(a));
          if (!expect_bool(std::get<SVal>(a), l, "left operand"))
            return done_expr("and-ff", l, mem, SVal{false});
          // The right operand's outcome, value or exception, is the result.
          return done_expr("and", l, mem, eval_expr(rho, *n.rhs, mem));
        } else {
          static_assert(std::is_same_v<T, Or>);
          ExprOut a = eval_expr(rho, *n.lhs, mem);
          if (std::holds_alternative<ExceptState>(a))
            return done_expr("or-err", l, mem, std::move(a));
          if (expect_bool(std::get<SVal>(a), l, "left operand"))
            return done_expr("or-tt", l, mem, SVal{true});
          return done_expr("or", l, mem, eval_expr(rho, *n.rhs, mem));
        }
      },
      e.node);
}

// ------------------------------------------------------------ declarations

DeclOut Interp::eval_decl(const Env& rho, const Decl& d, Mem mem) {
  tick();
  enter(d.label, mem);
  const Label l = d.label;
  return std::visit(
      [&](const auto& n) -> DeclOut {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DNil>) {
          return done_decl("nil", l, DeclOk{Env{}, std::move(mem)});
        } else if constexpr (std::is_same_v<T, DLocal>) {
          ExprOut v = eval_expr(rho, *n.init, mem);
          if (auto* e = std::get_if<ExceptState>(&v)) {
            e->mem.unmark_stack();
            return done_decl("lvar-err", l, std::move(*e));
          }
          auto r = mem.new_stack(std::get<SVal>(v));
          if (const auto* rx = std::get_if<RtsExc>(&r)) {
            ExceptState e{std::move(mem), *rx};
            e.mem.unmark_stack();
            return done_decl("lvar-stkovflw", l, std::move(e));
          }
          Env r0;
          r0.bindings.emplace(n.id, Cell{Addr{std::get<Ind>(r)}, n.type});
          return done_decl("lvar", l, DeclOk{std::move(r0), std::move(mem)});
        } else if constexpr (std::is_same_v<T, DSeq>) {
          DeclOut r0 = eval_decl(rho, *n.first, std::move(mem));
          if (std::holds_alternative<ExceptState>(r0))
            return done_decl("dseq-err", l, std::move(r0));
          DeclOk& ok0 = std::get<DeclOk>(r0);
          DeclOut r1 = eval_decl(rho.overridden_with(ok0.env), *n.second,
                                 std::move(ok0.mem));
          if (std::holds_alternative<ExceptState>(r1))
            return done_decl("dseq-err", l, std::move(r1));
          DeclOk& ok1 = std::get<DeclOk>(r1);
          return done_decl("dseq", l,
                      DeclOk{ok0.env.overridden_with(ok1.env),
                             std::move(ok1.mem)});
        } else if constexpr (std::is_same_v<T, DEnv>) {
          return done_decl("env", l, DeclOk{*n.env, std::move(mem)});
        } else {
          static_assert(std::is_same_v<T, DRecEnv>);
          Env r1;
          for (const auto& [id, v] : n.env->bindings) {
            const Closure* cl = std::get_if<Closure>(&v);
            if (!cl)
              throw StuckError(l, "recursive group entry " + id.display() +
                                      " is not a function");
            if (std::holds_alternative<BExtern>(cl->body->node)) {
              r1.bindings.emplace(id, *cl);
              continue;
            }
            Env group = n.env->without(declared_idents(cl->params));
            r1.bindings.emplace(
                id, Closure{cl->params, synth_.rec_body(*cl->body, group),
                            cl->result});
          }
          return done_decl("rec-env", l, DeclOk{std::move(r1), std::move(mem)});
        }
      },
      d.node);
}

// ------------------------------------------------------ global declarations

DeclOut Interp::eval_glob(const Env& rho, const Glob& g, Mem mem) {
  tick();
  enter(g.label, mem);
  const Label l = g.label;
  return std::visit(
      [&](const auto& n) -> DeclOut {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GVar>) {
          ExprOut v = eval_expr(rho, *n.init, mem);
          if (auto* e = std::get_if<ExceptState>(&v))
            return done_decl("gvar-err", l, cleanup_data(std::move(*e)));
          auto r = mem.new_data(std::get<SVal>(v));
          if (const auto* rx = std::get_if<RtsExc>(&r))
            return done_decl("gvar-datovflw", l,
                        cleanup_data(ExceptState{std::move(mem), *rx}));
          Env r0;
          r0.bindings.emplace(n.id, Cell{Addr{std::get<Loc>(r)}, n.type});
          return done_decl("gvar", l, DeclOk{std::move(r0), std::move(mem)});
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
          return done_decl("function", l, DeclOk{std::move(r0), std::move(mem)});
        } else if constexpr (std::is_same_v<T, GRec>) {
          IdentSet fi = free_idents(*n.decls);
          IdentSet di = declared_idents(*n.decls);
          IdentSet j;
          std::set_intersection(fi.begin(), fi.end(), di.begin(), di.end(),
                                std::inserter(j, j.begin()));
          DeclOut r0 = eval_glob(rho.without(j), *n.decls, std::move(mem));
          if (std::holds_alternative<ExceptState>(r0))
            return done_decl("rec-err", l, std::move(r0));
          DeclOk& ok = std::get<DeclOk>(r0);
          DeclPtr lit = synth_.rec_literal(g, ok.env);
          return done_decl("rec", l, eval_decl(rho, *lit, std::move(ok.mem)));
        } else {
          static_assert(std::is_same_v<T, GSeq>);
          DeclOut r0 = eval_glob(rho, *n.first, std::move(mem));
          if (std::holds_alternative<ExceptState>(r0))
            return done_decl("gseq-err", l, std::move(r0));
          DeclOk& ok0 = std::get<DeclOk>(r0);
          DeclOut r1 = eval_glob(rho.overridden_with(ok0.env), *n.second,
                                 std::move(ok0.mem));
          if (std::holds_alternative<ExceptState>(r1))
            return done_decl("gseq-err", l, std::move(r1));
          DeclOk& ok1 = std::get<DeclOk>(r1);
          return done_decl("gseq", l,
                      DeclOk{ok0.env.overridden_with(ok1.env),
                             std::move(ok1.mem)});
        }
      },
      g.node);
}

// --------------------------------------------------------------- statements

StmtOut Interp::eval_stmt(const Env& rho, const Stmt& s, Mem mem) {
  tick();
  enter(s.label, mem);
  const Label l = s.label;
  return std::visit(
      [&](const auto& n) -> StmtOut {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SNop>) {
          return done_stmt("nop", l, std::move(mem));
        } else if constexpr (std::is_same_v<T, SAssign>) {
          ExprOut v = eval_expr(rho, *n.expr, mem);
          if (auto* e = std::get_if<ExceptState>(&v))
            return done_stmt("assign-err", l, std::move(*e));
          const Cell& c = expect_cell(rho, n.id, l);
          if (auto err = mem.write(c.addr, c.type, std::get<SVal>(v)))
            return done_stmt("assign-memerror", l,
                        ExceptState{std::move(mem), *err});
          return done_stmt("assign", l, std::move(mem));
        } else if constexpr (std::is_same_v<T, SCall>) {
          return eval_call(rho, s, std::move(mem));
        } else if constexpr (std::is_same_v<T, SSeq>) {
          StmtOut r0 = eval_stmt(rho, *n.first, std::move(mem));
          if (std::holds_alternative<ExceptState>(r0))
            return done_stmt("seq-err", l, std::move(r0));
          return done_stmt("seq", l,
                      eval_stmt(rho, *n.second, std::get<Mem>(std::move(r0))));
        } else if constexpr (std::is_same_v<T, SBlock>) {
          mem.mark_stack();
          DeclOut rd = eval_decl(rho, *n.locals, std::move(mem));
          if (auto* e = std::get_if<ExceptState>(&rd)) {
            // the failing lvar already restored the stack
            return done_stmt("block-decl-err", l, std::move(*e));
          }
          DeclOk ok = std::get<DeclOk>(std::move(rd));
          StmtOut eta = eval_stmt(rho.overridden_with(ok.env), *n.stmt,
                                  std::move(ok.mem));
          if (auto* e = std::get_if<ExceptState>(&eta))
            return done_stmt("block-err", l, unmark_stack(std::move(*e)));
          Mem m = std::get<Mem>(std::move(eta));
          m.unmark_stack();
          return done_stmt("block", l, std::move(m));
        } else if constexpr (std::is_same_v<T, SIf>) {
          ExprOut cv = eval_expr(rho, *n.cond, mem);
          if (auto* e = std::get_if<ExceptState>(&cv))
            return done_stmt("if-err", l, std::move(*e));
          if (expect_bool(std::get<SVal>(cv), l, "condition"))
            return done_stmt("if-true", l,
                        eval_stmt(rho, *n.then_s, std::move(mem)));
          return done_stmt("if-false", l, eval_stmt(rho, *n.else_s, std::move(mem)));
        } else if constexpr (std::is_same_v<T, SWhile>) {
          return eval_while(rho, s, std::move(mem));
        } else if constexpr (std::is_same_v<T, SThrowRts>) {
          return done_stmt("throw-rts", l,
                      ExceptState{std::move(mem), rts_exc(n.name)});
        } else if constexpr (std::is_same_v<T, SThrowExpr>) {
          ExprOut v = eval_expr(rho, *n.expr, mem);
          if (auto* e = std::get_if<ExceptState>(&v))
            return done_stmt("throw-err", l, std::move(*e));
          return done_stmt("throw", l,
                      ExceptState{std::move(mem),
                                  Except{std::get<SVal>(std::move(v))}});
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          StmtOut r0 = eval_stmt(rho, *n.body, std::move(mem));
          if (std::holds_alternative<Mem>(r0))
            return done_stmt("try-catch-ok", l, std::move(r0));
          CatchOut c = eval_catch(rho, *n.handlers,
                                  std::get<ExceptState>(std::move(r0)));
          return done_stmt(c.caught ? "try-catch-caught" : "try-catch-uncaught", l,
                      std::move(c.out));
        } else {
          static_assert(std::is_same_v<T, STryFinally>);
          StmtOut r0 = eval_stmt(rho, *n.body, std::move(mem));
          if (auto* m = std::get_if<Mem>(&r0))
            return done_stmt("try-finally", l,
                        eval_stmt(rho, *n.finalizer, std::move(*m)));
          ExceptState e0 = std::get<ExceptState>(std::move(r0));
          StmtOut r1 = eval_stmt(rho, *n.finalizer, std::move(e0.mem));
          if (auto* m1 = std::get_if<Mem>(&r1))
            return done_stmt("try-finally-exc", l,
                        ExceptState{std::move(*m1), std::move(e0.ex)});
          // the finalizer's exception replaces the original one
          return done_stmt("try-finally-replace", l, std::move(r1));
        }
      },
      s.node);
}

StmtOut Interp::eval_call(const Env& rho, const Stmt& s, Mem mem) {
  const auto& c = std::get<SCall>(s.node);
  const Label l = s.label;
  const Closure& cl = expect_closure(rho, c.fn, l);
  const Cell& target = expect_cell(rho, c.target, l);
  if (target.type != cl.result)
    throw StuckError(l, "call target and function result types differ");
  if (c.args.size() != cl.params.size())
    throw StuckError(l, "call arity does not match the function");

  DeclPtr d = synth_.call_param_decl(s, cl.params, cl.result);
  mem.mark_stack();
  DeclOut rd = eval_decl(rho, *d, std::move(mem));
  if (auto* e = std::get_if<ExceptState>(&rd)) {
    // the failing lvar already restored the stack
    return done_stmt("call-param-err", l, std::move(*e));
  }
  DeclOk ok = std::get<DeclOk>(std::move(rd));

  Env rho1 = Synth::callee_env(cl.params, cl.result);
  ok.mem.link_stack();
  StmtOut body = eval_body(rho.overridden_with(rho1), *cl.body,
                           std::move(ok.mem));
  if (auto* e = std::get_if<ExceptState>(&body))
    return done_stmt("call-body-err", l,
                unmark_stack(unlink_stack(std::move(*e))));

  Mem m1 = std::get<Mem>(std::move(body));
  m1.unlink_stack();
  StmtPtr ret = synth_.return_assign(s);
  StmtOut r2 = eval_stmt(rho.overridden_with(ok.env), *ret, std::move(m1));
  if (auto* e = std::get_if<ExceptState>(&r2))
    return done_stmt("call-ret-err", l, unmark_stack(std::move(*e)));
  Mem m2 = std::get<Mem>(std::move(r2));
  m2.unmark_stack();
  return done_stmt("call", l, std::move(m2));
}

StmtOut Interp::eval_while(const Env& rho, const Stmt& s, Mem mem) {
  const auto& n = std::get<SWhile>(s.node);
  const Label l = s.label;
  // Iterative rendering of the recursive rules; each unfolding of the loop
  // phrase is charged as one more rule application.
  bool first = true;
  for (;;) {
    if (!first) {
      tick();
      enter(l, mem);
    }
    first = false;
    ExprOut cv = eval_expr(rho, *n.cond, mem);
    if (auto* e = std::get_if<ExceptState>(&cv))
      return done_stmt("while-guard-err", l, std::move(*e));
    if (!expect_bool(std::get<SVal>(cv), l, "loop guard"))
      return done_stmt("while-false", l, std::move(mem));
    StmtOut b = eval_stmt(rho, *n.body, std::move(mem));
    if (auto* e = std::get_if<ExceptState>(&b))
      return done_stmt("while-body-err", l, std::move(*e));
    mem = std::get<Mem>(std::move(b));
  }
}

// ------------------------------------------------------------------ bodies

StmtOut Interp::eval_body(const Env& rho, const Body& b, Mem mem) {
  tick();
  enter(b.label, mem);
  const Label l = b.label;
  if (std::holds_alternative<BExtern>(b.node)) {
    if (cfg_.extern_policy == ExternPolicy::Reject)
      throw StuckError(l, "extern body evaluated under extern=reject");
    // Resolve the specified nondeterminism deterministically: memory is kept
    // as it is (one admissible choice) and externcall is raised.
    return done_stmt("extern", l,
                ExceptState{std::move(mem), rts_exc(rts::externcall)});
  }

  const BLet& n = std::get<BLet>(b.node);
  mem.mark_stack();
  DeclOut rd = eval_decl(rho, *n.locals, std::move(mem));
  if (auto* e = std::get_if<ExceptState>(&rd))
    return done_stmt("let-decl-err", l, std::move(*e));
  DeclOk ok = std::get<DeclOk>(std::move(rd));
  Env rho0 = rho.overridden_with(ok.env);

  StmtOut r1 = eval_stmt(rho0, *n.stmt, std::move(ok.mem));
  if (auto* e = std::get_if<ExceptState>(&r1))
    return done_stmt("let-stmt-err", l, unmark_stack(std::move(*e)));

  StmtPtr ra = synth_.result_assign(b);
  StmtOut r0 = eval_stmt(rho0, *ra, std::get<Mem>(std::move(r1)));
  if (auto* e = std::get_if<ExceptState>(&r0))
    return done_stmt("let-result-err", l, unmark_stack(std::move(*e)));
  Mem m = std::get<Mem>(std::move(r0));
  m.unmark_stack();
  return done_stmt("let", l, std::move(m));
}

// ----------------------------------------------------------- catch clauses

CatchOut Interp::eval_catch(const Env& rho, const Catch& k, ExceptState err) {
  tick();
  enter(k.label, err.mem);
  if (const auto* seq = std::get_if<CSeq>(&k.node)) {
    CatchOut c0 = eval_catch(rho, *seq->first, std::move(err));
    if (c0.caught) return c0;
    return eval_catch(rho, *seq->second,
                      std::get<ExceptState>(std::move(c0.out)));
  }

  const CClause& n = std::get<CClause>(k.node);
  const ExceptDecl& p = n.decl;

  if (p.kind == ExceptDecl::Kind::Binder) {
    const SVal* sv = std::get_if<SVal>(&err.ex);
    if (!sv || type_of(*sv) != p.type) return CatchOut{false, std::move(err)};
    Mem m = std::move(err.mem);
    m.mark_stack();
    auto r = m.new_stack(*sv);
    if (const auto* rx = std::get_if<RtsExc>(&r)) {
      ExceptState e{std::move(m), *rx};
      e.mem.unmark_stack();
      return CatchOut{true, std::move(e)};
    }
    Env r1;
    r1.bindings.emplace(p.binder, Cell{Addr{std::get<Ind>(r)}, p.type});
    StmtOut h = eval_stmt(rho.overridden_with(r1), *n.handler, std::move(m));
    if (auto* e = std::get_if<ExceptState>(&h))
      return CatchOut{true, unmark_stack(std::move(*e))};
    Mem hm = std::get<Mem>(std::move(h));
    hm.unmark_stack();
    return CatchOut{true, std::move(hm)};
  }

  bool match = false;
  switch (p.kind) {
    case ExceptDecl::Kind::Any:
      match = true;
      break;
    case ExceptDecl::Kind::Rts: {
      const auto* rx = std::get_if<RtsExc>(&err.ex);
      match = rx && rx->name == p.rts_name;
      break;
    }
    case ExceptDecl::Kind::Type: {
      const auto* sv = std::get_if<SVal>(&err.ex);
      match = sv && type_of(*sv) == p.type;
      break;
    }
    case ExceptDecl::Kind::Binder:
      CPM_BUG("binder handled above");
  }
  if (!match) return CatchOut{false, std::move(err)};
  return CatchOut{true, eval_stmt(rho, *n.handler, std::move(err.mem))};
}

// ------------------------------------------------------------------ driver

ProgramResult Interp::run() {
  ProgramResult res;
  try {
    GlobPtr g0 = synth_.driver_glob();
    DeclOut r = eval_glob(Env{}, *g0, Mem::initial(cfg_.limits));
    if (auto* e = std::get_if<ExceptState>(&r)) {
      res.kind = ProgramResult::Kind::Exception;
      res.ex = std::move(e->ex);
    } else {
      DeclOk ok = std::get<DeclOk>(std::move(r));
      StmtPtr call = synth_.driver_call();
      StmtOut eta = eval_stmt(ok.env, *call, std::move(ok.mem));
      if (auto* e = std::get_if<ExceptState>(&eta)) {
        res.kind = ProgramResult::Kind::Exception;
        res.ex = std::move(e->ex);
      } else {
        const Mem& m = std::get<Mem>(eta);
        const Cell& xc = expect_cell(ok.env, reserved_result(), 0);
        auto v = m.read(xc.addr, SType::Integer);
        CPM_CHECK(std::holds_alternative<SVal>(v),
                  "driver result cell is unreadable");
        res.kind = ProgramResult::Kind::Value;
        res.value = std::get<Int>(std::get<SVal>(std::move(v)));
      }
    }
  } catch (const BudgetExhausted&) {
    res.kind = ProgramResult::Kind::OutOfBudget;
  }
  res.steps = steps_;
  return res;
}

}  // namespace cpm
