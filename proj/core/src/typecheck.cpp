// SPDX-License-Identifier: MIT
#include "cpm/typecheck.hpp"

#include <sstream>

namespace cpm {

namespace {

[[noreturn]] void bad(Label label, Span span, std::string rule,
                      std::string message) {
  throw TypeError{label, span, std::move(rule), std::move(message)};
}

std::string quoted(const Ident& id) { return "'" + id.display() + "'"; }

SType require_loc(const TEnv& env, const Ident& id, Label label, Span span,
                  const char* rule) {
  const DType* dt = env.lookup(id);
  if (!dt) bad(label, span, rule, "identifier " + quoted(id) + " is not declared");
  if (!std::holds_alternative<LocOf>(*dt))
    bad(label, span, rule,
        "identifier " + quoted(id) + " names a function, not a variable");
  return std::get<LocOf>(*dt).type;
}

}  // namespace

SType check_expr(const TEnv& env, const Expr& e) {
  return std::visit(
      [&](const auto& n) -> SType {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IntConst>) {
          return SType::Integer;
        } else if constexpr (std::is_same_v<T, BoolConst>) {
          return SType::Boolean;
        } else if constexpr (std::is_same_v<T, VarRef>) {
          return require_loc(env, n.id, e.label, e.span, "var");
        } else if constexpr (std::is_same_v<T, Neg>) {
          if (check_expr(env, *n.arg) != SType::Integer)
            bad(e.label, e.span, "neg", "unary '-' needs an integer operand");
          return SType::Integer;
        } else if constexpr (std::is_same_v<T, Arith>) {
          if (check_expr(env, *n.lhs) != SType::Integer ||
              check_expr(env, *n.rhs) != SType::Integer)
            bad(e.label, e.span, "arith",
                std::string("'") + std::string(to_string(n.op)) +
                    "' needs integer operands");
          return SType::Integer;
        } else if constexpr (std::is_same_v<T, Cmp>) {
          if (check_expr(env, *n.lhs) != SType::Integer ||
              check_expr(env, *n.rhs) != SType::Integer)
            bad(e.label, e.span, "cmp",
                std::string("'") + std::string(to_string(n.op)) +
                    "' compares integers");
          return SType::Boolean;
        } else if constexpr (std::is_same_v<T, Not>) {
          if (check_expr(env, *n.arg) != SType::Boolean)
            bad(e.label, e.span, "not", "'not' needs a boolean operand");
          return SType::Boolean;
        } else {  // And, Or
          if (check_expr(env, *n.lhs) != SType::Boolean ||
              check_expr(env, *n.rhs) != SType::Boolean)
            bad(e.label, e.span, "bool-op",
                "'and'/'or' need boolean operands");
          return SType::Boolean;
        }
      },
      e.node);
}

// ------------------------------------------------- structural environments

TEnv decl_tenv(const Decl& d) {
  return std::visit(
      [&](const auto& n) -> TEnv {
        using T = std::decay_t<decltype(n)>;
        TEnv out;
        if constexpr (std::is_same_v<T, DNil>) {
          return out;
        } else if constexpr (std::is_same_v<T, DLocal>) {
          out.bindings.emplace(n.id, LocOf{n.type});
          return out;
        } else if constexpr (std::is_same_v<T, DSeq>) {
          return decl_tenv(*n.first).overridden_with(decl_tenv(*n.second));
        } else {  // DEnv, DRecEnv: read types straight off the literal
          for (const auto& [id, val] : n.env->bindings) {
            if (const auto* cell = std::get_if<Cell>(&val)) {
              out.bindings.emplace(id, LocOf{cell->type});
            } else {
              const auto& c = std::get<Closure>(val);
              out.bindings.emplace(id, FnType{c.params, c.result});
            }
          }
          return out;
        }
      },
      d.node);
}

namespace {

TEnv formals_tenv(const Formals& fps, Label label, Span span) {
  TEnv out;
  for (const auto& p : fps) {
    if (out.bindings.contains(p.id))
      bad(label, span, "formals",
          "duplicate formal parameter " + quoted(p.id));
    out.bindings.emplace(p.id, LocOf{p.type});
  }
  return out;
}

// Result type of a body, looking only at declarations and the result
// expression (statements are not checked here). Used by glob_tenv to
// type recursive groups before their bodies can be fully checked.
SType body_result_type(const TEnv& env, const Body& b) {
  return std::visit(
      [&](const auto& n) -> SType {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BExtern>) {
          return n.type;
        } else {
          TEnv inner = env.overridden_with(decl_tenv(*n.locals));
          return check_expr(inner, *n.result);
        }
      },
      b.node);
}

}  // namespace

TEnv glob_tenv(const TEnv& env, const Glob& g) {
  return std::visit(
      [&](const auto& n) -> TEnv {
        using T = std::decay_t<decltype(n)>;
        TEnv out;
        if constexpr (std::is_same_v<T, GVar>) {
          out.bindings.emplace(n.id, LocOf{n.type});
          return out;
        } else if constexpr (std::is_same_v<T, GFun>) {
          TEnv fps_env = formals_tenv(n.params, g.label, g.span);
          SType result =
              body_result_type(env.overridden_with(fps_env), *n.body);
          out.bindings.emplace(n.id, FnType{n.params, result});
          return out;
        } else if constexpr (std::is_same_v<T, GRec>) {
          return glob_tenv(env, *n.decls);
        } else {
          TEnv b0 = glob_tenv(env, *n.first);
          TEnv b1 = glob_tenv(env.overridden_with(b0), *n.second);
          return b0.overridden_with(b1);
        }
      },
      g.node);
}

// ------------------------------------------------------------ full checking

TEnv check_decl(const TEnv& env, const Decl& d) {
  return std::visit(
      [&](const auto& n) -> TEnv {
        using T = std::decay_t<decltype(n)>;
        TEnv out;
        if constexpr (std::is_same_v<T, DNil>) {
          return out;
        } else if constexpr (std::is_same_v<T, DLocal>) {
          if (check_expr(env, *n.init) != n.type)
            bad(d.label, d.span, "lvar",
                "initializer of " + quoted(n.id) + " does not have type " +
                    std::string(to_string(n.type)));
          out.bindings.emplace(n.id, LocOf{n.type});
          return out;
        } else if constexpr (std::is_same_v<T, DSeq>) {
          TEnv b0 = check_decl(env, *n.first);
          TEnv b1 = check_decl(env.overridden_with(b0), *n.second);
          return b0.overridden_with(b1);
        } else {
          // Environment literals are well-formed by construction.
          return decl_tenv(d);
        }
      },
      d.node);
}

SType check_body(const TEnv& env, const Body& b) {
  return std::visit(
      [&](const auto& n) -> SType {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BExtern>) {
          return n.type;
        } else {
          TEnv b0 = check_decl(env, *n.locals);
          TEnv inner = env.overridden_with(b0);
          check_stmt(inner, *n.stmt);
          return check_expr(inner, *n.result);
        }
      },
      b.node);
}

TEnv check_glob(const TEnv& env, const Glob& g, TypeInfo& info) {
  return std::visit(
      [&](const auto& n) -> TEnv {
        using T = std::decay_t<decltype(n)>;
        TEnv out;
        if constexpr (std::is_same_v<T, GVar>) {
          if (check_expr(env, *n.init) != n.type)
            bad(g.label, g.span, "gvar",
                "initializer of " + quoted(n.id) + " does not have type " +
                    std::string(to_string(n.type)));
          out.bindings.emplace(n.id, LocOf{n.type});
          return out;
        } else if constexpr (std::is_same_v<T, GFun>) {
          TEnv fps_env = formals_tenv(n.params, g.label, g.span);
          SType result =
              check_body(env.overridden_with(fps_env), *n.body);
          info.fn_result[g.label] = result;
          out.bindings.emplace(n.id, FnType{n.params, result});
          return out;
        } else if constexpr (std::is_same_v<T, GRec>) {
          // Two passes: first compute the generated environment
          // structurally, then re-check the group with the recursive
          // bindings (restricted to the identifiers that actually recur)
          // in scope. Recursive variable declarations are rejected.
          TEnv delta = glob_tenv(env, *n.decls);
          for (const auto& [id, dt] : delta.bindings) {
            if (std::holds_alternative<LocOf>(dt))
              bad(g.label, g.span, "rec-decl",
                  "recursive declaration of variable " + quoted(id) +
                      " is not allowed");
          }
          IdentSet j;
          {
            IdentSet fi = free_idents(*n.decls);
            for (const auto& id : declared_idents(*n.decls))
              if (fi.contains(id)) j.insert(id);
          }
          TEnv rec_env = env.overridden_with(delta.restricted_to(j));
          return check_glob(rec_env, *n.decls, info);
        } else {
          TEnv b0 = check_glob(env, *n.first, info);
          TEnv b1 = check_glob(env.overridden_with(b0), *n.second, info);
          return b0.overridden_with(b1);
        }
      },
      g.node);
}

void check_catch(const TEnv& env, const Catch& k) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, CClause>) {
          TEnv inner = env;
          if (n.decl.kind == ExceptDecl::Kind::Binder)
            inner.bindings[n.decl.binder] = LocOf{n.decl.type};
          check_stmt(inner, *n.handler);
        } else {
          check_catch(env, *n.first);
          check_catch(env, *n.second);
        }
      },
      k.node);
}

void check_stmt(const TEnv& env, const Stmt& s) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SNop> || std::is_same_v<T, SThrowRts>) {
          // nothing to check
        } else if constexpr (std::is_same_v<T, SAssign>) {
          SType target = require_loc(env, n.id, s.label, s.span, "assign");
          if (check_expr(env, *n.expr) != target)
            bad(s.label, s.span, "assign",
                "assignment to " + quoted(n.id) + " has the wrong type");
        } else if constexpr (std::is_same_v<T, SCall>) {
          SType target = require_loc(env, n.target, s.label, s.span, "call");
          const DType* fn = env.lookup(n.fn);
          if (!fn)
            bad(s.label, s.span, "call",
                "function " + quoted(n.fn) + " is not declared");
          if (!std::holds_alternative<FnType>(*fn))
            bad(s.label, s.span, "call",
                quoted(n.fn) + " is a variable, not a function");
          const auto& ft = std::get<FnType>(*fn);
          if (ft.result != target)
            bad(s.label, s.span, "call",
                "result of " + quoted(n.fn) + " does not fit " +
                    quoted(n.target));
          if (ft.params.size() != n.args.size())
            bad(s.label, s.span, "call-args",
                quoted(n.fn) + " expects " +
                    std::to_string(ft.params.size()) + " argument(s), got " +
                    std::to_string(n.args.size()));
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (check_expr(env, *n.args[i]) != ft.params[i].type)
              bad(s.label, s.span, "call-args",
                  "argument " + std::to_string(i + 1) + " of " +
                      quoted(n.fn) + " has the wrong type");
          }
        } else if constexpr (std::is_same_v<T, SSeq>) {
          check_stmt(env, *n.first);
          check_stmt(env, *n.second);
        } else if constexpr (std::is_same_v<T, SBlock>) {
          TEnv b0 = check_decl(env, *n.locals);
          check_stmt(env.overridden_with(b0), *n.stmt);
        } else if constexpr (std::is_same_v<T, SIf>) {
          if (check_expr(env, *n.cond) != SType::Boolean)
            bad(s.label, s.span, "if", "condition must be boolean");
          check_stmt(env, *n.then_s);
          check_stmt(env, *n.else_s);
        } else if constexpr (std::is_same_v<T, SWhile>) {
          if (check_expr(env, *n.cond) != SType::Boolean)
            bad(s.label, s.span, "while", "condition must be boolean");
          check_stmt(env, *n.body);
        } else if constexpr (std::is_same_v<T, SThrowExpr>) {
          check_expr(env, *n.expr);  // any storable type may be thrown
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          check_stmt(env, *n.body);
          check_catch(env, *n.handlers);
        } else {  // STryFinally
          check_stmt(env, *n.body);
          check_stmt(env, *n.finalizer);
        }
      },
      s.node);
}

std::variant<TypeInfo, ValidityError> check_program(const Program& p) {
  if (!p.globals)
    return ValidityError{ValidityErrorKind::IllTyped, 0, Span{},
                         "program", "empty program"};
  if (mentions_reserved_ident(*p.globals))
    return ValidityError{ValidityErrorKind::ReservedIdentifier,
                         p.globals->label, p.globals->span, "validity",
                         "program mentions a reserved identifier"};
  TypeInfo info;
  try {
    info.program_env = check_glob(TEnv{}, *p.globals, info);
  } catch (const TypeError& e) {
    return ValidityError{ValidityErrorKind::IllTyped, e.label, e.span, e.rule,
                         e.message};
  }
  const DType* main_t = info.program_env.lookup(Ident{"main", false});
  if (!main_t || !std::holds_alternative<FnType>(*main_t) ||
      !std::get<FnType>(*main_t).params.empty() ||
      std::get<FnType>(*main_t).result != SType::Integer) {
    return ValidityError{ValidityErrorKind::MissingOrWrongMain,
                         p.globals->label, p.globals->span, "validity",
                         "program must declare main taking no parameters "
                         "and returning integer"};
  }
  return info;
}

}  // namespace cpm
