// SPDX-License-Identifier: MIT
#ifndef CPM_TYPECHECK_HPP
#define CPM_TYPECHECK_HPP

#include <map>
#include <optional>
#include <string>
#include <variant>

#include "cpm/ast.hpp"
#include "cpm/env.hpp"

namespace cpm {

// Denotable types: what a type environment can associate to an identifier —
// the location of a storable value, or a function type.
struct LocOf {
  SType type;
  friend bool operator==(const LocOf&, const LocOf&) = default;
};
struct FnType {
  Formals params;
  SType result;
  friend bool operator==(const FnType&, const FnType&) = default;
};
using DType = std::variant<LocOf, FnType>;

struct TEnv {
  std::map<Ident, DType> bindings;

  const DType* lookup(const Ident& id) const {
    auto it = bindings.find(id);
    return it == bindings.end() ? nullptr : &it->second;
  }

  // beta[beta_1]: right-biased override.
  TEnv overridden_with(const TEnv& other) const {
    TEnv out = *this;
    for (const auto& [id, v] : other.bindings) out.bindings[id] = v;
    return out;
  }

  // beta restricted to I.
  TEnv restricted_to(const IdentSet& ids) const {
    TEnv out;
    for (const auto& [id, v] : bindings)
      if (ids.contains(id)) out.bindings.emplace(id, v);
    return out;
  }
};

// Ill-typedness is reported with the offending node and the rule that
// failed; check_program folds these (plus the reserved-identifier scan and
// the main-signature requirement) into a ValidityError.
struct TypeError {
  Label label{};
  Span span;
  std::string rule;
  std::string message;
};

enum class ValidityErrorKind : std::uint8_t {
  ReservedIdentifier,
  IllTyped,
  MissingOrWrongMain,
};

struct ValidityError {
  ValidityErrorKind kind;
  Label label{};
  Span span;
  std::string rule;
  std::string message;
};

// Facts the evaluators need from the static pass: the program's global type
// environment and each function declaration's result type (used to stamp
// closures when declarations are evaluated).
struct TypeInfo {
  TEnv program_env;
  std::map<Label, SType> fn_result;  // keyed by the GFun node's label
};

// All checkers throw TypeError.
SType check_expr(const TEnv& env, const Expr& e);
TEnv check_decl(const TEnv& env, const Decl& d);
TEnv check_glob(const TEnv& env, const Glob& g, TypeInfo& info);
SType check_body(const TEnv& env, const Body& b);
void check_stmt(const TEnv& env, const Stmt& s);
void check_catch(const TEnv& env, const Catch& k);

// The type environment a declaration generates, computed structurally
// (without checking statements). This is what makes recursive declarations
// checkable in two passes: pass one computes the environment, pass two
// re-checks the declaration under it.
TEnv decl_tenv(const Decl& d);
TEnv glob_tenv(const TEnv& env, const Glob& g);

// Whole-program validity: no reserved identifiers, well-typed, and
// main : () -> integer.
std::variant<TypeInfo, ValidityError> check_program(const Program& p);

}  // namespace cpm

#endif  // CPM_TYPECHECK_HPP
