// SPDX-License-Identifier: MIT
#ifndef CPM_ENV_HPP
#define CPM_ENV_HPP

#include <map>
#include <memory>
#include <variant>

#include "cpm/addr.hpp"
#include "cpm/ast.hpp"

namespace cpm {

// What an identifier denotes at run time: a typed memory cell or a function
// closure.  Closures keep the formal parameters and the (possibly wrapped)
// body; the result type is carried along so type environments can be
// reconstructed from environment literals without re-deriving body types.
struct Cell {
  Addr addr;
  SType type;

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct Closure {
  Formals params;
  BodyPtr body;
  SType result;
};

using EnvVal = std::variant<Cell, Closure>;

// Execution environments are immutable value maps; all the combinators
// return fresh environments.  std::map keeps iteration deterministic.
struct Env {
  std::map<Ident, EnvVal> bindings;

  const EnvVal* lookup(const Ident& id) const {
    auto it = bindings.find(id);
    return it == bindings.end() ? nullptr : &it->second;
  }

  bool contains(const Ident& id) const { return bindings.contains(id); }

  // rho[rho_1]: right-biased override.
  Env overridden_with(const Env& other) const {
    Env out = *this;
    for (const auto& [id, v] : other.bindings) out.bindings[id] = v;
    return out;
  }

  // rho restricted to I.
  Env restricted_to(const IdentSet& ids) const {
    Env out;
    for (const auto& [id, v] : bindings)
      if (ids.contains(id)) out.bindings.emplace(id, v);
    return out;
  }

  // rho with I removed.
  Env without(const IdentSet& ids) const {
    Env out;
    for (const auto& [id, v] : bindings)
      if (!ids.contains(id)) out.bindings.emplace(id, v);
    return out;
  }
};

// Structural equality that ignores node labels and spans (labels are unique
// per occurrence, so plain equality would never match two builds of the same
// phrase).  Closure equality compares (params, body, result) this way; cells
// compare exactly.
bool equal_modulo_labels(const Expr& a, const Expr& b);
bool equal_modulo_labels(const Decl& a, const Decl& b);
bool equal_modulo_labels(const Glob& a, const Glob& b);
bool equal_modulo_labels(const Body& a, const Body& b);
bool equal_modulo_labels(const Stmt& a, const Stmt& b);
bool equal_modulo_labels(const Catch& a, const Catch& b);
bool equal_modulo_labels(const EnvVal& a, const EnvVal& b);
bool equal_modulo_labels(const Env& a, const Env& b);

}  // namespace cpm

#endif  // CPM_ENV_HPP
