// SPDX-License-Identifier: MIT
#include "cpm/ast.hpp"

#include <sstream>
#include <stdexcept>

#include "cpm/env.hpp"

namespace cpm {

std::string_view to_string(SType t) {
  return t == SType::Integer ? "integer" : "boolean";
}

std::string_view to_string(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
    case ArithOp::Rem: return "%";
  }
  return "?";
}

std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Ge: return ">=";
    case CmpOp::Gt: return ">";
  }
  return "?";
}

Ident reserved_slot(unsigned i) {
  return Ident{std::to_string(i), /*reserved=*/true};
}

Ident reserved_result() { return Ident{"x", /*reserved=*/true}; }

bool is_known_rts_name(std::string_view name) {
  return name == rts::divbyzero || name == rts::stkovflw ||
         name == rts::memerror || name == rts::datovflw ||
         name == rts::externcall;
}

// ----------------------------------------------------------- defined idents

IdentSet declared_idents(const Formals& fps) {
  IdentSet out;
  for (const auto& p : fps) out.insert(p.id);
  return out;
}

IdentSet declared_idents(const Decl& d) {
  return std::visit(
      [](const auto& n) -> IdentSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DNil>) {
          return {};
        } else if constexpr (std::is_same_v<T, DLocal>) {
          return {n.id};
        } else if constexpr (std::is_same_v<T, DSeq>) {
          IdentSet out = declared_idents(*n.first);
          out.merge(declared_idents(*n.second));
          return out;
        } else {  // DEnv, DRecEnv: the literal binds exactly its domain
          IdentSet out;
          for (const auto& [id, unused] : n.env->bindings) out.insert(id);
          return out;
        }
      },
      d.node);
}

IdentSet declared_idents(const Glob& g) {
  return std::visit(
      [](const auto& n) -> IdentSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GVar>) {
          return {n.id};
        } else if constexpr (std::is_same_v<T, GFun>) {
          return {n.id};
        } else if constexpr (std::is_same_v<T, GRec>) {
          return declared_idents(*n.decls);
        } else {
          IdentSet out = declared_idents(*n.first);
          out.merge(declared_idents(*n.second));
          return out;
        }
      },
      g.node);
}

IdentSet declared_idents(const ExceptDecl& p) {
  if (p.kind == ExceptDecl::Kind::Binder) return {p.binder};
  return {};
}

// --------------------------------------------------------------- free idents

namespace {

IdentSet set_minus(IdentSet a, const IdentSet& b) {
  for (const auto& id : b) a.erase(id);
  return a;
}

IdentSet set_union(IdentSet a, IdentSet b) {
  a.merge(std::move(b));
  return a;
}

}  // namespace

IdentSet free_idents(const Expr& e) {
  return std::visit(
      [](const auto& n) -> IdentSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IntConst> ||
                      std::is_same_v<T, BoolConst>) {
          return {};
        } else if constexpr (std::is_same_v<T, VarRef>) {
          return {n.id};
        } else if constexpr (std::is_same_v<T, Neg> || std::is_same_v<T, Not>) {
          return free_idents(*n.arg);
        } else {
          return set_union(free_idents(*n.lhs), free_idents(*n.rhs));
        }
      },
      e.node);
}

IdentSet free_idents(const Decl& d) {
  return std::visit(
      [](const auto& n) -> IdentSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DNil> || std::is_same_v<T, DEnv> ||
                      std::is_same_v<T, DRecEnv>) {
          return {};
        } else if constexpr (std::is_same_v<T, DLocal>) {
          return free_idents(*n.init);
        } else {  // d0 ; d1 — the first declaration scopes over the second
          return set_union(free_idents(*n.first),
                           set_minus(free_idents(*n.second),
                                     declared_idents(*n.first)));
        }
      },
      d.node);
}

IdentSet free_idents(const Glob& g) {
  return std::visit(
      [](const auto& n) -> IdentSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GVar>) {
          return free_idents(*n.init);
        } else if constexpr (std::is_same_v<T, GFun>) {
          return set_minus(free_idents(*n.body), declared_idents(n.params));
        } else if constexpr (std::is_same_v<T, GRec>) {
          return set_minus(free_idents(*n.decls), declared_idents(*n.decls));
        } else {
          return set_union(free_idents(*n.first),
                           set_minus(free_idents(*n.second),
                                     declared_idents(*n.first)));
        }
      },
      g.node);
}

IdentSet free_idents(const Body& b) {
  return std::visit(
      [](const auto& n) -> IdentSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BExtern>) {
          return {};
        } else {
          IdentSet di = declared_idents(*n.locals);
          return set_union(
              free_idents(*n.locals),
              set_union(set_minus(free_idents(*n.stmt), di),
                        set_minus(free_idents(*n.result), di)));
        }
      },
      b.node);
}

IdentSet free_idents(const Stmt& s) {
  return std::visit(
      [](const auto& n) -> IdentSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SNop> ||
                      std::is_same_v<T, SThrowRts>) {
          return {};
        } else if constexpr (std::is_same_v<T, SAssign>) {
          return set_union(IdentSet{n.id}, free_idents(*n.expr));
        } else if constexpr (std::is_same_v<T, SCall>) {
          IdentSet out{n.target, n.fn};
          for (const auto& a : n.args) out.merge(free_idents(*a));
          return out;
        } else if constexpr (std::is_same_v<T, SSeq>) {
          return set_union(free_idents(*n.first), free_idents(*n.second));
        } else if constexpr (std::is_same_v<T, SBlock>) {
          return set_union(free_idents(*n.locals),
                           set_minus(free_idents(*n.stmt),
                                     declared_idents(*n.locals)));
        } else if constexpr (std::is_same_v<T, SIf>) {
          return set_union(free_idents(*n.cond),
                           set_union(free_idents(*n.then_s),
                                     free_idents(*n.else_s)));
        } else if constexpr (std::is_same_v<T, SWhile>) {
          return set_union(free_idents(*n.cond), free_idents(*n.body));
        } else if constexpr (std::is_same_v<T, SThrowExpr>) {
          return free_idents(*n.expr);
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          return set_union(free_idents(*n.body), free_idents(*n.handlers));
        } else {  // STryFinally
          return set_union(free_idents(*n.body), free_idents(*n.finalizer));
        }
      },
      s.node);
}

IdentSet free_idents(const Catch& k) {
  return std::visit(
      [](const auto& n) -> IdentSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, CClause>) {
          return set_minus(free_idents(*n.handler), declared_idents(n.decl));
        } else {
          return set_union(free_idents(*n.first), free_idents(*n.second));
        }
      },
      k.node);
}

// ------------------------------------------------------ reserved-ident scan

namespace {

bool any_reserved(const IdentSet& ids) {
  for (const auto& id : ids)
    if (id.reserved) return true;
  return false;
}

bool scan_reserved(const Expr& e) { return any_reserved(free_idents(e)); }

bool scan_reserved(const Stmt& s);
bool scan_reserved(const Catch& k);

bool scan_reserved(const Decl& d) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DLocal>) {
          return n.id.reserved || scan_reserved(*n.init);
        } else if constexpr (std::is_same_v<T, DSeq>) {
          return scan_reserved(*n.first) || scan_reserved(*n.second);
        } else {
          return false;
        }
      },
      d.node);
}

bool scan_reserved(const Body& b) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BExtern>) {
          return false;
        } else {
          return scan_reserved(*n.locals) || scan_reserved(*n.stmt) ||
                 scan_reserved(*n.result);
        }
      },
      b.node);
}

bool scan_reserved(const Catch& k) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, CClause>) {
          return (n.decl.kind == ExceptDecl::Kind::Binder &&
                  n.decl.binder.reserved) ||
                 scan_reserved(*n.handler);
        } else {
          return scan_reserved(*n.first) || scan_reserved(*n.second);
        }
      },
      k.node);
}

bool scan_reserved(const Stmt& s) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SNop> || std::is_same_v<T, SThrowRts>) {
          return false;
        } else if constexpr (std::is_same_v<T, SAssign>) {
          return n.id.reserved || scan_reserved(*n.expr);
        } else if constexpr (std::is_same_v<T, SCall>) {
          if (n.target.reserved || n.fn.reserved) return true;
          for (const auto& a : n.args)
            if (scan_reserved(*a)) return true;
          return false;
        } else if constexpr (std::is_same_v<T, SSeq>) {
          return scan_reserved(*n.first) || scan_reserved(*n.second);
        } else if constexpr (std::is_same_v<T, SBlock>) {
          return scan_reserved(*n.locals) || scan_reserved(*n.stmt);
        } else if constexpr (std::is_same_v<T, SIf>) {
          return scan_reserved(*n.cond) || scan_reserved(*n.then_s) ||
                 scan_reserved(*n.else_s);
        } else if constexpr (std::is_same_v<T, SWhile>) {
          return scan_reserved(*n.cond) || scan_reserved(*n.body);
        } else if constexpr (std::is_same_v<T, SThrowExpr>) {
          return scan_reserved(*n.expr);
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          return scan_reserved(*n.body) || scan_reserved(*n.handlers);
        } else {  // STryFinally
          return scan_reserved(*n.body) || scan_reserved(*n.finalizer);
        }
      },
      s.node);
}

bool scan_reserved_glob(const Glob& g) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GVar>) {
          return n.id.reserved || scan_reserved(*n.init);
        } else if constexpr (std::is_same_v<T, GFun>) {
          if (n.id.reserved) return true;
          for (const auto& p : n.params)
            if (p.id.reserved) return true;
          return scan_reserved(*n.body);
        } else if constexpr (std::is_same_v<T, GRec>) {
          return scan_reserved_glob(*n.decls);
        } else {
          return scan_reserved_glob(*n.first) || scan_reserved_glob(*n.second);
        }
      },
      g.node);
}

}  // namespace

bool mentions_reserved_ident(const Glob& g) { return scan_reserved_glob(g); }

// ------------------------------------------------------------ pretty-printer

namespace {

// Binding strength, loosest first; a child is parenthesized when its level
// is below what its context requires.
enum Prec : int {
  kOr = 0,
  kAnd = 1,
  kNot = 2,
  kCmp = 3,
  kAddSub = 4,
  kMulDiv = 5,
  kUnaryMinus = 6,
  kPrimary = 7,
};

int precedence_of(const Expr& e) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Or>) return kOr;
        else if constexpr (std::is_same_v<T, And>) return kAnd;
        else if constexpr (std::is_same_v<T, Not>) return kNot;
        else if constexpr (std::is_same_v<T, Cmp>) return kCmp;
        else if constexpr (std::is_same_v<T, Neg>) return kUnaryMinus;
        else if constexpr (std::is_same_v<T, Arith>)
          return (n.op == ArithOp::Add || n.op == ArithOp::Sub) ? kAddSub
                                                                : kMulDiv;
        else return kPrimary;
      },
      e.node);
}

void print_expr(std::ostream& os, const Expr& e, int min_prec) {
  const bool parens = precedence_of(e) < min_prec;
  if (parens) os << '(';
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, IntConst>) {
          os << n.value;
        } else if constexpr (std::is_same_v<T, BoolConst>) {
          os << (n.value ? "true" : "false");
        } else if constexpr (std::is_same_v<T, VarRef>) {
          os << n.id.display();
        } else if constexpr (std::is_same_v<T, Neg>) {
          os << '-';
          print_expr(os, *n.arg, kPrimary);
        } else if constexpr (std::is_same_v<T, Not>) {
          os << "not ";
          print_expr(os, *n.arg, kNot);
        } else if constexpr (std::is_same_v<T, Arith>) {
          const int prec =
              (n.op == ArithOp::Add || n.op == ArithOp::Sub) ? kAddSub
                                                             : kMulDiv;
          print_expr(os, *n.lhs, prec);
          os << ' ' << to_string(n.op) << ' ';
          print_expr(os, *n.rhs, prec + 1);  // left-associative
        } else if constexpr (std::is_same_v<T, Cmp>) {
          print_expr(os, *n.lhs, kCmp + 1);  // comparisons do not associate
          os << ' ' << to_string(n.op) << ' ';
          print_expr(os, *n.rhs, kCmp + 1);
        } else if constexpr (std::is_same_v<T, And>) {
          print_expr(os, *n.lhs, kAnd);
          os << " and ";
          print_expr(os, *n.rhs, kAnd + 1);
        } else {  // Or
          print_expr(os, *n.lhs, kOr);
          os << " or ";
          print_expr(os, *n.rhs, kOr + 1);
        }
      },
      e.node);
  if (parens) os << ')';
}

void print_decl(std::ostream& os, const Decl& d) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, DNil>) {
          os << "nil";
        } else if constexpr (std::is_same_v<T, DLocal>) {
          os << "lvar " << n.id.display() << " : " << to_string(n.type)
             << " = ";
          print_expr(os, *n.init, kOr);
        } else if constexpr (std::is_same_v<T, DSeq>) {
          print_decl(os, *n.first);
          os << "; ";
          print_decl(os, *n.second);
        } else {
          // Environment literals exist only at run time; there is no source
          // syntax to render them with.
          throw std::logic_error(
              "to_source: environment literals have no source form");
        }
      },
      d.node);
}

void print_stmt(std::ostream& os, const Stmt& s, int indent);
void print_catch(std::ostream& os, const Catch& k, int indent);

void print_indent(std::ostream& os, int indent) {
  for (int i = 0; i < indent; ++i) os << ' ';
}

// Statements in single-statement positions (loop bodies, branches, handlers)
// need explicit grouping when they are sequences.
void print_stmt_grouped(std::ostream& os, const Stmt& s, int indent) {
  if (std::holds_alternative<SSeq>(s.node)) {
    os << '(';
    print_stmt(os, s, indent);
    os << ')';
  } else {
    print_stmt(os, s, indent);
  }
}

void print_body(std::ostream& os, const Body& b, int indent) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BExtern>) {
          os << "extern : " << to_string(n.type);
        } else {
          os << "let ";
          print_decl(os, *n.locals);
          os << " in\n";
          print_indent(os, indent + 2);
          print_stmt(os, *n.stmt, indent + 2);
          os << '\n';
          print_indent(os, indent);
          os << "result ";
          print_expr(os, *n.result, kOr);
        }
      },
      b.node);
}

void print_stmt(std::ostream& os, const Stmt& s, int indent) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SNop>) {
          os << "nop";
        } else if constexpr (std::is_same_v<T, SAssign>) {
          os << n.id.display() << " := ";
          print_expr(os, *n.expr, kOr);
        } else if constexpr (std::is_same_v<T, SCall>) {
          os << n.target.display() << " := " << n.fn.display() << '(';
          for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) os << ", ";
            print_expr(os, *n.args[i], kOr);
          }
          os << ')';
        } else if constexpr (std::is_same_v<T, SSeq>) {
          print_stmt(os, *n.first, indent);
          os << ";\n";
          print_indent(os, indent);
          print_stmt(os, *n.second, indent);
        } else if constexpr (std::is_same_v<T, SBlock>) {
          os << "{ ";
          print_decl(os, *n.locals);
          os << ";\n";
          print_indent(os, indent + 2);
          print_stmt(os, *n.stmt, indent + 2);
          os << " }";
        } else if constexpr (std::is_same_v<T, SIf>) {
          os << "if ";
          print_expr(os, *n.cond, kOr);
          os << " then ";
          print_stmt_grouped(os, *n.then_s, indent);
          os << " else ";
          print_stmt_grouped(os, *n.else_s, indent);
        } else if constexpr (std::is_same_v<T, SWhile>) {
          os << "while ";
          print_expr(os, *n.cond, kOr);
          os << " do ";
          print_stmt_grouped(os, *n.body, indent);
        } else if constexpr (std::is_same_v<T, SThrowRts>) {
          os << "throw " << n.name;
        } else if constexpr (std::is_same_v<T, SThrowExpr>) {
          os << "throw ";
          print_expr(os, *n.expr, kOr);
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          os << "try ";
          print_stmt_grouped(os, *n.body, indent);
          os << " catch ";
          print_catch(os, *n.handlers, indent);
        } else {  // STryFinally
          os << "try ";
          print_stmt_grouped(os, *n.body, indent);
          os << " finally ";
          print_stmt_grouped(os, *n.finalizer, indent);
        }
      },
      s.node);
}

void print_except_decl(std::ostream& os, const ExceptDecl& p) {
  switch (p.kind) {
    case ExceptDecl::Kind::Rts: os << p.rts_name; break;
    case ExceptDecl::Kind::Type: os << to_string(p.type); break;
    case ExceptDecl::Kind::Binder:
      os << p.binder.display() << " : " << to_string(p.type);
      break;
    case ExceptDecl::Kind::Any: os << "any"; break;
  }
}

void print_catch(std::ostream& os, const Catch& k, int indent) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, CClause>) {
          os << '(';
          print_except_decl(os, n.decl);
          os << ") ";
          print_stmt_grouped(os, *n.handler, indent);
        } else {
          print_catch(os, *n.first, indent);
          os << "; ";
          print_catch(os, *n.second, indent);
        }
      },
      k.node);
}

void print_glob(std::ostream& os, const Glob& g, int indent) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GVar>) {
          os << "gvar " << n.id.display() << " : " << to_string(n.type)
             << " = ";
          print_expr(os, *n.init, kOr);
        } else if constexpr (std::is_same_v<T, GFun>) {
          os << "function " << n.id.display() << '(';
          for (std::size_t i = 0; i < n.params.size(); ++i) {
            if (i) os << ", ";
            os << n.params[i].id.display() << " : "
               << to_string(n.params[i].type);
          }
          os << ") =\n";
          print_indent(os, indent + 2);
          print_body(os, *n.body, indent + 2);
        } else if constexpr (std::is_same_v<T, GRec>) {
          os << "rec ";
          if (std::holds_alternative<GSeq>(n.decls->node)) {
            os << "(\n";
            print_indent(os, indent + 2);
            print_glob(os, *n.decls, indent + 2);
            os << "\n";
            print_indent(os, indent);
            os << ')';
          } else {
            print_glob(os, *n.decls, indent);
          }
        } else {  // GSeq
          print_glob(os, *n.first, indent);
          os << ";\n";
          print_indent(os, indent);
          print_glob(os, *n.second, indent);
        }
      },
      g.node);
}

}  // namespace

std::string to_source(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e, kOr);
  return os.str();
}

std::string to_source(const Decl& d) {
  std::ostringstream os;
  print_decl(os, d);
  return os.str();
}

std::string to_source(const Glob& g) {
  std::ostringstream os;
  print_glob(os, g, 0);
  return os.str();
}

std::string to_source(const Body& b) {
  std::ostringstream os;
  print_body(os, b, 0);
  return os.str();
}

std::string to_source(const Stmt& s) {
  std::ostringstream os;
  print_stmt(os, s, 0);
  return os.str();
}

std::string to_source(const Catch& k) {
  std::ostringstream os;
  print_catch(os, k, 0);
  return os.str();
}

std::string to_source(const Program& p) {
  std::ostringstream os;
  if (p.globals) print_glob(os, *p.globals, 0);
  os << '\n';
  return os.str();
}

// ----------------------------------------------- equality ignoring labels

namespace {

template <typename T>
bool eq_ptr(const std::shared_ptr<const T>& a,
            const std::shared_ptr<const T>& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return equal_modulo_labels(*a, *b);
}

}  // namespace

bool equal_modulo_labels(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, IntConst>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, BoolConst>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, VarRef>) {
          return x.id == y.id;
        } else if constexpr (std::is_same_v<T, Neg> || std::is_same_v<T, Not>) {
          return eq_ptr(x.arg, y.arg);
        } else if constexpr (std::is_same_v<T, Arith>) {
          return x.op == y.op && eq_ptr(x.lhs, y.lhs) && eq_ptr(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, Cmp>) {
          return x.op == y.op && eq_ptr(x.lhs, y.lhs) && eq_ptr(x.rhs, y.rhs);
        } else {  // And, Or
          return eq_ptr(x.lhs, y.lhs) && eq_ptr(x.rhs, y.rhs);
        }
      },
      a.node);
}

bool equal_modulo_labels(const Decl& a, const Decl& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, DNil>) {
          return true;
        } else if constexpr (std::is_same_v<T, DLocal>) {
          return x.id == y.id && x.type == y.type && eq_ptr(x.init, y.init);
        } else if constexpr (std::is_same_v<T, DSeq>) {
          return eq_ptr(x.first, y.first) && eq_ptr(x.second, y.second);
        } else {  // DEnv, DRecEnv
          return equal_modulo_labels(*x.env, *y.env);
        }
      },
      a.node);
}

bool equal_modulo_labels(const Glob& a, const Glob& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, GVar>) {
          return x.id == y.id && x.type == y.type && eq_ptr(x.init, y.init);
        } else if constexpr (std::is_same_v<T, GFun>) {
          return x.id == y.id && x.params == y.params &&
                 eq_ptr(x.body, y.body);
        } else if constexpr (std::is_same_v<T, GRec>) {
          return eq_ptr(x.decls, y.decls);
        } else {
          return eq_ptr(x.first, y.first) && eq_ptr(x.second, y.second);
        }
      },
      a.node);
}

bool equal_modulo_labels(const Body& a, const Body& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, BExtern>) {
          return x.type == y.type;
        } else {
          return eq_ptr(x.locals, y.locals) && eq_ptr(x.stmt, y.stmt) &&
                 eq_ptr(x.result, y.result);
        }
      },
      a.node);
}

namespace {

bool eq_except_decl(const ExceptDecl& a, const ExceptDecl& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExceptDecl::Kind::Rts: return a.rts_name == b.rts_name;
    case ExceptDecl::Kind::Type: return a.type == b.type;
    case ExceptDecl::Kind::Binder:
      return a.binder == b.binder && a.type == b.type;
    case ExceptDecl::Kind::Any: return true;
  }
  return false;
}

}  // namespace

bool equal_modulo_labels(const Stmt& a, const Stmt& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, SNop>) {
          return true;
        } else if constexpr (std::is_same_v<T, SAssign>) {
          return x.id == y.id && eq_ptr(x.expr, y.expr);
        } else if constexpr (std::is_same_v<T, SCall>) {
          if (x.target != y.target || x.fn != y.fn ||
              x.args.size() != y.args.size())
            return false;
          for (std::size_t i = 0; i < x.args.size(); ++i)
            if (!eq_ptr(x.args[i], y.args[i])) return false;
          return true;
        } else if constexpr (std::is_same_v<T, SSeq>) {
          return eq_ptr(x.first, y.first) && eq_ptr(x.second, y.second);
        } else if constexpr (std::is_same_v<T, SBlock>) {
          return eq_ptr(x.locals, y.locals) && eq_ptr(x.stmt, y.stmt);
        } else if constexpr (std::is_same_v<T, SIf>) {
          return eq_ptr(x.cond, y.cond) && eq_ptr(x.then_s, y.then_s) &&
                 eq_ptr(x.else_s, y.else_s);
        } else if constexpr (std::is_same_v<T, SWhile>) {
          return eq_ptr(x.cond, y.cond) && eq_ptr(x.body, y.body);
        } else if constexpr (std::is_same_v<T, SThrowRts>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, SThrowExpr>) {
          return eq_ptr(x.expr, y.expr);
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          return eq_ptr(x.body, y.body) && eq_ptr(x.handlers, y.handlers);
        } else {  // STryFinally
          return eq_ptr(x.body, y.body) && eq_ptr(x.finalizer, y.finalizer);
        }
      },
      a.node);
}

bool equal_modulo_labels(const Catch& a, const Catch& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, CClause>) {
          return eq_except_decl(x.decl, y.decl) && eq_ptr(x.handler, y.handler);
        } else {
          return eq_ptr(x.first, y.first) && eq_ptr(x.second, y.second);
        }
      },
      a.node);
}

bool equal_modulo_labels(const EnvVal& a, const EnvVal& b) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<Cell>(a))
    return std::get<Cell>(a) == std::get<Cell>(b);
  const auto& x = std::get<Closure>(a);
  const auto& y = std::get<Closure>(b);
  return x.params == y.params && x.result == y.result &&
         eq_ptr(x.body, y.body);
}

bool equal_modulo_labels(const Env& a, const Env& b) {
  if (a.bindings.size() != b.bindings.size()) return false;
  auto ia = a.bindings.begin();
  auto ib = b.bindings.begin();
  for (; ia != a.bindings.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (!equal_modulo_labels(ia->second, ib->second)) return false;
  }
  return true;
}

}  // namespace cpm
