// SPDX-License-Identifier: MIT
#ifndef CPM_AST_HPP
#define CPM_AST_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cpm/ints.hpp"

namespace cpm {

// Every AST node occurrence carries a unique label.  Labels identify program
// points in traces, analysis results and memo tables; two occurrences of the
// same syntax never share one.  Nodes synthesized at run time (the call
// protocol declarations, closure environment wrappers, ...) draw labels from
// the same space, but stably: re-synthesizing for the same origin site yields
// the same label, keeping the set of phrases of a program finite.
using Label = std::uint32_t;

struct Span {
  std::uint32_t line = 0;
  std::uint32_t col = 0;
};

enum class SType : std::uint8_t { Integer, Boolean };

std::string_view to_string(SType t);

// Identifiers.  The reserved family cannot appear in source programs; the
// interpreter synthesizes them for the return slot ("$0") and the argument
// slots ("$1", "$2", ...) of a call, and the program driver uses "$x" for
// the variable receiving main's result.
struct Ident {
  std::string name;
  bool reserved = false;

  friend bool operator==(const Ident&, const Ident&) = default;
  friend auto operator<=>(const Ident& a, const Ident& b) {
    if (auto c = a.reserved <=> b.reserved; c != 0) return c;
    return a.name <=> b.name;
  }

  // Display form: reserved identifiers are prefixed with '$', which cannot
  // start a source identifier, so the two families never collide in output.
  std::string display() const { return reserved ? "$" + name : name; }
};

Ident reserved_slot(unsigned i);  // $0 is the return slot, $i the i-th argument
Ident reserved_result();          // $x, the driver's result variable

// Run-time-system exception names form an open set; these four (plus
// "externcall", raised under --extern=havoc-error) are the ones the
// implementation itself can raise, and the only ones the lexer recognizes.
namespace rts {
inline constexpr std::string_view divbyzero = "divbyzero";
inline constexpr std::string_view stkovflw = "stkovflw";
inline constexpr std::string_view memerror = "memerror";
inline constexpr std::string_view datovflw = "datovflw";
inline constexpr std::string_view externcall = "externcall";
}  // namespace rts

bool is_known_rts_name(std::string_view name);

struct Expr;
struct Decl;
struct Glob;
struct Body;
struct Stmt;
struct Catch;
struct Env;  // execution environments; defined in env.hpp (runtime-only nodes
             // below embed one)

using ExprPtr = std::shared_ptr<const Expr>;
using DeclPtr = std::shared_ptr<const Decl>;
using GlobPtr = std::shared_ptr<const Glob>;
using BodyPtr = std::shared_ptr<const Body>;
using StmtPtr = std::shared_ptr<const Stmt>;
using CatchPtr = std::shared_ptr<const Catch>;
using EnvPtr = std::shared_ptr<const Env>;

// ---------------------------------------------------------------- expressions

enum class ArithOp : std::uint8_t { Add, Sub, Mul, Div, Rem };
enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Ge, Gt };

std::string_view to_string(ArithOp op);
std::string_view to_string(CmpOp op);

struct IntConst {
  Int value;  // literals are unbounded, like runtime integers
};
struct BoolConst {
  bool value;
};
struct VarRef {
  Ident id;
};
struct Neg {
  ExprPtr arg;
};
struct Arith {
  ArithOp op;
  ExprPtr lhs, rhs;
};
struct Cmp {
  CmpOp op;
  ExprPtr lhs, rhs;
};
struct Not {
  ExprPtr arg;
};
struct And {
  ExprPtr lhs, rhs;
};
struct Or {
  ExprPtr lhs, rhs;
};

struct Expr {
  Label label{};
  Span span{};
  std::variant<IntConst, BoolConst, VarRef, Neg, Arith, Cmp, Not, And, Or>
      node;
};

// --------------------------------------------------------------- declarations

struct FormalParam {
  Ident id;
  SType type;

  friend bool operator==(const FormalParam&, const FormalParam&) = default;
};
using Formals = std::vector<FormalParam>;

struct DNil {};
struct DLocal {  // lvar id : sT = e
  Ident id;
  SType type;
  ExprPtr init;
};
struct DSeq {
  DeclPtr first, second;
};
// The two run-time-only forms.  The parser never produces them; evaluation of
// a function declaration wraps the function body in a DEnv capturing the
// declaration environment, and recursive declarations are resolved by
// rebuilding closures around a DRecEnv.
struct DEnv {
  EnvPtr env;
};
struct DRecEnv {
  EnvPtr env;
};

struct Decl {
  Label label{};
  Span span{};
  std::variant<DNil, DLocal, DSeq, DEnv, DRecEnv> node;
};

struct GVar {  // gvar id : sT = e
  Ident id;
  SType type;
  ExprPtr init;
};
struct GFun {  // function id(fps) = body; the result type comes from the body
  Ident id;
  Formals params;
  BodyPtr body;
};
struct GRec {
  GlobPtr decls;
};
struct GSeq {
  GlobPtr first, second;
};

struct Glob {
  Label label{};
  Span span{};
  std::variant<GVar, GFun, GRec, GSeq> node;
};

// -------------------------------------------------------- bodies & statements

struct BLet {  // let d in s result e
  DeclPtr locals;
  StmtPtr stmt;
  ExprPtr result;
};
struct BExtern {  // extern : sT
  SType type;
};

struct Body {
  Label label{};
  Span span{};
  std::variant<BLet, BExtern> node;
};

// Exception declaration p of a catch clause: an RTS name, a catchable type,
// a typed binder, or the catch-all.
struct ExceptDecl {
  enum class Kind : std::uint8_t { Rts, Type, Binder, Any };
  Kind kind = Kind::Any;
  std::string rts_name;  // Kind::Rts
  SType type{};          // Kind::Type and Kind::Binder
  Ident binder;          // Kind::Binder
};

struct SNop {};
struct SAssign {  // id := e
  Ident id;
  ExprPtr expr;
};
struct SCall {  // id0 := id(e1, ..., en); calls exist only as statements
  Ident target;
  Ident fn;
  std::vector<ExprPtr> args;
};
struct SSeq {
  StmtPtr first, second;
};
struct SBlock {  // { d ; s }
  DeclPtr locals;
  StmtPtr stmt;
};
struct SIf {
  ExprPtr cond;
  StmtPtr then_s, else_s;
};
struct SWhile {
  ExprPtr cond;
  StmtPtr body;
};
struct SThrowRts {
  std::string name;
};
struct SThrowExpr {
  ExprPtr expr;
};
struct STryCatch {
  StmtPtr body;
  CatchPtr handlers;
};
struct STryFinally {
  StmtPtr body, finalizer;
};

struct Stmt {
  Label label{};
  Span span{};
  std::variant<SNop, SAssign, SCall, SSeq, SBlock, SIf, SWhile, SThrowRts,
               SThrowExpr, STryCatch, STryFinally>
      node;
};

struct CClause {  // (p) s
  ExceptDecl decl;
  StmtPtr handler;
};
struct CSeq {
  CatchPtr first, second;
};

struct Catch {
  Label label{};
  Span span{};
  std::variant<CClause, CSeq> node;
};

// ------------------------------------------------------------------- programs

struct Program {
  GlobPtr globals;
  // Labels in [1, first_free_label) are taken by the parse; run-time
  // synthesis continues from here.
  Label first_free_label = 1;
  std::string source_name;
};

// Label generator shared by the parser, the generator and the two
// evaluators.  stable() hands out fresh labels memoized per (origin, tag),
// so synthesizing twice for the same site yields the same label.
class LabelGen {
 public:
  explicit LabelGen(Label next = 1) : next_(next) {}

  Label fresh() { return next_++; }

  Label stable(Label origin, unsigned tag) {
    auto [it, inserted] = memo_.try_emplace({origin, tag}, next_);
    if (inserted) ++next_;
    return it->second;
  }

  Label peek() const { return next_; }

 private:
  Label next_;
  std::map<std::pair<Label, unsigned>, Label> memo_;
};

// ------------------------------------------------------- defined & free idents

using IdentSet = std::set<Ident>;

IdentSet declared_idents(const Formals& fps);
IdentSet declared_idents(const Decl& d);
IdentSet declared_idents(const Glob& g);
IdentSet declared_idents(const ExceptDecl& p);

IdentSet free_idents(const Expr& e);
IdentSet free_idents(const Decl& d);
IdentSet free_idents(const Glob& g);
IdentSet free_idents(const Body& b);
IdentSet free_idents(const Stmt& s);
IdentSet free_idents(const Catch& k);

// Does any reserved identifier occur (as a binder or a use) anywhere in g?
// Program validity requires that none does.
bool mentions_reserved_ident(const Glob& g);

// ------------------------------------------------------------- pretty-printing

// Renders parseable source text.  Throws std::logic_error on the two
// run-time-only declaration forms, which have no source syntax.
std::string to_source(const Expr& e);
std::string to_source(const Decl& d);
std::string to_source(const Glob& g);
std::string to_source(const Body& b);
std::string to_source(const Stmt& s);
std::string to_source(const Catch& k);
std::string to_source(const Program& p);

}  // namespace cpm

#endif  // CPM_AST_HPP
