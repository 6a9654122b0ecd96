// SPDX-License-Identifier: MIT
#include "cpm/parser.hpp"

#include <utility>

namespace cpm {

namespace {

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program run(std::string source_name) {
    GlobPtr g = glob_seq();
    expect(Tok::End, "expected end of input");
    Program p;
    p.globals = std::move(g);
    p.first_free_label = labels_.peek();
    p.source_name = std::move(source_name);
    return p;
  }

 private:
  // ------------------------------------------------------------- utilities

  const Token& peek(std::size_t off = 0) const {
    const std::size_t k = pos_ + off;
    return k < toks_.size() ? toks_[k] : toks_.back();
  }
  bool at(Tok t) const { return peek().kind == t; }
  Token advance() { return toks_[pos_++]; }
  bool accept(Tok t) {
    if (!at(t)) return false;
    ++pos_;
    return true;
  }
  Token expect(Tok t, const char* what) {
    if (!at(t)) throw ParseError(what, peek().span);
    return advance();
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, peek().span);
  }

  template <typename N, typename V>
  std::shared_ptr<const N> node(Span span, V&& v) {
    auto n = std::make_shared<N>();
    n->label = labels_.fresh();
    n->span = span;
    n->node = std::forward<V>(v);
    return n;
  }

  Ident ident() {
    Token t = expect(Tok::Ident, "expected identifier");
    return Ident{std::move(t.text), /*reserved=*/false};
  }

  SType stype() {
    if (accept(Tok::KwInteger)) return SType::Integer;
    if (accept(Tok::KwBoolean)) return SType::Boolean;
    fail("expected type ('integer' or 'boolean')");
  }

  // ------------------------------------------------------------ expressions

  ExprPtr expr() { return or_expr(); }

  ExprPtr or_expr() {
    ExprPtr e = and_expr();
    while (at(Tok::KwOr)) {
      Span span = peek().span;
      advance();
      ExprPtr rhs = and_expr();
      e = node<Expr>(span, Or{std::move(e), std::move(rhs)});
    }
    return e;
  }

  ExprPtr and_expr() {
    ExprPtr e = not_expr();
    while (at(Tok::KwAnd)) {
      Span span = peek().span;
      advance();
      ExprPtr rhs = not_expr();
      e = node<Expr>(span, And{std::move(e), std::move(rhs)});
    }
    return e;
  }

  ExprPtr not_expr() {
    if (at(Tok::KwNot)) {
      Span span = peek().span;
      advance();
      return node<Expr>(span, Not{not_expr()});
    }
    return cmp_expr();
  }

  ExprPtr cmp_expr() {
    ExprPtr e = add_expr();
    CmpOp op;
    switch (peek().kind) {
      case Tok::Eq: op = CmpOp::Eq; break;
      case Tok::Ne: op = CmpOp::Ne; break;
      case Tok::Lt: op = CmpOp::Lt; break;
      case Tok::Le: op = CmpOp::Le; break;
      case Tok::Ge: op = CmpOp::Ge; break;
      case Tok::Gt: op = CmpOp::Gt; break;
      default: return e;
    }
    Span span = peek().span;
    advance();
    ExprPtr rhs = add_expr();
    // Comparisons do not associate; "a < b < c" is rejected here.
    switch (peek().kind) {
      case Tok::Eq: case Tok::Ne: case Tok::Lt:
      case Tok::Le: case Tok::Ge: case Tok::Gt:
        fail("comparisons do not chain; parenthesize");
      default: break;
    }
    return node<Expr>(span, Cmp{op, std::move(e), std::move(rhs)});
  }

  ExprPtr add_expr() {
    ExprPtr e = mul_expr();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      const ArithOp op = at(Tok::Plus) ? ArithOp::Add : ArithOp::Sub;
      Span span = peek().span;
      advance();
      ExprPtr rhs = mul_expr();
      e = node<Expr>(span, Arith{op, std::move(e), std::move(rhs)});
    }
    return e;
  }

  ExprPtr mul_expr() {
    ExprPtr e = unary_expr();
    while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
      const ArithOp op = at(Tok::Star)    ? ArithOp::Mul
                         : at(Tok::Slash) ? ArithOp::Div
                                          : ArithOp::Rem;
      Span span = peek().span;
      advance();
      ExprPtr rhs = unary_expr();
      e = node<Expr>(span, Arith{op, std::move(e), std::move(rhs)});
    }
    return e;
  }

  ExprPtr unary_expr() {
    if (at(Tok::Minus)) {
      Span span = peek().span;
      advance();
      return node<Expr>(span, Neg{unary_expr()});
    }
    return primary_expr();
  }

  ExprPtr primary_expr() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::IntLit: {
        Span span = t.span;
        Int value(advance().text);
        return node<Expr>(span, IntConst{std::move(value)});
      }
      case Tok::KwTrue: {
        Span span = t.span;
        advance();
        return node<Expr>(span, BoolConst{true});
      }
      case Tok::KwFalse: {
        Span span = t.span;
        advance();
        return node<Expr>(span, BoolConst{false});
      }
      case Tok::Ident: {
        Span span = t.span;
        return node<Expr>(span, VarRef{ident()});
      }
      case Tok::LParen: {
        advance();
        ExprPtr e = expr();
        expect(Tok::RParen, "expected ')'");
        return e;
      }
      default:
        fail("expected expression");
    }
  }

  // ----------------------------------------------------------- declarations

  bool starts_decl() const { return at(Tok::KwLvar) || at(Tok::KwNil); }

  DeclPtr decl() {
    Span span = peek().span;
    if (accept(Tok::KwNil)) return node<Decl>(span, DNil{});
    expect(Tok::KwLvar, "expected declaration ('lvar' or 'nil')");
    Ident id = ident();
    expect(Tok::Colon, "expected ':' in declaration");
    SType t = stype();
    expect(Tok::Eq, "expected '=' in declaration");
    ExprPtr init = expr();
    return node<Decl>(span, DLocal{std::move(id), t, std::move(init)});
  }

  DeclPtr decl_seq() {
    DeclPtr d = decl();
    while (at(Tok::Semi) && peek(1).kind != Tok::End && starts_decl_at(1)) {
      Span span = peek().span;
      advance();  // ';'
      DeclPtr rhs = decl();
      d = node<Decl>(span, DSeq{std::move(d), std::move(rhs)});
    }
    return d;
  }

  bool starts_decl_at(std::size_t off) const {
    const Tok k = peek(off).kind;
    return k == Tok::KwLvar || k == Tok::KwNil;
  }

  // ------------------------------------------------------------- statements

  bool starts_stmt() const {
    switch (peek().kind) {
      case Tok::KwNop: case Tok::Ident: case Tok::LBrace: case Tok::KwIf:
      case Tok::KwWhile: case Tok::KwThrow: case Tok::KwTry: case Tok::LParen:
        return true;
      default:
        return false;
    }
  }

  StmtPtr stmt() {
    const Token& t = peek();
    Span span = t.span;
    switch (t.kind) {
      case Tok::KwNop:
        advance();
        return node<Stmt>(span, SNop{});
      case Tok::Ident: {
        Ident target = ident();
        expect(Tok::Assign, "expected ':=' after identifier");
        // A call statement is "id0 := id(...)"; expressions have no call
        // form, so an identifier followed by '(' can only be a call.
        if (at(Tok::Ident) && peek(1).kind == Tok::LParen) {
          Ident fn = ident();
          expect(Tok::LParen, "expected '('");
          std::vector<ExprPtr> args;
          if (!at(Tok::RParen)) {
            args.push_back(expr());
            while (accept(Tok::Comma)) args.push_back(expr());
          }
          expect(Tok::RParen, "expected ')' after call arguments");
          return node<Stmt>(span, SCall{std::move(target), std::move(fn),
                                        std::move(args)});
        }
        ExprPtr e = expr();
        return node<Stmt>(span, SAssign{std::move(target), std::move(e)});
      }
      case Tok::LBrace: {
        advance();
        DeclPtr d;
        if (starts_decl()) {
          d = decl_seq();
          expect(Tok::Semi, "expected ';' between declarations and statements");
        } else {
          d = node<Decl>(span, DNil{});
        }
        StmtPtr s = stmt_seq();
        expect(Tok::RBrace, "expected '}'");
        return node<Stmt>(span, SBlock{std::move(d), std::move(s)});
      }
      case Tok::LParen: {  // grouping: "(s0; s1; ...)", no block semantics
        advance();
        StmtPtr s = stmt_seq();
        expect(Tok::RParen, "expected ')'");
        return s;
      }
      case Tok::KwIf: {
        advance();
        ExprPtr cond = expr();
        expect(Tok::KwThen, "expected 'then'");
        StmtPtr then_s = stmt();
        expect(Tok::KwElse, "expected 'else'");
        StmtPtr else_s = stmt();
        return node<Stmt>(span, SIf{std::move(cond), std::move(then_s),
                                    std::move(else_s)});
      }
      case Tok::KwWhile: {
        advance();
        ExprPtr cond = expr();
        expect(Tok::KwDo, "expected 'do'");
        StmtPtr body = stmt();
        return node<Stmt>(span, SWhile{std::move(cond), std::move(body)});
      }
      case Tok::KwThrow: {
        advance();
        if (at(Tok::RtsName)) {
          std::string name = advance().text;
          return node<Stmt>(span, SThrowRts{std::move(name)});
        }
        return node<Stmt>(span, SThrowExpr{expr()});
      }
      case Tok::KwTry: {
        advance();
        StmtPtr body = stmt();
        if (accept(Tok::KwCatch)) {
          CatchPtr k = catch_seq();
          return node<Stmt>(span, STryCatch{std::move(body), std::move(k)});
        }
        expect(Tok::KwFinally, "expected 'catch' or 'finally' after try body");
        StmtPtr fin = stmt();
        return node<Stmt>(span,
                          STryFinally{std::move(body), std::move(fin)});
      }
      default:
        fail("expected statement");
    }
  }

  StmtPtr stmt_seq() {
    StmtPtr s = stmt();
    while (at(Tok::Semi) && starts_stmt_at(1)) {
      Span span = peek().span;
      advance();  // ';'
      StmtPtr rhs = stmt();
      s = node<Stmt>(span, SSeq{std::move(s), std::move(rhs)});
    }
    return s;
  }

  bool starts_stmt_at(std::size_t off) const {
    switch (peek(off).kind) {
      case Tok::KwNop: case Tok::Ident: case Tok::LBrace: case Tok::KwIf:
      case Tok::KwWhile: case Tok::KwThrow: case Tok::KwTry: case Tok::LParen:
        return true;
      default:
        return false;
    }
  }

  // ---------------------------------------------------------- catch clauses

  // After '(' in catch position, an exception declaration looks like one of:
  //   rts-name ')'   'integer' ')'   'boolean' ')'   'any' ')'   id ':' type
  // Anything else means the '(' opened a grouped statement of the enclosing
  // sequence, not another clause.
  bool clause_follows() const {
    if (peek().kind != Tok::LParen) return false;
    switch (peek(1).kind) {
      case Tok::RtsName:
      case Tok::KwAny:
        return peek(2).kind == Tok::RParen;
      case Tok::KwInteger:
      case Tok::KwBoolean:
        return peek(2).kind == Tok::RParen;
      case Tok::Ident:
        return peek(2).kind == Tok::Colon;
      default:
        return false;
    }
  }

  ExceptDecl except_decl() {
    ExceptDecl p;
    if (at(Tok::RtsName)) {
      p.kind = ExceptDecl::Kind::Rts;
      p.rts_name = advance().text;
    } else if (accept(Tok::KwAny)) {
      p.kind = ExceptDecl::Kind::Any;
    } else if (at(Tok::KwInteger) || at(Tok::KwBoolean)) {
      p.kind = ExceptDecl::Kind::Type;
      p.type = stype();
    } else if (at(Tok::Ident)) {
      p.kind = ExceptDecl::Kind::Binder;
      p.binder = ident();
      expect(Tok::Colon, "expected ':' in catch binder");
      p.type = stype();
    } else {
      fail("expected exception declaration");
    }
    return p;
  }

  CatchPtr catch_clause() {
    Span span = peek().span;
    expect(Tok::LParen, "expected '(' to open catch clause");
    ExceptDecl p = except_decl();
    expect(Tok::RParen, "expected ')' after exception declaration");
    StmtPtr handler = stmt();
    return node<Catch>(span, CClause{std::move(p), std::move(handler)});
  }

  CatchPtr catch_seq() {
    CatchPtr k = catch_clause();
    while (at(Tok::Semi) && clause_follows_at(1)) {
      Span span = peek().span;
      advance();  // ';'
      CatchPtr rhs = catch_clause();
      k = node<Catch>(span, CSeq{std::move(k), std::move(rhs)});
    }
    return k;
  }

  bool clause_follows_at(std::size_t off) const {
    if (peek(off).kind != Tok::LParen) return false;
    switch (peek(off + 1).kind) {
      case Tok::RtsName:
      case Tok::KwAny:
      case Tok::KwInteger:
      case Tok::KwBoolean:
        return peek(off + 2).kind == Tok::RParen;
      case Tok::Ident:
        return peek(off + 2).kind == Tok::Colon;
      default:
        return false;
    }
  }

  // ----------------------------------------------------------------- bodies

  BodyPtr body() {
    Span span = peek().span;
    if (accept(Tok::KwExtern)) {
      expect(Tok::Colon, "expected ':' after 'extern'");
      return node<Body>(span, BExtern{stype()});
    }
    expect(Tok::KwLet, "expected 'let' or 'extern' in function body");
    DeclPtr d = decl_seq();
    expect(Tok::KwIn, "expected 'in'");
    StmtPtr s = stmt_seq();
    expect(Tok::KwResult, "expected 'result'");
    ExprPtr e = expr();
    return node<Body>(span, BLet{std::move(d), std::move(s), std::move(e)});
  }

  // ---------------------------------------------------------------- globals

  GlobPtr glob() {
    const Token& t = peek();
    Span span = t.span;
    switch (t.kind) {
      case Tok::KwGvar: {
        advance();
        Ident id = ident();
        expect(Tok::Colon, "expected ':' in declaration");
        SType ty = stype();
        expect(Tok::Eq, "expected '=' in declaration");
        ExprPtr init = expr();
        return node<Glob>(span, GVar{std::move(id), ty, std::move(init)});
      }
      case Tok::KwFunction: {
        advance();
        Ident id = ident();
        expect(Tok::LParen, "expected '(' after function name");
        Formals fps;
        if (!at(Tok::RParen)) {
          do {
            Ident pid = ident();
            expect(Tok::Colon, "expected ':' in parameter");
            fps.push_back(FormalParam{std::move(pid), stype()});
          } while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "expected ')' after parameters");
        expect(Tok::Eq, "expected '=' before function body");
        BodyPtr b = body();
        return node<Glob>(span,
                          GFun{std::move(id), std::move(fps), std::move(b)});
      }
      case Tok::KwRec: {
        advance();
        GlobPtr inner;
        if (accept(Tok::LParen)) {
          inner = glob_seq();
          expect(Tok::RParen, "expected ')' after rec group");
        } else {
          inner = glob();
        }
        return node<Glob>(span, GRec{std::move(inner)});
      }
      case Tok::LParen: {
        advance();
        GlobPtr g = glob_seq();
        expect(Tok::RParen, "expected ')'");
        return g;
      }
      default:
        fail("expected global declaration");
    }
  }

  GlobPtr glob_seq() {
    GlobPtr g = glob();
    while (at(Tok::Semi) && starts_glob_at(1)) {
      Span span = peek().span;
      advance();  // ';'
      GlobPtr rhs = glob();
      g = node<Glob>(span, GSeq{std::move(g), std::move(rhs)});
    }
    return g;
  }

  bool starts_glob_at(std::size_t off) const {
    switch (peek(off).kind) {
      case Tok::KwGvar: case Tok::KwFunction: case Tok::KwRec: case Tok::LParen:
        return true;
      default:
        return false;
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  LabelGen labels_{1};
};

}  // namespace

Program parse_program(std::string_view source, std::string source_name) {
  Parser p(tokenize(source));
  return p.run(std::move(source_name));
}

}  // namespace cpm
