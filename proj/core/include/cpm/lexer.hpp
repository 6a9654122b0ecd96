// SPDX-License-Identifier: MIT
#ifndef CPM_LEXER_HPP
#define CPM_LEXER_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cpm/ast.hpp"

namespace cpm {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, Span where)
      : std::runtime_error(msg), span(where) {}
  Span span;
};

enum class Tok : std::uint8_t {
  End,
  Ident,
  IntLit,
  RtsName,  // one of the run-time-system exception names
  // keywords
  KwGvar, KwLvar, KwFunction, KwRec, KwLet, KwIn, KwResult, KwExtern,
  KwNil, KwNop, KwIf, KwThen, KwElse, KwWhile, KwDo, KwThrow, KwTry,
  KwCatch, KwFinally, KwAny, KwInteger, KwBoolean, KwTrue, KwFalse,
  KwNot, KwAnd, KwOr,
  // punctuation and operators
  LParen, RParen, LBrace, RBrace, Semi, Comma, Colon, Assign,
  Plus, Minus, Star, Slash, Percent,
  Eq, Ne, Lt, Le, Ge, Gt,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier / RTS name / integer spelling
  Span span;
};

// Tokenizes the whole input. "--" starts a line comment. Throws ParseError
// on malformed input (stray characters, ":" not followed by "=", ...).
std::vector<Token> tokenize(std::string_view source);

}  // namespace cpm

#endif  // CPM_LEXER_HPP
