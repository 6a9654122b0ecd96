// SPDX-License-Identifier: MIT
#include "cpm/lexer.hpp"

#include <cctype>
#include <unordered_map>

namespace cpm {

namespace {

const std::unordered_map<std::string_view, Tok>& keyword_table() {
  static const std::unordered_map<std::string_view, Tok> table = {
      {"gvar", Tok::KwGvar},       {"lvar", Tok::KwLvar},
      {"function", Tok::KwFunction}, {"rec", Tok::KwRec},
      {"let", Tok::KwLet},         {"in", Tok::KwIn},
      {"result", Tok::KwResult},   {"extern", Tok::KwExtern},
      {"nil", Tok::KwNil},         {"nop", Tok::KwNop},
      {"if", Tok::KwIf},           {"then", Tok::KwThen},
      {"else", Tok::KwElse},       {"while", Tok::KwWhile},
      {"do", Tok::KwDo},           {"throw", Tok::KwThrow},
      {"try", Tok::KwTry},         {"catch", Tok::KwCatch},
      {"finally", Tok::KwFinally}, {"any", Tok::KwAny},
      {"integer", Tok::KwInteger}, {"boolean", Tok::KwBoolean},
      {"true", Tok::KwTrue},       {"false", Tok::KwFalse},
      {"not", Tok::KwNot},         {"and", Tok::KwAnd},
      {"or", Tok::KwOr},
  };
  return table;
}

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::uint32_t line = 1, col = 1;
  std::size_t i = 0;

  auto bump = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i < src.size() && src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  auto peek = [&](std::size_t off = 0) -> char {
    return i + off < src.size() ? src[i + off] : '\0';
  };
  auto push = [&](Tok kind, Span span, std::string text = {}) {
    out.push_back(Token{kind, std::move(text), span});
  };

  while (i < src.size()) {
    const char c = peek();
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      bump();
      continue;
    }
    if (c == '-' && peek(1) == '-') {  // line comment
      while (i < src.size() && peek() != '\n') bump();
      continue;
    }

    const Span span{line, col};
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        digits.push_back(peek());
        bump();
      }
      if (ident_start(peek()))
        throw ParseError("identifier may not start with a digit", span);
      push(Tok::IntLit, span, std::move(digits));
      continue;
    }
    if (ident_start(c)) {
      std::string word;
      while (ident_char(peek())) {
        word.push_back(peek());
        bump();
      }
      if (auto it = keyword_table().find(word); it != keyword_table().end()) {
        push(it->second, span);
      } else if (is_known_rts_name(word)) {
        push(Tok::RtsName, span, std::move(word));
      } else {
        push(Tok::Ident, span, std::move(word));
      }
      continue;
    }

    switch (c) {
      case '(': push(Tok::LParen, span); bump(); continue;
      case ')': push(Tok::RParen, span); bump(); continue;
      case '{': push(Tok::LBrace, span); bump(); continue;
      case '}': push(Tok::RBrace, span); bump(); continue;
      case ';': push(Tok::Semi, span); bump(); continue;
      case ',': push(Tok::Comma, span); bump(); continue;
      case '+': push(Tok::Plus, span); bump(); continue;
      case '-': push(Tok::Minus, span); bump(); continue;
      case '*': push(Tok::Star, span); bump(); continue;
      case '/': push(Tok::Slash, span); bump(); continue;
      case '%': push(Tok::Percent, span); bump(); continue;
      case '=': push(Tok::Eq, span); bump(); continue;
      case ':':
        if (peek(1) == '=') {
          push(Tok::Assign, span);
          bump(2);
        } else {
          push(Tok::Colon, span);
          bump();
        }
        continue;
      case '!':
        if (peek(1) == '=') {
          push(Tok::Ne, span);
          bump(2);
          continue;
        }
        throw ParseError("'!' is only valid in '!='", span);
      case '<':
        if (peek(1) == '=') {
          push(Tok::Le, span);
          bump(2);
        } else {
          push(Tok::Lt, span);
          bump();
        }
        continue;
      case '>':
        if (peek(1) == '=') {
          push(Tok::Ge, span);
          bump(2);
        } else {
          push(Tok::Gt, span);
          bump();
        }
        continue;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'",
                         span);
    }
  }
  out.push_back(Token{Tok::End, {}, Span{line, col}});
  return out;
}

}  // namespace cpm
