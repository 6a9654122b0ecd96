// SPDX-License-Identifier: MIT
#ifndef CPM_PARSER_HPP
#define CPM_PARSER_HPP

#include <string>
#include <string_view>

#include "cpm/ast.hpp"
#include "cpm/lexer.hpp"

namespace cpm {

// Parses a whole program (a sequence of global declarations). Labels are
// assigned from 1 in parse order; Program::first_free_label records where
// run-time synthesis may continue. Throws ParseError.
Program parse_program(std::string_view source, std::string source_name = "");

}  // namespace cpm

#endif  // CPM_PARSER_HPP
