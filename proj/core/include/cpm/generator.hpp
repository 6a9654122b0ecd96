// SPDX-License-Identifier: MIT
//
// Deterministic program synthesis for differential testing.  The same
// (seed, size) pair always produces the same source text; programs are well
// typed by construction, and loops count up to literal bounds so nearly all
// of them terminate quickly under the concrete interpreter.

#ifndef CPM_GENERATOR_HPP
#define CPM_GENERATOR_HPP

#include <cstdint>
#include <string>

#include <cpm/ast.hpp>

namespace cpm {

// `size` bounds the statement nesting depth (useful range ~3..12).
std::string generate_source(std::uint64_t seed, unsigned size);

// Convenience: generate and parse.  The result carries a source_name of the
// form "gen(seed,size)" so findings stay replayable.
Program generate_program(std::uint64_t seed, unsigned size);

}  // namespace cpm

#endif  // CPM_GENERATOR_HPP
