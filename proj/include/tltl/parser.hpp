// tltl/parser.hpp — text syntax for TLTL formulas.
//
// Grammar (lowest to highest binding):
//
//   formula  := implies
//   implies  := untilthen ( "->" implies )?          right-assoc
//   untilthen:= or_e ( ("U"|"T") untilthen )?        right-assoc
//   or_e     := and_e ( "|" and_e )*
//   and_e    := unary ( "&" unary )*
//   unary    := ("!"|"F"|"G"|"X") unary | atom
//   atom     := "true" | "(" formula ")" | ident cmp number
//   cmp      := "<" | "<=" | ">" | ">="
//
// "F", "G", "X", "U", "T" and "true" are reserved words and cannot be used
// as feature identifiers.
//
// NOTE: "<=" and ">=" are aliases of "<" and ">". The robustness margin is
// identical and the satisfaction boundary has measure zero, so the parser
// collapses them onto the strict comparators.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tltl/formula.hpp"

namespace tltl {

class SyntaxError : public std::runtime_error {
  public:
    SyntaxError(std::size_t pos, const std::string& expected, const std::string& found)
        : std::runtime_error("syntax error at position " + std::to_string(pos) +
                             ": expected " + expected + ", found " + found),
          position(pos), expected(expected) {}
    std::size_t position;
    std::string expected;
};

class UnknownFeature : public std::runtime_error {
  public:
    UnknownFeature(std::size_t pos, const std::string& ident)
        : std::runtime_error("unknown feature '" + ident + "' at position " +
                             std::to_string(pos)),
          position(pos), identifier(ident) {}
    std::size_t position;
    std::string identifier;
};

// Parse `text` against `schema`. Throws SyntaxError / UnknownFeature.
FormulaPtr parse(const std::string& text, const FeatureSchema& schema);

// Render `f` as text that re-parses to a structurally identical AST.
std::string unparse(const FormulaPtr& f);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

}  // namespace tltl
