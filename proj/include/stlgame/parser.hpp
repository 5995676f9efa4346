#pragma once

#include <string>
#include <vector>

#include "stlgame/formula.hpp"

namespace stlgame::stl {

/// Parse a formula over the given state-variable names. Grammar, loosest
/// binding first:
///
///   formula := or ( "->" formula )?          right associative, sugar for !a | b
///   or      := and ( "|" and )*
///   and     := until ( "&" until )*
///   until   := unary ( "U" "[" a "," b "]" until )?
///   unary   := "!" unary | "F" "[" a "," b "]" unary | "G" "[" a "," b "]" unary | primary
///   primary := "true" | "(" formula ")" | atom
///   atom    := linexpr (">=" | "<=") linexpr
///   linexpr := ("+"|"-")? term ( ("+"|"-") term )*
///   term    := number ( "*" ident )? | ident
///
/// Interval bounds a, b are nonnegative integers with a <= b. "true", "F",
/// "G" and "U" are reserved words and may not be used as variable names.
/// Rejects unknown variables and ill-formed input with ParseError carrying
/// a 1-based line and column.
FormulaPtr parse_formula(const std::string& text, const std::vector<std::string>& names);

/// Words the formula grammar claims for itself.
bool is_reserved_word(const std::string& word);

}  // namespace stlgame::stl
