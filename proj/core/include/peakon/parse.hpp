#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "peakon/expr.hpp"

namespace peakon {

/// Syntax error with the 0-based byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message), position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parses the expression grammar:
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | atom ('^' signed_rational)?
///   atom   := number | ident | func '(' expr ')' | '(' expr ')'
///
/// Identifiers are the jet coordinates u ux m mx mxx ut utx mt mtx mtxx x t,
/// plus any name in `declared_params`.
Expr parse(std::string_view source, const std::set<std::string>& declared_params = {});

/// Message followed by the source line and a caret under the error position.
std::string format_parse_error(std::string_view source, const ParseError& err);

}  // namespace peakon
