#pragma once

#include <string_view>

#include "hypersmc/formula.hpp"

namespace hypersmc {

/// Parses the ASCII formula syntax. Derived operators (|, =>, F, G, true, false, ~[eps])
/// are desugared into the core AST. Throws ParseError with a 1-based location.
///
/// Precedence, loosest first: `=>` (right assoc), `|`, `&`, `U`, prefix operators
/// (`!`, `X`, `F`, `G`), postfix association `(f)@pv`. Comparisons sit inside the
/// tightest level and bind looser than arithmetic.
FormulaPtr parse_formula(std::string_view text);

/// As parse_formula, and additionally rejects formulas with free path variables.
FormulaPtr parse_closed_formula(std::string_view text);

}  // namespace hypersmc
