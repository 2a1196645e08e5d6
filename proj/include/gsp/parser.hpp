#pragma once

#include <string>
#include <vector>

#include "gsp/ast.hpp"

namespace gsp {

struct ParseResult {
  SurfaceProgram program;
  std::vector<Diagnostic> diags;
  bool ok() const { return diags.empty(); }
};

// Parses the line-oriented concrete syntax (.gsp): 4-space indentation,
// `#` comments, Python-like statement forms. Desugars Optional[S] to
// Union[None, S] and validates the structural invariants (break placement,
// local def-before-use, duplicate top-level names).
ParseResult parse(const std::string& source);

// Canonical text for an AST; parse(unparse(p)) is structurally equal to p.
std::string unparse(const SurfaceProgram& p);
std::string unparse_expr(const Expr& e);

}  // namespace gsp
