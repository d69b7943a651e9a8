#pragma once

#include <string>
#include <vector>

#include "mautil/model.hpp"

namespace mautil {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitDisagreement = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitGuard = 3;

/// Parses "a,b|c,d" into scope groups: commas separate names, '|' separates
/// groups, whitespace is ignored. A name may not repeat within a group;
/// repeats across groups are fine (scopes may overlap).
std::vector<Scope> parse_scope_expression(const std::string& text, const VariableSpace& space);

/// Parses "var=value,var2=value2" into a partial assignment; empty text
/// binds nothing.
Assignment parse_bindings(const std::string& text, const VariableSpace& space);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace mautil
