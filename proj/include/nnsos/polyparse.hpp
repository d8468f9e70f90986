#pragma once

#include <string>
#include <string_view>

#include "nnsos/poly.hpp"

namespace nnsos {

// Infix polynomial grammar shared by definition files and certificates,
// e.g. "3*z1^2*z2 - 0.5*u + 1". parse/print round-trip exactly.
//
// When auto_register is false, identifiers must already exist in the space;
// unknown names raise an Error carrying the offset of the bad token.
Polynomial parse_polynomial(std::string_view text, VariableSpace& space,
                            bool auto_register = false);

std::string print_polynomial(const Polynomial& p, const VariableSpace& space);

// Shortest decimal that round-trips through double.
std::string format_double(double x);

}  // namespace nnsos
