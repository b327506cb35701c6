#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qn/potential.hpp"
#include "qn/problems.hpp"
#include "qn/update.hpp"

namespace qn {

// CLI/config name syntax:
//   potentials: neglog | power:gamma=<float> | bounded:a=<float>,b=<float>
//   families:   vbfgs-b | vdfp-b | vbfgs-h | vdfp-h
//               | broyden:theta=<t>,v1=<potential>,v2=<potential>
// Power potentials are constructed with the permissive bound gamma < 1;
// dimension-dependent admissibility is checked by `validate`.
Potential parse_potential(const std::string& text);

// Non-Broyden families take their potential from `pot` (neglog if absent);
// Broyden carries its two potentials inline.
UpdateFamily parse_family(const std::string& text,
                          const std::optional<Potential>& pot);

ProblemKind parse_problem(const std::string& text);

std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace qn
