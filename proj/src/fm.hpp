#pragma once

#include "daut/formula.hpp"

#include <optional>
#include <vector>

namespace daut::fm {

// (atom index, multiplier)
using Origin = std::vector<std::pair<int, Rational>>;

struct Result {
    bool feasible = false;
    Valuation model;
    Origin farkas; // when infeasible
};

// Atoms must not use !=. The model assigns every variable of the atoms.
Result solve(const std::vector<Atom>& atoms, bool want_model);

// Conjunction equivalent to ∃elim. ⋀atoms, or nullopt when infeasible.
std::optional<std::vector<Atom>> project(const std::vector<Atom>& atoms, const std::vector<VarRef>& elim);

} // namespace daut::fm
