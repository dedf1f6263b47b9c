#pragma once

#include "daut/formula.hpp"
#include "daut/solver.hpp"

#include <ostream>
#include <set>
#include <string>

namespace daut {
inline void PrintTo(const Formula& f, std::ostream* os) { *os << to_string(f); }
}

namespace daut::test {

// Identifiers in `ints` are Integer, everything else Rational.
inline SortLookup sorts(std::set<std::string> ints = {}) {
    return [ints](const std::string& n) -> std::optional<Sort> {
        return ints.count(n) ? Sort::Integer : Sort::Rational;
    };
}

inline Formula F(const std::string& text, std::set<std::string> ints = {}) {
    return parse_formula(text, sorts(std::move(ints)));
}

inline VarRef R(const std::string& n) { return VarRef::plain(n); }

} // namespace daut::test
