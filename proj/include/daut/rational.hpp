#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace daut {

using Rational = mpq_class;

// Accepts "3", "-3", "1/2", "-1.25".
Rational parse_rational(std::string_view text);
bool try_parse_rational(std::string_view text, Rational& out);

std::string to_string(const Rational& q);

bool is_integral(const Rational& q);
Rational floor(const Rational& q);
Rational ceil(const Rational& q);

} // namespace daut
