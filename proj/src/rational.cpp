#include "daut/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace daut {

bool try_parse_rational(std::string_view text, Rational& out) {
    if (text.empty()) return false;
    std::size_t i = 0;
    bool neg = false;
    if (text[0] == '-' || text[0] == '+') {
        neg = text[0] == '-';
        i = 1;
    }
    if (i >= text.size()) return false;
    std::string digits(text.substr(i));
    auto all_digits = [](std::string_view s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        return true;
    };
    Rational value;
    if (auto slash = digits.find('/'); slash != std::string::npos) {
        std::string_view num(digits.data(), slash), den(digits.data() + slash + 1, digits.size() - slash - 1);
        if (!all_digits(num) || !all_digits(den)) return false;
        mpz_class d{std::string(den)};
        if (d == 0) return false;
        value = Rational(mpz_class(std::string(num)), d);
        value.canonicalize();
    } else if (auto dot = digits.find('.'); dot != std::string::npos) {
        std::string_view ip(digits.data(), dot), fp(digits.data() + dot + 1, digits.size() - dot - 1);
        if (ip.empty() && fp.empty()) return false;
        if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp))) return false;
        mpz_class scale = 1;
        for (std::size_t k = 0; k < fp.size(); ++k) scale *= 10;
        mpz_class whole = ip.empty() ? mpz_class(0) : mpz_class(std::string(ip));
        mpz_class frac = fp.empty() ? mpz_class(0) : mpz_class(std::string(fp));
        value = Rational(whole * scale + frac, scale);
        value.canonicalize();
    } else {
        if (!all_digits(digits)) return false;
        value = Rational(mpz_class(digits));
    }
    out = neg ? Rational(-value) : value;
    return true;
}

Rational parse_rational(std::string_view text) {
    Rational q;
    if (!try_parse_rational(text, q)) throw std::invalid_argument("not a rational literal: " + std::string(text));
    return q;
}

std::string to_string(const Rational& q) {
    return q.get_str();
}

bool is_integral(const Rational& q) {
    return q.get_den() == 1;
}

Rational floor(const Rational& q) {
    mpz_class r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Rational(r);
}

Rational ceil(const Rational& q) {
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return Rational(r);
}

} // namespace daut
