#include "psc/rational.hpp"

#include <cctype>

namespace psc {

Rational& Rational::operator/=(const Rational& o) {
    if (o.is_zero()) throw std::domain_error("rational division by zero");
    v_ /= o.v_;
    return *this;
}

Rational Rational::parse(const std::string& text) {
    auto bad = [&]() { throw std::invalid_argument("malformed rational literal: " + text); };
    if (text.empty()) bad();
    std::size_t slash = text.find('/');
    std::size_t dot = text.find('.');
    if (slash != std::string::npos) {
        std::string n = text.substr(0, slash), d = text.substr(slash + 1);
        if (n.empty() || d.empty()) bad();
        for (char c : n + d)
            if (!std::isdigit(static_cast<unsigned char>(c))) bad();
        mpz_class den(d);
        if (den == 0) throw std::invalid_argument("rational literal with zero denominator: " + text);
        return Rational(mpz_class(n), den);
    }
    if (dot != std::string::npos) {
        std::string ip = text.substr(0, dot), fp = text.substr(dot + 1);
        if (ip.empty() && fp.empty()) bad();
        for (char c : ip + fp)
            if (!std::isdigit(static_cast<unsigned char>(c))) bad();
        mpz_class num(ip.empty() ? "0" : ip);
        mpz_class den(1);
        for (char c : fp) {
            num = num * 10 + (c - '0');
            den *= 10;
        }
        return Rational(num, den);
    }
    for (char c : text)
        if (!std::isdigit(static_cast<unsigned char>(c))) bad();
    return Rational(mpz_class(text), mpz_class(1));
}

std::string Rational::str() const {
    if (den() == 1) return num().get_str();
    return num().get_str() + "/" + den().get_str();
}

std::string Rational::decimal(int significant_digits) const {
    mp_exp_t exp = 0;
    mpf_class f(v_, 64 + significant_digits * 4);
    std::string digits = f.get_str(exp, 10, significant_digits);
    if (digits.empty()) return "0";
    bool neg = digits[0] == '-';
    if (neg) digits.erase(0, 1);
    std::string out;
    if (exp <= 0) {
        out = "0." + std::string(static_cast<std::size_t>(-exp), '0') + digits;
    } else if (static_cast<std::size_t>(exp) >= digits.size()) {
        out = digits + std::string(static_cast<std::size_t>(exp) - digits.size(), '0');
    } else {
        out = digits.substr(0, static_cast<std::size_t>(exp)) + "." +
              digits.substr(static_cast<std::size_t>(exp));
    }
    return neg ? "-" + out : out;
}

std::size_t Rational::hash() const {
    std::size_t h1 = std::hash<std::string>{}(num().get_str());
    std::size_t h2 = std::hash<std::string>{}(den().get_str());
    return h1 ^ (h2 + 0x9e3779b97f4a7c15ull + (h1 << 6) + (h1 >> 2));
}

} // namespace psc
