#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace psc {

/// Arbitrary-precision rational number, always kept in canonical form
/// (gcd(|num|, den) = 1, den > 0). All arithmetic is exact.
class Rational {
public:
    Rational() : v_(0) {}
    Rational(long n) : v_(n) {}
    Rational(long n, long d) : v_(n, d) { canonicalize(); }
    explicit Rational(const mpq_class& q) : v_(q) { canonicalize(); }
    Rational(const mpz_class& n, const mpz_class& d) : v_(n, d) { canonicalize(); }

    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }

    /// Parses "n", "n/d" or a decimal literal like "0.25" (converted exactly).
    static Rational parse(const std::string& text);

    const mpz_class& num() const { return v_.get_num(); }
    const mpz_class& den() const { return v_.get_den(); }

    bool is_zero() const { return v_ == 0; }
    bool is_one() const { return v_ == 1; }
    int sign() const { return sgn(v_); }

    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
    Rational& operator/=(const Rational& o);

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

    /// "n" when the denominator is 1, "n/d" otherwise.
    std::string str() const;

    /// Decimal approximation with the given number of significant digits.
    /// Display only; never used in comparisons.
    std::string decimal(int significant_digits = 20) const;

    double to_double() const { return v_.get_d(); }

    std::size_t hash() const;

private:
    void canonicalize() {
        if (v_.get_den() == 0) throw std::invalid_argument("rational with zero denominator");
        v_.canonicalize();
    }

    mpq_class v_;
};

/// A rational constrained to [0, 1].
class Probability {
public:
    Probability() : v_(0) {}
    explicit Probability(Rational v) : v_(std::move(v)) {
        if (v_ < Rational(0) || v_ > Rational(1))
            throw std::invalid_argument("probability out of range: " + v_.str());
    }

    static Probability zero() { return Probability(Rational(0)); }
    static Probability one() { return Probability(Rational(1)); }

    const Rational& value() const { return v_; }
    Probability complement() const { return Probability(Rational(1) - v_); }

    bool is_zero() const { return v_.is_zero(); }
    bool is_one() const { return v_.is_one(); }

    friend bool operator==(const Probability& a, const Probability& b) { return a.v_ == b.v_; }
    friend bool operator!=(const Probability& a, const Probability& b) { return a.v_ != b.v_; }

    std::string str() const { return v_.str(); }

private:
    Rational v_;
};

} // namespace psc
