#pragma once

// Exact coefficient arithmetic: arbitrary-precision rationals and
// Gaussian rationals (a + b*i with rational a, b).

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>

namespace mepack {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline BigInt factorial(unsigned n) {
    BigInt f = 1;
    for (unsigned k = 2; k <= n; ++k) f *= k;
    return f;
}

inline BigInt binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    BigInt num = 1, den = 1;
    for (unsigned j = 0; j < k; ++j) {
        num *= (n - j);
        den *= (j + 1);
    }
    return num / den;
}

// (2m-1)!! with the empty product convention for m = 0.
inline BigInt double_factorial_odd(unsigned m) {
    BigInt f = 1;
    for (unsigned k = 1; k <= m; ++k) f *= (2 * k - 1);
    return f;
}

/// Complex number with exact rational real and imaginary parts.
struct GaussRat {
    BigRat re{0};
    BigRat im{0};

    GaussRat() = default;
    GaussRat(BigRat r) : re(std::move(r)) {}  // NOLINT(google-explicit-constructor)
    GaussRat(BigRat r, BigRat i) : re(std::move(r)), im(std::move(i)) {}
    GaussRat(long r) : re(r) {}  // NOLINT(google-explicit-constructor)
    GaussRat(long n, long d) : re(BigRat(n, d)) {}

    static GaussRat i() { return GaussRat(BigRat(0), BigRat(1)); }

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }

    GaussRat conj() const { return {re, -im}; }

    GaussRat& operator+=(const GaussRat& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    GaussRat& operator-=(const GaussRat& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    GaussRat operator-() const { return {-re, -im}; }

    friend GaussRat operator+(GaussRat a, const GaussRat& b) { return a += b; }
    friend GaussRat operator-(GaussRat a, const GaussRat& b) { return a -= b; }
    friend GaussRat operator*(const GaussRat& a, const GaussRat& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend bool operator==(const GaussRat& a, const GaussRat& b) {
        return a.re == b.re && a.im == b.im;
    }

    /// Division by an exact nonzero scalar.
    GaussRat div(const BigRat& s) const { return {re / s, im / s}; }

    std::complex<double> to_complex() const {
        return {static_cast<double>(re), static_cast<double>(im)};
    }

    std::string str() const {
        std::ostringstream os;
        if (im == 0) {
            os << re;
        } else if (re == 0) {
            os << im << " i";
        } else {
            os << re << (im > 0 ? " + " : " - ");
            BigRat a = im > 0 ? im : BigRat(-im);
            os << a << " i";
        }
        return os.str();
    }
};

inline GaussRat pow_i(int k) {
    // i^k for any integer k
    int r = ((k % 4) + 4) % 4;
    switch (r) {
        case 0: return GaussRat(1);
        case 1: return GaussRat::i();
        case 2: return GaussRat(-1);
        default: return GaussRat(BigRat(0), BigRat(-1));
    }
}

}  // namespace mepack
