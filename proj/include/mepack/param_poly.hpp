#pragma once

// Sparse Laurent polynomials over the packet/potential parameter symbols,
// with exact Gaussian-rational coefficients. This is the coefficient ring
// shared by the symbolic operator algebra and the moment engines.

#include "mepack/exact.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mepack {

// Symbol table of the parameter ring. NuHalf stands for the square root of
// the dimensionless uncertainty nu = 2*dQ*dP/hbar, so integer exponents on
// NuHalf encode half-integer powers of nu.
enum class Sym : int {
    Q = 0,
    P,
    DQ,
    DP,
    NuHalf,
    Hbar,
    Mu,
    V0,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    V7,
    V8,
    V9,
    V10,
    V11,
    V12,
    Count
};

constexpr int kSymCount = static_cast<int>(Sym::Count);

inline Sym potential_sym(int k) {
    if (k < 0 || k > 12) throw std::out_of_range("potential coefficient index out of range");
    return static_cast<Sym>(static_cast<int>(Sym::V0) + k);
}

inline const char* sym_name(Sym s) {
    static const char* names[kSymCount] = {"Q",  "P",  "dQ", "dP", "nu^1/2", "hbar", "mu",
                                           "V0", "V1", "V2", "V3", "V4",     "V5",   "V6",
                                           "V7", "V8", "V9", "V10", "V11",   "V12"};
    return names[static_cast<int>(s)];
}

using ExpVec = std::array<int16_t, kSymCount>;

inline ExpVec zero_exp() {
    ExpVec e{};
    e.fill(0);
    return e;
}

/// Numeric values for every symbol, used when collapsing a symbolic result
/// to a floating-point number.
struct SymValues {
    std::array<double, kSymCount> v{};

    SymValues() { v.fill(0.0); }

    double& operator[](Sym s) { return v[static_cast<int>(s)]; }
    double operator[](Sym s) const { return v[static_cast<int>(s)]; }
};

class ParamPoly {
  public:
    ParamPoly() = default;
    ParamPoly(GaussRat c) {  // NOLINT(google-explicit-constructor)
        if (!c.is_zero()) terms_[zero_exp()] = std::move(c);
    }
    ParamPoly(long n) : ParamPoly(GaussRat(n)) {}  // NOLINT(google-explicit-constructor)

    static ParamPoly symbol(Sym s, int exponent = 1) {
        ParamPoly p;
        ExpVec e = zero_exp();
        e[static_cast<int>(s)] = static_cast<int16_t>(exponent);
        p.terms_[e] = GaussRat(1);
        return p;
    }

    static ParamPoly monomial(GaussRat c, const ExpVec& e) {
        ParamPoly p;
        if (!c.is_zero()) p.terms_[e] = std::move(c);
        return p;
    }

    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }
    const std::map<ExpVec, GaussRat>& terms() const { return terms_; }

    bool is_real() const {
        for (const auto& [e, c] : terms_)
            if (c.im != 0) return false;
        return true;
    }

    GaussRat constant_part() const {
        auto it = terms_.find(zero_exp());
        return it == terms_.end() ? GaussRat(0) : it->second;
    }

    ParamPoly conj() const {
        ParamPoly r;
        for (const auto& [e, c] : terms_) r.terms_[e] = c.conj();
        return r;
    }

    ParamPoly& operator+=(const ParamPoly& o) {
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    ParamPoly& operator-=(const ParamPoly& o) {
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }
    friend ParamPoly operator+(ParamPoly a, const ParamPoly& b) { return a += b; }
    friend ParamPoly operator-(ParamPoly a, const ParamPoly& b) { return a -= b; }
    ParamPoly operator-() const {
        ParamPoly r;
        for (const auto& [e, c] : terms_) r.terms_[e] = -c;
        return r;
    }

    friend ParamPoly operator*(const ParamPoly& a, const ParamPoly& b) {
        ParamPoly r;
        for (const auto& [ea, ca] : a.terms_) {
            for (const auto& [eb, cb] : b.terms_) {
                ExpVec e;
                for (int i = 0; i < kSymCount; ++i)
                    e[i] = static_cast<int16_t>(ea[i] + eb[i]);
                r.add_term(e, ca * cb);
            }
        }
        return r;
    }
    ParamPoly& operator*=(const ParamPoly& o) { return *this = *this * o; }

    ParamPoly scaled(const GaussRat& s) const {
        ParamPoly r;
        if (s.is_zero()) return r;
        for (const auto& [e, c] : terms_) r.terms_[e] = c * s;
        return r;
    }

    /// Exact division by a rational scalar.
    ParamPoly div(const BigRat& s) const {
        ParamPoly r;
        for (const auto& [e, c] : terms_) r.terms_[e] = c.div(s);
        return r;
    }

    /// Multiply by symbol^exponent (exponent may be negative: Laurent ring).
    ParamPoly shifted(Sym s, int exponent) const {
        ParamPoly r;
        for (const auto& [e, c] : terms_) {
            ExpVec f = e;
            f[static_cast<int>(s)] = static_cast<int16_t>(f[static_cast<int>(s)] + exponent);
            r.terms_[f] = c;
        }
        return r;
    }

    friend bool operator==(const ParamPoly& a, const ParamPoly& b) {
        return a.terms_ == b.terms_;
    }

    /// Keep only the terms whose exponent vector satisfies the predicate.
    ParamPoly filter(const std::function<bool(const ExpVec&)>& pred) const {
        ParamPoly r;
        for (const auto& [e, c] : terms_)
            if (pred(e)) r.terms_[e] = c;
        return r;
    }

    int min_exponent(Sym s) const {
        int m = 0;
        bool first = true;
        for (const auto& [e, c] : terms_) {
            int x = e[static_cast<int>(s)];
            if (first || x < m) m = x;
            first = false;
        }
        return m;
    }
    int max_exponent(Sym s) const {
        int m = 0;
        bool first = true;
        for (const auto& [e, c] : terms_) {
            int x = e[static_cast<int>(s)];
            if (first || x > m) m = x;
            first = false;
        }
        return m;
    }

    /// Substitute hbar = 2*dQ*dP/nu, eliminating the Hbar symbol. Requires
    /// non-negative hbar exponents.
    ParamPoly eliminate_hbar() const {
        ParamPoly r;
        for (const auto& [e, c] : terms_) {
            int h = e[static_cast<int>(Sym::Hbar)];
            if (h < 0) throw std::logic_error("negative hbar exponent in eliminate_hbar");
            ExpVec f = e;
            f[static_cast<int>(Sym::Hbar)] = 0;
            f[static_cast<int>(Sym::DQ)] = static_cast<int16_t>(f[static_cast<int>(Sym::DQ)] + h);
            f[static_cast<int>(Sym::DP)] = static_cast<int16_t>(f[static_cast<int>(Sym::DP)] + h);
            f[static_cast<int>(Sym::NuHalf)] =
                static_cast<int16_t>(f[static_cast<int>(Sym::NuHalf)] - 2 * h);
            GaussRat s = c;
            for (int j = 0; j < h; ++j) s = s * GaussRat(2);
            r.add_term(f, s);
        }
        return r;
    }

    /// d/d(nu) for polynomials whose NuHalf exponents are all even.
    ParamPoly d_dnu() const {
        ParamPoly r;
        for (const auto& [e, c] : terms_) {
            int nh = e[static_cast<int>(Sym::NuHalf)];
            if (nh % 2 != 0) throw std::logic_error("d_dnu on half-integer nu power");
            int j = nh / 2;
            if (j == 0) continue;
            ExpVec f = e;
            f[static_cast<int>(Sym::NuHalf)] = static_cast<int16_t>(nh - 2);
            r.add_term(f, c * GaussRat(j));
        }
        return r;
    }

    std::complex<double> eval(const SymValues& vals) const {
        std::complex<double> acc{0.0, 0.0};
        for (const auto& [e, c] : terms_) {
            double m = 1.0;
            for (int i = 0; i < kSymCount; ++i) {
                if (e[i] == 0) continue;
                m *= std::pow(vals.v[i], static_cast<double>(e[i]));
            }
            acc += c.to_complex() * m;
        }
        return acc;
    }

    double eval_real(const SymValues& vals, double imag_tol = 1e-12) const {
        std::complex<double> z = eval(vals);
        double scale = std::abs(z.real()) + 1.0;
        if (std::abs(z.imag()) > imag_tol * scale)
            throw std::logic_error("expected real-valued evaluation, got imaginary part " +
                                   std::to_string(z.imag()));
        return z.real();
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (const auto& [e, c] : terms_) {
            if (!first) out += " + ";
            first = false;
            out += "(" + c.str() + ")";
            for (int i = 0; i < kSymCount; ++i) {
                if (e[i] == 0) continue;
                out += " ";
                out += sym_name(static_cast<Sym>(i));
                if (e[i] != 1) out += "^" + std::to_string(e[i]);
            }
        }
        return out;
    }

  private:
    void add_term(const ExpVec& e, const GaussRat& c) {
        if (c.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    std::map<ExpVec, GaussRat> terms_;
};

inline ParamPoly operator*(const GaussRat& s, const ParamPoly& p) { return p.scaled(s); }

}  // namespace mepack
