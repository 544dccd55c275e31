#pragma once

// Exact symbolic algebra of polynomials in the noncommuting pair (q, p)
// with [q, p] = i hbar, their ladder-operator form, the balanced-word
// projection onto polynomials of the number operator, and expectation
// values against classical and quantum maximum-entropy packets.

#include "mepack/core.hpp"
#include "mepack/errors.hpp"
#include "mepack/exact.hpp"
#include "mepack/param_poly.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mepack {

// Hard cap on the total word degree accepted by the symbolic expectation
// path; beyond this the combinatorial growth is not worth supporting.
constexpr int kExpectationDegreeCap = 16;

/// Canonical word q^a p^b (every polynomial is stored with all q factors
/// to the left of all p factors).
struct QPWord {
    int q = 0;
    int p = 0;
    friend auto operator<=>(const QPWord&, const QPWord&) = default;
};

class WeylPoly {
  public:
    WeylPoly() = default;
    WeylPoly(ParamPoly c) {  // NOLINT(google-explicit-constructor)
        if (!c.is_zero()) terms_[QPWord{0, 0}] = std::move(c);
    }
    WeylPoly(long n) : WeylPoly(ParamPoly(n)) {}  // NOLINT(google-explicit-constructor)

    static WeylPoly q_power(int a, ParamPoly c = ParamPoly(1)) {
        WeylPoly r;
        if (!c.is_zero()) r.terms_[QPWord{a, 0}] = std::move(c);
        return r;
    }
    static WeylPoly p_power(int b, ParamPoly c = ParamPoly(1)) {
        WeylPoly r;
        if (!c.is_zero()) r.terms_[QPWord{0, b}] = std::move(c);
        return r;
    }
    static WeylPoly q() { return q_power(1); }
    static WeylPoly p() { return p_power(1); }

    /// Build the product of single letters given as a string over {q, p},
    /// e.g. "qppq"; spaces are ignored.
    static WeylPoly from_word(const std::string& word) {
        WeylPoly r(1);
        for (char ch : word) {
            if (ch == ' ') continue;
            if (ch == 'q')
                r = r * q();
            else if (ch == 'p')
                r = r * p();
            else
                throw ValidationError("word", std::string("unexpected letter '") + ch + "'");
        }
        return r;
    }

    const std::map<QPWord, ParamPoly>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    int degree() const {
        int d = 0;
        for (const auto& [w, c] : terms_) d = std::max(d, w.q + w.p);
        return d;
    }

    WeylPoly& operator+=(const WeylPoly& o) {
        for (const auto& [w, c] : o.terms_) add_term(w, c);
        return *this;
    }
    WeylPoly& operator-=(const WeylPoly& o) {
        for (const auto& [w, c] : o.terms_) add_term(w, -c);
        return *this;
    }
    friend WeylPoly operator+(WeylPoly a, const WeylPoly& b) { return a += b; }
    friend WeylPoly operator-(WeylPoly a, const WeylPoly& b) { return a -= b; }
    WeylPoly operator-() const {
        WeylPoly r;
        for (const auto& [w, c] : terms_) r.terms_[w] = -c;
        return r;
    }

    WeylPoly scaled(const ParamPoly& s) const {
        WeylPoly r;
        if (s.is_zero()) return r;
        for (const auto& [w, c] : terms_) r.add_term(w, c * s);
        return r;
    }

    /// Canonical-form product. Reordering uses the closed identity
    ///   p^b q^c = sum_k k! C(b,k) C(c,k) (-i hbar)^k q^{c-k} p^{b-k}.
    friend WeylPoly operator*(const WeylPoly& x, const WeylPoly& y) {
        WeylPoly r;
        for (const auto& [wx, cx] : x.terms_) {
            for (const auto& [wy, cy] : y.terms_) {
                ParamPoly c = cx * cy;
                int kmax = std::min(wx.p, wy.q);
                for (int k = 0; k <= kmax; ++k) {
                    BigRat scalar(factorial(k) * binomial(wx.p, k) * binomial(wy.q, k));
                    GaussRat coeff = GaussRat(scalar) * pow_i(-k);  // (-i)^k
                    ParamPoly term = c.scaled(coeff);
                    if (k > 0) term = term.shifted(Sym::Hbar, k);
                    r.add_term(QPWord{wx.q + wy.q - k, wx.p + wy.p - k}, term);
                }
            }
        }
        return r;
    }
    WeylPoly& operator*=(const WeylPoly& o) { return *this = *this * o; }

    friend bool operator==(const WeylPoly& a, const WeylPoly& b) { return a.terms_ == b.terms_; }

    /// Hermitian adjoint: reverses each word and conjugates coefficients,
    /// then restores canonical order.
    WeylPoly adjoint() const {
        WeylPoly r;
        for (const auto& [w, c] : terms_) {
            // (q^a p^b)^dagger = p^b q^a, reordered canonically.
            ParamPoly cc = c.conj();
            int kmax = std::min(w.p, w.q);
            for (int k = 0; k <= kmax; ++k) {
                BigRat scalar(factorial(k) * binomial(w.p, k) * binomial(w.q, k));
                GaussRat coeff = GaussRat(scalar) * pow_i(-k);
                ParamPoly term = cc.scaled(coeff);
                if (k > 0) term = term.shifted(Sym::Hbar, k);
                r.add_term(QPWord{w.q - k, w.p - k}, term);
            }
        }
        return r;
    }

    bool is_self_adjoint() const { return *this == adjoint(); }

    /// Commutative shadow: the hbar -> 0 limit of the canonical form.
    WeylPoly shadow() const {
        WeylPoly r;
        for (const auto& [w, c] : terms_) {
            ParamPoly kept = c.filter([](const ExpVec& e) {
                return e[static_cast<int>(Sym::Hbar)] == 0;
            });
            if (c.min_exponent(Sym::Hbar) < 0)
                throw std::logic_error("negative hbar exponent in canonical form");
            r.add_term(w, kept);
        }
        return r;
    }

    bool is_commutative() const {
        for (const auto& [w, c] : terms_) {
            if (c.min_exponent(Sym::Hbar) != 0 || c.max_exponent(Sym::Hbar) != 0) return false;
        }
        return true;
    }

    /// Plain-text dump of the canonical form, one word per line.
    std::string str() const {
        if (terms_.empty()) return "0\n";
        std::string out;
        for (const auto& [w, c] : terms_) {
            out += "q^" + std::to_string(w.q) + " p^" + std::to_string(w.p) + ": " + c.str() +
                   "\n";
        }
        return out;
    }

  private:
    void add_term(const QPWord& w, const ParamPoly& c) {
        if (c.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace(w, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    std::map<QPWord, ParamPoly> terms_;
};

inline WeylPoly commutator(const WeylPoly& a, const WeylPoly& b) { return a * b - b * a; }

// --- Ladder algebra ------------------------------------------------------

/// Normal-ordered word (A^dagger)^dag A^ann.
struct LadderWord {
    int dag = 0;
    int ann = 0;
    friend auto operator<=>(const LadderWord&, const LadderWord&) = default;
};

class LadderPoly {
  public:
    LadderPoly() = default;
    LadderPoly(ParamPoly c) {  // NOLINT(google-explicit-constructor)
        if (!c.is_zero()) terms_[LadderWord{0, 0}] = std::move(c);
    }

    static LadderPoly creator() {
        LadderPoly r;
        r.terms_[LadderWord{1, 0}] = ParamPoly(1);
        return r;
    }
    static LadderPoly annihilator() {
        LadderPoly r;
        r.terms_[LadderWord{0, 1}] = ParamPoly(1);
        return r;
    }

    const std::map<LadderWord, ParamPoly>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    LadderPoly& operator+=(const LadderPoly& o) {
        for (const auto& [w, c] : o.terms_) add_term(w, c);
        return *this;
    }
    LadderPoly& operator-=(const LadderPoly& o) {
        for (const auto& [w, c] : o.terms_) add_term(w, -c);
        return *this;
    }
    friend LadderPoly operator+(LadderPoly a, const LadderPoly& b) { return a += b; }
    friend LadderPoly operator-(LadderPoly a, const LadderPoly& b) { return a -= b; }

    LadderPoly scaled(const ParamPoly& s) const {
        LadderPoly r;
        if (s.is_zero()) return r;
        for (const auto& [w, c] : terms_) r.add_term(w, c * s);
        return r;
    }

    /// Normal-ordered product using
    ///   A^b (A^dagger)^c = sum_k k! C(b,k) C(c,k) (A^dagger)^{c-k} A^{b-k}.
    friend LadderPoly operator*(const LadderPoly& x, const LadderPoly& y) {
        LadderPoly r;
        for (const auto& [wx, cx] : x.terms_) {
            for (const auto& [wy, cy] : y.terms_) {
                ParamPoly c = cx * cy;
                int kmax = std::min(wx.ann, wy.dag);
                for (int k = 0; k <= kmax; ++k) {
                    BigRat scalar(factorial(k) * binomial(wx.ann, k) * binomial(wy.dag, k));
                    r.add_term(LadderWord{wx.dag + wy.dag - k, wx.ann + wy.ann - k},
                               c.scaled(GaussRat(scalar)));
                }
            }
        }
        return r;
    }
    LadderPoly& operator*=(const LadderPoly& o) { return *this = *this * o; }

    friend bool operator==(const LadderPoly& a, const LadderPoly& b) {
        return a.terms_ == b.terms_;
    }

  private:
    void add_term(const LadderWord& w, const ParamPoly& c) {
        if (c.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace(w, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    std::map<LadderWord, ParamPoly> terms_;
};

/// Polynomial in the number operator A^dagger A; coefficients[k] multiplies
/// (A^dagger A)^k.
struct NumberPoly {
    std::vector<ParamPoly> coefficients;

    bool is_zero() const {
        for (const auto& c : coefficients)
            if (!c.is_zero()) return false;
        return true;
    }
};

namespace detail {

// (A^dagger)^k A^k as the falling factorial n(n-1)...(n-k+1) of the number
// operator; entry k of the cache holds its coefficient list.
inline const std::vector<std::vector<BigRat>>& falling_factorial_table() {
    static const std::vector<std::vector<BigRat>> table = [] {
        std::vector<std::vector<BigRat>> t;
        t.push_back({BigRat(1)});  // k = 0: constant 1
        for (int k = 1; k <= kExpectationDegreeCap; ++k) {
            const auto& prev = t.back();
            std::vector<BigRat> next(prev.size() + 1, BigRat(0));
            // multiply by (n - (k-1))
            for (std::size_t j = 0; j < prev.size(); ++j) {
                next[j + 1] += prev[j];
                next[j] -= prev[j] * (k - 1);
            }
            t.push_back(std::move(next));
        }
        return t;
    }();
    return table;
}

// Exact polynomials N_k(nu) = <(A^dagger A)^k>, built by the recursion
// N_{k+1} = ((nu - 1)/2) d/dnu [ (1 + nu) N_k ].
inline const std::vector<ParamPoly>& number_moment_table() {
    static const std::vector<ParamPoly> table = [] {
        std::vector<ParamPoly> t;
        ParamPoly nu = ParamPoly::symbol(Sym::NuHalf, 2);
        t.push_back(ParamPoly(1));
        for (int k = 0; k < kExpectationDegreeCap; ++k) {
            ParamPoly inner = (ParamPoly(1) + nu) * t.back();
            ParamPoly next = ((nu - ParamPoly(1)) * inner.d_dnu()).div(BigRat(2));
            t.push_back(std::move(next));
        }
        return t;
    }();
    return table;
}

}  // namespace detail

/// <(A^dagger A)^k> in the packet with uncertainty nu, as an exact
/// polynomial in nu with leading coefficient k!/2^k.
inline ParamPoly number_moment_poly(int k) {
    if (k < 0) throw ValidationError("k", "must be >= 0");
    const auto& table = detail::number_moment_table();
    if (k >= static_cast<int>(table.size()))
        throw ValidationError("k", "number moment order exceeds cap " +
                                       std::to_string(kExpectationDegreeCap));
    return table[k];
}

inline double number_moment(int k, double nu) {
    SymValues vals;
    vals[Sym::NuHalf] = std::sqrt(nu);
    return number_moment_poly(k).eval_real(vals);
}

/// Substitution q = Q + (dQ/sqrt(nu))(A + A^dagger),
///              p = P - i (dP/sqrt(nu))(A - A^dagger),
/// with hbar eliminated through nu = 2 dQ dP / hbar, followed by normal
/// ordering. Single degree of freedom.
inline LadderPoly to_ladder(const WeylPoly& x) {
    int deg = x.degree();
    if (deg > kExpectationDegreeCap)
        throw ValidationError("degree", "symbolic expectation degree cap " +
                                            std::to_string(kExpectationDegreeCap) +
                                            " exceeded (got " + std::to_string(deg) + ")");
    const ParamPoly cq = ParamPoly::symbol(Sym::DQ).shifted(Sym::NuHalf, -1);
    const ParamPoly cp = ParamPoly::symbol(Sym::DP).shifted(Sym::NuHalf, -1);
    LadderPoly lq = LadderPoly(ParamPoly::symbol(Sym::Q)) +
                    (LadderPoly::annihilator() + LadderPoly::creator()).scaled(cq);
    LadderPoly lp = LadderPoly(ParamPoly::symbol(Sym::P)) +
                    (LadderPoly::annihilator() - LadderPoly::creator())
                        .scaled(cp.scaled(-GaussRat::i()));

    // Cache powers up to the maximal exponents in x.
    int max_q = 0, max_p = 0;
    for (const auto& [w, c] : x.terms()) {
        max_q = std::max(max_q, w.q);
        max_p = std::max(max_p, w.p);
    }
    std::vector<LadderPoly> qpow{LadderPoly(ParamPoly(1))}, ppow{LadderPoly(ParamPoly(1))};
    for (int a = 1; a <= max_q; ++a) qpow.push_back(qpow.back() * lq);
    for (int b = 1; b <= max_p; ++b) ppow.push_back(ppow.back() * lp);

    LadderPoly out;
    for (const auto& [w, c] : x.terms())
        out += (qpow[w.q] * ppow[w.p]).scaled(c.eliminate_hbar());
    return out;
}

/// The balanced-word projection: discard every monomial with different
/// numbers of A and A^dagger factors, then reduce the survivors to a
/// polynomial in A^dagger A.
inline NumberPoly map_N(const LadderPoly& x) {
    NumberPoly out;
    const auto& ff = detail::falling_factorial_table();
    for (const auto& [w, c] : x.terms()) {
        if (w.dag != w.ann) continue;
        int k = w.dag;
        if (k >= static_cast<int>(ff.size()))
            throw ValidationError("degree", "balanced word order exceeds cap");
        if (out.coefficients.size() < ff[k].size()) out.coefficients.resize(ff[k].size());
        for (std::size_t j = 0; j < ff[k].size(); ++j) {
            if (ff[k][j] == 0) continue;
            out.coefficients[j] += c.scaled(GaussRat(ff[k][j]));
        }
    }
    return out;
}

/// Expectation value of a canonical-form polynomial in the quantum ME
/// packet, as an exact polynomial in (Q, P, dQ, dP, nu^{-1}).
inline ParamPoly quantum_expectation_sym(const WeylPoly& x) {
    NumberPoly np = map_N(to_ladder(x));
    ParamPoly out;
    for (std::size_t k = 0; k < np.coefficients.size(); ++k) {
        if (np.coefficients[k].is_zero()) continue;
        out += np.coefficients[k] * number_moment_poly(static_cast<int>(k));
    }
    return out;
}

inline SymValues packet_sym_values(const PacketParams& params) {
    params.require_single_dof("expectation");
    SymValues vals;
    const Dof& d = params.dofs[0];
    vals[Sym::Q] = d.Q;
    vals[Sym::P] = d.P;
    vals[Sym::DQ] = d.dQ;
    vals[Sym::DP] = d.dP;
    vals[Sym::NuHalf] = std::sqrt(params.nu());
    vals[Sym::Hbar] = params.constants.hbar;
    return vals;
}

/// Numeric quantum expectation. The input must be self-adjoint unless the
/// caller asks for the symmetrization (x + x^dagger)/2. The exact
/// polynomial form extends continuously to the pure-state boundary nu = 1,
/// where it reproduces the Gaussian-wave-packet values.
inline double quantum_expectation(const WeylPoly& x, const PacketParams& params,
                                  bool symmetrize = false) {
    params.validate();
    params.require_single_dof("quantum_expectation");
    if (params.nu() < 1.0)
        throw ValidationError("packet", "uncertainty bound violated: nu = 2*dQ*dP/hbar < 1");
    WeylPoly s = x;
    if (!x.is_self_adjoint()) {
        if (!symmetrize)
            throw ValidationError("operator",
                                  "not self-adjoint; request the symmetrized expectation");
        s = (x + x.adjoint()).scaled(ParamPoly(GaussRat(1, 2)));
    }
    return quantum_expectation_sym(s).eval_real(packet_sym_values(params));
}

/// Symbolic classical expectation of a commutative polynomial: the linear
/// extension of <q^k p^l> = <q^k><p^l> with Gaussian factors.
inline ParamPoly classical_expectation_sym(const WeylPoly& x) {
    if (!x.is_commutative())
        throw ValidationError("operator", "classical expectation needs a commutative polynomial");
    ParamPoly out;
    for (const auto& [w, c] : x.terms()) {
        out += c * gaussian_raw_moment_sym(w.q, Sym::Q, Sym::DQ) *
               gaussian_raw_moment_sym(w.p, Sym::P, Sym::DP);
    }
    return out;
}

inline double classical_expectation(const WeylPoly& x, const PacketParams& params) {
    params.validate();
    params.require_single_dof("classical_expectation");
    return classical_expectation_sym(x).eval_real(packet_sym_values(params));
}

}  // namespace mepack
