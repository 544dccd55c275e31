#pragma once

// Embedded regression suite behind the `verify` subcommand: exact number
// moments, the balanced-word projection examples, the product-moment
// identities, the ninth-derivative landmark coefficient, entropy
// consistency, quadratic coincidence and the chain identities. Rows whose
// printed source values are known to disagree with the derivation carry
// an explanatory note; `report`-kind rows are informational and excluded
// from the exit gate.

#include "mepack/chain.hpp"
#include "mepack/csv.hpp"
#include "mepack/dynamics.hpp"
#include "mepack/qpacket.hpp"
#include "mepack/weyl.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace mepack {

struct VerifyCheck {
    std::string name;
    std::string kind;  // "identity", "closed-form", "numeric", "report"
    std::string expected;
    std::string computed;
    bool pass = false;
    std::string note;
};

namespace detail {

inline ParamPoly nu_poly(std::initializer_list<std::pair<int, BigRat>> powers) {
    // polynomial in nu from (power, coefficient) pairs
    ParamPoly p;
    for (const auto& [k, c] : powers)
        p += ParamPoly::monomial(GaussRat(c), zero_exp()).shifted(Sym::NuHalf, 2 * k);
    return p;
}

inline ParamPoly monomial_qdp(BigRat coeff, int q_pow, int p_pow, int dq_pow, int dp_pow,
                              int nu_pow) {
    ParamPoly m = ParamPoly(GaussRat(coeff));
    if (q_pow) m = m.shifted(Sym::Q, q_pow);
    if (p_pow) m = m.shifted(Sym::P, p_pow);
    if (dq_pow) m = m.shifted(Sym::DQ, dq_pow);
    if (dp_pow) m = m.shifted(Sym::DP, dp_pow);
    if (nu_pow) m = m.shifted(Sym::NuHalf, 2 * nu_pow);
    return m;
}

}  // namespace detail

inline std::vector<VerifyCheck> run_verify_checks() {
    std::vector<VerifyCheck> out;
    auto add = [&out](std::string name, std::string kind, std::string expected,
                      std::string computed, bool pass, std::string note = "") {
        out.push_back({std::move(name), std::move(kind), std::move(expected),
                       std::move(computed), pass, std::move(note)});
    };

    // Number moments <(A'A)^k> as exact polynomials in nu.
    {
        ParamPoly e1 = detail::nu_poly({{1, BigRat(1, 2)}, {0, BigRat(-1, 2)}});
        ParamPoly e2 = detail::nu_poly({{2, BigRat(1, 2)}, {1, BigRat(-1, 2)}});
        ParamPoly e3 = detail::nu_poly(
            {{3, BigRat(3, 4)}, {2, BigRat(-3, 4)}, {1, BigRat(-1, 4)}, {0, BigRat(1, 4)}});
        add("number moment k=1", "identity", "nu/2 - 1/2", number_moment_poly(1).str(),
            number_moment_poly(1) == e1);
        add("number moment k=2", "identity", "nu^2/2 - nu/2", number_moment_poly(2).str(),
            number_moment_poly(2) == e2);
        add("number moment k=3", "identity", "3nu^3/4 - 3nu^2/4 - nu/4 + 1/4",
            number_moment_poly(3).str(), number_moment_poly(3) == e3);
        double n2 = number_moment(2, 3.0);
        add("number moment k=2 at nu=3", "numeric", "3", csv_num(n2),
            std::abs(n2 - 3.0) < 1e-12);
    }

    // Balanced-word projection examples.
    {
        ParamPoly q_exp = quantum_expectation_sym(WeylPoly::q());
        add("projection of q", "identity", "Q", q_exp.str(), q_exp == ParamPoly::symbol(Sym::Q));

        NumberPoly np = map_N(to_ladder(WeylPoly::p_power(2)));
        ParamPoly c0 = ParamPoly::symbol(Sym::P, 2) +
                       ParamPoly::symbol(Sym::DP, 2).shifted(Sym::NuHalf, -2);
        ParamPoly c1 = ParamPoly::symbol(Sym::DP, 2).shifted(Sym::NuHalf, -2).scaled(GaussRat(2));
        bool ok = np.coefficients.size() == 2 && np.coefficients[0] == c0 &&
                  np.coefficients[1] == c1;
        add("projection of p^2", "identity", "P^2 + dP^2/nu (2 A'A + 1)",
            ok ? "matches" : "differs", ok);
    }

    // Product-moment identities.
    {
        WeylPoly x = WeylPoly::q_power(2) * WeylPoly::p_power(2);
        ParamPoly sym22 = quantum_expectation_sym(x + x.adjoint());
        ParamPoly expect22 = detail::monomial_qdp(BigRat(2), 2, 2, 0, 0, 0) +
                             detail::monomial_qdp(BigRat(2), 2, 0, 0, 2, 0) +
                             detail::monomial_qdp(BigRat(2), 0, 2, 2, 0, 0) +
                             detail::monomial_qdp(BigRat(2), 0, 0, 2, 2, 0) +
                             detail::monomial_qdp(BigRat(-4), 0, 0, 2, 2, -2);
        add("<q^2 p^2 + p^2 q^2>", "identity",
            "2Q^2P^2 + 2Q^2 dP^2 + 2P^2 dQ^2 + 2dQ^2 dP^2 - 4 dQ^2 dP^2 nu^-2",
            sym22 == expect22 ? "matches" : sym22.str(), sym22 == expect22);

        ParamPoly pqqp = quantum_expectation_sym(WeylPoly::from_word("pqqp"));
        ParamPoly qppq = quantum_expectation_sym(WeylPoly::from_word("qppq"));
        ParamPoly expect_sandwich = detail::monomial_qdp(BigRat(1), 2, 2, 0, 0, 0) +
                                    detail::monomial_qdp(BigRat(1), 2, 0, 0, 2, 0) +
                                    detail::monomial_qdp(BigRat(1), 0, 2, 2, 0, 0) +
                                    detail::monomial_qdp(BigRat(1), 0, 0, 2, 2, 0) +
                                    detail::monomial_qdp(BigRat(2), 0, 0, 2, 2, -2);
        add("<p q^2 p>", "identity",
            "Q^2P^2 + Q^2 dP^2 + P^2 dQ^2 + dQ^2 dP^2 + 2 dQ^2 dP^2 nu^-2",
            pqqp == expect_sandwich ? "matches" : pqqp.str(), pqqp == expect_sandwich);
        add("<q p^2 q>", "identity",
            "Q^2P^2 + Q^2 dP^2 + P^2 dQ^2 + dQ^2 dP^2 + 2 dQ^2 dP^2 nu^-2",
            qppq == expect_sandwich ? "matches" : qppq.str(), qppq == expect_sandwich);
    }

    // <q^6>: the q-dQ polynomial part, the source's printed nu-correction
    // terms, and the cross-engine consistency with the truncated state.
    {
        ParamPoly q6 = quantum_expectation_sym(WeylPoly::q_power(6));
        ParamPoly classical_part = detail::monomial_qdp(BigRat(1), 6, 0, 0, 0, 0) +
                                   detail::monomial_qdp(BigRat(15), 4, 0, 2, 0, 0) +
                                   detail::monomial_qdp(BigRat(45), 2, 0, 4, 0, 0) +
                                   detail::monomial_qdp(BigRat(15), 0, 0, 6, 0, 0);
        ParamPoly nu_part = q6 - q6.filter([](const ExpVec& e) {
            return e[static_cast<int>(Sym::NuHalf)] == 0;
        });
        add("<q^6> polynomial part", "identity",
            "Q^6 + 15Q^4 dQ^2 + 45Q^2 dQ^4 + 15 dQ^6",
            q6.filter([](const ExpVec& e) { return e[static_cast<int>(Sym::NuHalf)] == 0; }) ==
                    classical_part
                ? "matches"
                : q6.str(),
            q6.filter([](const ExpVec& e) { return e[static_cast<int>(Sym::NuHalf)] == 0; }) ==
                classical_part);

        ParamPoly printed_corrections = detail::monomial_qdp(BigRat(9), 0, 0, 6, 0, -1) +
                                        detail::monomial_qdp(BigRat(-3), 0, 0, 6, 0, -3);
        add("<q^6> printed nu-corrections", "identity", "9 dQ^6 nu^-1 - 3 dQ^6 nu^-3",
            nu_part.is_zero() ? "0 (derived correction vanishes)" : nu_part.str(),
            nu_part == printed_corrections,
            "diagonal weights + balanced-word reduction give zero correction for pure q powers; "
            "the printed terms fail at nu = 1 where the packet is an exact Gaussian");

        PacketParams pp(Dof{0.7, 0.0, 1.1, 0.9}, Constants{1.0, 2.0 * std::numbers::pi});
        QuantumMEPacket qp(pp);
        TruncatedState ts = build_truncated_state(qp, suggested_dim(qp.nu[0], 1e-12));
        CMatrix qm = position_matrix(pp, ts.dim);
        CMatrix q6m = qm * qm * qm;
        q6m = q6m * q6m;
        double t_q6 = ts.moment(q6m);
        double w_q6 = quantum_expectation(WeylPoly::q_power(6), pp);
        add("<q^6> engine vs truncated state", "numeric", csv_num(w_q6), csv_num(t_q6),
            std::abs(t_q6 - w_q6) <= 1e-8 * std::abs(w_q6));
    }

    // Entropy consistency.
    {
        double s3 = quantum_entropy(3.0);
        add("entropy at nu=3", "closed-form", csv_num(2.0 * std::log(2.0)), csv_num(s3),
            std::abs(s3 - 2.0 * std::log(2.0)) < 1e-12);
        add("entropy at nu=1", "closed-form", "0", csv_num(quantum_entropy(1.0)),
            quantum_entropy(1.0) == 0.0);
        double nu = 10.0;
        auto w = diagonal_weights(nu, 2000);
        double s_direct = 0.0;
        for (double r : w)
            if (r > 0) s_direct -= r * std::log(r);
        add("entropy vs weight sum at nu=10", "numeric", csv_num(quantum_entropy(nu)),
            csv_num(s_direct), std::abs(s_direct - quantum_entropy(nu)) < 1e-10);
    }

    // Quadratic coincidence: harmonic closed form vs taylor and matrix.
    {
        PacketParams pp(Dof{0.3, -0.2, 1.0, 1.1});
        PolynomialPotential pot{1.0, {0.0, 0.4, 1.3}};
        double period = 2.0 * std::numbers::pi / quadratic_solution(pot).omega;
        auto grid = uniform_grid(period, 8);
        auto taylor = evolve_taylor(pp, pot, grid, 10, 1e-10, EngineKind::Quantum);
        QuantumMEPacket qp(pp);
        auto matrix = matrix_oracle(qp, pot, grid, 160);
        double dev = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            PacketMoments m = quadratic_evolve(pp, pot, grid[i]);
            dev = std::max({dev, std::abs(taylor.points[i].Qbar - m.Qbar),
                            std::abs(taylor.points[i].dQbar - m.dQbar),
                            std::abs(matrix.points[i].Pbar - m.Pbar),
                            std::abs(matrix.points[i].dPbar - m.dPbar)});
        }
        add("quadratic coincidence (harmonic)", "numeric", "max deviation < 1e-6", csv_num(dev),
            dev < 1e-6);
    }

    // Ninth-derivative landmark: the q^6 coefficient for a pure cubic
    // potential.
    {
        const WeylPoly ham = hamiltonian_weyl(3);
        WeylPoly x = WeylPoly::p();
        for (int k = 0; k < 9; ++k) x = detail::quantum_derivative(x, ham);
        ParamPoly got;
        auto it = x.terms().find(QPWord{6, 0});
        if (it != x.terms().end()) got = it->second;
        ParamPoly expect = ParamPoly::symbol(Sym::V3, 5)
                               .shifted(Sym::Mu, -4)
                               .scaled(GaussRat(BigRat(-125, 4)));
        add("9th-derivative q^6 coefficient", "identity", "-125/4 V3^5 / mu^4", got.str(),
            got == expect);
    }

    // Chain identities.
    {
        ChainModel c{201, 1.0, 1.2, 0.7, 1.0};
        auto g = gibbs_from_lambda(c, 0.05);
        auto ls = length_statistics(c, g);
        add("chain mean length", "closed-form", csv_num(c.N() * c.xi), csv_num(ls.mean),
            ls.mean == c.N() * c.xi);
        add("chain odd-mode-only spread", "numeric", "even-mode coefficients < 1e-10",
            csv_num(ls.even_mode_coefficient_max), ls.even_mode_coefficient_max < 1e-10);
    }

    // Report rows: derived variance derivatives next to the printed forms.
    {
        ExpectationTables t = taylor_expectation_tables(4, 2, EngineKind::Quantum);
        // derived (d^2 dQ/dt^2)_0 as a symbolic polynomial, from the tables
        std::vector<ParamPoly> f(3);
        for (int k = 0; k <= 2; ++k) {
            ParamPoly cross;
            for (int j = 0; j <= k; ++j)
                cross += t.Q[j] * t.Q[k - j] *
                         ParamPoly(GaussRat(BigRat(binomial(k, j))));
            f[k] = t.Q2[k] - cross;
        }
        ParamPoly derived = f[2].shifted(Sym::DQ, -1).div(BigRat(2));  // f''/(2 dQ)

        // independently derived closed form:
        // (1/(mu dQ)) [ dP^2/mu - <q V' + V' q>/2 + Q <V'> ]
        WeylPoly vprime = potential_derivative_weyl(4);
        WeylPoly qv = WeylPoly::q() * vprime + vprime * WeylPoly::q();
        ParamPoly qv_mean = quantum_expectation_sym(qv).div(BigRat(2));
        ParamPoly v_mean = quantum_expectation_sym(vprime);
        ParamPoly closed = (ParamPoly::symbol(Sym::DP, 2).shifted(Sym::Mu, -1) - qv_mean +
                            ParamPoly::symbol(Sym::Q) * v_mean)
                               .shifted(Sym::Mu, -1)
                               .shifted(Sym::DQ, -1);
        add("variance acceleration (derived route)", "identity",
            "(1/(mu dQ))(dP^2/mu - <qV'+V'q>/2 + Q<V'>)",
            derived == closed ? "matches" : derived.str(), derived == closed);

        // printed form: (1/(mu dQ))(-<qV'> - <q><V'> + dP^2)
        ParamPoly printed = (ParamPoly::symbol(Sym::DP, 2) - qv_mean -
                             ParamPoly::symbol(Sym::Q) * v_mean)
                                .shifted(Sym::Mu, -1)
                                .shifted(Sym::DQ, -1);
        add("variance acceleration vs printed form", "report",
            "(1/(mu dQ))(-<qV'> - <q><V'> + dP^2)",
            derived == printed ? "matches printed form"
                               : "differs: printed form has dP^2 instead of dP^2/mu and "
                                 "-Q<V'> instead of +Q<V'>",
            derived == printed,
            "derived independently from the Heisenberg equations; reported, not gated");
    }

    return out;
}

inline std::string format_verify_report(const std::vector<VerifyCheck>& checks, bool* all_pass) {
    std::ostringstream os;
    bool ok = true;
    for (const auto& c : checks) {
        bool informational = c.kind == "report";
        const char* status = c.pass ? "PASS" : (informational ? "REPORT" : "FAIL");
        os << "[" << status << "] " << c.name << " (" << c.kind << ")\n"
           << "    expected: " << c.expected << "\n"
           << "    computed: " << c.computed << "\n";
        if (!c.note.empty()) os << "    note:     " << c.note << "\n";
        if (!c.pass && !informational) ok = false;
    }
    if (all_pass) *all_pass = ok;
    return os.str();
}

}  // namespace mepack
