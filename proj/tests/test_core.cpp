#include "mepack/core.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace mepack;
using Catch::Approx;

TEST_CASE("classical multipliers") {
    SECTION("centered symmetric case") {
        auto m = classical_multipliers(PacketParams(Dof{0, 0, 1, 1})).per_dof[0];
        CHECK(m.l1 == 0.0);
        CHECK(m.l2 == 0.0);
        CHECK(m.l3 == 0.5);
        CHECK(m.l4 == 0.5);
    }
    SECTION("shifted mean") {
        auto m = classical_multipliers(PacketParams(Dof{2, 0, 1, 1})).per_dof[0];
        CHECK(m.l1 == -2.0);
        CHECK(m.l3 == 0.5);
    }
    SECTION("generic values") {
        auto m = classical_multipliers(PacketParams(Dof{1, -3, 0.5, 2})).per_dof[0];
        CHECK(m.l1 == Approx(-4.0).margin(1e-14));
        CHECK(m.l2 == Approx(0.75).margin(1e-14));
        CHECK(m.l3 == Approx(2.0).margin(1e-14));
        CHECK(m.l4 == Approx(0.125).margin(1e-14));
    }
    SECTION("rejects degenerate spreads") {
        CHECK_THROWS_AS(classical_multipliers(PacketParams(Dof{0, 0, 0.0, 1})), ValidationError);
        CHECK_THROWS_AS(classical_multipliers(PacketParams(Dof{0, 0, 1, -2})), ValidationError);
    }
}

TEST_CASE("classical density") {
    Constants c{1.0, 2.0 * std::numbers::pi};
    ClassicalMEPacket packet(PacketParams(Dof{0, 0, 1, 1}, c));
    CHECK(classical_density(packet, {0.0}, {0.0}) == Approx(1.0).margin(1e-15));
    CHECK(classical_density(packet, {1.0}, {0.0}) == Approx(std::exp(-0.5)).margin(1e-15));
    CHECK_THROWS_AS(classical_density(packet, {0.0, 1.0}, {0.0}), ValidationError);

    SECTION("normalization and constraint recovery by adaptive quadrature") {
        std::mt19937_64 rng(2026);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        std::uniform_real_distribution<double> s(0.3, 2.5);
        for (int trial = 0; trial < 20; ++trial) {
            Dof d{u(rng), u(rng), s(rng), s(rng)};
            Constants cc{1.0, 0.5 + 6.0 * (trial % 5)};
            ClassicalMEPacket pk(PacketParams(d, cc));
            auto q_marginal = [&](const std::function<double(double, double)>& f) {
                auto outer = [&](double q) {
                    auto inner = [&](double p) { return f(q, p) * classical_density(pk, {q}, {p}); };
                    return oracles::adaptive_simpson(inner, d.P - 10 * d.dP, d.P + 10 * d.dP,
                                                     1e-12);
                };
                return oracles::adaptive_simpson(outer, d.Q - 10 * d.dQ, d.Q + 10 * d.dQ, 1e-12) /
                       cc.v;
            };
            CHECK(q_marginal([](double, double) { return 1.0; }) == Approx(1.0).margin(1e-8));
            CHECK(q_marginal([](double q, double) { return q; }) == Approx(d.Q).margin(1e-8));
            CHECK(q_marginal([](double, double p) { return p; }) == Approx(d.P).margin(1e-8));
            CHECK(q_marginal([](double q, double) { return q * q; }) ==
                  Approx(d.Q * d.Q + d.dQ * d.dQ).margin(1e-8));
            CHECK(q_marginal([](double, double p) { return p * p; }) ==
                  Approx(d.P * d.P + d.dP * d.dP).margin(1e-8));
        }
    }
}

TEST_CASE("classical entropy") {
    Constants c{1.0, 2.0 * std::numbers::pi};
    SECTION("unit log argument") {
        // dQ dP = v / (2 pi) makes the logarithm vanish
        PacketParams p(Dof{0, 0, 1.0, 1.0}, c);
        CHECK(classical_entropy(p) == Approx(1.0).margin(1e-14));
    }
    SECTION("minimum uncertainty with v = h") {
        PacketParams p(Dof{0, 0, 1.0, 0.5}, c);  // dQ dP = hbar / 2
        CHECK(classical_entropy(p) == Approx(1.0 - std::log(2.0)).margin(1e-12));
    }
    SECTION("additivity over dofs") {
        PacketParams one(Dof{0.3, 0.1, 1.2, 0.8}, c);
        PacketParams two({Dof{0.3, 0.1, 1.2, 0.8}, Dof{0.3, 0.1, 1.2, 0.8}}, c);
        CHECK(classical_entropy(two) == Approx(2.0 * classical_entropy(one)).margin(1e-12));
    }
    SECTION("moments do not depend on v") {
        PacketParams a(Dof{0.4, -0.7, 1.1, 0.6}, Constants{1.0, 1.0});
        PacketParams b(Dof{0.4, -0.7, 1.1, 0.6}, Constants{1.0, 17.0});
        for (int k = 0; k <= 4; ++k)
            for (int l = 0; l + k <= 4; ++l)
                CHECK(classical_moment(a, k, l) == classical_moment(b, k, l));
        CHECK(classical_entropy(a) != classical_entropy(b));
    }
}

TEST_CASE("classical moments") {
    PacketParams p(Dof{0.8, -1.1, 0.9, 1.4});
    const Dof& d = p.dofs[0];

    SECTION("named low-order values") {
        CHECK(classical_moment(p, 2, 0) == Approx(d.Q * d.Q + d.dQ * d.dQ).margin(1e-14));
        CHECK(classical_moment(p, 1, 1) == Approx(d.Q * d.P).margin(1e-14));
        double q4 = std::pow(d.Q, 4) + 6 * d.Q * d.Q * d.dQ * d.dQ + 3 * std::pow(d.dQ, 4);
        CHECK(classical_moment(p, 4, 0) == Approx(q4).epsilon(1e-13));
    }

    SECTION("quadrature oracle") {
        oracles::GaussHermite gh(24);
        for (int k = 0; k <= 8; ++k) {
            double via_gh = gh.gaussian_mean([k](double x) { return std::pow(x, k); }, d.Q, d.dQ);
            CHECK(classical_moment(p, k, 0) == Approx(via_gh).epsilon(1e-10));
        }
    }

    SECTION("partition-function route agrees") {
        for (int k = 0; k <= 6; ++k)
            for (int l = 0; l + k <= 6; ++l)
                CHECK(classical_moment(p, k, l) ==
                      Approx(classical_moment_partition(p, k, l)).epsilon(1e-11));
    }

    SECTION("factorization is exact") {
        for (int k = 0; k <= 5; ++k)
            for (int l = 0; l <= 5; ++l)
                CHECK(classical_moment(p, k, l) ==
                      classical_moment(p, k, 0) * classical_moment(p, 0, l));
    }
}

TEST_CASE("multiplier round trip through the convex solve") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> s(0.4, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        Dof d{u(rng), u(rng), s(rng), s(rng)};
        auto direct = classical_multipliers(PacketParams(d)).per_dof[0];
        auto solved = oracles::solve_classical_multipliers(d, 2 * std::numbers::pi);
        CHECK(solved.l1 == Approx(direct.l1).margin(1e-6));
        CHECK(solved.l2 == Approx(direct.l2).margin(1e-6));
        CHECK(solved.l3 == Approx(direct.l3).margin(1e-6));
        CHECK(solved.l4 == Approx(direct.l4).margin(1e-6));
    }
}

TEST_CASE("highest-order coefficient recursion") {
    CHECK(highest_order_coefficients(1).A == 1);
    CHECK(highest_order_coefficients(2).A == 3);
    CHECK(highest_order_coefficients(3).A == 15);
    CHECK_THROWS_AS(highest_order_coefficients(0), ValidationError);

    SECTION("A_m equals the double factorial and the quadrature moment") {
        oracles::GaussHermite gh(40);
        for (int m = 1; m <= 8; ++m) {
            auto hoc = highest_order_coefficients(m);
            CHECK(hoc.A == double_factorial_odd(m));
            CHECK(hoc.B == hoc.A);
            double central = gh.gaussian_mean(
                [m](double x) { return std::pow(x, 2 * m); }, 0.0, 1.0);
            CHECK(static_cast<double>(hoc.A) == Approx(central).epsilon(1e-6));
        }
    }

    SECTION("tables satisfy the defining recursions") {
        auto hoc = highest_order_coefficients(6);
        for (int m = 2; m <= 6; ++m) {
            const auto& a_prev = hoc.a_table[m - 1];
            const auto& b = hoc.b_table[m];
            const auto& a = hoc.a_table[m];
            for (int k = 1; k <= m - 1; ++k)
                CHECK(b[k - 1] == a_prev[k - 1] + 2 * k * a_prev[k]);
            CHECK(b[m - 1] == a_prev[m - 1]);
            CHECK(a[0] == b[0]);
            for (int k = 2; k <= m; ++k) CHECK(a[k - 1] == b[k - 2] + (2 * k - 1) * b[k - 1]);
            CHECK(a[m] == b[m - 1]);
        }
    }
}
