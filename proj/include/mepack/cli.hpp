#pragma once

// Subcommand implementations behind the command-line front end. Each
// command returns a process exit code: 0 success, 1 validation or
// infeasibility, 2 numerical failure, 3 configuration parse failure.

#include "mepack/chain.hpp"
#include "mepack/config.hpp"
#include "mepack/csv.hpp"
#include "mepack/dynamics.hpp"
#include "mepack/qpacket.hpp"
#include "mepack/verify.hpp"

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace mepack {

struct CliOptions {
    std::string config_path;
    std::optional<std::string> out_override;
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
};

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitParse = 3;

namespace detail {

inline int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace detail

/// Packet inspection: multipliers, entropies, nu, leading diagonal
/// weights and constraint residuals of the truncated realization.
inline int cmd_packet(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        RunConfig rc = load_packet_config(ConfigFile::parse_file(opt.config_path));
        const PacketParams& params = rc.packet;

        ClassicalMultipliers cm = classical_multipliers(params);
        out << "packet: " << params.size() << " degree(s) of freedom, hbar = "
            << csv_num(params.constants.hbar) << ", v = " << csv_num(params.constants.v) << "\n";
        out << "classical entropy: " << csv_num(classical_entropy(params)) << "\n";

        for (std::size_t k = 0; k < params.size(); ++k) {
            const Dof& d = params.dofs[k];
            double nu = params.nu(k);
            if (nu < 1.0)
                throw ValidationError("packet.dof[" + std::to_string(k) + "]",
                                      "uncertainty bound violated: nu = " + std::to_string(nu) +
                                          " < 1");
            out << "dof " << k << ": Q = " << csv_num(d.Q) << ", P = " << csv_num(d.P)
                << ", dQ = " << csv_num(d.dQ) << ", dP = " << csv_num(d.dP)
                << ", nu = " << csv_num(nu) << "\n";
            const MultiplierSet& m = cm.per_dof[k];
            out << "  classical multipliers: l1 = " << csv_num(m.l1) << ", l2 = " << csv_num(m.l2)
                << ", l3 = " << csv_num(m.l3) << ", l4 = " << csv_num(m.l4) << "\n";
            if (nu > 1.0) {
                PacketParams single(d, params.constants);
                QuantumMultipliers qm = quantum_multipliers(single);
                const MultiplierSet& q = qm.per_dof[0];
                out << "  quantum multipliers:   l1 = " << csv_num(q.l1)
                    << ", l2 = " << csv_num(q.l2) << ", l3 = " << csv_num(q.l3)
                    << ", l4 = " << csv_num(q.l4) << "\n";
                out << "  partition function Z = " << csv_num(quantum_partition(qm, single.constants.hbar))
                    << "\n";
            } else {
                out << "  quantum multipliers:   pure-state boundary (nu = 1), diverge\n";
            }
            out << "  quantum entropy: " << csv_num(quantum_entropy(nu)) << "\n";
            auto w = diagonal_weights(nu, 5);
            out << "  leading weights:";
            for (double r : w) out << " " << csv_num(r);
            out << "\n";
            PacketParams single(d, params.constants);
            QuantumMEPacket qp(single);
            TruncatedState st = build_truncated_state(qp, suggested_dim(nu));
            auto res = st.constraint_residuals();
            out << "  constraint residuals (dim " << st.dim << "): q " << csv_num(res.q)
                << ", p " << csv_num(res.p) << ", q2 " << csv_num(res.q2) << ", p2 "
                << csv_num(res.p2) << "\n";
        }
        return kExitOk;
    });
}

inline int cmd_evolve(const CliOptions& opt, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        RunConfig rc = load_evolve_config(ConfigFile::parse_file(opt.config_path));
        if (opt.seed_override) rc.evolve.seed = *opt.seed_override;
        if (opt.out_override) rc.output.path = *opt.out_override;
        rc.packet.require_single_dof("evolve");

        std::vector<double> grid = uniform_grid(rc.evolve.t_max, rc.evolve.n_out);
        TrajectoryRecord rec;
        switch (rc.evolve.method) {
            case EvolveMethod::Closed:
                rec = evolve_closed(rc.packet, rc.potential, grid);
                break;
            case EvolveMethod::Taylor:
                rec = evolve_taylor(rc.packet, rc.potential, grid, rc.evolve.taylor_order,
                                    rc.evolve.tol, EngineKind::Classical);
                break;
            case EvolveMethod::Mc: {
                McOptions mo;
                mo.samples = rc.evolve.mc_samples;
                mo.seed = rc.evolve.seed;
                rec = mc_oracle(rc.packet, rc.potential, grid, mo);
                break;
            }
            case EvolveMethod::Matrix: {
                QuantumMEPacket qp(rc.packet);
                rec = matrix_oracle(qp, rc.potential, grid, rc.evolve.trunc_dim);
                break;
            }
        }
        write_file_atomic(rc.output.path, trajectory_csv(rec));
        if (!opt.quiet) err << rec.diagnostics << "\n";
        return kExitOk;
    });
}

inline int cmd_scan(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        RunConfig rc = load_scan_config(ConfigFile::parse_file(opt.config_path));
        if (opt.out_override) rc.output.path = *opt.out_override;
        rc.packet.require_single_dof("scan");

        std::vector<double> scales(rc.scan.n_points);
        const double ratio = rc.scan.s_max / rc.scan.s_min;
        for (int i = 0; i < rc.scan.n_points; ++i)
            scales[i] = rc.scan.s_min *
                        std::pow(ratio, static_cast<double>(i) / (rc.scan.n_points - 1));

        ScanResult scan =
            classical_limit_scan(rc.packet, rc.potential, rc.scan.t_probe, scales);
        write_file_atomic(rc.output.path, scan_csv(scan));
        out << "scan: leading deviation decay exponent " << csv_num(scan.exponent_leading)
            << " (dQ channel " << csv_num(scan.exponent_dQ) << ", dP channel "
            << csv_num(scan.exponent_dP) << ") over s in [" << csv_num(rc.scan.s_min) << ", "
            << csv_num(rc.scan.s_max) << "]\n";
        if (!opt.quiet)
            err << "scan: " << scan.points.size() << " points, t_probe " << csv_num(scan.t_probe)
                << ", series order " << scan.order << "\n";
        return kExitOk;
    });
}

inline int cmd_chain(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        RunConfig rc = load_chain_config(ConfigFile::parse_file(opt.config_path));
        if (opt.out_override) rc.output.path = *opt.out_override;
        const ChainModel& model = rc.chain.model;

        PhononGibbs gibbs = rc.chain.lambda ? gibbs_from_lambda(model, *rc.chain.lambda)
                                            : gibbs_from_energy(model, *rc.chain.energy);
        LengthStatistics ls = length_statistics(model, gibbs);
        write_file_atomic(rc.output.path, chain_csv(model, gibbs));

        out << "chain: N+1 = " << model.Nparticles << " particles, kappa = "
            << csv_num(model.kappa) << ", xi = " << csv_num(model.xi) << "\n"
            << "  lambda    = " << csv_num(gibbs.lambda) << "\n"
            << "  E         = " << csv_num(gibbs.E) << " (zero point "
            << csv_num(gibbs.zero_point) << ")\n"
            << "  dE/E      = " << csv_num(std::sqrt(gibbs.energy_variance) / gibbs.E) << "\n"
            << "  L_mean    = " << csv_num(ls.mean) << "\n"
            << "  dL_rel    = " << csv_num(ls.rel_spread) << " (high-T asymptotic "
            << csv_num(ls.asymptotic_rel_spread) << ")\n"
            << "  even-mode length coefficients max = " << csv_num(ls.even_mode_coefficient_max)
            << "\n"
            << "  second-to-last-particle variant: mean " << csv_num(ls.alt_mean) << ", spread "
            << csv_num(std::sqrt(ls.alt_variance)) << "\n";
        if (model.Nparticles <= kChainDenseBound) {
            ModeBasis mb = mode_basis(model);
            out << "  residuals: diagonalization " << csv_num(mb.diagonalization_residual)
                << ", orthogonality " << csv_num(mb.orthogonality_residual)
                << ", numeric spectrum agreement " << csv_num(mb.spectrum_agreement) << "\n"
                << "  printed-formula deviation: spectrum " << csv_num(mb.printed_spectrum_deviation)
                << ", orthogonality " << csv_num(mb.printed_orthogonality_residual) << "\n";
        }
        if (!opt.quiet)
            err << "chain: wrote mode table (" << model.N() << " internal modes) to "
                << rc.output.path << "\n";
        return kExitOk;
    });
}

inline int cmd_verify(std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        bool all_pass = false;
        auto checks = run_verify_checks();
        out << format_verify_report(checks, &all_pass);
        int gated = 0, passed = 0;
        for (const auto& c : checks)
            if (c.kind != "report") {
                ++gated;
                if (c.pass) ++passed;
            }
        out << passed << "/" << gated << " gated checks passed\n";
        return all_pass ? kExitOk : kExitValidation;
    });
}

}  // namespace mepack
