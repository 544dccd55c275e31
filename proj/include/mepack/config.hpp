#pragma once

// Sectioned key-value run configuration. The grammar is deliberately
// small: `[section]` headers, `key = value` lines, `#` comments, blank
// lines. Every subcommand declares exactly the sections and keys it
// consumes; anything missing, unknown or malformed is reported with the
// offending field name.

#include "mepack/chain.hpp"
#include "mepack/core.hpp"
#include "mepack/dynamics.hpp"
#include "mepack/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mepack {

class ConfigFile {
  public:
    static ConfigFile parse_text(const std::string& text) {
        ConfigFile cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ParseError("line " + std::to_string(lineno) +
                                     ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty())
                    throw ParseError("line " + std::to_string(lineno) + ": empty section name");
                cfg.sections_[section];  // declare even if empty
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParseError("line " + std::to_string(lineno) +
                                 ": expected `key = value`, got \"" + line + "\"");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ParseError("line " + std::to_string(lineno) + ": empty key");
            if (section.empty())
                throw ParseError("line " + std::to_string(lineno) +
                                 ": key \"" + key + "\" outside any [section]");
            auto& sec = cfg.sections_[section];
            if (sec.count(key))
                throw ParseError("line " + std::to_string(lineno) + ": duplicate key \"" +
                                 section + "." + key + "\"");
            sec[key] = value;
        }
        return cfg;
    }

    static ConfigFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open config file \"" + path + "\"");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_text(ss.str());
    }

    bool has_section(const std::string& s) const { return sections_.count(s) != 0; }

    bool has_key(const std::string& s, const std::string& k) const {
        auto it = sections_.find(s);
        return it != sections_.end() && it->second.count(k) != 0;
    }

    std::string raw(const std::string& s, const std::string& k) const {
        auto it = sections_.find(s);
        if (it == sections_.end() || !it->second.count(k))
            throw ValidationError(s + "." + k, "required key is missing");
        return it->second.at(k);
    }

    double get_double(const std::string& s, const std::string& k) const {
        return parse_double(s + "." + k, raw(s, k));
    }

    long get_long(const std::string& s, const std::string& k) const {
        const std::string field = s + "." + k;
        const std::string v = raw(s, k);
        try {
            std::size_t pos = 0;
            long out = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return out;
        } catch (const std::exception&) {
            throw ParseError(field + ": \"" + v + "\" is not an integer");
        }
    }

    std::string get_string(const std::string& s, const std::string& k) const { return raw(s, k); }

    std::vector<double> get_double_list(const std::string& s, const std::string& k) const {
        const std::string field = s + "." + k;
        std::istringstream in(raw(s, k));
        std::vector<double> out;
        std::string tok;
        while (in >> tok) out.push_back(parse_double(field, tok));
        if (out.empty()) throw ParseError(field + ": expected at least one number");
        return out;
    }

    /// Enforce that the configuration consists of exactly the given
    /// sections and that each used section holds exactly the given keys.
    void require_exact(const std::map<std::string, std::set<std::string>>& layout) const {
        for (const auto& [sec, kv] : sections_) {
            auto it = layout.find(sec);
            if (it == layout.end())
                throw ValidationError(sec, "section is not used by this subcommand");
            for (const auto& [key, value] : kv)
                if (!it->second.count(key))
                    throw ValidationError(sec + "." + key, "unknown key for this subcommand");
        }
        for (const auto& [sec, keys] : layout) {
            if (!has_section(sec)) {
                if (sec == "constants") continue;  // defaults apply
                throw ValidationError(sec, "required section is missing");
            }
            for (const auto& key : keys) {
                bool optional_key =
                    (sec == "constants") ||
                    (sec == "chain" && (key == "E" || key == "lambda"));
                if (!optional_key && !has_key(sec, key))
                    throw ValidationError(sec + "." + key, "required key is missing");
            }
        }
    }

  private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    }

    static double parse_double(const std::string& field, const std::string& v) {
        try {
            std::size_t pos = 0;
            double out = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return out;
        } catch (const std::exception&) {
            throw ParseError(field + ": \"" + v + "\" is not a number");
        }
    }

    std::map<std::string, std::map<std::string, std::string>> sections_;
};

// --- Typed run configuration -------------------------------------------------

enum class EvolveMethod { Closed, Taylor, Mc, Matrix };

struct EvolveConfig {
    double t_max = 1.0;
    int n_out = 16;
    EvolveMethod method = EvolveMethod::Closed;
    int taylor_order = kDefaultTaylorOrder;
    double tol = 1e-8;
    long mc_samples = 100000;
    std::uint64_t seed = 1;
    int trunc_dim = 128;
};

struct ScanConfig {
    double s_min = 1.0;
    double s_max = 32.0;
    int n_points = 6;
    double t_probe = 0.1;
};

struct ChainConfig {
    ChainModel model;
    std::optional<double> energy;
    std::optional<double> lambda;
};

struct OutputConfig {
    std::string path;
    std::string format = "csv";
};

struct RunConfig {
    Constants constants;
    PacketParams packet;
    PolynomialPotential potential;
    EvolveConfig evolve;
    ScanConfig scan;
    ChainConfig chain;
    OutputConfig output;
};

namespace detail {

inline Constants load_constants(const ConfigFile& cfg) {
    Constants c;
    if (cfg.has_section("constants")) {
        if (cfg.has_key("constants", "hbar")) c.hbar = cfg.get_double("constants", "hbar");
        c.v = 2.0 * std::numbers::pi * c.hbar;
        if (cfg.has_key("constants", "v")) c.v = cfg.get_double("constants", "v");
    }
    c.validate();
    return c;
}

inline PacketParams load_packet(const ConfigFile& cfg, const Constants& constants) {
    auto q = cfg.get_double_list("packet", "Q");
    auto p = cfg.get_double_list("packet", "P");
    auto dq = cfg.get_double_list("packet", "dQ");
    auto dp = cfg.get_double_list("packet", "dP");
    if (q.size() != p.size() || q.size() != dq.size() || q.size() != dp.size())
        throw ValidationError("packet", "Q, P, dQ, dP lists must have equal lengths");
    PacketParams params;
    params.constants = constants;
    for (std::size_t k = 0; k < q.size(); ++k)
        params.dofs.push_back({q[k], p[k], dq[k], dp[k]});
    params.validate();
    return params;
}

inline PolynomialPotential load_potential(const ConfigFile& cfg) {
    PolynomialPotential pot;
    pot.mu = cfg.get_double("potential", "mu");
    pot.coeffs = cfg.get_double_list("potential", "coeffs");
    pot.validate();
    return pot;
}

inline OutputConfig load_output(const ConfigFile& cfg) {
    OutputConfig out;
    out.path = cfg.get_string("output", "path");
    out.format = cfg.has_key("output", "format") ? cfg.get_string("output", "format") : "csv";
    if (out.format != "csv")
        throw ValidationError("output.format", "only \"csv\" is supported");
    if (out.path.empty()) throw ValidationError("output.path", "must not be empty");
    return out;
}

inline const std::set<std::string> kConstantsKeys{"hbar", "v"};
inline const std::set<std::string> kPacketKeys{"Q", "P", "dQ", "dP"};
inline const std::set<std::string> kPotentialKeys{"mu", "coeffs"};
inline const std::set<std::string> kOutputKeys{"path", "format"};

}  // namespace detail

inline RunConfig load_packet_config(const ConfigFile& cfg) {
    cfg.require_exact({{"constants", detail::kConstantsKeys}, {"packet", detail::kPacketKeys}});
    RunConfig rc;
    rc.constants = detail::load_constants(cfg);
    rc.packet = detail::load_packet(cfg, rc.constants);
    return rc;
}

inline RunConfig load_evolve_config(const ConfigFile& cfg) {
    std::set<std::string> evolve_keys{"t_max", "n_out", "method"};
    const std::string method =
        cfg.has_key("evolve", "method") ? cfg.get_string("evolve", "method") : "";
    if (method == "taylor") {
        evolve_keys.insert("taylor_order");
        evolve_keys.insert("tol");
    } else if (method == "mc") {
        evolve_keys.insert("mc_samples");
        evolve_keys.insert("seed");
    } else if (method == "matrix") {
        evolve_keys.insert("trunc_dim");
    } else if (method != "closed") {
        throw ValidationError("evolve.method",
                              "must be one of closed, taylor, mc, matrix (got \"" + method +
                                  "\")");
    }
    cfg.require_exact({{"constants", detail::kConstantsKeys},
                       {"packet", detail::kPacketKeys},
                       {"potential", detail::kPotentialKeys},
                       {"evolve", evolve_keys},
                       {"output", detail::kOutputKeys}});
    RunConfig rc;
    rc.constants = detail::load_constants(cfg);
    rc.packet = detail::load_packet(cfg, rc.constants);
    rc.potential = detail::load_potential(cfg);
    rc.output = detail::load_output(cfg);

    EvolveConfig& e = rc.evolve;
    e.t_max = cfg.get_double("evolve", "t_max");
    if (!(e.t_max > 0.0)) throw ValidationError("evolve.t_max", "must be > 0");
    e.n_out = static_cast<int>(cfg.get_long("evolve", "n_out"));
    if (e.n_out < 1) throw ValidationError("evolve.n_out", "must be >= 1");
    if (method == "closed") e.method = EvolveMethod::Closed;
    if (method == "taylor") {
        e.method = EvolveMethod::Taylor;
        e.taylor_order = static_cast<int>(cfg.get_long("evolve", "taylor_order"));
        if (e.taylor_order < 2 || e.taylor_order > kExpectationDegreeCap)
            throw ValidationError("evolve.taylor_order",
                                  "must lie in [2, " + std::to_string(kExpectationDegreeCap) +
                                      "]");
        e.tol = cfg.get_double("evolve", "tol");
        if (!(e.tol > 0.0)) throw ValidationError("evolve.tol", "must be > 0");
    }
    if (method == "mc") {
        e.method = EvolveMethod::Mc;
        e.mc_samples = cfg.get_long("evolve", "mc_samples");
        if (e.mc_samples < 1000) throw ValidationError("evolve.mc_samples", "must be >= 1000");
        long seed = cfg.get_long("evolve", "seed");
        if (seed < 0) throw ValidationError("evolve.seed", "must be >= 0");
        e.seed = static_cast<std::uint64_t>(seed);
    }
    if (method == "matrix") {
        e.method = EvolveMethod::Matrix;
        e.trunc_dim = static_cast<int>(cfg.get_long("evolve", "trunc_dim"));
        if (e.trunc_dim < 2) throw ValidationError("evolve.trunc_dim", "must be >= 2");
    }
    return rc;
}

inline RunConfig load_scan_config(const ConfigFile& cfg) {
    cfg.require_exact({{"constants", detail::kConstantsKeys},
                       {"packet", detail::kPacketKeys},
                       {"potential", detail::kPotentialKeys},
                       {"scan", {"s_min", "s_max", "n_points", "t_probe"}},
                       {"output", detail::kOutputKeys}});
    RunConfig rc;
    rc.constants = detail::load_constants(cfg);
    rc.packet = detail::load_packet(cfg, rc.constants);
    rc.potential = detail::load_potential(cfg);
    rc.output = detail::load_output(cfg);

    ScanConfig& s = rc.scan;
    s.s_min = cfg.get_double("scan", "s_min");
    s.s_max = cfg.get_double("scan", "s_max");
    s.n_points = static_cast<int>(cfg.get_long("scan", "n_points"));
    s.t_probe = cfg.get_double("scan", "t_probe");
    if (!(s.s_min > 0.0)) throw ValidationError("scan.s_min", "must be > 0");
    if (!(s.s_max > s.s_min)) throw ValidationError("scan.s_max", "must exceed s_min");
    if (s.n_points < 2) throw ValidationError("scan.n_points", "must be >= 2");
    if (!(s.t_probe > 0.0)) throw ValidationError("scan.t_probe", "must be > 0");

    // Validity gate: nu(s_min) must stay above the uncertainty bound.
    PacketParams probe = rc.packet;
    probe.require_single_dof("scan");
    probe.dofs[0].dQ *= s.s_min;
    probe.dofs[0].dP *= s.s_min;
    if (probe.nu() <= 1.0)
        throw ValidationError("scan.s_min",
                              "scaled packet violates nu > 1 at the smallest scale");
    return rc;
}

inline RunConfig load_chain_config(const ConfigFile& cfg) {
    cfg.require_exact({{"constants", detail::kConstantsKeys},
                       {"chain", {"Nparticles", "mu", "kappa", "xi", "E", "lambda"}},
                       {"output", detail::kOutputKeys}});
    RunConfig rc;
    rc.constants = detail::load_constants(cfg);
    rc.output = detail::load_output(cfg);

    ChainConfig& ch = rc.chain;
    ch.model.Nparticles = static_cast<int>(cfg.get_long("chain", "Nparticles"));
    ch.model.mu = cfg.get_double("chain", "mu");
    ch.model.kappa = cfg.get_double("chain", "kappa");
    ch.model.xi = cfg.get_double("chain", "xi");
    ch.model.hbar = rc.constants.hbar;
    ch.model.validate();
    bool has_e = cfg.has_key("chain", "E");
    bool has_l = cfg.has_key("chain", "lambda");
    if (has_e == has_l)
        throw ValidationError("chain", "exactly one of E and lambda must be given");
    if (has_e) ch.energy = cfg.get_double("chain", "E");
    if (has_l) {
        ch.lambda = cfg.get_double("chain", "lambda");
        if (!(*ch.lambda > 0.0)) throw ValidationError("chain.lambda", "must be > 0");
    }
    return rc;
}

}  // namespace mepack
