#pragma once

// CSV emission: '.' decimal point, comma separator, header row, 17
// significant digits, atomic write through a temp file in the target
// directory.

#include "mepack/chain.hpp"
#include "mepack/dynamics.hpp"
#include "mepack/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace mepack {

inline std::string csv_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string trajectory_csv(const TrajectoryRecord& rec) {
    std::ostringstream os;
    os << "t,Qbar,Pbar,dQbar,dPbar,method,err_Q,err_P,err_dQ,err_dP\n";
    for (const auto& p : rec.points) {
        os << csv_num(p.t) << ',' << csv_num(p.Qbar) << ',' << csv_num(p.Pbar) << ','
           << csv_num(p.dQbar) << ',' << csv_num(p.dPbar) << ',' << rec.method << ','
           << csv_num(p.err_Q) << ',' << csv_num(p.err_P) << ',' << csv_num(p.err_dQ) << ','
           << csv_num(p.err_dP) << '\n';
    }
    return os.str();
}

inline std::string scan_csv(const ScanResult& scan) {
    std::ostringstream os;
    os << "s,nu,dev_Q,dev_P,dev_dQ,dev_dP,method,err_Q,err_P,err_dQ,err_dP\n";
    for (const auto& p : scan.points) {
        os << csv_num(p.s) << ',' << csv_num(p.nu) << ',' << csv_num(p.dev_Q) << ','
           << csv_num(p.dev_P) << ',' << csv_num(p.dev_dQ) << ',' << csv_num(p.dev_dP)
           << ",scan," << csv_num(p.err_Q) << ',' << csv_num(p.err_P) << ','
           << csv_num(p.err_dQ) << ',' << csv_num(p.err_dP) << '\n';
    }
    return os.str();
}

inline std::string chain_csv(const ChainModel& model, const PhononGibbs& gibbs) {
    std::ostringstream os;
    os << "m,omega_m,nbar_m\n";
    for (int m = 1; m <= model.N(); ++m)
        os << m << ',' << csv_num(chain_omega(model, m)) << ',' << csv_num(gibbs.nbar[m])
           << '\n';
    return os.str();
}

/// Writes the full content through a temp file in the same directory and
/// renames it into place.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericalError("cannot open output file \"" + tmp + "\"");
        out << content;
        if (!out.good()) throw NumericalError("failed writing \"" + tmp + "\"");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw NumericalError("failed to move \"" + tmp + "\" to \"" + path + "\"");
}

}  // namespace mepack
