#pragma once

// Averaged small-signal model of the bidirectional boost source converter:
// steady-state operating point and the four plant transfer functions
//   di_f  = G_di dd + G_oi di_o
//   dv_dc = G_dv dd - Z_o  di_o
// All four share the characteristic polynomial D^2 (1 + s C r) + L C s^2.

#include "dcform/rational.hpp"

#include <stdexcept>

namespace dcform {

struct BoostParams {
    double L_f;   // filter inductance [H]
    double C_dc;  // output capacitance [F]
    double r_dc;  // capacitor series resistance [Ohm]
    double f_s;   // switching frequency [Hz]
    double T_d;   // equivalent control delay [s]

    void validate() const {
        if (!(L_f > 0.0)) throw std::invalid_argument("BoostParams: L_f must be > 0");
        if (!(C_dc > 0.0)) throw std::invalid_argument("BoostParams: C_dc must be > 0");
        if (!(r_dc >= 0.0)) throw std::invalid_argument("BoostParams: r_dc must be >= 0");
        if (!(f_s > 0.0)) throw std::invalid_argument("BoostParams: f_s must be > 0");
        if (!(T_d > 0.0)) throw std::invalid_argument("BoostParams: T_d must be > 0");
    }
};

struct OperatingPoint {
    double V_in;  // input voltage [V]
    double V_o;   // output voltage [V]
    double I_o;   // output current [A], either sign
    double D;     // duty cycle (upper switch on-time ratio)
    double I_f;   // inductor current [A]
};

/// Lossless averaged boost steady state: D = V_in/V_o, I_f = I_o/D.
inline OperatingPoint operating_point(double V_in, double V_o, double I_o) {
    if (!(V_in > 0.0)) throw std::invalid_argument("operating_point: V_in must be > 0");
    if (!(V_in <= V_o)) throw std::invalid_argument("operating_point: boost requires V_in <= V_o");
    if (!std::isfinite(I_o)) throw std::invalid_argument("operating_point: I_o must be finite");
    OperatingPoint op;
    op.V_in = V_in;
    op.V_o = V_o;
    op.I_o = I_o;
    op.D = V_in / V_o;
    op.I_f = I_o / op.D;
    return op;
}

/// Output capacitor branch admittance Y_dc = s C / (1 + s C r).
inline RationalTF y_dc(const BoostParams& p) {
    p.validate();
    return RationalTF(Polynomial{0.0, p.C_dc}, Polynomial{1.0, p.C_dc * p.r_dc});
}

struct PlantTFs {
    RationalTF G_di;  // dd -> di_f [A]
    RationalTF G_oi;  // di_o -> di_f [A/A]
    RationalTF G_dv;  // dd -> dv_dc [V]
    RationalTF Z_o;   // open-loop output impedance [Ohm]
};

/// The four boost transfer functions, constructed over the shared
/// characteristic polynomial so the denominators are bit-identical.
inline PlantTFs boost_tfs(const BoostParams& p, const OperatingPoint& op) {
    p.validate();
    if (!(op.D > 0.0)) throw std::invalid_argument("boost_tfs: D must be > 0");
    const double L = p.L_f, C = p.C_dc, r = p.r_dc;
    const Polynomial q{1.0, C * r};  // 1 + s C r
    const Polynomial den = (op.D * op.D) * q + Polynomial::monomial(L * C, 2);
    PlantTFs tf;
    tf.G_di = RationalTF(-(op.I_o * q + Polynomial{0.0, C * op.V_o}), den);
    tf.G_oi = RationalTF(op.D * q, den);
    tf.G_dv = RationalTF(-(Polynomial{op.V_in, -L * op.I_f} * q), den);
    tf.Z_o = RationalTF(Polynomial::monomial(L, 1) * q, den);
    return tf;
}

}  // namespace dcform
