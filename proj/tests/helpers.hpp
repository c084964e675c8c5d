#pragma once

// Shared fixtures for the test suite, including an oracle that evaluates the
// closed-loop output impedance by direct complex arithmetic (no Polynomial /
// RationalTF machinery), so the algebraic composition is checked end to end
// against an independent route.

#include "dcform/analysis.hpp"
#include "dcform/control.hpp"
#include "dcform/plant.hpp"

#include <complex>
#include <numbers>
#include <random>

namespace testutil {

using dcform::Complex;

inline dcform::BoostParams ref_params(double r_dc = 0.01) {
    return dcform::BoostParams{1e-3, 1e-3, r_dc, 20e3, 7.5e-5};
}

inline dcform::OperatingPoint ref_op() { return dcform::operating_point(350.0, 700.0, 10.0); }

struct RawOracle {
    dcform::BoostParams p;
    dcform::OperatingPoint op;
    double K_d = 1.0;
    bool feedforward = true;

    Complex R_i(Complex s) const {
        const double wbi = 0.07 * 2.0 * std::numbers::pi * p.f_s;
        const double kpi = wbi * p.L_f;
        const double Tii = p.C_dc * p.L_f / p.T_d;
        return kpi * (1.0 + s * Tii) / (s * Tii);
    }
    Complex R_v(Complex s) const {
        const double wbi = 0.07 * 2.0 * std::numbers::pi * p.f_s;
        const double kpv = 0.1 * wbi * p.C_dc;
        const double Tiv = 10.0 / wbi;
        return kpv * (1.0 + s * Tiv) / (s * Tiv);
    }
    Complex G_lpf(Complex s) const {
        const double wf = 0.5 / (p.C_dc * K_d);
        return 1.0 / (1.0 + s / wf);
    }
    Complex Z_d(Complex s) const {
        const double wc = 1.0 / (p.C_dc * K_d);
        return K_d * (1.0 + s / wc) / (1.0 + s / (2.0 * wc));
    }
    Complex R_dcm(Complex s) const { return 1.0 / (s * 1e-3 + 1.0); }

    Complex zout(dcform::ControllerKind kind, double omega) const {
        const Complex s(0.0, omega);
        const Complex Y = s * p.C_dc / (1.0 + s * p.C_dc * p.r_dc);
        const Complex dn = 1.0 + p.L_f * Y * s / (op.D * op.D);
        const Complex Gdi = -(op.I_o / (op.D * op.D)) * (1.0 + Y * op.V_o / op.I_o) / dn;
        const Complex Goi = (1.0 / op.D) / dn;
        const Complex Gdv = -(op.V_in / (op.D * op.D)) * (1.0 - (p.L_f * op.I_f / op.V_in) * s) / dn;
        const Complex Zo = (1.0 / (op.D * op.D)) * p.L_f * s / dn;
        Complex Fv, Fif(0.0), Fio(0.0);
        switch (kind) {
            case dcform::ControllerKind::IVDroop: Fv = -G_lpf(s) / K_d; break;
            case dcform::ControllerKind::VIDroopIf:
                Fv = -R_v(s);
                Fif = -R_v(s) * K_d;
                break;
            case dcform::ControllerKind::VIDroopIo:
                Fv = -R_v(s);
                Fio = -R_v(s) * K_d;
                break;
            case dcform::ControllerKind::VIDroopZd:
                Fv = -R_v(s);
                Fio = -R_v(s) * Z_d(s);
                break;
            case dcform::ControllerKind::VDCM: Fv = -(R_dcm(s) * R_v(s) + 1.0) / K_d; break;
        }
        const Complex Ri = R_i(s);
        const Complex Gid = Ri * (1.0 - Fif) / op.V_o;
        const Complex God = -Ri * Fio / op.V_o;
        const Complex Gvd = (-Ri * Fv - (feedforward ? op.D : 0.0)) / op.V_o;
        const Complex il = 1.0 - Gid * Gdi;
        return (Zo * il - Gdv * (Gid * Goi + God)) / (il - Gvd * Gdv);
    }
};

inline std::vector<dcform::ControllerKind> all_controllers() {
    return {dcform::ControllerKind::IVDroop, dcform::ControllerKind::VIDroopIf,
            dcform::ControllerKind::VIDroopIo, dcform::ControllerKind::VIDroopZd,
            dcform::ControllerKind::VDCM};
}

/// Random rational function with real roots/poles in a tame range.
inline dcform::RationalTF random_tf(std::mt19937& rng, int max_deg = 3) {
    std::uniform_int_distribution<int> deg(0, max_deg);
    std::uniform_real_distribution<double> root(-8.0, -0.2);
    std::uniform_real_distribution<double> gain(0.2, 3.0);
    auto poly = [&](int d) {
        dcform::Polynomial acc{1.0};
        for (int i = 0; i < d; ++i) acc = acc * dcform::Polynomial{-root(rng), 1.0};
        return acc;
    };
    const int dn = deg(rng);
    const int dd = std::max(dn, deg(rng));
    return dcform::RationalTF(gain(rng) * poly(dn), poly(dd));
}

}  // namespace testutil
