#pragma once

// Closed-loop output impedance, its series/parallel decomposition, the three
// forming indices with classification, the passivity screen and the desired
// grid-forming impedance profile.

#include "dcform/control.hpp"
#include "dcform/plant.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace dcform {

/// Closed-loop output impedance (transfer from -di_o to dv_dc):
///   Z_out = [Z_o (1 - G_id G_di) - G_dv (G_id G_oi + G_od)]
///           / [1 - G_id G_di - G_vd G_dv]
inline RationalTF closed_loop_zout(const PlantTFs& plant, const DutyTFs& duty) {
    const RationalTF one = RationalTF::one();
    const RationalTF il = one - duty.G_id * plant.G_di;
    const RationalTF den = il - duty.G_vd * plant.G_dv;
    if (den.is_zero()) throw std::domain_error("closed_loop_zout: degeneracy");
    return (plant.Z_o * il - plant.G_dv * (duty.G_id * plant.G_oi + duty.G_od)) / den;
}

/// Same impedance assembled over the shared denominators of the boost plant
/// and the duty polynomials. The structurally duplicated plant factor is
/// divided out symbolically, so the result has minimal order (one pole per
/// closed-loop state) without any root-finding cancellation.
inline RationalTF closed_loop_zout_minimal(const BoostParams& p, const OperatingPoint& op,
                                           const DutyPolys& duty) {
    const double L = p.L_f, C = p.C_dc, r = p.r_dc;
    const Polynomial q{1.0, C * r};  // 1 + s C r
    const Polynomial P = (op.D * op.D) * q + Polynomial::monomial(L * C, 2);
    const Polynomial m_zo = Polynomial::monomial(L, 1) * q;
    const Polynomial m_di = -(op.I_o * q + Polynomial{0.0, C * op.V_o});
    const Polynomial m_dv = -(Polynomial{op.V_in, -L * op.I_f} * q);
    const Polynomial num = m_zo * duty.q + (op.V_o * q) * duty.n_id - m_dv * duty.n_od;
    const Polynomial den = duty.q * P - duty.n_id * m_di - duty.n_vd * m_dv;
    if (den.is_zero()) throw std::domain_error("closed_loop_zout: degeneracy");
    return RationalTF(num, den);
}

/// Series impedance Z'_out = Z_out / (1 - Y_dc Z_out); the inverse of the
/// parallel composition Z_out = Z'_out || 1/Y_dc.
inline RationalTF series_impedance(const RationalTF& Z_out, const RationalTF& Y_dc) {
    const RationalTF d = RationalTF::one() - Y_dc * Z_out;
    if (d.is_zero()) throw std::domain_error("series_impedance: Z_out equals the capacitor branch");
    return Z_out / d;
}

/// Crossover between the resistive (droop) and capacitive regions of the
/// desired impedance, w_c = 1/(C_dc K_d).
inline double crossover_freq(double C_dc, double K_d) {
    if (!(C_dc > 0.0) || !(K_d > 0.0))
        throw std::invalid_argument("crossover_freq: C_dc and K_d must be > 0");
    return 1.0 / (C_dc * K_d);
}

/// Desired output impedance: droop resistance in parallel with the output
/// capacitor, Z_out_d = K_d / (1 + Y_dc K_d).
inline RationalTF desired_zout(double K_d, const RationalTF& Y_dc) {
    if (!(K_d > 0.0)) throw std::invalid_argument("desired_zout: K_d must be > 0");
    return RationalTF::constant(K_d) / (RationalTF::one() + Y_dc * K_d);
}

// ---------------------------------------------------------------------------
// Indices

enum class IndexKind { OII, CFI, VFI };

inline const char* index_name(IndexKind k) {
    switch (k) {
        case IndexKind::OII: return "oii";
        case IndexKind::CFI: return "cfi";
        case IndexKind::VFI: return "vfi";
    }
    return "?";
}

inline Complex oii(const RationalTF& Z_out, double K_d, double omega) {
    if (!(K_d > 0.0)) throw std::invalid_argument("oii: K_d must be > 0");
    return Z_out.eval_jw(omega) / K_d;
}

inline Complex cfi(const RationalTF& Z_out, const RationalTF& Y_dc, double omega) {
    return Complex(1.0, 0.0) - Y_dc.eval_jw(omega) * Z_out.eval_jw(omega);
}

inline Complex vfi(const RationalTF& Z_out, const RationalTF& Z_g, double omega) {
    const Complex z = Z_out.eval_jw(omega);
    if (z == Complex(0.0, 0.0)) return Complex(0.0, 0.0);  // Z_g Y_out -> inf limit
    return Complex(1.0, 0.0) / (Complex(1.0, 0.0) + Z_g.eval_jw(omega) / z);
}

/// Same residual-free identity as the decomposition: OII = (Z'_out/K_d) CFI.
/// With no capacitor branch the parallel composition degenerates to Z'_out.
inline Complex oii_cfi_identity(const RationalTF& Z_out_prime, double K_d, const RationalTF& Y_dc,
                                double omega) {
    const RationalTF Z_out =
        Y_dc.is_zero() ? Z_out_prime : parallel(Z_out_prime, RationalTF::one() / Y_dc);
    const Complex lhs = oii(Z_out, K_d, omega);
    const Complex rhs = Z_out_prime.eval_jw(omega) / K_d * cfi(Z_out, Y_dc, omega);
    return lhs - rhs;
}

// ---------------------------------------------------------------------------
// Classification

enum class ClassLabel {
    GridForming,
    DisturbanceAmplifying,
    CurrentFollowing,
    CurrentForming,
    VoltageForming,
};

inline const char* label_name(ClassLabel l) {
    switch (l) {
        case ClassLabel::GridForming: return "grid_forming";
        case ClassLabel::DisturbanceAmplifying: return "disturbance_amplifying";
        case ClassLabel::CurrentFollowing: return "current_following";
        case ClassLabel::CurrentForming: return "current_forming";
        case ClassLabel::VoltageForming: return "voltage_forming";
    }
    return "?";
}

struct ClassifyTols {
    double mag = 1e-6;
    // Phase width of the unity ring: below this the boundary |CFI| ~ 1 counts
    // as current-following, above it as disturbance amplification. Matched to
    // sqrt(2*mag) so a first-order profile leaves the ring before the phase
    // test can trip.
    double phase = 1.4142135623730951e-3;
};

inline ClassLabel classify(IndexKind kind, Complex value, double tol_mag, double tol_phase) {
    if (tol_mag < 0.0 || tol_phase < 0.0) throw std::invalid_argument("classify: tolerances must be >= 0");
    const double m = std::abs(value);
    switch (kind) {
        case IndexKind::OII:
            return m <= 1.0 + tol_mag ? ClassLabel::GridForming : ClassLabel::DisturbanceAmplifying;
        case IndexKind::VFI:
            return m <= 1.0 + tol_mag ? ClassLabel::VoltageForming : ClassLabel::DisturbanceAmplifying;
        case IndexKind::CFI:
            if (std::abs(m - 1.0) <= tol_mag && std::abs(std::arg(value)) <= tol_phase)
                return ClassLabel::CurrentFollowing;
            if (m < 1.0 - tol_mag) return ClassLabel::CurrentForming;
            return ClassLabel::DisturbanceAmplifying;
    }
    throw std::invalid_argument("classify: bad kind");
}

inline ClassLabel classify(IndexKind kind, Complex value, const ClassifyTols& tols = {}) {
    return classify(kind, value, tols.mag, tols.phase);
}

struct IndexSample {
    double omega;
    Complex value;
    ClassLabel label;
};

struct IndexCurve {
    IndexKind kind;
    std::vector<IndexSample> samples;
};

/// Log-spaced frequency grid, strictly increasing.
inline std::vector<double> logspace(double omega_min, double omega_max, int n) {
    if (!(omega_min > 0.0) || !(omega_max > omega_min) || n < 2)
        throw std::invalid_argument("logspace: need 0 < omega_min < omega_max and n >= 2");
    std::vector<double> w(static_cast<std::size_t>(n));
    const double l0 = std::log10(omega_min), l1 = std::log10(omega_max);
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] = std::pow(10.0, l0 + (l1 - l0) * i / (n - 1));
    w.front() = omega_min;
    w.back() = omega_max;
    return w;
}

// ---------------------------------------------------------------------------
// Grid model and passivity screen

struct GridModel {
    double r_g = 0.0;  // line resistance [Ohm]
    double L_g = 0.0;  // line inductance [H]

    RationalTF Z_g() const { return RationalTF(Polynomial{r_g, L_g}, Polynomial::one()); }
    void validate() const {
        if (r_g < 0.0 || L_g < 0.0) throw std::invalid_argument("GridModel: r_g, L_g must be >= 0");
    }
};

struct ImpedanceModel {
    RationalTF Z_out;
    RationalTF Z_out_prime;
    RationalTF Y_dc;
    double K_d;
};

/// Direction of a rational function at a frequency-axis limit, as a phase in
/// degrees, when the limit is a finite nonzero (possibly zero/infinite)
/// complex direction. Returns nothing for a 0/0 style degeneracy.
inline std::optional<double> limit_phase_deg(const RationalTF& tf, bool at_infinity) {
    const auto& nc = tf.num().coeffs();
    const auto& dc = tf.den().coeffs();
    auto first_nonzero = [](const std::vector<double>& v) -> int {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] != 0.0) return static_cast<int>(i);
        return -1;
    };
    if (tf.num().is_zero()) return std::nullopt;
    int kn, kd;
    if (at_infinity) {
        kn = tf.num().degree();
        kd = tf.den().degree();
    } else {
        kn = first_nonzero(nc);
        kd = first_nonzero(dc);
    }
    const double ratio = nc[static_cast<std::size_t>(kn)] / dc[static_cast<std::size_t>(kd)];
    // (jw)^(kn-kd) carries 90 deg per order
    double deg = 90.0 * (kn - kd) + (ratio < 0.0 ? 180.0 : 0.0);
    while (deg > 180.0) deg -= 360.0;
    while (deg <= -180.0) deg += 360.0;
    return deg;
}

struct PassivityReport {
    bool condition_i = true;                // OII phase in (-90, 90) on the grid
    bool condition_ii = true;               // Z_g phase in (-90, 90) on the grid
    std::vector<double> violations_i;       // frequencies violating (i)
    std::vector<double> violations_ii;      // frequencies violating (ii)
    std::optional<double> oii_phase_dc;     // symbolic limits, when defined
    std::optional<double> oii_phase_inf;
    bool limits_ok = true;
};

/// Grid-based screen of the two passivity conditions; a necessary-condition
/// check, with the w -> 0 and w -> inf limits evaluated from the rational
/// form where possible.
inline PassivityReport passivity_check(const RationalTF& Z_out, double K_d, const RationalTF& Z_g,
                                       const std::vector<double>& omegas) {
    if (!(K_d > 0.0)) throw std::invalid_argument("passivity_check: K_d must be > 0");
    PassivityReport rep;
    const double limit = 90.0;
    for (double w : omegas) {
        const double ph_oii = std::arg(oii(Z_out, K_d, w)) * 180.0 / std::numbers::pi;
        if (!(ph_oii > -limit && ph_oii < limit)) {
            rep.condition_i = false;
            rep.violations_i.push_back(w);
        }
        const double ph_g = std::arg(Z_g.eval_jw(w)) * 180.0 / std::numbers::pi;
        if (!(ph_g > -limit && ph_g < limit)) {
            rep.condition_ii = false;
            rep.violations_ii.push_back(w);
        }
    }
    rep.oii_phase_dc = limit_phase_deg(Z_out, false);
    rep.oii_phase_inf = limit_phase_deg(Z_out, true);
    // The quantifier runs over finite omega only, so a limit sitting exactly
    // on the +-90 boundary is approached but never attained; only limits
    // strictly beyond it imply violations at large/small finite omega.
    for (const auto& ph : {rep.oii_phase_dc, rep.oii_phase_inf})
        if (ph && std::abs(*ph) > limit + 1e-9) rep.limits_ok = false;
    return rep;
}

// ---------------------------------------------------------------------------
// Full sweep helpers

inline IndexCurve oii_curve(const RationalTF& Z_out, double K_d, const std::vector<double>& omegas,
                            const ClassifyTols& tols = {}) {
    IndexCurve c{IndexKind::OII, {}};
    c.samples.reserve(omegas.size());
    for (double w : omegas) {
        const Complex v = oii(Z_out, K_d, w);
        c.samples.push_back({w, v, classify(IndexKind::OII, v, tols)});
    }
    return c;
}

inline IndexCurve cfi_curve(const RationalTF& Z_out, const RationalTF& Y_dc,
                            const std::vector<double>& omegas, const ClassifyTols& tols = {}) {
    IndexCurve c{IndexKind::CFI, {}};
    c.samples.reserve(omegas.size());
    for (double w : omegas) {
        const Complex v = cfi(Z_out, Y_dc, w);
        c.samples.push_back({w, v, classify(IndexKind::CFI, v, tols)});
    }
    return c;
}

inline IndexCurve vfi_curve(const RationalTF& Z_out, const RationalTF& Z_g,
                            const std::vector<double>& omegas, const ClassifyTols& tols = {}) {
    IndexCurve c{IndexKind::VFI, {}};
    c.samples.reserve(omegas.size());
    for (double w : omegas) {
        const Complex v = vfi(Z_out, Z_g, w);
        c.samples.push_back({w, v, classify(IndexKind::VFI, v, tols)});
    }
    return c;
}

/// End-to-end impedance model for one converter + controller configuration.
inline ImpedanceModel build_impedance_model(const BoostParams& p, const OperatingPoint& op,
                                            const ControllerConfig& cfg) {
    const ResolvedController rc = resolve_controller(cfg, p);
    const DutyPolys duty = duty_polys(rc, modulator(op, cfg.voltage_feedforward));
    ImpedanceModel m;
    m.K_d = cfg.K_d;
    m.Y_dc = y_dc(p);
    m.Z_out = closed_loop_zout_minimal(p, op, duty);
    m.Z_out_prime = series_impedance(m.Z_out, m.Y_dc);
    return m;
}

}  // namespace dcform
