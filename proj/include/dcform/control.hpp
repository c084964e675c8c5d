#pragma once

// The decentralized control laws, the inner PI current loop and the modulator
// linearization, composed into the three duty-cycle transfer functions
//   dd = G_id di_f + G_od di_o + G_vd dv_dc.
//
// Sign convention: the current controller produces the switching-node voltage
// reference through the inductor-voltage feedforward form
//   v_sw* = v_in - R_i (i_f* - i_f),
// which closes the current loop with negative feedback (raising v_sw lowers
// the inductor current). The duty cycle follows as d = v_sw*/v_dc when the
// modulator voltage feedforward is enabled, d = v_sw*/V_o otherwise.

#include "dcform/plant.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace dcform {

struct CurrentLoop {
    double k_pi;      // proportional gain [V/A]
    double T_ii;      // integral time [s]
    double omega_bi;  // target bandwidth [rad/s]
    RationalTF R_i;   // k_pi (1 + s T_ii)/(s T_ii)
};

/// Internal-model-control tuning of the PI current controller.
inline CurrentLoop tune_current_controller(const BoostParams& p, double bandwidth_fraction = 0.07) {
    p.validate();
    if (!(bandwidth_fraction > 0.0 && bandwidth_fraction < 0.5))
        throw std::invalid_argument("tune_current_controller: bandwidth_fraction must be in (0, 0.5)");
    CurrentLoop loop;
    loop.omega_bi = bandwidth_fraction * 2.0 * std::numbers::pi * p.f_s;
    loop.k_pi = loop.omega_bi * p.L_f;
    loop.T_ii = p.C_dc * p.L_f / p.T_d;
    loop.R_i = RationalTF(Polynomial{loop.k_pi, loop.k_pi * loop.T_ii}, Polynomial{0.0, loop.T_ii});
    return loop;
}

/// Linearized modulator: dd = (dv_sw* - D dv_dc [feedforward]) / V_o.
struct Modulator {
    double D;
    double V_o;
    bool feedforward;

    double duty(double dv_sw_star, double dv_dc) const {
        return (dv_sw_star - (feedforward ? D * dv_dc : 0.0)) / V_o;
    }
};

inline Modulator modulator(const OperatingPoint& op, bool include_voltage_feedforward) {
    if (!(op.V_o > 0.0)) throw std::invalid_argument("modulator: V_o must be > 0");
    return Modulator{op.D, op.V_o, include_voltage_feedforward};
}

enum class ControllerKind { IVDroop, VIDroopIf, VIDroopIo, VIDroopZd, VDCM };

inline const char* controller_name(ControllerKind k) {
    switch (k) {
        case ControllerKind::IVDroop: return "iv_droop";
        case ControllerKind::VIDroopIf: return "vi_droop_if";
        case ControllerKind::VIDroopIo: return "vi_droop_io";
        case ControllerKind::VIDroopZd: return "vi_droop_zd";
        case ControllerKind::VDCM: return "vdcm";
    }
    return "?";
}

inline ControllerKind controller_kind_from_name(const std::string& name) {
    if (name == "iv_droop") return ControllerKind::IVDroop;
    if (name == "vi_droop_if") return ControllerKind::VIDroopIf;
    if (name == "vi_droop_io") return ControllerKind::VIDroopIo;
    if (name == "vi_droop_zd") return ControllerKind::VIDroopZd;
    if (name == "vdcm") return ControllerKind::VDCM;
    throw std::invalid_argument("unknown controller: " + name);
}

struct ControllerConfig {
    ControllerKind kind = ControllerKind::IVDroop;
    double K_d = 1.0;  // droop gain [Ohm]
    double bandwidth_fraction = 0.07;
    bool voltage_feedforward = true;
    bool pade_delay = false;  // optional 2nd-order Pade factor e^{-s T_d} on dd
    double J_v = 1e-3;        // VDCM virtual inertia [s/Ohm]
    double D_v = 1.0;         // VDCM virtual damping [1/Ohm]
    // Inner transfer-function overrides; defaults are derived from the
    // converter parameters when absent.
    std::optional<RationalTF> G_lpf, R_v, Z_d, R_dcm;
};

/// Controller with all embedded transfer functions materialized.
struct ResolvedController {
    ControllerKind kind;
    double K_d;
    bool voltage_feedforward;
    bool pade_delay;
    double T_d;
    CurrentLoop loop;
    RationalTF G_lpf;  // IVDroop droop-path low-pass
    RationalTF R_v;    // V-I / VDCM voltage PI
    RationalTF Z_d;    // VIDroopZd droop impedance
    RationalTF R_dcm;  // VDCM virtual-machine dynamics
};

/// Default inner transfer functions (droop low-pass at half the crossover
/// frequency, voltage PI one decade below the current loop, lead-shaped
/// droop impedance anchored at Z_d(0) = K_d, first-order virtual machine).
inline ResolvedController resolve_controller(const ControllerConfig& cfg, const BoostParams& p) {
    if (!(cfg.K_d > 0.0)) throw std::invalid_argument("controller: K_d must be > 0");
    ResolvedController rc;
    rc.kind = cfg.kind;
    rc.K_d = cfg.K_d;
    rc.voltage_feedforward = cfg.voltage_feedforward;
    rc.pade_delay = cfg.pade_delay;
    rc.T_d = p.T_d;
    rc.loop = tune_current_controller(p, cfg.bandwidth_fraction);
    const double w_c = 1.0 / (p.C_dc * cfg.K_d);
    const double w_f = 0.5 * w_c;
    const double k_pv = 0.1 * rc.loop.omega_bi * p.C_dc;
    const double T_iv = 10.0 / rc.loop.omega_bi;
    rc.G_lpf = cfg.G_lpf.value_or(RationalTF(Polynomial{1.0}, Polynomial{1.0, 1.0 / w_f}));
    rc.R_v = cfg.R_v.value_or(RationalTF(Polynomial{k_pv, k_pv * T_iv}, Polynomial{0.0, T_iv}));
    rc.Z_d = cfg.Z_d.value_or(
        RationalTF(cfg.K_d * Polynomial{1.0, 1.0 / w_c}, Polynomial{1.0, 1.0 / (2.0 * w_c)}));
    if (cfg.R_dcm) {
        rc.R_dcm = *cfg.R_dcm;
    } else {
        if (!(cfg.J_v > 0.0) || !(cfg.D_v > 0.0))
            throw std::invalid_argument("controller: J_v and D_v must be > 0");
        rc.R_dcm = RationalTF(Polynomial{1.0}, Polynomial{cfg.D_v, cfg.J_v});
    }
    for (const RationalTF* tf : {&rc.G_lpf, &rc.R_v, &rc.Z_d, &rc.R_dcm})
        if (!tf->is_proper())
            throw std::invalid_argument("controller: embedded transfer functions must be proper");
    return rc;
}

/// Decentralized law in small-signal form: di_f* = F_v dv_dc + F_if di_f + F_io di_o,
/// all three sharing the denominator `den`.
struct LawPolys {
    Polynomial f_v, f_if, f_io, den;
};

inline LawPolys law_polys(const ResolvedController& rc) {
    LawPolys law;
    switch (rc.kind) {
        case ControllerKind::IVDroop:
            law.den = rc.G_lpf.den();
            law.f_v = -(1.0 / rc.K_d) * rc.G_lpf.num();
            law.f_if = Polynomial::zero();
            law.f_io = Polynomial::zero();
            break;
        case ControllerKind::VIDroopIf:
            law.den = rc.R_v.den();
            law.f_v = -rc.R_v.num();
            law.f_if = -rc.K_d * rc.R_v.num();
            law.f_io = Polynomial::zero();
            break;
        case ControllerKind::VIDroopIo:
            law.den = rc.R_v.den();
            law.f_v = -rc.R_v.num();
            law.f_if = Polynomial::zero();
            law.f_io = -rc.K_d * rc.R_v.num();
            break;
        case ControllerKind::VIDroopZd:
            law.den = rc.R_v.den() * rc.Z_d.den();
            law.f_v = -(rc.R_v.num() * rc.Z_d.den());
            law.f_if = Polynomial::zero();
            law.f_io = -(rc.R_v.num() * rc.Z_d.num());
            break;
        case ControllerKind::VDCM:
            law.den = rc.R_dcm.den() * rc.R_v.den();
            law.f_v = -(1.0 / rc.K_d) * (rc.R_dcm.num() * rc.R_v.num() + law.den);
            law.f_if = Polynomial::zero();
            law.f_io = Polynomial::zero();
            break;
    }
    return law;
}

/// Second-order Pade approximation of e^{-s T}.
inline RationalTF pade2_delay(double T) {
    const double a = T / 2.0, b = T * T / 12.0;
    return RationalTF(Polynomial{1.0, -a, b}, Polynomial{1.0, a, b});
}

/// Duty-cycle transfer functions as polynomials over a common denominator q.
struct DutyPolys {
    Polynomial n_id, n_od, n_vd, q;
};

struct DutyTFs {
    RationalTF G_id;  // di_f -> dd [1/A]
    RationalTF G_od;  // di_o -> dd [1/A]
    RationalTF G_vd;  // dv_dc -> dd [1/V]
};

inline DutyPolys duty_polys(const ResolvedController& rc, const Modulator& mod) {
    const LawPolys law = law_polys(rc);
    const Polynomial& rn = rc.loop.R_i.num();
    const Polynomial& rd = rc.loop.R_i.den();
    DutyPolys d;
    d.q = rd * law.den;
    // dd V_o = -R_i (di_f* - di_f) - D ff dv_dc
    d.n_id = (1.0 / mod.V_o) * (rn * (law.den - law.f_if));
    d.n_od = (-1.0 / mod.V_o) * (rn * law.f_io);
    d.n_vd = (1.0 / mod.V_o) * (-(rn * law.f_v) - (mod.feedforward ? mod.D : 0.0) * d.q);
    if (rc.pade_delay) {
        const RationalTF pade = pade2_delay(rc.T_d);
        d.n_id = d.n_id * pade.num();
        d.n_od = d.n_od * pade.num();
        d.n_vd = d.n_vd * pade.num();
        d.q = d.q * pade.den();
    }
    return d;
}

inline DutyTFs duty_tfs(const ResolvedController& rc, const Modulator& mod) {
    const DutyPolys d = duty_polys(rc, mod);
    DutyTFs out{RationalTF(d.n_id, d.q), RationalTF(d.n_od, d.q), RationalTF(d.n_vd, d.q)};
    if (!out.G_id.is_proper() || !out.G_od.is_proper() || !out.G_vd.is_proper())
        throw std::domain_error("duty_tfs: composite transfer function is improper");
    return out;
}

inline DutyTFs duty_tfs(const ControllerConfig& cfg, const BoostParams& p, const OperatingPoint& op) {
    const ResolvedController rc = resolve_controller(cfg, p);
    return duty_tfs(rc, modulator(op, cfg.voltage_feedforward));
}

}  // namespace dcform
