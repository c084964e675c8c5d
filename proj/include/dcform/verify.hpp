#pragma once

// Cross-validation of the analytic impedance chain against its independent
// oracles: numeric linearization of the averaged model, sine-injection
// measurement, the series/parallel decomposition round trip and the
// OII = (Z'_out/K_d) CFI identity.

#include "dcform/analysis.hpp"
#include "dcform/parallel.hpp"
#include "dcform/scenario.hpp"
#include "dcform/simgrid.hpp"

#include <string>
#include <vector>

namespace dcform {

/// A verification tolerance was exceeded; maps to CLI exit code 4.
class VerifyFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct VerifyCheck {
    std::string name;
    double worst = 0.0;
    double tol = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct VerifyTols {
    double impedance_rel = 1e-6;
    double injection_mag_rel = 0.02;
    double injection_phase_deg = 2.0;
    double decomposition_rel = 1e-9;
    double identity_abs = 1e-9;

    /// Single override, as exposed by the --tol flag: the relative/absolute
    /// tolerances take the given value; the injection phase tolerance is
    /// tol * 100 degrees.
    static VerifyTols uniform(double tol) {
        return VerifyTols{tol, tol, tol * 100.0, tol, tol};
    }
};

/// Impedance model for a scenario controller, with the optional debug gain
/// applied to Z_out only (leaves Z_out_prime untouched so the identity checks
/// can catch the corruption).
inline ImpedanceModel scenario_impedance(const Scenario& sc, const ControllerConfig& cfg,
                                         double zout_debug_gain = 1.0) {
    ImpedanceModel m;
    if (sc.zout_override) {
        m.K_d = cfg.K_d;
        m.Y_dc = y_dc(sc.converter);
        m.Z_out = *sc.zout_override;
        m.Z_out_prime = series_impedance(m.Z_out, m.Y_dc);
    } else if (sc.desired_source) {
        m.K_d = cfg.K_d;
        m.Y_dc = y_dc(sc.converter);
        m.Z_out = desired_zout(cfg.K_d, m.Y_dc);
        m.Z_out_prime = RationalTF::constant(cfg.K_d);
    } else {
        m = build_impedance_model(sc.converter, sc.op(), cfg);
    }
    if (zout_debug_gain != 1.0) m.Z_out = m.Z_out * zout_debug_gain;
    return m;
}

inline VerifyReport run_verification(const Scenario& sc, const std::vector<ControllerConfig>& controllers,
                                     const VerifyTols& tols = {}, double zout_debug_gain = 1.0) {
    VerifyReport rep;
    const std::vector<double> probe_imp = logspace(1.0, 6e4, 50);
    const std::vector<double> probe_decomp = logspace(1.0, sc.omega_max(), 100);
    const std::vector<double> sweep = sc.sweep_grid();

    for (const auto& cfg : controllers) {
        const std::string name = sc.desired_source ? "desired" : controller_name(cfg.kind);
        const ImpedanceModel m = scenario_impedance(sc, cfg, zout_debug_gain);

        // closed-loop impedance algebra vs centrally differenced state
        // matrices of the averaged model
        {
            SourceOnly so(SourceConfig{sc.converter, sc.op(), cfg, sc.desired_source});
            const LinearModel lm = linearize_numeric(so);
            double worst = 0.0;
            for (double w : probe_imp) {
                const Complex a = m.Z_out.eval_jw(w);
                const Complex b = zout_from_statespace(lm, w);
                worst = std::max(worst, std::abs(a - b) / std::abs(a));
            }
            rep.checks.push_back({"impedance_vs_linearization/" + name, worst, tols.impedance_rel,
                                  worst < tols.impedance_rel});
        }

        // Sine-injection measurement vs the analytic values.
        {
            const double w_bi = tune_current_controller(sc.converter, cfg.bandwidth_fraction).omega_bi;
            const std::vector<double> ws = logspace(10.0, w_bi / 2.0, 10);
            const double amplitude = 0.01 * std::abs(sc.I_o);
            std::vector<ComplexSample> meas(ws.size());
            parallel_for(ws.size(), [&](std::size_t i) {
                meas[i] = measure_impedance_injection(SourceConfig{sc.converter, sc.op(), cfg, sc.desired_source},
                                                      {ws[i]}, amplitude, 30)
                              .front();
            });
            double worst_mag = 0.0, worst_ph = 0.0;
            for (const auto& s : meas) {
                const Complex a = m.Z_out.eval_jw(s.omega);
                worst_mag = std::max(worst_mag, std::abs(std::abs(s.value) / std::abs(a) - 1.0));
                double dph = std::arg(s.value / a) * 180.0 / std::numbers::pi;
                worst_ph = std::max(worst_ph, std::abs(dph));
            }
            rep.checks.push_back(
                {"injection_mag/" + name, worst_mag, tols.injection_mag_rel, worst_mag < tols.injection_mag_rel});
            rep.checks.push_back(
                {"injection_phase_deg/" + name, worst_ph, tols.injection_phase_deg, worst_ph < tols.injection_phase_deg});
        }

        // Decomposition round trip: parallel(Z'_out, 1/Y_dc) == Z_out.
        {
            const RationalTF recomposed = parallel(m.Z_out_prime, RationalTF::one() / m.Y_dc);
            double worst = 0.0;
            for (double w : probe_decomp) {
                const Complex a = m.Z_out.eval_jw(w);
                worst = std::max(worst, std::abs(recomposed.eval_jw(w) - a) / std::abs(a));
            }
            rep.checks.push_back(
                {"decomposition/" + name, worst, tols.decomposition_rel, worst < tols.decomposition_rel});
        }

        // OII - (Z'_out/K_d) CFI identity residual over the sweep.
        {
            double worst = 0.0;
            for (double w : sweep) {
                const Complex res = oii(m.Z_out, m.K_d, w) -
                                    m.Z_out_prime.eval_jw(w) / m.K_d * cfi(m.Z_out, m.Y_dc, w);
                worst = std::max(worst, std::abs(res));
            }
            rep.checks.push_back({"index_identity/" + name, worst, tols.identity_abs, worst < tols.identity_abs});
        }
    }
    return rep;
}

}  // namespace dcform
