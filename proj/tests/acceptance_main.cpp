// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Runs against the built-in reference scenario (350 V -> 700 V, 7 kW boost,
// K_d = 1 Ohm, two 3.5 kW constant-power loads behind 50 mOhm / 10 uH lines).

#include "dcform/analysis.hpp"
#include "dcform/parallel.hpp"
#include "dcform/simgrid.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

using namespace dcform;

namespace {

struct Criterion {
    int id;
    std::string what;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<Criterion> results;

class Timer {
public:
    Timer() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

void report(int id, const std::string& what, bool pass, const std::string& detail, double secs) {
    results.push_back({id, what, pass, detail, secs});
    std::printf("[%s] criterion %d: %-34s %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, what.c_str(),
                detail.c_str(), secs);
    std::fflush(stdout);
}

BoostParams ref_params(double r_dc = 0.01) { return BoostParams{1e-3, 1e-3, r_dc, 20e3, 7.5e-5}; }
OperatingPoint ref_op() { return operating_point(350.0, 700.0, 10.0); }

std::vector<ControllerKind> controllers() {
    return {ControllerKind::IVDroop, ControllerKind::VIDroopIf, ControllerKind::VIDroopIo,
            ControllerKind::VIDroopZd, ControllerKind::VDCM};
}

ControllerConfig config_for(ControllerKind kind) {
    ControllerConfig cfg;
    cfg.kind = kind;
    cfg.K_d = 1.0;
    return cfg;
}

std::vector<GridModel> ref_lines() { return {{0.05, 1e-5}, {0.05, 1e-5}}; }
std::vector<LoadModel> ref_loads() { return {{3498.75, 2.2e-4, 1e-3}, {3498.75, 2.2e-4, 1e-3}}; }

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// ---------------------------------------------------------------------------

void criterion_1_algebraic_vs_numeric() {
    Timer t;
    double worst = 0.0;
    std::string worst_ctrl;
    for (auto kind : controllers()) {
        const ControllerConfig cfg = config_for(kind);
        const ImpedanceModel m = build_impedance_model(ref_params(), ref_op(), cfg);
        SourceOnly so(SourceConfig{ref_params(), ref_op(), cfg, false});
        const LinearModel lm = linearize_numeric(so);
        for (double w : logspace(1.0, 6e4, 50)) {
            const Complex a = m.Z_out.eval_jw(w);
            const double err = std::abs(zout_from_statespace(lm, w) - a) / std::abs(a);
            if (err > worst) {
                worst = err;
                worst_ctrl = controller_name(kind);
            }
        }
    }
    const double secs = t.seconds();
    const bool pass = worst < 1e-6 && secs < 5.0;
    report(1, "algebraic vs numeric impedance", pass,
           fmt("worst rel err %.3e (tol 1e-6), ", worst) + worst_ctrl, secs);
}

void criterion_2_injection() {
    Timer t;
    struct Job {
        ControllerKind kind;
        double w;
    };
    std::vector<Job> jobs;
    const double w_bi = tune_current_controller(ref_params()).omega_bi;
    for (auto kind : controllers())
        for (double w : logspace(10.0, w_bi / 2.0, 10)) jobs.push_back({kind, w});
    std::vector<double> mag_err(jobs.size()), ph_err(jobs.size());
    std::map<ControllerKind, ImpedanceModel> models;
    for (auto kind : controllers())
        models.emplace(kind, build_impedance_model(ref_params(), ref_op(), config_for(kind)));
    parallel_for(jobs.size(), [&](std::size_t i) {
        const auto& job = jobs[i];
        const auto meas =
            measure_impedance_injection(SourceConfig{ref_params(), ref_op(), config_for(job.kind), false},
                                        {job.w}, 0.1, 30)
                .front();
        const Complex a = models.at(job.kind).Z_out.eval_jw(job.w);
        mag_err[i] = std::abs(std::abs(meas.value) / std::abs(a) - 1.0);
        ph_err[i] = std::abs(std::arg(meas.value / a)) * 180.0 / std::numbers::pi;
    });
    const double worst_mag = *std::max_element(mag_err.begin(), mag_err.end());
    const double worst_ph = *std::max_element(ph_err.begin(), ph_err.end());
    const double secs = t.seconds();
    const bool pass = worst_mag < 0.02 && worst_ph < 2.0 && secs < 60.0;
    report(2, "sine-injection oracle", pass,
           fmt("worst mag %.3e (tol 2e-2), worst phase %.3e deg (tol 2)", worst_mag, worst_ph), secs);
}

void criterion_3_decomposition() {
    Timer t;
    double worst = 0.0;
    for (auto kind : controllers()) {
        const ImpedanceModel m = build_impedance_model(ref_params(), ref_op(), config_for(kind));
        const RationalTF recomposed = parallel(m.Z_out_prime, RationalTF::one() / m.Y_dc);
        for (double w : logspace(1.0, std::numbers::pi * 20e3, 100)) {
            const Complex a = m.Z_out.eval_jw(w);
            worst = std::max(worst, std::abs(recomposed.eval_jw(w) - a) / std::abs(a));
        }
    }
    report(3, "decomposition identity", worst < 1e-9, fmt("worst rel err %.3e (tol 1e-9)", worst),
           t.seconds());
}

void criterion_4_index_identity() {
    Timer t;
    double worst = 0.0;
    for (auto kind : controllers()) {
        const ImpedanceModel m = build_impedance_model(ref_params(), ref_op(), config_for(kind));
        for (double w : logspace(1.0, std::numbers::pi * 20e3, 400)) {
            const Complex res =
                oii(m.Z_out, m.K_d, w) - m.Z_out_prime.eval_jw(w) / m.K_d * cfi(m.Z_out, m.Y_dc, w);
            worst = std::max(worst, std::abs(res));
        }
    }
    report(4, "OII/CFI identity residual", worst < 1e-9, fmt("worst |res| %.3e (tol 1e-9)", worst),
           t.seconds());
}

void criterion_5_desired_profile() {
    Timer t;
    const BoostParams p = ref_params(0.0);
    const double K_d = 1.0;
    const RationalTF Y = y_dc(p);
    const RationalTF Zd = desired_zout(K_d, Y);
    const double wc = crossover_freq(p.C_dc, K_d);
    bool ok = true;
    std::string why;
    const double corner = std::abs(oii(Zd, K_d, wc));
    if (std::abs(corner - 1.0 / std::sqrt(2.0)) > 1e-6) {
        ok = false;
        why += fmt("corner %.9f; ", corner);
    }
    bool seen_follow = false, seen_form = false, fell_back = false;
    for (double w : logspace(1.0, std::numbers::pi * 20e3, 400)) {
        const Complex v = oii(Zd, K_d, w);
        const double ph = std::arg(v) * 180.0 / std::numbers::pi;
        if (std::abs(v) > 1.0 + 1e-12 || ph > 1e-9 || ph <= -90.0 ||
            classify(IndexKind::OII, v) != ClassLabel::GridForming) {
            ok = false;
            why += fmt("OII bound broken at w=%.3g; ", w);
            break;
        }
        const ClassLabel cl = classify(IndexKind::CFI, cfi(Zd, Y, w));
        if (cl == ClassLabel::DisturbanceAmplifying) {
            ok = false;
            why += fmt("CFI amplifying at w=%.3g; ", w);
            break;
        }
        if (cl == ClassLabel::CurrentFollowing) {
            seen_follow = true;
            if (seen_form) fell_back = true;
        }
        if (cl == ClassLabel::CurrentForming) seen_form = true;
    }
    if (!(seen_follow && seen_form) || fell_back) {
        ok = false;
        why += "CFI transition missing; ";
    }
    if (ok) why = fmt("corner |OII| %.9f, clean following->forming transition", corner);
    report(5, "desired-profile properties", ok, why, t.seconds());
}

void criterion_6_passivity_screen() {
    Timer t;
    const auto grid_ws = logspace(1.0, 6e4, 480);
    const RationalTF Zg(Polynomial{0.05, 1e-5}, Polynomial{1.0});
    const BoostParams p = ref_params(0.0);
    const auto rep = passivity_check(desired_zout(1.0, y_dc(p)), 1.0, Zg, grid_ws);
    bool ok = rep.condition_i && rep.condition_ii;
    std::string why = ok ? "desired profile + RL grid pass; " : "desired profile screen failed; ";

    // constructed non-passive band: resonant zero pair against a double pole
    const double w0 = 100.0, zeta = 0.05, wp = 1e4;
    const RationalTF Z(Polynomial{1.0, 2.0 * zeta / w0, 1.0 / (w0 * w0)},
                       Polynomial{1.0, 1.0 / wp} * Polynomial{1.0, 1.0 / wp});
    auto phase_above = [&](double w) { return std::arg(Z.eval_jw(w)) > std::numbers::pi / 2.0; };
    auto bisect = [&](double lo, double hi, bool rising) {
        for (int i = 0; i < 200; ++i) {
            const double mid = std::sqrt(lo * hi);
            if (phase_above(mid) == rising)
                hi = mid;
            else
                lo = mid;
        }
        return std::sqrt(lo * hi);
    };
    const double edge_lo = bisect(w0 * 0.5, w0 * 4.0, true);
    const double edge_hi = bisect(2e3, 5e4, false);
    const auto rep2 = passivity_check(Z, 1.0, Zg, grid_ws);
    const double step = std::log(grid_ws[1] / grid_ws[0]);
    if (rep2.violations_i.empty()) {
        ok = false;
        why += "constructed band not flagged";
    } else {
        const double err_lo = std::abs(std::log(rep2.violations_i.front() / edge_lo)) / step;
        const double err_hi = std::abs(std::log(rep2.violations_i.back() / edge_hi)) / step;
        if (err_lo > 1.0 || err_hi > 1.0) ok = false;
        why += fmt("band edges off by %.2f / %.2f grid points (tol 1)", err_lo, err_hi);
    }
    report(6, "passivity screen", ok, why, t.seconds());
}

struct StepResult {
    double undershoot;
    double peak_oii;
};

std::map<ControllerKind, StepResult> run_reference_steps(double dt) {
    std::map<ControllerKind, StepResult> out;
    const auto ws = logspace(1.0, std::numbers::pi * 20e3, 400);
    std::vector<ControllerKind> kinds = controllers();
    std::vector<StepResult> res(kinds.size());
    parallel_for(kinds.size(), [&](std::size_t i) {
        const ControllerConfig cfg = config_for(kinds[i]);
        const ImpedanceModel m = build_impedance_model(ref_params(), ref_op(), cfg);
        double peak = 0.0;
        for (double w : ws) peak = std::max(peak, std::abs(oii(m.Z_out, m.K_d, w)));
        SimModel model(SourceConfig{ref_params(), ref_op(), cfg, false}, ref_lines(), ref_loads());
        SimConfig sim;
        sim.t_end = 0.3;
        sim.dt = dt;
        sim.output_stride = 10;
        sim.events = {{0.1, 0, 2.0 * 3498.75}};
        const Trace tr = simulate(model, sim);
        res[i] = {load_step_metrics(tr, 700.0).undershoot, peak};
    });
    for (std::size_t i = 0; i < kinds.size(); ++i) out[kinds[i]] = res[i];
    return out;
}

std::vector<int> ranks(const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<int> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[static_cast<std::size_t>(idx[i])] = static_cast<int>(i);
    return r;
}

void criterion_7_ordinal_reproduction() {
    Timer t;
    bool ok = true;
    std::string why;
    try {
        const auto res = run_reference_steps(1e-6);
        std::vector<double> peaks, unds;
        for (auto kind : controllers()) {
            peaks.push_back(res.at(kind).peak_oii);
            unds.push_back(res.at(kind).undershoot);
        }
        const auto rp = ranks(peaks), ru = ranks(unds);
        double d2 = 0.0;
        for (std::size_t i = 0; i < rp.size(); ++i) d2 += (rp[i] - ru[i]) * (rp[i] - ru[i]);
        const double rho = 1.0 - 6.0 * d2 / (5.0 * 24.0);
        ok = rho == 1.0 && t.seconds() < 300.0;
        why = fmt("spearman %.2f (need 1.00); ", rho);
        for (std::size_t i = 0; i < rp.size(); ++i)
            why += std::string(controller_name(controllers()[i])) +
                   fmt(" peak %.2f", peaks[i]) + fmt(" und %.2fV, ", unds[i]);
    } catch (const std::exception& e) {
        ok = false;
        why = std::string("simulation failed: ") + e.what();
    }
    report(7, "load-step vs OII-peak ranking", ok, why, t.seconds());
}

void criterion_8_steady_state_droop() {
    Timer t;
    bool ok = true;
    std::string why;
    for (auto kind : controllers()) {
        const ImpedanceModel m = build_impedance_model(ref_params(), ref_op(), config_for(kind));
        const double z0 = std::abs(m.Z_out.eval_jw(1e-4));
        if (kind == ControllerKind::VDCM) {
            if (!(z0 < 1e-6)) ok = false;
            why += fmt("vdcm %.2e; ", z0);
        } else {
            if (std::abs(z0 - 1.0) > 1e-6) ok = false;
            why += std::string(controller_name(kind)) + fmt(" %.6f; ", z0);
        }
    }
    report(8, "steady-state droop equals K_d", ok, why, t.seconds());
}

void criterion_9_determinism_convergence() {
    Timer t;
    const ControllerConfig cfg = config_for(ControllerKind::VIDroopIo);
    SimModel model(SourceConfig{ref_params(), ref_op(), cfg, false}, ref_lines(), ref_loads());
    SimConfig sim;
    sim.t_end = 0.3;
    sim.dt = 1e-6;
    sim.output_stride = 10;
    sim.events = {{0.1, 0, 2.0 * 3498.75}};
    const Trace a = simulate(model, sim);
    const Trace b = simulate(model, sim);
    bool identical = a.rows.size() == b.rows.size();
    if (identical)
        for (std::size_t i = 0; i < a.rows.size(); ++i)
            if (a.rows[i] != b.rows[i]) {
                identical = false;
                break;
            }
    const double u1 = load_step_metrics(a, 700.0).undershoot;
    sim.dt = 5e-7;
    sim.output_stride = 20;
    const double u2 = load_step_metrics(simulate(model, sim), 700.0).undershoot;
    const double drift = std::abs(u1 - u2) / u2;
    const bool ok = identical && drift < 1e-3;
    report(9, "determinism and dt convergence", ok,
           std::string("bit-identical ") + (identical ? "yes" : "no") +
               fmt(", undershoot drift %.2e (tol 1e-3)", drift),
           t.seconds());
}

}  // namespace

int main() {
    std::printf("dcform acceptance suite (reference scenario)\n");
    criterion_1_algebraic_vs_numeric();
    criterion_2_injection();
    criterion_3_decomposition();
    criterion_4_index_identity();
    criterion_5_desired_profile();
    criterion_6_passivity_screen();
    criterion_7_ordinal_reproduction();
    criterion_8_steady_state_droop();
    criterion_9_determinism_convergence();
    int failed = 0;
    for (const auto& c : results)
        if (!c.pass) ++failed;
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
    return failed == 0 ? 0 : 1;
}
