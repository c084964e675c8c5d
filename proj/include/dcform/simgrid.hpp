#pragma once

// Nonlinear averaged time-domain model of the microgrid: one source (boost
// converter under a decentralized controller, or an ideal source behind the
// desired droop/capacitor impedance) feeding constant-power loads through RL
// lines. Also the two independent oracles for the analytic impedance:
// sine-injection measurement and numeric linearization.
//
// Controller blocks are realized from the exact same RationalTF objects the
// analytic composition uses (controllable canonical form), so the linearized
// simulation and the algebraic impedance agree to rounding.

#include "dcform/analysis.hpp"
#include "dcform/control.hpp"
#include "dcform/plant.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcform {

// ---------------------------------------------------------------------------
// SISO state-space realization (controllable canonical form)

struct StateSpaceBlock {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;
    int n = 0;

    double output(const double* x, double u) const {
        double y = D * u;
        for (int i = 0; i < n; ++i) y += C(i) * x[i];
        return y;
    }
    void derivs(const double* x, double u, double* dx) const {
        for (int i = 0; i < n; ++i) {
            double v = B(i) * u;
            for (int j = 0; j < n; ++j) v += A(i, j) * x[j];
            dx[i] = v;
        }
    }
    /// Initial state consistent with constant input u0 and output y0 (least
    /// squares; integrator blocks pick the state matching the output).
    void equilibrium_guess(double u0, double y0, double* x) const {
        if (n == 0) return;
        Eigen::MatrixXd M(n + 1, n);
        Eigen::VectorXd rhs(n + 1);
        M.topRows(n) = A;
        rhs.head(n) = -B * u0;
        M.row(n) = C;
        rhs(n) = y0 - D * u0;
        Eigen::VectorXd sol = M.colPivHouseholderQr().solve(rhs);
        for (int i = 0; i < n; ++i) x[i] = sol(i);
    }
};

inline StateSpaceBlock to_state_space(const RationalTF& tf) {
    if (!tf.is_proper()) throw std::invalid_argument("to_state_space: improper transfer function");
    const int n = tf.den().degree();
    const double lead = tf.den().coeffs().back();
    StateSpaceBlock ss;
    ss.n = n;
    ss.A = Eigen::MatrixXd::Zero(n, n);
    ss.B = Eigen::VectorXd::Zero(n);
    ss.C = Eigen::RowVectorXd::Zero(n);
    std::vector<double> a(static_cast<std::size_t>(n) + 1), b(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i <= n; ++i) a[static_cast<std::size_t>(i)] = tf.den()[static_cast<std::size_t>(i)] / lead;
    for (int i = 0; i <= tf.num().degree(); ++i)
        b[static_cast<std::size_t>(i)] = tf.num()[static_cast<std::size_t>(i)] / lead;
    ss.D = b[static_cast<std::size_t>(n)];
    if (n > 0) {
        for (int i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
        for (int i = 0; i < n; ++i) ss.A(n - 1, i) = -a[static_cast<std::size_t>(i)];
        ss.B(n - 1) = 1.0;
        for (int i = 0; i < n; ++i) ss.C(i) = b[static_cast<std::size_t>(i)] - ss.D * a[static_cast<std::size_t>(i)];
    }
    return ss;
}

// ---------------------------------------------------------------------------
// Source block

struct SourceConfig {
    BoostParams params;
    OperatingPoint op;
    ControllerConfig cfg;
    bool desired_z = false;  // ideal source behind K_d || 1/Y_dc instead of a converter
};

class SourceRealization {
public:
    explicit SourceRealization(const SourceConfig& sc) : sc_(sc) {
        sc_.params.validate();
        if (sc_.desired_z) {
            n_ = 1;
            K_d_ = sc_.cfg.K_d;
            if (!(K_d_ > 0.0)) throw std::invalid_argument("desired source: K_d must be > 0");
            e_ = sc_.op.V_o + K_d_ * sc_.op.I_o;
            names_ = {"v_c"};
            return;
        }
        rc_ = resolve_controller(sc_.cfg, sc_.params);
        K_d_ = rc_.K_d;
        v_set_ = sc_.op.V_o;
        switch (rc_.kind) {
            case ControllerKind::IVDroop:
                blk1_ = to_state_space(rc_.G_lpf);
                i_set_ = sc_.op.I_f;
                break;
            case ControllerKind::VIDroopIf:
                blk1_ = to_state_space(rc_.R_v);
                i_set_ = sc_.op.I_f;
                break;
            case ControllerKind::VIDroopIo:
                blk1_ = to_state_space(rc_.R_v);
                i_set_ = sc_.op.I_o;
                break;
            case ControllerKind::VIDroopZd:
                blk1_ = to_state_space(rc_.R_v);
                blk2_ = to_state_space(rc_.Z_d);
                i_set_ = sc_.op.I_o;
                break;
            case ControllerKind::VDCM:
                blk1_ = to_state_space(rc_.R_v);
                blk2_ = to_state_space(rc_.R_dcm);
                i_set_ = 0.0;
                break;
        }
        if (rc_.pade_delay) pade_ = to_state_space(pade2_delay(sc_.params.T_d));
        n_ = 3 + blk1_.n + blk2_.n + pade_.n;
        names_ = {"i_f", "v_c", "x_ri"};
        for (int i = 0; i < blk1_.n; ++i) names_.push_back("x_law" + std::to_string(i));
        for (int i = 0; i < blk2_.n; ++i) names_.push_back("x_law2_" + std::to_string(i));
        for (int i = 0; i < pade_.n; ++i) names_.push_back("x_pade" + std::to_string(i));
    }

    int nstates() const { return n_; }
    const std::vector<std::string>& state_names() const { return names_; }
    bool desired_z() const { return sc_.desired_z; }
    const SourceConfig& config() const { return sc_; }

    struct Terminal {
        double v_dc;
        double i_f;
        double i_c;  // converter-side current into the DC node
        double d;
    };

    /// Terminal solution for given states and total output current.
    Terminal terminal(const double* x, double io) const {
        if (sc_.desired_z) {
            const double r = sc_.params.r_dc;
            const double v_c = x[0];
            double v_dc;
            if (r > 0.0)
                v_dc = (v_c + r * e_ / K_d_ - r * io) / (1.0 + r / K_d_);
            else
                v_dc = v_c;
            return {v_dc, 0.0, (e_ - v_dc) / K_d_, 0.0};
        }
        const double i_f = x[0], v_c = x[1];
        double c0 = 0.0, c1 = 0.0;
        law_feedthrough(x, io, i_f, c0, c1);
        // v_sw* = v_in - k_pi (i_f* - i_f) - (k_pi/T_ii) x_ri = alpha + gamma v_dc
        const double kpi = rc_.loop.k_pi;
        const double alpha = sc_.op.V_in - kpi * (c0 - i_f) - (kpi / rc_.loop.T_ii) * x[2];
        const double gamma = -kpi * c1;
        const double r = sc_.params.r_dc;
        double cp = 0.0;  // pade state contribution to d
        if (pade_.n > 0)
            for (int i = 0; i < pade_.n; ++i) cp += pade_.C(i) * x[3 + blk1_.n + blk2_.n + i];
        double v_dc;
        if (rc_.voltage_feedforward) {
            if (r > 0.0) {
                const double b = v_c - r * io + r * i_f * (gamma + cp);
                const double disc = b * b + 4.0 * r * i_f * alpha;
                if (!(disc > 0.0)) throw std::runtime_error("source terminal: voltage solution lost");
                v_dc = 0.5 * (b + std::sqrt(disc));
            } else {
                v_dc = v_c;
            }
        } else {
            const double Vn = sc_.op.V_o;
            const double denom = 1.0 - r * i_f * gamma / Vn;
            v_dc = (v_c - r * io + r * i_f * (alpha / Vn + cp)) / denom;
        }
        if (!(v_dc > 0.0)) throw std::runtime_error("source terminal: non-positive bus voltage");
        double d_raw;
        if (rc_.voltage_feedforward)
            d_raw = (alpha + gamma * v_dc) / v_dc;
        else
            d_raw = (alpha + gamma * v_dc) / sc_.op.V_o;
        const double d = d_raw + cp;
        return {v_dc, i_f, d * i_f, d};
    }

    void derivs(const double* x, double io, double* dx) const {
        if (sc_.desired_z) {
            const Terminal t = terminal(x, io);
            dx[0] = (t.i_c - io) / sc_.params.C_dc;
            return;
        }
        const Terminal t = terminal(x, io);
        const double i_f = x[0];
        dx[0] = (sc_.op.V_in - t.d * t.v_dc) / sc_.params.L_f;
        dx[1] = (t.i_c - io) / sc_.params.C_dc;
        double c0 = 0.0, c1 = 0.0;
        law_feedthrough(x, io, i_f, c0, c1);
        const double ifstar = c0 + c1 * t.v_dc;
        dx[2] = ifstar - i_f;
        law_derivs(x, io, i_f, t.v_dc, dx);
        if (pade_.n > 0) {
            double d_raw = t.d;
            for (int i = 0; i < pade_.n; ++i) d_raw -= pade_.C(i) * x[3 + blk1_.n + blk2_.n + i];
            pade_.derivs(x + 3 + blk1_.n + blk2_.n, d_raw, dx + 3 + blk1_.n + blk2_.n);
        }
    }

    /// Near-equilibrium initial state for the nominal operating point.
    void equilibrium_guess(double* x) const {
        if (sc_.desired_z) {
            x[0] = sc_.op.V_o;
            return;
        }
        x[0] = sc_.op.I_f;
        x[1] = sc_.op.V_o;
        x[2] = 0.0;
        double* x1 = x + 3;
        double* x2 = x1 + blk1_.n;
        switch (rc_.kind) {
            case ControllerKind::IVDroop:
                blk1_.equilibrium_guess(0.0, 0.0, x1);
                break;
            case ControllerKind::VIDroopIf:
            case ControllerKind::VIDroopIo:
                blk1_.equilibrium_guess(0.0, sc_.op.I_f, x1);
                break;
            case ControllerKind::VIDroopZd:
                blk1_.equilibrium_guess(0.0, sc_.op.I_f, x1);
                blk2_.equilibrium_guess(0.0, 0.0, x2);
                break;
            case ControllerKind::VDCM: {
                const double y_dcm = sc_.op.V_o + K_d_ * sc_.op.I_f;
                double u_dcm = 0.0;
                try {
                    u_dcm = y_dcm / rc_.R_dcm.eval(Complex(0.0, 0.0)).real();
                } catch (const std::domain_error&) {
                    u_dcm = 0.0;
                }
                blk1_.equilibrium_guess(0.0, u_dcm, x1);
                blk2_.equilibrium_guess(u_dcm, y_dcm, x2);
                break;
            }
        }
        if (pade_.n > 0)
            pade_.equilibrium_guess(sc_.op.D, sc_.op.D, x + 3 + blk1_.n + blk2_.n);
    }

private:
    // di_f* = c0 + c1 * v_dc expressed for the nonlinear law
    void law_feedthrough(const double* x, double io, double i_f, double& c0, double& c1) const {
        const double* x1 = x + 3;
        const double* x2 = x1 + blk1_.n;
        switch (rc_.kind) {
            case ControllerKind::IVDroop: {
                // i_f* = i_set + G_lpf(v_set - v_dc)/K_d
                double yx = 0.0;
                for (int i = 0; i < blk1_.n; ++i) yx += blk1_.C(i) * x1[i];
                c0 = i_set_ + (yx + blk1_.D * v_set_) / K_d_;
                c1 = -blk1_.D / K_d_;
                break;
            }
            case ControllerKind::VIDroopIf:
            case ControllerKind::VIDroopIo: {
                const double droop = K_d_ * (i_set_ - (rc_.kind == ControllerKind::VIDroopIf ? i_f : io));
                double yx = 0.0;
                for (int i = 0; i < blk1_.n; ++i) yx += blk1_.C(i) * x1[i];
                c0 = yx + blk1_.D * (v_set_ + droop);
                c1 = -blk1_.D;
                break;
            }
            case ControllerKind::VIDroopZd: {
                const double y_zd = blk2_.output(x2, i_set_ - io);
                double yx = 0.0;
                for (int i = 0; i < blk1_.n; ++i) yx += blk1_.C(i) * x1[i];
                c0 = yx + blk1_.D * (v_set_ + y_zd);
                c1 = -blk1_.D;
                break;
            }
            case ControllerKind::VDCM: {
                // i_f* = (R_dcm(R_v(v_set - v_dc)) - v_dc)/K_d
                double y1x = 0.0, y2x = 0.0;
                for (int i = 0; i < blk1_.n; ++i) y1x += blk1_.C(i) * x1[i];
                for (int i = 0; i < blk2_.n; ++i) y2x += blk2_.C(i) * x2[i];
                const double feed = blk2_.D * blk1_.D;
                c0 = (y2x + blk2_.D * (y1x + blk1_.D * v_set_)) / K_d_;
                c1 = -(feed + 1.0) / K_d_;
                break;
            }
        }
    }

    void law_derivs(const double* x, double io, double i_f, double v_dc, double* dx) const {
        const double* x1 = x + 3;
        const double* x2 = x1 + blk1_.n;
        double* dx1 = dx + 3;
        double* dx2 = dx1 + blk1_.n;
        switch (rc_.kind) {
            case ControllerKind::IVDroop:
                blk1_.derivs(x1, v_set_ - v_dc, dx1);
                break;
            case ControllerKind::VIDroopIf:
                blk1_.derivs(x1, v_set_ + K_d_ * (i_set_ - i_f) - v_dc, dx1);
                break;
            case ControllerKind::VIDroopIo:
                blk1_.derivs(x1, v_set_ + K_d_ * (i_set_ - io) - v_dc, dx1);
                break;
            case ControllerKind::VIDroopZd: {
                const double y_zd = blk2_.output(x2, i_set_ - io);
                blk1_.derivs(x1, v_set_ + y_zd - v_dc, dx1);
                blk2_.derivs(x2, i_set_ - io, dx2);
                break;
            }
            case ControllerKind::VDCM: {
                const double u1 = v_set_ - v_dc;
                blk1_.derivs(x1, u1, dx1);
                blk2_.derivs(x2, blk1_.output(x1, u1), dx2);
                break;
            }
        }
    }

    SourceConfig sc_;
    ResolvedController rc_{};
    StateSpaceBlock blk1_{}, blk2_{}, pade_{};
    double K_d_ = 1.0, e_ = 0.0, v_set_ = 0.0, i_set_ = 0.0;
    int n_ = 0;
    std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Grid model

struct LoadModel {
    double P;      // constant power command [W]
    double C_in;   // load-side input capacitance [F]
    double tau_p;  // power tracking lag [s]

    void validate() const {
        if (!(P >= 0.0)) throw std::invalid_argument("LoadModel: P must be >= 0");
        if (!(C_in > 0.0)) throw std::invalid_argument("LoadModel: C_in must be > 0");
        if (!(tau_p >= 0.0)) throw std::invalid_argument("LoadModel: tau_p must be >= 0");
    }
};

struct SimEvent {
    double time;
    int load;
    double power;
};

struct SimConfig {
    double t_end = 0.3;
    double dt = 1e-6;
    std::vector<SimEvent> events;
    int output_stride = 1;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
        if (!(t_end > 0.0)) throw std::invalid_argument("SimConfig: t_end must be > 0");
        if (output_stride < 1) throw std::invalid_argument("SimConfig: output_stride must be >= 1");
        for (const auto& e : events)
            if (e.time < 0.0 || e.time > t_end)
                throw std::invalid_argument("SimConfig: event time outside [0, t_end]");
    }
};

struct Trace {
    std::vector<std::string> columns;              // time_s, v_dc_V, i_f_A, i_o_A, i_c_A, v_g1_V, ...
    std::vector<std::vector<double>> rows;
    std::vector<double> event_times;
};

class SimModel {
public:
    SimModel(const SourceConfig& source, std::vector<GridModel> lines, std::vector<LoadModel> loads)
        : src_(source), lines_(std::move(lines)), loads_(std::move(loads)) {
        if (loads_.empty()) throw std::invalid_argument("SimModel: at least one load required");
        if (lines_.size() != loads_.size())
            throw std::invalid_argument("SimModel: one line per load required");
        for (const auto& l : lines_) {
            l.validate();
            if (!(l.L_g > 0.0)) throw std::invalid_argument("SimModel: line inductance must be > 0");
        }
        for (const auto& l : loads_) l.validate();
        has_p_ = false;
        for (const auto& l : loads_)
            if (l.tau_p > 0.0) has_p_ = true;
        per_load_ = has_p_ ? 3 : 2;
        n_ = src_.nstates() + per_load_ * static_cast<int>(loads_.size());
        x0_ = solve_equilibrium();
    }

    int nstates() const { return n_; }
    const SourceRealization& source() const { return src_; }
    const std::vector<GridModel>& lines() const { return lines_; }
    const std::vector<LoadModel>& loads() const { return loads_; }
    const Eigen::VectorXd& initial_state() const { return x0_; }
    int states_per_load() const { return per_load_; }

    std::vector<std::string> state_names() const {
        std::vector<std::string> names = src_.state_names();
        for (std::size_t k = 0; k < loads_.size(); ++k) {
            names.push_back("i_line" + std::to_string(k + 1));
            names.push_back("v_g" + std::to_string(k + 1));
            if (has_p_) names.push_back("p" + std::to_string(k + 1));
        }
        return names;
    }

    double total_io(const double* x) const {
        double io = 0.0;
        for (std::size_t k = 0; k < loads_.size(); ++k) io += x[src_.nstates() + per_load_ * static_cast<int>(k)];
        return io;
    }

    void rhs(const double* x, const std::vector<double>& p_cmd, double* dx) const {
        const int ns = src_.nstates();
        const double io = total_io(x);
        src_.derivs(x, io, dx);
        const double v_dc = src_.terminal(x, io).v_dc;
        for (std::size_t k = 0; k < loads_.size(); ++k) {
            const int o = ns + per_load_ * static_cast<int>(k);
            const double il = x[o], vg = x[o + 1];
            if (!(vg > 1e-3)) throw std::runtime_error("load node voltage collapsed");
            const double p = has_p_ && loads_[k].tau_p > 0.0 ? x[o + 2] : p_cmd[k];
            dx[o] = (v_dc - vg - lines_[k].r_g * il) / lines_[k].L_g;
            dx[o + 1] = (il - p / vg) / loads_[k].C_in;
            if (has_p_) dx[o + 2] = loads_[k].tau_p > 0.0 ? (p_cmd[k] - p) / loads_[k].tau_p : 0.0;
        }
    }

    /// Scaled equilibrium residual max_i |f_i| T_ref / (1 + |x_i|), T_ref = 1 ms.
    double equilibrium_residual(const Eigen::VectorXd& x, const std::vector<double>& p_cmd) const {
        Eigen::VectorXd f(n_);
        rhs(x.data(), p_cmd, f.data());
        double m = 0.0;
        for (int i = 0; i < n_; ++i) m = std::max(m, std::abs(f(i)) * 1e-3 / (1.0 + std::abs(x(i))));
        return m;
    }

    std::vector<double> nominal_powers() const {
        std::vector<double> p(loads_.size());
        for (std::size_t k = 0; k < loads_.size(); ++k) p[k] = loads_[k].P;
        return p;
    }

private:
    Eigen::VectorXd solve_equilibrium() {
        const std::vector<double> p_cmd = nominal_powers();
        Eigen::VectorXd x(n_);
        x.setZero();
        src_.equilibrium_guess(x.data());
        const double v0 = src_.config().op.V_o;
        const double i_share = src_.config().op.I_o / static_cast<double>(loads_.size());
        for (std::size_t k = 0; k < loads_.size(); ++k) {
            const int o = src_.nstates() + per_load_ * static_cast<int>(k);
            x(o) = i_share;
            x(o + 1) = v0 - lines_[k].r_g * i_share;
            if (has_p_) x(o + 2) = p_cmd[k];
        }
        Eigen::VectorXd f(n_);
        auto eval = [&](const Eigen::VectorXd& xx, Eigen::VectorXd& ff) { rhs(xx.data(), p_cmd, ff.data()); };
        for (int it = 0; it < 60; ++it) {
            eval(x, f);
            if (equilibrium_residual(x, p_cmd) < 1e-12) break;
            Eigen::MatrixXd J(n_, n_);
            Eigen::VectorXd xp = x, xm = x, fp(n_), fm(n_);
            for (int i = 0; i < n_; ++i) {
                const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
                xp(i) += h;
                xm(i) -= h;
                eval(xp, fp);
                eval(xm, fm);
                J.col(i) = (fp - fm) / (2.0 * h);
                xp(i) = x(i);
                xm(i) = x(i);
            }
            Eigen::VectorXd step = J.colPivHouseholderQr().solve(-f);
            // damped update
            double lambda = 1.0;
            const double r0 = f.norm();
            for (int halve = 0; halve < 8; ++halve) {
                Eigen::VectorXd xn = x + lambda * step;
                try {
                    eval(xn, f);
                    if (f.norm() <= r0 || lambda < 0.02) {
                        x = xn;
                        break;
                    }
                } catch (const std::runtime_error&) {
                    // fell outside the valid region; shrink
                }
                lambda *= 0.5;
            }
        }
        if (equilibrium_residual(x, p_cmd) > 1e-9)
            throw std::runtime_error("SimModel: steady-state solve did not converge");
        return x;
    }

    SourceRealization src_;
    std::vector<GridModel> lines_;
    std::vector<LoadModel> loads_;
    bool has_p_ = false;
    int per_load_ = 3;
    int n_ = 0;
    Eigen::VectorXd x0_;
};

inline SimModel build_model(const SourceConfig& source, const std::vector<GridModel>& lines,
                            const std::vector<LoadModel>& loads) {
    return SimModel(source, lines, loads);
}

// ---------------------------------------------------------------------------
// Fixed-step RK4 simulation

inline Trace simulate(const SimModel& model, const SimConfig& cfg,
                      const Eigen::VectorXd* initial_override = nullptr) {
    cfg.validate();
    if (initial_override && initial_override->size() != model.nstates())
        throw std::invalid_argument("simulate: initial state size mismatch");
    for (const auto& e : cfg.events)
        if (e.load < 0 || e.load >= static_cast<int>(model.loads().size()))
            throw std::invalid_argument("simulate: event load index out of range");
    const int n = model.nstates();
    const long steps = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
    std::vector<double> p_cmd = model.nominal_powers();
    // events applied at the first step boundary >= event time
    std::vector<std::pair<long, const SimEvent*>> sched;
    for (const auto& e : cfg.events)
        sched.emplace_back(static_cast<long>(std::ceil(e.time / cfg.dt - 1e-9)), &e);
    std::sort(sched.begin(), sched.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    Trace tr;
    tr.columns = {"time_s", "v_dc_V", "i_f_A", "i_o_A", "i_c_A"};
    for (std::size_t k = 0; k < model.loads().size(); ++k)
        tr.columns.push_back("v_g" + std::to_string(k + 1) + "_V");
    for (const auto& e : cfg.events) tr.event_times.push_back(e.time);

    Eigen::VectorXd x = initial_override ? *initial_override : model.initial_state();
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), tmp(n);
    const int ns = model.source().nstates();
    const int pl = model.states_per_load();

    auto record = [&](long step, const Eigen::VectorXd& xs) {
        if (step % cfg.output_stride != 0 && step != steps) return;
        const double io = model.total_io(xs.data());
        const auto t = model.source().terminal(xs.data(), io);
        std::vector<double> row;
        row.reserve(tr.columns.size());
        row.push_back(static_cast<double>(step) * cfg.dt);
        row.push_back(t.v_dc);
        row.push_back(t.i_f);
        row.push_back(io);
        row.push_back(t.i_c);
        for (std::size_t k = 0; k < model.loads().size(); ++k)
            row.push_back(xs(ns + pl * static_cast<int>(k) + 1));
        for (double v : row)
            if (!std::isfinite(v)) throw std::runtime_error("simulate: non-finite output");
        tr.rows.push_back(std::move(row));
    };

    std::size_t next_ev = 0;
    record(0, x);
    for (long k = 0; k < steps; ++k) {
        while (next_ev < sched.size() && sched[next_ev].first <= k) {
            p_cmd[static_cast<std::size_t>(sched[next_ev].second->load)] = sched[next_ev].second->power;
            ++next_ev;
        }
        try {
            model.rhs(x.data(), p_cmd, k1.data());
            tmp = x + 0.5 * cfg.dt * k1;
            model.rhs(tmp.data(), p_cmd, k2.data());
            tmp = x + 0.5 * cfg.dt * k2;
            model.rhs(tmp.data(), p_cmd, k3.data());
            tmp = x + cfg.dt * k3;
            model.rhs(tmp.data(), p_cmd, k4.data());
        } catch (const std::runtime_error& err) {
            throw std::runtime_error("simulate: diverged at t = " +
                                     std::to_string(static_cast<double>(k) * cfg.dt) + " s (" + err.what() + ")");
        }
        x += (cfg.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(x(i)) || std::abs(x(i)) > 1e9)
                throw std::runtime_error("simulate: diverged at t = " +
                                         std::to_string(static_cast<double>(k + 1) * cfg.dt) + " s");
        record(k + 1, x);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Load-step metrics

struct LoadStepMetrics {
    double undershoot = 0.0;              // depth below v_nom after the event [V]
    double overshoot = 0.0;               // height above v_nom after the event [V]
    double settling_time_2pct = 0.0;      // time to stay within 2% of the step change [s]
    double steady_state_deviation = 0.0;  // v_nom - v(t_end) [V]
};

inline LoadStepMetrics load_step_metrics(const Trace& trace, double v_nom) {
    if (trace.event_times.size() != 1)
        throw std::invalid_argument("load_step_metrics: trace must contain exactly one event");
    const double t_e = trace.event_times.front();
    if (trace.rows.empty()) throw std::invalid_argument("load_step_metrics: empty trace");
    LoadStepMetrics m;
    double vmin = v_nom, vmax = v_nom;
    const double v_end = trace.rows.back()[1];
    double last_outside = t_e;
    bool any = false;
    for (const auto& row : trace.rows) {
        if (row[0] < t_e) continue;
        any = true;
        vmin = std::min(vmin, row[1]);
        vmax = std::max(vmax, row[1]);
    }
    if (!any) throw std::invalid_argument("load_step_metrics: no samples after the event");
    // 2% band around the settled value, scaled by the largest excursion
    const double band = 0.02 * std::max({std::abs(v_nom - v_end), v_nom - vmin, vmax - v_nom, 1e-9});
    for (const auto& row : trace.rows) {
        if (row[0] < t_e) continue;
        if (std::abs(row[1] - v_end) > band) last_outside = row[0];
    }
    m.undershoot = std::max(0.0, v_nom - vmin);
    m.overshoot = std::max(0.0, vmax - v_nom);
    m.steady_state_deviation = v_nom - v_end;
    m.settling_time_2pct = std::max(0.0, last_outside - t_e);
    return m;
}

// ---------------------------------------------------------------------------
// Source-only model (prescribed output current): injection + linearization

class SourceOnly {
public:
    explicit SourceOnly(const SourceConfig& sc) : src_(sc) {
        x0_ = Eigen::VectorXd::Zero(src_.nstates());
        src_.equilibrium_guess(x0_.data());
        polish();
    }

    const SourceRealization& source() const { return src_; }
    const Eigen::VectorXd& equilibrium() const { return x0_; }
    int nstates() const { return src_.nstates(); }

    double residual(const Eigen::VectorXd& x) const {
        Eigen::VectorXd f(src_.nstates());
        src_.derivs(x.data(), src_.config().op.I_o, f.data());
        double m = 0.0;
        for (int i = 0; i < src_.nstates(); ++i)
            m = std::max(m, std::abs(f(i)) * 1e-3 / (1.0 + std::abs(x(i))));
        return m;
    }

private:
    void polish() {
        const int n = src_.nstates();
        const double io = src_.config().op.I_o;
        Eigen::VectorXd f(n);
        for (int it = 0; it < 50 && residual(x0_) > 1e-13; ++it) {
            Eigen::MatrixXd J(n, n);
            Eigen::VectorXd xp = x0_, xm = x0_, fp(n), fm(n);
            for (int i = 0; i < n; ++i) {
                const double h = 1e-6 * std::max(1.0, std::abs(x0_(i)));
                xp(i) += h;
                xm(i) -= h;
                src_.derivs(xp.data(), io, fp.data());
                src_.derivs(xm.data(), io, fm.data());
                J.col(i) = (fp - fm) / (2.0 * h);
                xp(i) = x0_(i);
                xm(i) = x0_(i);
            }
            src_.derivs(x0_.data(), io, f.data());
            x0_ += J.colPivHouseholderQr().solve(-f);
        }
        if (residual(x0_) > 1e-9)
            throw std::runtime_error("SourceOnly: equilibrium solve did not converge");
    }

    SourceRealization src_;
    Eigen::VectorXd x0_;
};

struct LinearModel {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;       // d/d(i_o)
    Eigen::RowVectorXd C;    // v_dc output row
    double D = 0.0;
};

/// Central-difference linearization of the source block around its
/// equilibrium, with the output current as input and v_dc as output.
inline LinearModel linearize_numeric(const SourceOnly& m) {
    if (m.residual(m.equilibrium()) > 1e-9)
        throw std::invalid_argument("linearize_numeric: not at equilibrium");
    const int n = m.nstates();
    const double io0 = m.source().config().op.I_o;
    const Eigen::VectorXd& x0 = m.equilibrium();
    LinearModel lm;
    lm.A.resize(n, n);
    lm.B.resize(n);
    lm.C.resize(n);
    Eigen::VectorXd xp(n), xm(n), fp(n), fm(n);
    for (int i = 0; i < n; ++i) {
        const double h = std::max(1e-6, 1e-6 * std::abs(x0(i)));
        xp = x0;
        xm = x0;
        xp(i) += h;
        xm(i) -= h;
        m.source().derivs(xp.data(), io0, fp.data());
        m.source().derivs(xm.data(), io0, fm.data());
        lm.A.col(i) = (fp - fm) / (2.0 * h);
        lm.C(i) = (m.source().terminal(xp.data(), io0).v_dc - m.source().terminal(xm.data(), io0).v_dc) / (2.0 * h);
    }
    const double hu = std::max(1e-6, 1e-6 * std::abs(io0));
    m.source().derivs(x0.data(), io0 + hu, fp.data());
    m.source().derivs(x0.data(), io0 - hu, fm.data());
    lm.B = (fp - fm) / (2.0 * hu);
    lm.D = (m.source().terminal(x0.data(), io0 + hu).v_dc - m.source().terminal(x0.data(), io0 - hu).v_dc) /
           (2.0 * hu);
    return lm;
}

/// Z_out(jw) from the linearized model: -(C (jwI - A)^{-1} B + D).
inline Complex zout_from_statespace(const LinearModel& lm, double omega) {
    const int n = static_cast<int>(lm.A.rows());
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(n, n) * Complex(0.0, omega) - lm.A.cast<Complex>();
    Eigen::VectorXcd sol = M.partialPivLu().solve(lm.B.cast<Complex>());
    Complex y = lm.D;
    for (int i = 0; i < n; ++i) y += lm.C(i) * sol(i);
    return -y;
}

/// Sine-injection impedance measurement on the source with a prescribed
/// output current i_o(t) = I_o + A sin(w t). The fundamental of v_dc and i_o
/// is extracted by single-bin discrete Fourier correlation over the second
/// half of the record (an integer number of cycles).
inline std::vector<ComplexSample> measure_impedance_injection(const SourceConfig& source,
                                                              const std::vector<double>& omegas,
                                                              double amplitude, int cycles) {
    if (cycles < 20) throw std::invalid_argument("measure_impedance_injection: cycles must be >= 20");
    if (!(amplitude > 0.0)) throw std::invalid_argument("measure_impedance_injection: amplitude must be > 0");
    SourceOnly m(source);
    const int n = m.nstates();
    const double io0 = source.op.I_o;
    std::vector<ComplexSample> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        const double period = 2.0 * std::numbers::pi / w;
        const long n_per = std::max<long>(512, static_cast<long>(std::ceil(period / 2e-5)));
        const double dt = period / static_cast<double>(n_per);
        const long steps = n_per * cycles;
        const long skip = n_per * (cycles / 2);
        Eigen::VectorXd x = m.equilibrium(), k1(n), k2(n), k3(n), k4(n), tmp(n);
        auto io_at = [&](double t) { return io0 + amplitude * std::sin(w * t); };
        Complex acc_v(0.0, 0.0), acc_i(0.0, 0.0);
        long count = 0;
        for (long k = 0; k < steps; ++k) {
            const double t = static_cast<double>(k) * dt;
            m.source().derivs(x.data(), io_at(t), k1.data());
            tmp = x + 0.5 * dt * k1;
            m.source().derivs(tmp.data(), io_at(t + 0.5 * dt), k2.data());
            tmp = x + 0.5 * dt * k2;
            m.source().derivs(tmp.data(), io_at(t + 0.5 * dt), k3.data());
            tmp = x + dt * k3;
            m.source().derivs(tmp.data(), io_at(t + dt), k4.data());
            x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            for (int i = 0; i < n; ++i)
                if (!std::isfinite(x(i)) || std::abs(x(i)) > 1e9)
                    throw std::runtime_error("measure_impedance_injection: diverged");
            if (k + 1 > skip) {
                const double ts = static_cast<double>(k + 1) * dt;
                const Complex ph = std::exp(Complex(0.0, -w * ts));
                acc_v += m.source().terminal(x.data(), io_at(ts)).v_dc * ph;
                acc_i += io_at(ts) * ph;
                ++count;
            }
        }
        if (count == 0) throw std::runtime_error("measure_impedance_injection: record too short");
        out.push_back({w, -(acc_v / acc_i)});
    }
    return out;
}

}  // namespace dcform
