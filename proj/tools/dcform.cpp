// dcform: source-converter grid-forming analysis for DC microgrids.
//
// Subcommands:
//   sweep     frequency sweeps of the forming indices, CSV per index
//   classify  per-index frequency bands per label + passivity screen
//   simulate  time-domain load-step experiment, trace CSV + metrics
//   verify    cross-checks of the impedance algebra against its oracles
//   plot      static SVG figures from sweep/trace CSV files
//
// Exit codes: 0 success, 2 input error, 3 model invariant violation,
// 4 verification failure.

#include "dcform/io.hpp"
#include "dcform/parallel.hpp"
#include "dcform/scenario.hpp"
#include "dcform/svgplot.hpp"
#include "dcform/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace dcform;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct RunTarget {
    std::string name;
    ControllerConfig cfg;
    bool desired = false;
};

// The list of controller runs for a command: the scenario's own controller,
// or one run per --controllers entry (sharing the scenario's gains).
std::vector<RunTarget> run_targets(const Scenario& sc, const std::string& controllers) {
    std::vector<RunTarget> out;
    if (controllers.empty()) {
        out.push_back({sc.desired_source ? "desired" : controller_name(sc.controller.kind), sc.controller,
                       sc.desired_source});
        return out;
    }
    for (const std::string& name : split_list(controllers)) {
        RunTarget t;
        t.name = name;
        t.cfg = sc.controller;
        if (name == "desired") {
            t.desired = true;
        } else {
            t.cfg.kind = controller_kind_from_name(name);
        }
        out.push_back(t);
    }
    return out;
}

ImpedanceModel target_impedance(const Scenario& sc, const RunTarget& t) {
    Scenario s2 = sc;
    s2.desired_source = t.desired;
    return scenario_impedance(s2, t.cfg);
}

std::vector<IndexKind> parse_indices(const std::string& indices) {
    if (indices.empty()) return {IndexKind::OII, IndexKind::CFI, IndexKind::VFI};
    std::vector<IndexKind> out;
    for (const std::string& s : split_list(indices)) {
        if (s == "oii") out.push_back(IndexKind::OII);
        else if (s == "cfi") out.push_back(IndexKind::CFI);
        else if (s == "vfi") out.push_back(IndexKind::VFI);
        else throw InputError("unknown index: " + s);
    }
    return out;
}

RationalTF vfi_line(const Scenario& sc) {
    if (sc.grid.empty()) throw std::invalid_argument("VFI requires a grid line in the scenario");
    const GridModel& g = sc.grid.front();
    if (g.r_g == 0.0 && g.L_g == 0.0)
        throw std::invalid_argument("VFI requires a nonzero line impedance");
    return g.Z_g();
}

IndexCurve compute_curve(const Scenario& sc, const ImpedanceModel& m, IndexKind kind,
                         const std::vector<double>& grid) {
    IndexCurve curve{kind, {}};
    curve.samples.resize(grid.size());
    const RationalTF zg = kind == IndexKind::VFI ? vfi_line(sc) : RationalTF();
    parallel_for(grid.size(), [&](std::size_t i) {
        const double w = grid[i];
        Complex v;
        switch (kind) {
            case IndexKind::OII: v = oii(m.Z_out, m.K_d, w); break;
            case IndexKind::CFI: v = cfi(m.Z_out, m.Y_dc, w); break;
            case IndexKind::VFI: v = vfi(m.Z_out, zg, w); break;
        }
        curve.samples[i] = {w, v, classify(kind, v, sc.classify)};
    });
    return curve;
}

int cmd_sweep(const std::string& scenario_path, const std::string& out_dir, const std::string& controllers,
              const std::string& indices) {
    const Scenario sc = load_scenario(scenario_path);
    const auto kinds = parse_indices(indices);
    const auto grid = sc.sweep_grid();
    for (const RunTarget& t : run_targets(sc, controllers)) {
        const ImpedanceModel m = target_impedance(sc, t);
        const std::string name = sc.zout_override ? "override" : t.name;
        for (IndexKind kind : kinds) {
            const IndexCurve curve = compute_curve(sc, m, kind, grid);
            const fs::path path = fs::path(out_dir) / (name + "_" + index_name(kind) + ".csv");
            atomic_write_file(path, index_curve_csv(curve));
            std::printf("wrote %s\n", path.c_str());
        }
    }
    return 0;
}

struct Band {
    double lo, hi;
    ClassLabel label;
};

std::vector<Band> label_bands(const IndexCurve& c) {
    std::vector<Band> bands;
    for (const auto& s : c.samples) {
        if (!bands.empty() && bands.back().label == s.label)
            bands.back().hi = s.omega;
        else
            bands.push_back({s.omega, s.omega, s.label});
    }
    return bands;
}

int cmd_classify(const std::string& scenario_path, const std::string& out_dir,
                 const std::string& controllers, const std::string& indices) {
    const Scenario sc = load_scenario(scenario_path);
    const auto kinds = parse_indices(indices);
    const auto grid = sc.sweep_grid();
    json out = json::array();
    for (const RunTarget& t : run_targets(sc, controllers)) {
        const ImpedanceModel m = target_impedance(sc, t);
        const std::string name = sc.zout_override ? "override" : t.name;
        std::printf("== %s\n", name.c_str());
        json jctrl{{"controller", name}, {"indices", json::object()}};
        for (IndexKind kind : kinds) {
            const IndexCurve curve = compute_curve(sc, m, kind, grid);
            std::printf("  %s:\n", index_name(kind));
            json jbands = json::array();
            for (const Band& b : label_bands(curve)) {
                std::printf("    %-24s [%.9g, %.9g] rad/s\n", label_name(b.label), b.lo, b.hi);
                jbands.push_back({{"label", label_name(b.label)}, {"omega_lo", b.lo}, {"omega_hi", b.hi}});
            }
            jctrl["indices"][index_name(kind)] = jbands;
        }
        // passivity screen on a 100-points-per-decade grid
        const double wmin = sc.sweep.omega_min, wmax = sc.omega_max();
        const int pts = std::max(2, static_cast<int>(std::ceil(std::log10(wmax / wmin) * 100.0)) + 1);
        RationalTF zg = sc.grid.empty() ? RationalTF::zero() : sc.grid.front().Z_g();
        const PassivityReport rep = passivity_check(m.Z_out, m.K_d, zg, logspace(wmin, wmax, pts));
        std::printf("  passivity condition (i):  %s", rep.condition_i ? "pass" : "FAIL");
        if (!rep.condition_i)
            std::printf("  (violations in [%.9g, %.9g] rad/s)", rep.violations_i.front(), rep.violations_i.back());
        std::printf("\n  passivity condition (ii): %s", rep.condition_ii ? "pass" : "FAIL");
        if (!rep.condition_ii)
            std::printf("  (violations in [%.9g, %.9g] rad/s)", rep.violations_ii.front(),
                        rep.violations_ii.back());
        std::printf("\n");
        jctrl["passivity"] = {{"condition_i", rep.condition_i},
                              {"condition_ii", rep.condition_ii},
                              {"violations_i", rep.violations_i},
                              {"violations_ii", rep.violations_ii}};
        out.push_back(jctrl);
    }
    if (!out_dir.empty())
        atomic_write_file(fs::path(out_dir) / "classification.json", out.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 const std::string& controllers) {
    const Scenario sc = load_scenario(scenario_path);
    json summary = json::array();
    for (const RunTarget& t : run_targets(sc, controllers)) {
        SourceConfig src{sc.converter, sc.op(), t.cfg, t.desired};
        const SimModel model = build_model(src, sc.grid, sc.loads);
        const Trace trace = simulate(model, sc.sim);
        const fs::path path = fs::path(out_dir) / (t.name + "_trace.csv");
        atomic_write_file(path, trace_csv(trace));
        std::printf("wrote %s\n", path.c_str());
        json jm{{"controller", t.name}};
        if (trace.event_times.size() == 1) {
            const LoadStepMetrics m = load_step_metrics(trace, sc.V_o);
            std::printf("  undershoot           %.9g V\n", m.undershoot);
            std::printf("  overshoot            %.9g V\n", m.overshoot);
            std::printf("  settling_time_2pct   %.9g s\n", m.settling_time_2pct);
            std::printf("  steady_state_dev     %.9g V\n", m.steady_state_deviation);
            jm["metrics"] = {{"undershoot_V", m.undershoot},
                             {"overshoot_V", m.overshoot},
                             {"settling_time_2pct_s", m.settling_time_2pct},
                             {"steady_state_deviation_V", m.steady_state_deviation}};
        } else {
            std::printf("  (no single step event; metrics zero)\n");
            jm["metrics"] = {{"undershoot_V", 0.0},
                             {"overshoot_V", 0.0},
                             {"settling_time_2pct_s", 0.0},
                             {"steady_state_deviation_V", 0.0}};
        }
        summary.push_back(jm);
    }
    if (!out_dir.empty())
        atomic_write_file(fs::path(out_dir) / "metrics.json", summary.dump(2) + "\n");
    return 0;
}

int cmd_verify(const std::string& scenario_path, const std::string& controllers, double tol,
               double zout_gain) {
    const Scenario sc = load_scenario(scenario_path);
    const VerifyTols tols = tol > 0.0 ? VerifyTols::uniform(tol) : VerifyTols{};
    VerifyReport rep;
    for (const RunTarget& t : run_targets(sc, controllers)) {
        Scenario s2 = sc;
        s2.desired_source = t.desired;
        s2.controller = t.cfg;
        const VerifyReport part = run_verification(s2, {t.cfg}, tols, zout_gain);
        rep.checks.insert(rep.checks.end(), part.checks.begin(), part.checks.end());
    }
    std::printf("%-36s %14s %12s  %s\n", "check", "worst", "tol", "result");
    for (const auto& c : rep.checks)
        std::printf("%-36s %14.6e %12.3e  %s\n", c.name.c_str(), c.worst, c.tol, c.pass ? "pass" : "FAIL");
    if (!rep.all_pass()) throw VerifyFailure("verification tolerances exceeded");
    std::printf("all checks passed\n");
    return 0;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& out_dir,
             const std::string& scenario_path) {
    double shade_above = 0.0;
    if (!scenario_path.empty()) {
        const Scenario sc = load_scenario(scenario_path);
        shade_above = tune_current_controller(sc.converter, sc.controller.bandwidth_fraction).omega_bi;
    }
    PlotFigure bode;
    bode.title = "Forming index sweep";
    bode.xlabel = "omega [rad/s]";
    bode.logx = true;
    bode.shade_above_x = shade_above;
    bode.panels.resize(2);
    bode.panels[0].ylabel = "magnitude [dB]";
    bode.panels[0].unity_line = true;
    bode.panels[0].unity_value = 0.0;
    bode.panels[1].ylabel = "phase [deg]";
    PlotFigure tplot;
    tplot.title = "DC bus voltage";
    tplot.xlabel = "time [s]";
    tplot.panels.resize(1);
    tplot.panels[0].ylabel = "v_dc [V]";
    int n_sweep = 0, n_trace = 0;
    for (const std::string& in : inputs) {
        const CsvTable t = read_csv(in);
        const std::string stem = fs::path(in).stem().string();
        if (!t.columns.empty() && t.columns[0] == "omega_rad_s") {
            PlotSeries mag{stem, {}, {}}, ph{stem, {}, {}};
            for (const auto& row : t.rows) {
                mag.x.push_back(row[0]);
                mag.y.push_back(row[2]);
                ph.x.push_back(row[0]);
                ph.y.push_back(row[3]);
            }
            bode.panels[0].series.push_back(std::move(mag));
            bode.panels[1].series.push_back(std::move(ph));
            ++n_sweep;
        } else if (!t.columns.empty() && t.columns[0] == "time_s") {
            PlotSeries v{stem, {}, {}};
            for (const auto& row : t.rows) {
                v.x.push_back(row[0]);
                v.y.push_back(row[1]);
            }
            tplot.panels[0].series.push_back(std::move(v));
            ++n_trace;
        } else {
            throw InputError("unrecognized CSV header in " + in);
        }
    }
    if (n_sweep > 0) {
        const fs::path p = fs::path(out_dir) / "indices.svg";
        atomic_write_file(p, render_svg(bode));
        std::printf("wrote %s\n", p.c_str());
    }
    if (n_trace > 0) {
        const fs::path p = fs::path(out_dir) / "traces.svg";
        atomic_write_file(p, render_svg(tplot));
        std::printf("wrote %s\n", p.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grid-forming characterization of DC/DC source converters"};
    app.require_subcommand(1);

    std::string scenario, out_dir = ".", classify_out, controllers, indices;
    double tol = 0.0, zout_gain = 1.0;
    std::vector<std::string> plot_inputs;

    auto* sweep = app.add_subcommand("sweep", "frequency sweeps of the forming indices");
    sweep->add_option("--scenario", scenario, "scenario JSON file")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--controllers", controllers, "comma list of controllers to batch");
    sweep->add_option("--indices", indices, "comma list from oii,cfi,vfi");

    auto* classify_cmd = app.add_subcommand("classify", "label bands and passivity screen");
    classify_cmd->add_option("--scenario", scenario, "scenario JSON file")->required();
    classify_cmd->add_option("--out", classify_out, "directory for classification.json");
    classify_cmd->add_option("--controllers", controllers, "comma list of controllers to batch");
    classify_cmd->add_option("--indices", indices, "comma list from oii,cfi,vfi");

    auto* simulate_cmd = app.add_subcommand("simulate", "time-domain load-step experiment");
    simulate_cmd->add_option("--scenario", scenario, "scenario JSON file")->required();
    simulate_cmd->add_option("--out", out_dir, "output directory");
    simulate_cmd->add_option("--controllers", controllers, "comma list of controllers to batch");

    auto* verify_cmd = app.add_subcommand("verify", "run the cross-validation oracles");
    verify_cmd->add_option("--scenario", scenario, "scenario JSON file")->required();
    verify_cmd->add_option("--controllers", controllers, "comma list of controllers to batch");
    verify_cmd->add_option("--tol", tol, "override all verification tolerances");
    verify_cmd->add_option("--debug-zout-gain", zout_gain,
                           "multiply the analytic Z_out by this factor (fault injection)");

    auto* plot_cmd = app.add_subcommand("plot", "render sweep/trace CSVs to SVG");
    plot_cmd->add_option("csv", plot_inputs, "input CSV files")->required();
    plot_cmd->add_option("--out", out_dir, "output directory");
    plot_cmd->add_option("--scenario", scenario, "scenario for bandwidth shading (optional)");

    try {
        app.parse(argc, argv);
        if (*sweep) return cmd_sweep(scenario, out_dir, controllers, indices);
        if (*classify_cmd) return cmd_classify(scenario, classify_out, controllers, indices);
        if (*simulate_cmd) return cmd_simulate(scenario, out_dir, controllers);
        if (*verify_cmd) return cmd_verify(scenario, controllers, tol, zout_gain);
        if (*plot_cmd) return cmd_plot(plot_inputs, out_dir, scenario);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const VerifyFailure& e) {
        std::fprintf(stderr, "verification failed: %s\n", e.what());
        return 4;
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid model: %s\n", e.what());
        return 3;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "invalid model: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
