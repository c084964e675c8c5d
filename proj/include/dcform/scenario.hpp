#pragma once

// Scenario files: a single JSON document with top-level keys `converter`,
// `controller`, `grid`, `loads`, `sweep`, `sim` (plus optional `classify` and
// `zout_override`). Unknown keys are rejected. Transfer-function overrides are
// given as {"num": [...], "den": [...]} with ascending coefficients.

#include "dcform/analysis.hpp"
#include "dcform/simgrid.hpp"

#include "dcform/io.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <string>

namespace dcform {

using json = nlohmann::json;

/// Structural problem in a scenario document (missing/unknown/ill-typed key).
class SchemaError : public InputError {
public:
    using InputError::InputError;
};

struct SweepConfig {
    double omega_min = 1.0;
    double omega_max = 0.0;  // 0 => pi * f_s, filled at load
    int points = 400;
};

struct Scenario {
    double V_in = 0.0, V_o = 0.0, I_o = 0.0;
    BoostParams converter{};
    ControllerConfig controller{};
    bool desired_source = false;  // controller type "desired"
    std::vector<GridModel> grid;
    std::vector<LoadModel> loads;
    SweepConfig sweep{};
    SimConfig sim{};
    ClassifyTols classify{};
    std::optional<RationalTF> zout_override;

    OperatingPoint op() const { return operating_point(V_in, V_o, I_o); }
    SourceConfig source_config() const {
        return SourceConfig{converter, op(), controller, desired_source};
    }
    double omega_max() const {
        return sweep.omega_max > 0.0 ? sweep.omega_max : std::numbers::pi * converter.f_s;
    }
    std::vector<double> sweep_grid() const {
        return logspace(sweep.omega_min, omega_max(), sweep.points);
    }

    void validate() const {
        converter.validate();
        (void)op();
        if (!desired_source) (void)resolve_controller(controller, converter);
        else if (!(controller.K_d > 0.0)) throw std::invalid_argument("scenario: K_d must be > 0");
        for (const auto& g : grid) g.validate();
        for (const auto& l : loads) l.validate();
        if (grid.size() != loads.size())
            throw std::invalid_argument("scenario: grid and loads must have the same length");
        (void)logspace(sweep.omega_min, omega_max(), sweep.points);
        sim.validate();
        for (const auto& e : sim.events)
            if (e.load < 0 || e.load >= static_cast<int>(loads.size()))
                throw std::invalid_argument("scenario: event load index out of range");
        if (classify.mag < 0.0 || classify.phase < 0.0)
            throw std::invalid_argument("scenario: classify tolerances must be >= 0");
    }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw SchemaError(where + ": unknown key '" + it.key() + "'");
}

inline double get_num(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw SchemaError(where + ": missing key '" + key + "'");
    if (!j.at(key).is_number()) throw SchemaError(where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline double get_num_or(const json& j, const std::string& key, double dflt, const std::string& where) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number()) throw SchemaError(where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline bool get_bool_or(const json& j, const std::string& key, bool dflt, const std::string& where) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_boolean()) throw SchemaError(where + ": '" + key + "' must be a boolean");
    return j.at(key).get<bool>();
}

inline RationalTF parse_tf(const json& j, const std::string& where) {
    check_keys(j, {"num", "den"}, where);
    auto coeffs = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_array() || j.at(key).empty())
            throw SchemaError(where + ": '" + std::string(key) + "' must be a non-empty array");
        std::vector<double> v;
        for (const auto& x : j.at(key)) {
            if (!x.is_number()) throw SchemaError(where + ": coefficients must be numbers");
            v.push_back(x.get<double>());
        }
        return Polynomial(std::move(v));
    };
    Polynomial num = coeffs("num"), den = coeffs("den");
    if (den.is_zero()) throw std::invalid_argument(where + ": zero denominator");
    return RationalTF(std::move(num), std::move(den));
}

inline json tf_to_json(const RationalTF& tf) {
    return json{{"num", tf.num().coeffs()}, {"den", tf.den().coeffs()}};
}

}  // namespace detail

inline Scenario scenario_from_json(const json& j) {
    using namespace detail;
    check_keys(j, {"converter", "controller", "grid", "loads", "sweep", "sim", "classify", "zout_override"},
               "scenario");
    Scenario s;

    if (!j.contains("converter")) throw SchemaError("scenario: missing 'converter'");
    const json& jc = j.at("converter");
    check_keys(jc, {"V_in", "V_o", "I_o", "L_f", "C_dc", "r_dc", "f_s", "T_d"}, "converter");
    s.V_in = get_num(jc, "V_in", "converter");
    s.V_o = get_num(jc, "V_o", "converter");
    s.I_o = get_num(jc, "I_o", "converter");
    s.converter.L_f = get_num(jc, "L_f", "converter");
    s.converter.C_dc = get_num(jc, "C_dc", "converter");
    s.converter.r_dc = get_num_or(jc, "r_dc", 0.0, "converter");
    s.converter.f_s = get_num(jc, "f_s", "converter");
    s.converter.T_d = get_num_or(jc, "T_d", 1.5 / get_num(jc, "f_s", "converter"), "converter");

    if (!j.contains("controller")) throw SchemaError("scenario: missing 'controller'");
    const json& jk = j.at("controller");
    check_keys(jk,
               {"type", "K_d", "bandwidth_fraction", "voltage_feedforward", "pade_delay", "J_v", "D_v",
                "g_lpf", "r_v", "z_d", "r_dcm"},
               "controller");
    if (!jk.contains("type") || !jk.at("type").is_string())
        throw SchemaError("controller: missing 'type' string");
    const std::string type = jk.at("type").get<std::string>();
    if (type == "desired") {
        s.desired_source = true;
        s.controller.kind = ControllerKind::IVDroop;  // placeholder, unused
    } else {
        s.controller.kind = controller_kind_from_name(type);
    }
    s.controller.K_d = get_num_or(jk, "K_d", 1.0, "controller");
    s.controller.bandwidth_fraction = get_num_or(jk, "bandwidth_fraction", 0.07, "controller");
    s.controller.voltage_feedforward = get_bool_or(jk, "voltage_feedforward", true, "controller");
    s.controller.pade_delay = get_bool_or(jk, "pade_delay", false, "controller");
    s.controller.J_v = get_num_or(jk, "J_v", 1e-3, "controller");
    s.controller.D_v = get_num_or(jk, "D_v", 1.0, "controller");
    if (jk.contains("g_lpf")) s.controller.G_lpf = parse_tf(jk.at("g_lpf"), "controller.g_lpf");
    if (jk.contains("r_v")) s.controller.R_v = parse_tf(jk.at("r_v"), "controller.r_v");
    if (jk.contains("z_d")) s.controller.Z_d = parse_tf(jk.at("z_d"), "controller.z_d");
    if (jk.contains("r_dcm")) s.controller.R_dcm = parse_tf(jk.at("r_dcm"), "controller.r_dcm");

    if (!j.contains("grid") || !j.at("grid").is_array()) throw SchemaError("scenario: 'grid' must be an array");
    for (const auto& jg : j.at("grid")) {
        check_keys(jg, {"r_g", "L_g"}, "grid[]");
        GridModel g;
        g.r_g = get_num_or(jg, "r_g", 0.0, "grid[]");
        g.L_g = get_num_or(jg, "L_g", 0.0, "grid[]");
        s.grid.push_back(g);
    }
    if (!j.contains("loads") || !j.at("loads").is_array()) throw SchemaError("scenario: 'loads' must be an array");
    for (const auto& jl : j.at("loads")) {
        check_keys(jl, {"P", "C_in", "tau_p"}, "loads[]");
        LoadModel l;
        l.P = get_num(jl, "P", "loads[]");
        l.C_in = get_num(jl, "C_in", "loads[]");
        l.tau_p = get_num_or(jl, "tau_p", 1e-3, "loads[]");
        s.loads.push_back(l);
    }

    if (j.contains("sweep")) {
        const json& js = j.at("sweep");
        check_keys(js, {"omega_min", "omega_max", "points"}, "sweep");
        s.sweep.omega_min = get_num_or(js, "omega_min", 1.0, "sweep");
        s.sweep.omega_max = get_num_or(js, "omega_max", 0.0, "sweep");
        s.sweep.points = static_cast<int>(get_num_or(js, "points", 400.0, "sweep"));
    }
    if (j.contains("sim")) {
        const json& js = j.at("sim");
        check_keys(js, {"t_end", "dt", "events", "output_stride"}, "sim");
        s.sim.t_end = get_num_or(js, "t_end", 0.3, "sim");
        s.sim.dt = get_num_or(js, "dt", 1e-6, "sim");
        s.sim.output_stride = static_cast<int>(get_num_or(js, "output_stride", 1.0, "sim"));
        if (js.contains("events")) {
            if (!js.at("events").is_array()) throw SchemaError("sim: 'events' must be an array");
            for (const auto& je : js.at("events")) {
                detail::check_keys(je, {"time", "load", "power"}, "sim.events[]");
                SimEvent e;
                e.time = get_num(je, "time", "sim.events[]");
                e.load = static_cast<int>(get_num(je, "load", "sim.events[]"));
                e.power = get_num(je, "power", "sim.events[]");
                s.sim.events.push_back(e);
            }
        }
    }
    if (j.contains("classify")) {
        const json& jt = j.at("classify");
        check_keys(jt, {"tol_mag", "tol_phase"}, "classify");
        s.classify.mag = get_num_or(jt, "tol_mag", s.classify.mag, "classify");
        s.classify.phase = get_num_or(jt, "tol_phase", s.classify.phase, "classify");
    }
    if (j.contains("zout_override")) s.zout_override = detail::parse_tf(j.at("zout_override"), "zout_override");

    s.validate();
    return s;
}

inline json scenario_to_json(const Scenario& s) {
    json j;
    j["converter"] = {{"V_in", s.V_in},        {"V_o", s.V_o},   {"I_o", s.I_o},
                      {"L_f", s.converter.L_f}, {"C_dc", s.converter.C_dc}, {"r_dc", s.converter.r_dc},
                      {"f_s", s.converter.f_s}, {"T_d", s.converter.T_d}};
    json jk;
    jk["type"] = s.desired_source ? "desired" : controller_name(s.controller.kind);
    jk["K_d"] = s.controller.K_d;
    jk["bandwidth_fraction"] = s.controller.bandwidth_fraction;
    jk["voltage_feedforward"] = s.controller.voltage_feedforward;
    jk["pade_delay"] = s.controller.pade_delay;
    jk["J_v"] = s.controller.J_v;
    jk["D_v"] = s.controller.D_v;
    if (s.controller.G_lpf) jk["g_lpf"] = detail::tf_to_json(*s.controller.G_lpf);
    if (s.controller.R_v) jk["r_v"] = detail::tf_to_json(*s.controller.R_v);
    if (s.controller.Z_d) jk["z_d"] = detail::tf_to_json(*s.controller.Z_d);
    if (s.controller.R_dcm) jk["r_dcm"] = detail::tf_to_json(*s.controller.R_dcm);
    j["controller"] = jk;
    j["grid"] = json::array();
    for (const auto& g : s.grid) j["grid"].push_back({{"r_g", g.r_g}, {"L_g", g.L_g}});
    j["loads"] = json::array();
    for (const auto& l : s.loads) j["loads"].push_back({{"P", l.P}, {"C_in", l.C_in}, {"tau_p", l.tau_p}});
    j["sweep"] = {{"omega_min", s.sweep.omega_min}, {"omega_max", s.sweep.omega_max}, {"points", s.sweep.points}};
    json je = json::array();
    for (const auto& e : s.sim.events) je.push_back({{"time", e.time}, {"load", e.load}, {"power", e.power}});
    j["sim"] = {{"t_end", s.sim.t_end}, {"dt", s.sim.dt}, {"output_stride", s.sim.output_stride}, {"events", je}};
    j["classify"] = {{"tol_mag", s.classify.mag}, {"tol_phase", s.classify.phase}};
    if (s.zout_override) j["zout_override"] = detail::tf_to_json(*s.zout_override);
    return j;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scenario file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("scenario parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

}  // namespace dcform
