#include "dcform/scenario.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace dcform;
using Catch::Approx;

namespace {

json reference_json() {
    return json::parse(R"({
      "converter": {"V_in": 350.0, "V_o": 700.0, "I_o": 10.0,
                    "L_f": 1e-3, "C_dc": 1e-3, "r_dc": 0.01,
                    "f_s": 20000.0, "T_d": 7.5e-5},
      "controller": {"type": "vi_droop_io", "K_d": 1.0},
      "grid": [{"r_g": 0.05, "L_g": 1e-5}],
      "loads": [{"P": 3498.75, "C_in": 4.7e-4, "tau_p": 1e-3}],
      "sweep": {"omega_min": 1.0, "points": 50},
      "sim": {"t_end": 0.1, "dt": 1e-6,
              "events": [{"time": 0.05, "load": 0, "power": 6997.5}]}
    })");
}

}  // namespace

TEST_CASE("scenario round-trips through serialization") {
    Scenario s = scenario_from_json(reference_json());
    Scenario s2 = scenario_from_json(scenario_to_json(s));
    CHECK(s2.V_in == s.V_in);
    CHECK(s2.V_o == s.V_o);
    CHECK(s2.I_o == s.I_o);
    CHECK(s2.converter.L_f == s.converter.L_f);
    CHECK(s2.converter.T_d == s.converter.T_d);
    CHECK(s2.controller.kind == s.controller.kind);
    CHECK(s2.controller.K_d == s.controller.K_d);
    CHECK(s2.grid.size() == s.grid.size());
    CHECK(s2.grid[0].L_g == s.grid[0].L_g);
    CHECK(s2.loads[0].P == s.loads[0].P);
    CHECK(s2.loads[0].tau_p == s.loads[0].tau_p);
    CHECK(s2.sweep.points == s.sweep.points);
    CHECK(s2.sim.dt == s.sim.dt);
    REQUIRE(s2.sim.events.size() == 1);
    CHECK(s2.sim.events[0].power == s.sim.events[0].power);
    CHECK(s2.classify.mag == s.classify.mag);
    // and the serialized forms agree field-by-field
    CHECK(scenario_to_json(s) == scenario_to_json(s2));
}

TEST_CASE("unknown keys are rejected everywhere") {
    json j = reference_json();
    j["extra"] = 1;
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
    j = reference_json();
    j["converter"]["Lf"] = 1e-3;
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
    j = reference_json();
    j["controller"]["kd"] = 2.0;
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
    j = reference_json();
    j["loads"][0]["Q"] = 1.0;
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
    j = reference_json();
    j["sim"]["events"][0]["when"] = 0.1;
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
}

TEST_CASE("missing and ill-typed keys are schema errors") {
    json j = reference_json();
    j.erase("converter");
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
    j = reference_json();
    j["converter"].erase("V_in");
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
    j = reference_json();
    j["converter"]["V_in"] = "many volts";
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
    j = reference_json();
    j["controller"]["type"] = 42;
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
}

TEST_CASE("controller names are bit-exact") {
    for (const char* name : {"iv_droop", "vi_droop_if", "vi_droop_io", "vi_droop_zd", "vdcm"}) {
        json j = reference_json();
        j["controller"]["type"] = name;
        CHECK(scenario_from_json(j).controller.kind == controller_kind_from_name(name));
    }
    json j = reference_json();
    j["controller"]["type"] = "IV_droop";
    CHECK_THROWS_AS(scenario_from_json(j), std::invalid_argument);
    j["controller"]["type"] = "desired";
    CHECK(scenario_from_json(j).desired_source);
}

TEST_CASE("domain invariants are validated on load") {
    json j = reference_json();
    j["converter"]["V_in"] = 701.0;  // boost cannot step down
    CHECK_THROWS_AS(scenario_from_json(j), std::invalid_argument);
    j = reference_json();
    j["controller"]["K_d"] = -1.0;
    CHECK_THROWS_AS(scenario_from_json(j), std::invalid_argument);
    j = reference_json();
    j["sim"]["events"][0]["load"] = 3;
    CHECK_THROWS_AS(scenario_from_json(j), std::invalid_argument);
    j = reference_json();
    j["sim"]["events"][0]["time"] = 5.0;  // beyond t_end
    CHECK_THROWS_AS(scenario_from_json(j), std::invalid_argument);
    j = reference_json();
    j["grid"] = json::array();  // length mismatch with loads
    CHECK_THROWS_AS(scenario_from_json(j), std::invalid_argument);
}

TEST_CASE("transfer-function overrides parse and apply") {
    json j = reference_json();
    j["controller"]["type"] = "vi_droop_zd";
    j["controller"]["z_d"] = {{"num", {2.0, 2e-3}}, {"den", {1.0, 1e-4}}};
    Scenario s = scenario_from_json(j);
    REQUIRE(s.controller.Z_d.has_value());
    CHECK(s.controller.Z_d->eval(Complex(0.0, 0.0)).real() == Approx(2.0));
    // improper override is a model error
    j["controller"]["z_d"] = {{"num", {1.0, 1.0, 1.0}}, {"den", {1.0, 1.0}}};
    CHECK_THROWS_AS(scenario_from_json(j), std::invalid_argument);
    // malformed override is a schema error
    j["controller"]["z_d"] = {{"num", json::array()}, {"den", {1.0}}};
    CHECK_THROWS_AS(scenario_from_json(j), SchemaError);
}

TEST_CASE("zout override feeds the analysis directly") {
    json j = reference_json();
    j["zout_override"] = {{"num", {2.0}}, {"den", {1.0}}};
    Scenario s = scenario_from_json(j);
    REQUIRE(s.zout_override.has_value());
    CHECK(std::abs(s.zout_override->eval_jw(10.0)) == Approx(2.0));
}

TEST_CASE("default sweep ceiling is half the switching frequency in rad/s") {
    Scenario s = scenario_from_json(reference_json());
    CHECK(s.omega_max() == Approx(std::numbers::pi * 20e3));
    auto grid = s.sweep_grid();
    CHECK(grid.size() == 50);
    CHECK(grid.front() == Approx(1.0));
    CHECK(grid.back() == Approx(std::numbers::pi * 20e3));
}

TEST_CASE("file loading reports missing files and parse errors") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/path.json"), SchemaError);
    const auto tmp = std::filesystem::temp_directory_path() / "dcform_bad.json";
    {
        std::ofstream out(tmp);
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_scenario(tmp.string()), SchemaError);
    std::filesystem::remove(tmp);
}
