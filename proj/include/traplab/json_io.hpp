#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "traplab/addressing.hpp"
#include "traplab/dynamics.hpp"
#include "traplab/errors.hpp"
#include "traplab/field.hpp"
#include "traplab/geometry.hpp"
#include "traplab/metrics.hpp"
#include "traplab/resonator.hpp"

namespace traplab::io {

using nlohmann::json;

inline constexpr int layout_format_version = 1;

// ---------------------------------------------------------------------------
// layout files

inline json to_json(const geometry::ElectrodeLayout& layout) {
    json j;
    j["version"] = layout_format_version;
    j["electrodes"] = json::array();
    for (const auto& e : layout.electrodes) {
        json je;
        je["id"] = e.id;
        je["role"] = geometry::to_string(e.role);
        je["drive_group"] = e.drive_group;
        je["outer"] = json::array();
        for (const auto& v : e.outer) je["outer"].push_back({v.x(), v.y()});
        je["holes"] = json::array();
        for (const auto& h : e.holes) {
            json jh = json::array();
            for (const auto& v : h) jh.push_back({v.x(), v.y()});
            je["holes"].push_back(jh);
        }
        j["electrodes"].push_back(je);
    }
    if (layout.ground_plane_height)
        j["ground_plane_height"] = *layout.ground_plane_height;
    else
        j["ground_plane_height"] = nullptr;
    j["bounding_region"] = {{"min", {layout.bounding_region.min.x(), layout.bounding_region.min.y()}},
                            {"max", {layout.bounding_region.max.x(), layout.bounding_region.max.y()}}};
    return j;
}

inline geometry::Ring ring_from_json(const json& arr) {
    geometry::Ring r;
    for (const auto& v : arr) r.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    return r;
}

inline geometry::ElectrodeLayout layout_from_json(const json& j) {
    geometry::ElectrodeLayout layout;
    if (j.value("version", 0) != layout_format_version)
        throw io_error("unsupported layout file version");
    for (const auto& je : j.at("electrodes")) {
        geometry::Electrode e;
        e.id = je.at("id").get<std::string>();
        e.role = geometry::role_from_string(je.at("role").get<std::string>());
        e.drive_group = je.at("drive_group").get<std::string>();
        e.outer = ring_from_json(je.at("outer"));
        if (je.contains("holes"))
            for (const auto& jh : je.at("holes")) e.holes.push_back(ring_from_json(jh));
        layout.electrodes.push_back(std::move(e));
    }
    if (j.contains("ground_plane_height") && !j.at("ground_plane_height").is_null())
        layout.ground_plane_height = j.at("ground_plane_height").get<double>();
    const auto& br = j.at("bounding_region");
    layout.bounding_region.min = {br.at("min").at(0).get<double>(), br.at("min").at(1).get<double>()};
    layout.bounding_region.max = {br.at("max").at(0).get<double>(), br.at("max").at(1).get<double>()};
    return layout;
}

// ---------------------------------------------------------------------------
// drive / species / scenario

inline json to_json(const field::DriveConfig& d) {
    json j;
    j["v_nom"] = d.v_nom;
    j["omega"] = d.omega;
    j["amplitude_fraction"] = json::object();
    for (const auto& [k, v] : d.amplitude_fraction) j["amplitude_fraction"][k] = v;
    j["dc_bias"] = json::object();
    for (const auto& [k, v] : d.dc_bias) j["dc_bias"][k] = v;
    j["phase"] = d.phase;
    return j;
}

inline field::DriveConfig drive_from_json(const json& j) {
    field::DriveConfig d;
    d.v_nom = j.at("v_nom").get<double>();
    d.omega = j.at("omega").get<double>();
    if (j.contains("amplitude_fraction"))
        for (const auto& [k, v] : j.at("amplitude_fraction").items())
            d.amplitude_fraction[k] = v.get<double>();
    if (j.contains("dc_bias"))
        for (const auto& [k, v] : j.at("dc_bias").items()) d.dc_bias[k] = v.get<double>();
    d.phase = j.value("phase", 0.0);
    return d;
}

inline json to_json(const metrics::Species& s) {
    return {{"charge", s.charge}, {"mass", s.mass}, {"label", s.label}};
}

inline metrics::Species species_from_json(const json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "ca40" || name == "Ca-40+" || name == "ca40_ion")
            return metrics::Species::ca40_ion();
        throw invalid_parameter_error("unknown species preset: " + name);
    }
    metrics::Species s;
    s.charge = j.at("charge").get<double>();
    s.mass = j.at("mass").get<double>();
    s.label = j.value("label", "");
    return s;
}

struct ScenarioFile {
    dynamics::Scenario scenario;
    dynamics::SimState initial;
};

inline ScenarioFile scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
    ScenarioFile sf;
    const auto layout_path = j.at("layout").get<std::string>();
    std::filesystem::path p = layout_path;
    if (p.is_relative()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) throw io_error("cannot open layout file: " + p.string());
    json jl;
    in >> jl;
    sf.scenario.layout = layout_from_json(jl);
    sf.scenario.drive = drive_from_json(j.at("drive"));
    sf.scenario.species = species_from_json(j.at("species"));
    if (j.contains("external_uniform_field")) {
        const auto& e = j.at("external_uniform_field");
        sf.scenario.external_uniform_field = {e.at(0).get<double>(), e.at(1).get<double>(),
                                              e.at(2).get<double>()};
    }
    sf.scenario.gravity = j.value("gravity", false);
    sf.scenario.duration = j.at("duration").get<double>();
    sf.scenario.rf_fraction = j.value("rf_fraction", 100.0);
    sf.scenario.damping = j.value("damping", 0.0);
    sf.scenario.record_stride = j.value("record_stride", 1);
    if (j.contains("initial")) {
        const auto& ji = j.at("initial");
        const auto& pos = ji.at("position");
        sf.initial.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
        if (ji.contains("velocity")) {
            const auto& vel = ji.at("velocity");
            sf.initial.velocity = {vel.at(0).get<double>(), vel.at(1).get<double>(),
                                   vel.at(2).get<double>()};
        }
        sf.initial.time = ji.value("time", 0.0);
    }
    return sf;
}

inline json to_json(const dynamics::Scenario& sc, const std::string& layout_path,
                    const dynamics::SimState& initial) {
    json j;
    j["layout"] = layout_path;
    j["drive"] = to_json(sc.drive);
    j["species"] = to_json(sc.species);
    j["external_uniform_field"] = {sc.external_uniform_field.x(), sc.external_uniform_field.y(),
                                   sc.external_uniform_field.z()};
    j["gravity"] = sc.gravity;
    j["duration"] = sc.duration;
    j["rf_fraction"] = sc.rf_fraction;
    j["damping"] = sc.damping;
    j["record_stride"] = sc.record_stride;
    j["initial"] = {{"position", {initial.position.x(), initial.position.y(), initial.position.z()}},
                    {"velocity", {initial.velocity.x(), initial.velocity.y(), initial.velocity.z()}},
                    {"time", initial.time}};
    return j;
}

// ---------------------------------------------------------------------------
// circuits

inline json to_json(const resonator::TankResonator& t) {
    return {{"L", t.inductance},       {"unloaded_Q", t.unloaded_q}, {"C_A", t.c_a},
            {"C_B", t.c_b},            {"C_trap", t.c_trap},         {"R_source", t.r_source},
            {"drive_frequency", t.drive_frequency}};
}

inline resonator::TankResonator tank_from_json(const json& j) {
    resonator::TankResonator t;
    t.inductance = j.at("L").get<double>();
    t.unloaded_q = j.at("unloaded_Q").get<double>();
    t.c_a = j.at("C_A").get<double>();
    t.c_b = j.at("C_B").get<double>();
    t.c_trap = j.at("C_trap").get<double>();
    t.r_source = j.value("R_source", 50.0);
    t.drive_frequency = j.value("drive_frequency", 0.0);
    return t;
}

inline json to_json(const resonator::CoupledPair& p) {
    return {{"node1", to_json(p.node1)}, {"node2", to_json(p.node2)}, {"C_coupling", p.c_coupling}};
}

inline resonator::CoupledPair pair_from_json(const json& j) {
    resonator::CoupledPair p;
    p.node1 = tank_from_json(j.at("node1"));
    p.node2 = tank_from_json(j.at("node2"));
    p.c_coupling = j.at("C_coupling").get<double>();
    return p;
}

inline json to_json(const resonator::PhaseLockLoop& l) {
    return {{"resonator", to_json(l.resonator)},
            {"varactor_range", {l.varactor_min, l.varactor_max}},
            {"C_D", l.c_divider},
            {"loop_gain", l.loop_gain},
            {"lowpass_corner", l.lowpass_corner},
            {"setpoint_phase", l.setpoint_phase}};
}

inline resonator::PhaseLockLoop loop_from_json(const json& j) {
    resonator::PhaseLockLoop l;
    l.resonator = tank_from_json(j.at("resonator"));
    l.varactor_min = j.at("varactor_range").at(0).get<double>();
    l.varactor_max = j.at("varactor_range").at(1).get<double>();
    l.c_divider = j.value("C_D", 2e-12);
    l.loop_gain = j.value("loop_gain", 0.4);
    l.lowpass_corner = j.value("lowpass_corner", 1e4);
    l.setpoint_phase = j.value("setpoint_phase", std::numbers::pi / 2.0);
    return l;
}

// ---------------------------------------------------------------------------
// reports

inline json to_json(const metrics::TrapSiteReport& r) {
    json j;
    j["position"] = {r.position.x(), r.position.y(), r.position.z()};
    j["value_eV"] = r.value_eV;
    j["secular_frequencies"] = {r.secular_frequencies[0], r.secular_frequencies[1],
                                r.secular_frequencies[2]};
    j["stability_ratios"] = {r.stability_ratios[0], r.stability_ratios[1], r.stability_ratios[2]};
    json axes = json::array();
    for (int c = 0; c < 3; ++c)
        axes.push_back({r.principal_axes(0, c), r.principal_axes(1, c), r.principal_axes(2, c)});
    j["principal_axes"] = axes;
    json hess = json::array();
    for (int a = 0; a < 3; ++a)
        hess.push_back({r.hessian_joule(a, 0), r.hessian_joule(a, 1), r.hessian_joule(a, 2)});
    j["hessian_J_per_m2"] = hess;
    if (std::isfinite(r.depth_eV)) {
        j["depth_eV"] = r.depth_eV;
        j["escape_point"] = {r.escape_point.x(), r.escape_point.y(), r.escape_point.z()};
        j["kappa_d"] = r.kappa_d;
    }
    j["refined"] = r.refined;
    return j;
}

inline json to_json(const addressing::MorphReport& m) {
    json j;
    j["group"] = m.group;
    j["sweep"] = json::array();
    for (const auto& r : m.records) {
        json jr;
        jr["fraction"] = r.fraction;
        jr["has_sites"] = r.has_sites;
        jr["site_a"] = {r.site_a.x(), r.site_a.y(), r.site_a.z()};
        jr["site_b"] = {r.site_b.x(), r.site_b.y(), r.site_b.z()};
        jr["inter_site_distance"] = r.inter_site_distance;
        jr["barrier_eV"] = r.barrier_eV;
        jr["third_trap_present"] = r.third_trap_present;
        jr["third_trap_position"] = {r.third_trap_position.x(), r.third_trap_position.y(),
                                     r.third_trap_position.z()};
        jr["saddle_eV"] = r.saddle_eV;
        jr["merged"] = r.merged;
        jr["omega_min"] = r.min_secular;
        j["sweep"].push_back(jr);
    }
    return j;
}

// ---------------------------------------------------------------------------
// file helpers

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw io_error("cannot parse " + path.string() + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write file: " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace traplab::io
