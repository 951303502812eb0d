// traplab: batch front-end for planar RF trap array analysis.
// Commands: generate, analyze, sweep, simulate, resonator, table1.
// Exit codes: 0 success, 2 parse error, 3 invalid parameter,
//             4 physics failure, 5 I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "traplab/addressing.hpp"
#include "traplab/csv_io.hpp"
#include "traplab/dynamics.hpp"
#include "traplab/field.hpp"
#include "traplab/geometry.hpp"
#include "traplab/json_io.hpp"
#include "traplab/metrics.hpp"
#include "traplab/parallel.hpp"
#include "traplab/resonator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace traplab;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_parse = 2;
constexpr int exit_invalid = 3;
constexpr int exit_physics = 4;
constexpr int exit_io = 5;

struct physics_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    std::uint64_t seed = 0;
    std::string format = "csv";
    json config;  // values from --config; flags override

    fs::path out(const std::string& name) const { return fs::path(out_dir) / name; }

    template <typename T>
    T cfg(const std::string& key, T fallback) const {
        if (config.contains(key)) return config.at(key).get<T>();
        return fallback;
    }
};

geometry::ElectrodeLayout load_layout(const std::string& path) {
    return io::layout_from_json(io::read_json_file(path));
}

metrics::Species resolve_species(const std::string& spec) {
    if (spec == "ca40") return metrics::Species::ca40_ion();
    if (fs::exists(spec)) return io::species_from_json(io::read_json_file(spec));
    throw invalid_parameter_error("unknown species: " + spec + " (use 'ca40' or a JSON file)");
}

// search box over the trapping region: ground discs padded by a third of
// their spread, z bounded by the layout scale or the shield plane
struct Region {
    Eigen::Vector3d lo, hi;
};

Region auto_region(const geometry::ElectrodeLayout& layout) {
    double xmin = 1e30, xmax = -1e30, ymin = 1e30, ymax = -1e30;
    double pitch_guess = 0.0;
    std::vector<Eigen::Vector2d> sites;
    for (const auto& e : layout.electrodes)
        if (e.role == geometry::Role::ground && e.holes.empty()) {
            Eigen::Vector2d c(0, 0);
            for (const auto& v : e.outer) c += v;
            c /= static_cast<double>(e.outer.size());
            sites.push_back(c);
            xmin = std::min(xmin, c.x());
            xmax = std::max(xmax, c.x());
            ymin = std::min(ymin, c.y());
            ymax = std::max(ymax, c.y());
        }
    if (sites.empty())
        throw physics_failure("no minima in region: layout has no site electrodes");
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            const double d = (sites[i] - sites[j]).norm();
            if (d > 1e-9) pitch_guess = (pitch_guess == 0.0) ? d : std::min(pitch_guess, d);
        }
    double scale = pitch_guess;
    if (scale == 0.0) {
        // single site: use the central electrode extent
        double r = 0.0;
        for (const auto& v : layout.electrodes.front().outer) r = std::max(r, v.norm());
        scale = 8.0 * r;
    }
    Region rg;
    const double pad = 0.35 * scale;
    double z_hi = 0.5 * scale;
    if (layout.ground_plane_height) z_hi = std::min(z_hi, 0.92 * *layout.ground_plane_height);
    rg.lo = {xmin - pad, ymin - pad, 0.02 * scale};
    rg.hi = {xmax + pad, ymax + pad, z_hi};
    return rg;
}

// ---------------------------------------------------------------------------

int cmd_generate(const GlobalOpts& g, const std::string& kind, const std::string& out_file,
                 json params) {
    geometry::ElectrodeLayout layout;
    if (kind == "point") {
        geometry::PointTrapOptions opt;
        opt.segments = params.value("segments", 64);
        layout = geometry::make_point_trap(params.value("inner_ground_radius", 200e-6),
                                           params.value("ring_width", 300e-6),
                                           params.value("gap", 50e-6), opt);
    } else {
        geometry::ArrayParams p;
        if (kind == "array2x2") {
            p = geometry::ArrayParams::square(params.value("rows", 2), params.value("cols", 2),
                                              params.value("pitch", 6e-3),
                                              params.value("gap", 50e-6));
        } else if (kind == "folsom4x4") {
            p = geometry::ArrayParams::folsom();
        } else if (kind == "custom-params") {
            p = geometry::ArrayParams::square(params.value("rows", 2), params.value("cols", 2),
                                              params.value("pitch", 6e-3),
                                              params.value("gap", 50e-6));
        } else {
            throw invalid_parameter_error("unknown layout kind: " + kind);
        }
        if (params.contains("inner_ground_radius")) {
            p.inner_ground_radius = params.at("inner_ground_radius").get<double>();
            p.addressing_length = p.pitch - 2.0 * p.inner_ground_radius - 2.0 * p.gap;
        }
        if (params.contains("addressing_length")) p.addressing_length = params.at("addressing_length").get<double>();
        if (params.contains("addressing_width")) p.addressing_width = params.at("addressing_width").get<double>();
        if (params.contains("ring_width")) p.outer_ring_width = params.at("ring_width").get<double>();
        if (params.contains("segments")) p.segments = params.at("segments").get<int>();
        if (params.contains("ground_plane") && !params.at("ground_plane").is_null()) {
            const double h = params.at("ground_plane").get<double>();
            if (h > 0.0) p.ground_plane_height = h;
        }
        layout = geometry::make_addressable_array(p);
    }

    const auto violations = geometry::validate_layout(layout);
    if (!violations.empty())
        throw geometry_error(violations.front().electrode_id + ": " + violations.front().message);
    io::write_json_file(g.out(out_file), io::to_json(layout));

    int addressable = 0;
    for (const auto& e : layout.electrodes)
        if (e.role == geometry::Role::rf_addressable) ++addressable;
    std::printf("wrote %s: %zu electrodes, %d addressable\n",
                g.out(out_file).string().c_str(), layout.electrodes.size(), addressable);
    return exit_ok;
}

field::DriveConfig make_drive(const GlobalOpts& g, double v_nom, double freq_hz,
                              const std::string& fractions_json,
                              const std::string& bias_json) {
    field::DriveConfig d;
    d.v_nom = v_nom;
    d.omega = 2.0 * std::numbers::pi * freq_hz;
    if (!fractions_json.empty()) {
        json j;
        try {
            j = json::parse(fractions_json);
        } catch (const json::parse_error& e) {
            throw io_error(std::string("cannot parse --amplitude-fractions: ") + e.what());
        }
        for (const auto& [k, v] : j.items()) d.amplitude_fraction[k] = v.get<double>();
    }
    if (!bias_json.empty()) {
        json j;
        try {
            j = json::parse(bias_json);
        } catch (const json::parse_error& e) {
            throw io_error(std::string("cannot parse --dc-bias: ") + e.what());
        }
        for (const auto& [k, v] : j.items()) d.dc_bias[k] = v.get<double>();
    }
    d.require_valid();
    (void)g;
    return d;
}

int cmd_analyze(const GlobalOpts& g, const std::string& layout_path, double v_nom, double freq_hz,
                const std::string& species_name, int resolution, double depth_extent,
                const std::string& fractions_json, const std::string& bias_json) {
    const auto layout = load_layout(layout_path);
    const auto species = resolve_species(species_name);
    const auto drive = make_drive(g, v_nom, freq_hz, fractions_json, bias_json);
    const field::FieldModel model(layout);

    const Region rg = auto_region(layout);
    const auto grid = metrics::GridSpec::from_box(rg.lo, rg.hi, resolution, resolution,
                                                  std::max(9, resolution / 2));
    auto minima = metrics::find_minima(model, drive, species, grid);
    if (minima.empty()) throw physics_failure("no minima in region");

    // depth sampling box spans the array and the slab above it
    const auto& bb = layout.bounding_region;
    double z_top = depth_extent > 0 ? depth_extent
                                    : 0.45 * std::max(bb.max.x() - bb.min.x(), bb.max.y() - bb.min.y());
    if (layout.ground_plane_height) z_top = std::min(z_top, 0.97 * *layout.ground_plane_height);
    const auto depth_grid = metrics::GridSpec::from_box(
        {0.8 * bb.min.x(), 0.8 * bb.min.y(), 0.02 * rg.hi.z()},
        {0.8 * bb.max.x(), 0.8 * bb.max.y(), z_top}, 61, 61, 33);

    json sites = json::array();
    double min_depth = std::numeric_limits<double>::infinity();
    for (const auto& m : minima) {
        const auto rep = metrics::site_report(model, drive, species, m, depth_grid);
        min_depth = std::min(min_depth, rep.depth_eV);
        sites.push_back(io::to_json(rep));
    }
    json out;
    out["sites"] = sites;
    out["drive"] = io::to_json(drive);
    out["species"] = io::to_json(species);
    out["seed"] = g.seed;
    io::write_json_file(g.out("sites.json"), out);

    // map slices: horizontal at the mean site height, vertical through the
    // first pair of sites (or through the single site along x)
    double z_slice = 0.0;
    for (const auto& m : minima) z_slice += m.position.z();
    z_slice /= static_cast<double>(minima.size());
    const int n_slice = 81;
    const auto hgrid = metrics::GridSpec::from_box({rg.lo.x(), rg.lo.y(), z_slice},
                                                   {rg.hi.x(), rg.hi.y(), z_slice * (1 + 1e-9)},
                                                   n_slice, n_slice, 2);
    const Eigen::Vector3d p0 = minima.front().position;
    const Eigen::Vector3d p1 = minima.size() > 1 ? minima.back().position
                                                 : p0 + Eigen::Vector3d(rg.hi.x() - rg.lo.x(), 0, 0);
    const double ymid = 0.5 * (p0.y() + p1.y());
    const auto vgrid = metrics::GridSpec::from_box({rg.lo.x(), ymid, rg.lo.z()},
                                                   {rg.hi.x(), ymid * (1 + 1e-12) + 1e-12, rg.hi.z()},
                                                   n_slice, 2, 65);
    if (g.format == "json") {
        io::write_json_file(g.out("map_horizontal.json"), io::field_map_json(hgrid, model, drive, species));
        io::write_json_file(g.out("map_vertical.json"), io::field_map_json(vgrid, model, drive, species));
    } else {
        io::write_field_map_csv(g.out("map_horizontal.csv"), hgrid, model, drive, species);
        io::write_field_map_csv(g.out("map_vertical.csv"), vgrid, model, drive, species);
    }

    std::printf("%zu sites found; min depth %.4g eV; reports in %s\n", minima.size(), min_depth,
                g.out("sites.json").string().c_str());
    for (const auto& m : minima)
        std::printf("  site (%.6g, %.6g, %.6g) m, %.4g eV\n", m.position.x(), m.position.y(),
                    m.position.z(), m.value_eV);
    return exit_ok;
}

int cmd_sweep(const GlobalOpts& g, const std::string& layout_path, double v_nom, double freq_hz,
              const std::string& species_name, const std::string& group,
              const std::string& fractions_csv) {
    const auto layout = load_layout(layout_path);
    const auto species = resolve_species(species_name);
    field::DriveConfig drive;
    drive.v_nom = v_nom;
    drive.omega = 2.0 * std::numbers::pi * freq_hz;

    std::vector<double> fractions;
    if (fractions_csv.empty()) {
        fractions = addressing::default_sweep_fractions();
    } else {
        std::stringstream ss(fractions_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) fractions.push_back(std::stod(tok));
    }

    const auto report = addressing::sweep_addressing(layout, drive, species, group, fractions);
    io::write_json_file(g.out("morph.json"), io::to_json(report));
    io::write_morph_csv(g.out("morph.csv"), report);

    double onset = -1, merge_at = -1, reduction = 0, d_full = 0;
    for (const auto& r : report.records) {
        if (d_full == 0 && r.has_sites) d_full = r.inter_site_distance;
        if (onset < 0 && r.third_trap_present) {
            onset = r.fraction;
            reduction = 100.0 * (d_full - r.inter_site_distance) / d_full;
        }
        if (merge_at < 0 && r.merged) merge_at = r.fraction;
    }
    std::printf("sweep '%s': %zu fractions", group.c_str(), report.records.size());
    if (onset >= 0) std::printf("; third trap from %.3g (spacing reduced %.1f%%)", onset, reduction);
    if (merge_at >= 0) std::printf("; merged at %.3g", merge_at);
    std::printf("\n");
    try {
        const auto fit = addressing::saddle_scaling_fit(report);
        std::printf("saddle scaling exponent %.3f (residual %.3f, %d points)\n", fit.exponent,
                    fit.residual, fit.points);
    } catch (const insufficient_data_error&) {
        std::printf("saddle scaling fit: insufficient third-trap points\n");
    }
    return exit_ok;
}

int cmd_simulate(const GlobalOpts& g, const std::string& scenario_path) {
    const fs::path sp(scenario_path);
    auto sf = io::scenario_from_json(io::read_json_file(sp), sp.parent_path());
    const auto traj = dynamics::integrate(sf.scenario, sf.initial);
    io::write_trajectory_csv(g.out("trajectory.csv"), traj);

    json summary;
    summary["escaped"] = traj.escaped;
    summary["samples"] = traj.states.size();
    summary["seed"] = g.seed;
    if (!traj.escaped && traj.states.size() >= 64) {
        const auto peaks = dynamics::measured_secular_frequencies(traj);
        json jp = json::array();
        for (double w : peaks) jp.push_back(w);
        summary["secular_peaks_rad_s"] = jp;
        summary["micromotion_amplitude_m"] = dynamics::micromotion_amplitude(traj);
        std::printf("trajectory: %zu samples; secular peaks (Hz):", traj.states.size());
        for (double w : peaks) std::printf(" %.6g", w / (2.0 * std::numbers::pi));
        std::printf("; micromotion %.3g m\n", summary["micromotion_amplitude_m"].get<double>());
    }
    io::write_json_file(g.out("summary.json"), summary);
    if (traj.escaped) {
        std::printf("particle escaped after %zu samples; truncated trajectory written\n",
                    traj.states.size());
        throw physics_failure("escaped");
    }
    return exit_ok;
}

int cmd_resonator(const GlobalOpts& g, const std::string& sub, const std::string& circuit_path,
                  double f_target, double delta_c, double settle) {
    const json cj = circuit_path.empty() ? json{} : io::read_json_file(circuit_path);
    if (sub == "response") {
        const auto tank = io::tank_from_json(cj);
        const auto res = resonator::find_resonance(tank);
        io::write_frequency_response_csv(g.out("response.csv"), tank, 0.6 * res.f0, 1.4 * res.f0, 801);
        std::printf("f0 = %.6g MHz, |gain| = %.4g, loaded Q = %.4g, phase %.4g rad\n", res.f0 / 1e6,
                    res.gain_abs, res.loaded_q, res.phase);
        return exit_ok;
    }
    if (sub == "design") {
        const auto tank = io::tank_from_json(cj);
        const auto [ca, cb] = resonator::design_match(tank.inductance, tank.unloaded_q, tank.c_trap,
                                                      tank.r_source,
                                                      f_target > 0 ? f_target : tank.drive_frequency);
        std::printf("matched: C_A = %.6g pF, C_B = %.6g pF\n", ca * 1e12, cb * 1e12);
        return exit_ok;
    }
    if (sub == "coupled") {
        const auto pair = io::pair_from_json(cj);
        const auto [s1, s2] = resonator::coupled_shift(pair);
        std::printf("node1: delta_f0 = %.6g kHz, delta_phase = %.4g deg\n", s1.delta_f0 / 1e3,
                    s1.delta_phase_at_f0 * 180.0 / std::numbers::pi);
        std::printf("node2: delta_f0 = %.6g kHz, delta_phase = %.4g deg\n", s2.delta_f0 / 1e3,
                    s2.delta_phase_at_f0 * 180.0 / std::numbers::pi);
        return exit_ok;
    }
    if (sub == "lock") {
        const auto loop = cj.contains("resonator")
                              ? io::loop_from_json(cj)
                              : resonator::PhaseLockLoop{io::tank_from_json(cj), 5e-12, 50e-12};
        const auto res = resonator::phase_lock_sim(loop, delta_c, settle);
        std::printf("lock: residual %.4g deg, varactor %.4g pF, %s%s\n",
                    res.residual_phase * 180.0 / std::numbers::pi, res.varactor_c * 1e12,
                    res.locked ? "locked" : "unlocked",
                    res.diagnostic.empty() ? "" : (" (" + res.diagnostic + ")").c_str());
        if (!res.locked) throw physics_failure("unlocked: " + res.diagnostic);
        return exit_ok;
    }
    throw invalid_parameter_error("unknown resonator subcommand: " + sub);
}

int cmd_table1(const GlobalOpts& g, const std::string& species_name) {
    const auto species = resolve_species(species_name);
    const auto rows = addressing::gate_time_table(species);
    io::write_gate_table_csv(g.out("gate_times.csv"), rows);
    std::printf("a (um)   omega (rad/s)   T_gate (ms)   reduced T_gate (ms)\n");
    for (const auto& r : rows)
        std::printf("%-8.4g %-15.4g %-13.6g %.6g\n", r.a * 1e6, r.omega, r.t_gate * 1e3,
                    r.t_gate_reduced * 1e3);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    GlobalOpts g;

    // pre-scan for --config so file values seed the defaults below
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") g.config_path = argv[i + 1];
    if (!g.config_path.empty()) {
        try {
            g.config = io::read_json_file(g.config_path);
        } catch (const io_error& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return fs::exists(g.config_path) ? exit_parse : exit_io;
        }
    }

    CLI::App app{"planar RF trap array laboratory"};
    app.require_subcommand(1);
    app.add_option("--config", g.config_path, "JSON config file (flags override its values)");
    app.add_option("--out", g.out_dir, "output directory")->default_val(g.cfg<std::string>("out", "."));
    app.add_option("--threads", g.threads, "worker threads (0 = hardware)")
        ->default_val(g.cfg<int>("threads", 0));
    app.add_option("--seed", g.seed, "random seed recorded in outputs")
        ->default_val(g.cfg<std::uint64_t>("seed", 0));
    app.add_option("--format", g.format, "map output format: csv or json")
        ->default_val(g.cfg<std::string>("format", "csv"))
        ->check(CLI::IsMember({"csv", "json"}));

    // generate
    auto* gen = app.add_subcommand("generate", "construct an electrode layout file");
    std::string gen_kind, gen_out = "layout.json";
    json gen_params = g.config.value("generate", json::object());
    gen->add_option("kind", gen_kind, "point | array2x2 | folsom4x4 | custom-params")->required();
    gen->add_option("--out-file", gen_out, "layout file name");
    double opt_pitch = -1, opt_gap = -1, opt_igr = -1, opt_al = -1, opt_aw = -1, opt_rw = -1,
           opt_gp = -1, opt_ringw = -1;
    int opt_rows = -1, opt_cols = -1, opt_segments = -1;
    gen->add_option("--pitch", opt_pitch, "site spacing (m)");
    gen->add_option("--rows", opt_rows);
    gen->add_option("--cols", opt_cols);
    gen->add_option("--gap", opt_gap, "electrode gap (m)");
    gen->add_option("--inner-ground-radius", opt_igr, "site disc radius (m)");
    gen->add_option("--addressing-length", opt_al);
    gen->add_option("--addressing-width", opt_aw);
    gen->add_option("--ring-width", opt_ringw, "outer RF ring width (m)");
    gen->add_option("--point-ring-width", opt_rw, "point trap RF annulus width (m)");
    gen->add_option("--ground-plane", opt_gp, "shield plane height (m), <=0 disables");
    gen->add_option("--segments", opt_segments, "circle discretisation");

    // analyze
    auto* ana = app.add_subcommand("analyze", "site reports and field map slices");
    std::string ana_layout, ana_species = "ca40", ana_fractions, ana_bias;
    double ana_v = 215.0, ana_f = 10e6, ana_depth_extent = -1;
    int ana_res = 41;
    ana->add_option("--layout", ana_layout)->required();
    ana->add_option("--vnom", ana_v, "RF amplitude (V)")->default_val(g.cfg<double>("vnom", 215.0));
    ana->add_option("--freq", ana_f, "drive frequency (Hz)")->default_val(g.cfg<double>("freq", 10e6));
    ana->add_option("--species", ana_species, "'ca40' or species JSON path");
    ana->add_option("--resolution", ana_res, "grid points per horizontal axis")
        ->default_val(g.cfg<int>("resolution", 41));
    ana->add_option("--depth-extent", ana_depth_extent, "depth search height (m)");
    ana->add_option("--amplitude-fractions", ana_fractions, "JSON map group->fraction");
    ana->add_option("--dc-bias", ana_bias, "JSON map group->volts");

    // sweep
    auto* swp = app.add_subcommand("sweep", "addressing-electrode amplitude sweep");
    std::string swp_layout, swp_species = "ca40", swp_group, swp_fractions;
    double swp_v = 215.0, swp_f = 10e6;
    swp->add_option("--layout", swp_layout)->required();
    swp->add_option("--group", swp_group, "addressable drive group")->required();
    swp->add_option("--vnom", swp_v)->default_val(g.cfg<double>("vnom", 215.0));
    swp->add_option("--freq", swp_f)->default_val(g.cfg<double>("freq", 10e6));
    swp->add_option("--species", swp_species);
    swp->add_option("--fractions", swp_fractions, "comma list, descending (default: built-in ramp)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "integrate a charged-particle scenario");
    std::string sim_scenario;
    sim->add_option("--scenario", sim_scenario, "scenario JSON")->required();

    // resonator
    auto* res = app.add_subcommand("resonator", "drive electronics analysis");
    std::string res_sub, res_circuit;
    double res_ft = -1, res_dc = 0.0, res_settle = 2e-3;
    res->add_option("subcommand", res_sub, "response | design | coupled | lock")->required();
    res->add_option("circuit", res_circuit, "circuit JSON file")->required();
    res->add_option("--f-target", res_ft, "match target frequency (Hz)");
    res->add_option("--dc", res_dc, "coupling disturbance (F)");
    res->add_option("--settle", res_settle, "lock settle time (s)");

    // table1
    auto* tab = app.add_subcommand("table1", "gate-time table");
    std::string tab_species = "ca40";
    tab->add_option("--species", tab_species);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? exit_ok : exit_parse;
    }

    if (g.threads > 0) worker_thread_count() = g.threads;

    try {
        std::error_code ec;
        fs::create_directories(g.out_dir, ec);

        if (*gen) {
            if (opt_pitch > 0) gen_params["pitch"] = opt_pitch;
            if (opt_rows > 0) gen_params["rows"] = opt_rows;
            if (opt_cols > 0) gen_params["cols"] = opt_cols;
            if (opt_gap > 0) gen_params["gap"] = opt_gap;
            if (opt_igr > 0) gen_params["inner_ground_radius"] = opt_igr;
            if (opt_al > 0) gen_params["addressing_length"] = opt_al;
            if (opt_aw > 0) gen_params["addressing_width"] = opt_aw;
            if (opt_ringw > 0) gen_params["ring_width"] = opt_ringw;
            if (opt_rw > 0) gen_params["ring_width"] = opt_rw;
            if (opt_segments > 0) gen_params["segments"] = opt_segments;
            if (gen->count("--ground-plane")) gen_params["ground_plane"] = opt_gp;
            return cmd_generate(g, gen_kind, gen_out, gen_params);
        }
        if (*ana)
            return cmd_analyze(g, ana_layout, ana_v, ana_f, ana_species, ana_res, ana_depth_extent,
                               ana_fractions, ana_bias);
        if (*swp) return cmd_sweep(g, swp_layout, swp_v, swp_f, swp_species, swp_group, swp_fractions);
        if (*sim) return cmd_simulate(g, sim_scenario);
        if (*res) return cmd_resonator(g, res_sub, res_circuit, res_ft, res_dc, res_settle);
        if (*tab) return cmd_table1(g, tab_species);
        return exit_parse;
    } catch (const physics_failure& e) {
        std::fprintf(stderr, "physics failure: %s\n", e.what());
        return exit_physics;
    } catch (const invalid_parameter_error& e) {
        std::fprintf(stderr, "invalid parameter: %s\n", e.what());
        return exit_invalid;
    } catch (const geometry_error& e) {
        std::fprintf(stderr, "geometry error: %s\n", e.what());
        return exit_invalid;
    } catch (const no_solution_error& e) {
        std::fprintf(stderr, "physics failure: %s\n", e.what());
        return exit_physics;
    } catch (const insufficient_data_error& e) {
        std::fprintf(stderr, "physics failure: %s\n", e.what());
        return exit_physics;
    } catch (const metrics::saddle_not_minimum_error& e) {
        std::fprintf(stderr, "physics failure: %s\n", e.what());
        return exit_physics;
    } catch (const out_of_domain_error& e) {
        std::fprintf(stderr, "invalid parameter: %s\n", e.what());
        return exit_invalid;
    } catch (const io_error& e) {
        const std::string msg = e.what();
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        return msg.find("cannot parse") != std::string::npos ? exit_parse : exit_io;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_io;
    }
}
