#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "traplab/addressing.hpp"
#include "traplab/dynamics.hpp"
#include "traplab/errors.hpp"
#include "traplab/metrics.hpp"
#include "traplab/resonator.hpp"

namespace traplab::io {

// Shortest representation that round-trips the exact double.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty CSV: " + path.string());
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        t.rows.push_back(std::move(row));
    }
    return t;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw io_error("cannot write file: " + path.string());
    }
    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i)
            out_ << (i ? "," : "") << names[i];
        out_ << '\n';
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_double(values[i]);
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

// Grid map export: rows lexicographic in (x, y, z), SI units, phi_pseudo in eV.
inline void write_field_map_csv(const std::filesystem::path& path, const metrics::GridSpec& grid,
                                const field::FieldModel& model, const field::DriveConfig& drive,
                                const metrics::Species& species) {
    std::vector<Eigen::Vector3d> e_amp(grid.count());
    std::vector<double> phi(grid.count());
    parallel_for(grid.count(), [&](std::size_t idx) {
        const Eigen::Vector3d p = grid.point(idx);
        const auto s = model.sample(drive, p);
        e_amp[idx] = s.rf_field_amplitude;
        phi[idx] = species.charge * species.charge * s.rf_field_amplitude.squaredNorm() /
                       (4.0 * species.mass * drive.omega * drive.omega * constants::elementary_charge) +
                   species.charge * s.dc_potential / constants::elementary_charge;
    });
    CsvWriter w(path);
    w.header({"x", "y", "z", "Ex", "Ey", "Ez", "phi_pseudo"});
    for (std::size_t idx = 0; idx < grid.count(); ++idx) {
        const Eigen::Vector3d p = grid.point(idx);
        w.row({p.x(), p.y(), p.z(), e_amp[idx].x(), e_amp[idx].y(), e_amp[idx].z(), phi[idx]});
    }
}

inline nlohmann::json field_map_json(const metrics::GridSpec& grid, const field::FieldModel& model,
                                     const field::DriveConfig& drive, const metrics::Species& species) {
    nlohmann::json j;
    j["origin"] = {grid.origin.x(), grid.origin.y(), grid.origin.z()};
    j["spacing"] = {grid.spacing.x(), grid.spacing.y(), grid.spacing.z()};
    j["shape"] = {grid.nx, grid.ny, grid.nz};
    j["columns"] = {"Ex", "Ey", "Ez", "phi_pseudo"};
    std::vector<std::array<double, 4>> data(grid.count());
    parallel_for(grid.count(), [&](std::size_t idx) {
        const auto s = model.sample(drive, grid.point(idx));
        const double phi =
            species.charge * species.charge * s.rf_field_amplitude.squaredNorm() /
                (4.0 * species.mass * drive.omega * drive.omega * constants::elementary_charge) +
            species.charge * s.dc_potential / constants::elementary_charge;
        data[idx] = {s.rf_field_amplitude.x(), s.rf_field_amplitude.y(), s.rf_field_amplitude.z(), phi};
    });
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& d : data) rows.push_back({d[0], d[1], d[2], d[3]});
    j["data"] = rows;
    return j;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const dynamics::Trajectory& traj) {
    CsvWriter w(path);
    w.header({"t", "x", "y", "z", "vx", "vy", "vz"});
    for (const auto& s : traj.states)
        w.row({s.time, s.position.x(), s.position.y(), s.position.z(), s.velocity.x(),
               s.velocity.y(), s.velocity.z()});
}

inline void write_morph_csv(const std::filesystem::path& path, const addressing::MorphReport& m) {
    CsvWriter w(path);
    w.header({"fraction", "a_m", "barrier_eV", "saddle_eV", "third_trap", "merged", "omega_min"});
    for (const auto& r : m.records)
        w.row({r.fraction, r.inter_site_distance, r.barrier_eV, r.saddle_eV,
               r.third_trap_present ? 1.0 : 0.0, r.merged ? 1.0 : 0.0, r.min_secular});
}

inline void write_gate_table_csv(const std::filesystem::path& path,
                                 const std::vector<addressing::GateTableRow>& rows) {
    CsvWriter w(path);
    w.header({"a_m", "omega_rad_s", "t_gate_s", "t_gate_reduced_s"});
    for (const auto& r : rows) w.row({r.a, r.omega, r.t_gate, r.t_gate_reduced});
}

inline void write_frequency_response_csv(const std::filesystem::path& path,
                                         const resonator::TankResonator& tank, double f_lo,
                                         double f_hi, int points) {
    if (points < 2 || f_lo <= 0 || f_hi <= f_lo)
        throw invalid_parameter_error("bad frequency sweep range");
    CsvWriter w(path);
    w.header({"f_hz", "gain_abs", "gain_phase_rad", "z_in_real", "z_in_imag"});
    for (int i = 0; i < points; ++i) {
        const double f = f_lo + (f_hi - f_lo) * i / (points - 1.0);
        const auto st = resonator::tank_state(tank, f);
        w.row({f, std::abs(st.gain), std::arg(st.gain), st.z_in.real(), st.z_in.imag()});
    }
}

}  // namespace traplab::io
