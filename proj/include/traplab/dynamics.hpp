#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "traplab/constants.hpp"
#include "traplab/errors.hpp"
#include "traplab/field.hpp"
#include "traplab/geometry.hpp"
#include "traplab/metrics.hpp"

namespace traplab::dynamics {

using Eigen::Vector3d;
using field::DriveConfig;
using field::FieldModel;
using metrics::Species;

struct SimState {
    Vector3d position = Vector3d::Zero();
    Vector3d velocity = Vector3d::Zero();
    double time = 0.0;
};

struct Scenario {
    geometry::ElectrodeLayout layout;
    DriveConfig drive;
    Species species;
    Vector3d external_uniform_field = Vector3d::Zero();  // V/m (e.g. compensation mesh)
    bool gravity = false;
    double duration = 0.0;        // s
    double rf_fraction = 100.0;   // timestep = RF period / rf_fraction (>= 50)
    double damping = 0.0;         // 1/s, optional linear drag (the dust trap runs in air)
    int record_stride = 1;
    field::FieldOptions field_options;

    void require_valid() const {
        drive.require_valid();
        species.require_valid();
        if (duration <= 0.0) throw invalid_parameter_error("scenario duration must be positive");
        if (rf_fraction < 50.0)
            throw invalid_parameter_error("timestep must resolve the RF drive (rf_fraction >= 50)");
        if (record_stride < 1) throw invalid_parameter_error("record_stride must be >= 1");
    }
};

struct Trajectory {
    std::vector<SimState> states;
    double omega_drive = 0.0;
    double dt = 0.0;
    bool escaped = false;
};

// Velocity-Verlet integration of m r'' = q E_inst(r, t) + q E_uniform + m g - m damping v,
// with E_inst carrying the cos(Omega t) drive (t = 0 at maximum voltage).
inline Trajectory integrate(const Scenario& scenario, const SimState& initial) {
    scenario.require_valid();
    const FieldModel model(scenario.layout, scenario.field_options);
    const double qm = scenario.species.charge / scenario.species.mass;
    const double omega = scenario.drive.omega;
    const double dt = 2.0 * std::numbers::pi / omega / scenario.rf_fraction;
    const auto steps = static_cast<std::size_t>(std::ceil(scenario.duration / dt));

    const auto& bb = scenario.layout.bounding_region;
    const double z_cap = scenario.layout.ground_plane_height
                             ? *scenario.layout.ground_plane_height
                             : std::max(bb.max.x() - bb.min.x(), bb.max.y() - bb.min.y());
    auto in_domain = [&](const Vector3d& p) {
        return p.z() > 0.0 && p.z() < z_cap && bb.contains({p.x(), p.y()});
    };

    const Vector3d g_vec = scenario.gravity ? Vector3d(0, 0, -constants::standard_gravity)
                                            : Vector3d::Zero();
    auto accel = [&](const Vector3d& r, const Vector3d& v, double t) {
        const auto s = model.sample(scenario.drive, r);
        const Vector3d e_inst = s.rf_field_amplitude * std::cos(omega * t + scenario.drive.phase) +
                                s.dc_field + scenario.external_uniform_field;
        return (qm * e_inst + g_vec - scenario.damping * v).eval();
    };

    Trajectory traj;
    traj.omega_drive = omega;
    traj.dt = dt;
    traj.states.reserve(steps / scenario.record_stride + 2);

    SimState s = initial;
    if (!in_domain(s.position)) throw invalid_parameter_error("initial position outside solver domain");
    traj.states.push_back(s);
    Vector3d a = accel(s.position, s.velocity, s.time);
    for (std::size_t step = 1; step <= steps; ++step) {
        const Vector3d v_half = s.velocity + 0.5 * dt * a;
        s.position += dt * v_half;
        s.time = initial.time + static_cast<double>(step) * dt;
        if (!in_domain(s.position)) {
            traj.escaped = true;
            break;
        }
        a = accel(s.position, v_half, s.time);
        s.velocity = v_half + 0.5 * dt * a;
        if (!s.position.allFinite() || !s.velocity.allFinite())
            throw std::runtime_error("integration failure: non-finite state");
        if (step % scenario.record_stride == 0) traj.states.push_back(s);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// spectral instruments

namespace detail {

inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace detail

// Dominant spectral peak of each position component below omega_drive/2,
// with parabolic interpolation on the log magnitude; duplicates within one
// bin merged. Up to three frequencies, ascending, in rad/s.
inline std::vector<double> measured_secular_frequencies(const Trajectory& traj) {
    const std::size_t total = traj.states.size();
    if (total < 64) throw insufficient_data_error("trajectory too short for a spectrum");
    std::size_t n = 1;
    while (2 * n <= total) n *= 2;

    const double dt = total > 1 ? traj.states[1].time - traj.states[0].time : traj.dt;
    const double fs = 1.0 / dt;
    const double f_nyq_drive = traj.omega_drive / (2.0 * std::numbers::pi) / 2.0;

    std::vector<double> peaks;
    double max_amp = 0.0;
    std::vector<std::pair<double, double>> found;  // (freq, magnitude)
    for (int comp = 0; comp < 3; ++comp) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += traj.states[i].position[comp];
        mean /= static_cast<double>(n);
        std::vector<std::complex<double>> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = traj.states[i].position[comp] - mean;
        detail::fft_radix2(x);

        const std::size_t k_max =
            std::min<std::size_t>(n / 2 - 1, static_cast<std::size_t>(f_nyq_drive / (fs / n)));
        std::size_t best = 0;
        double best_mag = 0.0;
        for (std::size_t k = 1; k <= k_max; ++k) {
            const double m = std::abs(x[k]);
            if (m > best_mag) {
                best_mag = m;
                best = k;
            }
        }
        if (best == 0) continue;
        double delta = 0.0;
        if (best > 1 && best + 1 < n / 2) {
            const double la = std::log(std::max(std::abs(x[best - 1]), 1e-300));
            const double lb = std::log(std::max(best_mag, 1e-300));
            const double lc = std::log(std::max(std::abs(x[best + 1]), 1e-300));
            const double denom = la - 2.0 * lb + lc;
            if (denom < 0.0) delta = 0.5 * (la - lc) / denom;
        }
        const double freq = (static_cast<double>(best) + delta) * fs / static_cast<double>(n);
        found.emplace_back(freq, best_mag);
        max_amp = std::max(max_amp, best_mag);
    }

    const double bin = fs / static_cast<double>(n);
    for (const auto& [f, m] : found) {
        if (m < 1e-9 * max_amp) continue;
        bool dup = false;
        for (double p : peaks)
            if (std::abs(p - 2.0 * std::numbers::pi * f) < 2.0 * std::numbers::pi * bin) dup = true;
        if (!dup) peaks.push_back(2.0 * std::numbers::pi * f);
    }
    std::sort(peaks.begin(), peaks.end());
    return peaks;
}

// Amplitude of the drive-frequency component of the position, averaged over
// the final half of the trajectory.
inline double micromotion_amplitude(const Trajectory& traj) {
    if (traj.states.size() < 64) throw insufficient_data_error("trajectory too short");
    const double sample_dt = traj.states.size() > 1
                                 ? traj.states[1].time - traj.states[0].time
                                 : traj.dt;
    const double rf_period = 2.0 * std::numbers::pi / traj.omega_drive;
    if (sample_dt > rf_period / 20.0)
        throw insufficient_data_error("trajectory does not resolve the RF period (need >= 20 samples/period)");

    const std::size_t start = traj.states.size() / 2;
    const std::size_t n = traj.states.size() - start;
    Vector3d mean = Vector3d::Zero();
    for (std::size_t i = start; i < traj.states.size(); ++i) mean += traj.states[i].position;
    mean /= static_cast<double>(n);

    Vector3d amp;
    for (int comp = 0; comp < 3; ++comp) {
        std::complex<double> acc(0.0);
        for (std::size_t i = start; i < traj.states.size(); ++i) {
            const double t = traj.states[i].time;
            acc += (traj.states[i].position[comp] - mean[comp]) *
                   std::exp(std::complex<double>(0.0, -traj.omega_drive * t));
        }
        amp[comp] = 2.0 * std::abs(acc) / static_cast<double>(n);
    }
    return amp.norm();
}

// Charge-to-mass magnitude that a uniform parallel-plate field V/d balances
// against gravity: |q|/m = g d / V.
inline double calibrate_dust_qm(double mesh_voltage, double mesh_distance) {
    if (mesh_voltage <= 0.0 || mesh_distance <= 0.0)
        throw invalid_parameter_error("mesh voltage and distance must be positive");
    return constants::standard_gravity * mesh_distance / mesh_voltage;
}

// The charged-dust test bench: the 2x2 board driven at 230 V / 50 Hz in air,
// a compensation mesh 3 cm above at +150 V, negatively charged spores.
struct DustBench {
    Scenario scenario;
    Vector3d home_site = Vector3d::Zero();  // approximate, refine via find_minima
};

inline DustBench make_dust_bench(double mesh_voltage = 150.0, double mesh_distance = 0.03,
                                 double drive_voltage = 230.0, double drive_hz = 50.0,
                                 double duration = 4.0) {
    DustBench bench;
    const auto params = geometry::ArrayParams::square(2, 2, 6e-3);
    bench.scenario.layout = geometry::make_addressable_array(params);
    bench.scenario.drive.v_nom = drive_voltage;
    bench.scenario.drive.omega = 2.0 * std::numbers::pi * drive_hz;
    const double qm = calibrate_dust_qm(mesh_voltage, mesh_distance);
    bench.scenario.species = Species::dust(-qm);  // negative grains, field points down
    bench.scenario.external_uniform_field = Vector3d(0, 0, -mesh_voltage / mesh_distance);
    bench.scenario.gravity = true;
    bench.scenario.duration = duration;
    bench.scenario.rf_fraction = 200.0;
    bench.home_site = Vector3d(0.5 * params.pitch, 0.5 * params.pitch, 0.15 * params.pitch);
    return bench;
}

}  // namespace traplab::dynamics
