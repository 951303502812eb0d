#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "traplab/constants.hpp"
#include "traplab/errors.hpp"
#include "traplab/field.hpp"
#include "traplab/metrics.hpp"

namespace traplab::addressing {

using Eigen::Vector2d;
using Eigen::Vector3d;
using field::DriveConfig;
using field::FieldModel;
using metrics::GridSpec;
using metrics::Species;

// ---------------------------------------------------------------------------
// interaction figures of merit

// Controlled-phase-gate time in the weak state-dependent-force regime:
//   T = 4 pi^2 eps0 m a^3 omega / q^2
inline double gate_time(double ion_spacing, double omega_sec, const Species& species) {
    species.require_valid();
    if (ion_spacing <= 0.0) throw invalid_parameter_error("ion spacing must be positive");
    if (omega_sec < 0.0) throw invalid_parameter_error("secular frequency must be non-negative");
    constexpr double four_pi_sq = 4.0 * std::numbers::pi * std::numbers::pi;
    return four_pi_sq * constants::vacuum_permittivity * species.mass * ion_spacing * ion_spacing *
           ion_spacing * omega_sec / (species.charge * species.charge);
}

// Ten periods of the slowest secular frequency of interest.
inline double adiabatic_ramp_time(double min_omega_sec) {
    if (min_omega_sec <= 0.0) throw invalid_parameter_error("secular frequency must be positive");
    return 10.0 * 2.0 * std::numbers::pi / min_omega_sec;
}

struct ScalingRow {
    double d = 0.0;
    double gate_time_rel = 0.0;   // (d/ref)^2 under fixed depth, shape and stability
    double heating_rel = 0.0;     // (ref/d)^4
    double gate_to_heating = 0.0;
};

inline std::vector<ScalingRow> scaling_report(const std::vector<double>& d_values, double reference) {
    if (reference <= 0.0) throw invalid_parameter_error("reference distance must be positive");
    std::vector<ScalingRow> rows;
    rows.reserve(d_values.size());
    for (double d : d_values) {
        if (d <= 0.0) throw invalid_parameter_error("distances must be positive");
        ScalingRow r;
        r.d = d;
        r.gate_time_rel = (d / reference) * (d / reference);
        r.heating_rel = std::pow(reference / d, 4);
        r.gate_to_heating = r.gate_time_rel / r.heating_rel;
        rows.push_back(r);
    }
    return rows;
}

struct GateTableRow {
    double a = 0.0;            // m
    double omega = 0.0;        // rad/s
    double t_gate = 0.0;       // s, deep trap
    double t_gate_reduced = 0.0;  // s, drive relaxed so omega' = omega/10
};

// Canonical inter-site-spacing vs gate-time table for a Ca-40 array; the
// frequency column is angular (rad/s).
inline std::vector<GateTableRow> gate_time_table(const Species& species = Species::ca40_ion()) {
    const std::vector<std::pair<double, double>> pairs = {
        {1500e-6, 0.5e6}, {375e-6, 2e6}, {100e-6, 7.5e6}, {50e-6, 15e6}, {25e-6, 30e6}};
    std::vector<GateTableRow> rows;
    for (auto [a, w] : pairs) {
        GateTableRow r;
        r.a = a;
        r.omega = w;
        r.t_gate = gate_time(a, w, species);
        r.t_gate_reduced = gate_time(a, w / 10.0, species);
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// amplitude sweep of one addressing electrode

struct MorphRecord {
    double fraction = 1.0;
    bool has_sites = false;
    Vector3d site_a = Vector3d::Zero();
    Vector3d site_b = Vector3d::Zero();
    double inter_site_distance = 0.0;  // m
    double site_value_eV = 0.0;        // higher of the two site minima
    double barrier_eV = 0.0;           // connection level minus site_value
    bool third_trap_present = false;
    Vector3d third_trap_position = Vector3d::Zero();
    double third_trap_value_eV = 0.0;
    double saddle_eV = 0.0;            // level of the saddle toward the third trap
    bool merged = false;
    double min_secular = 0.0;          // rad/s over both sites
};

struct MorphReport {
    std::string group;
    std::vector<MorphRecord> records;  // fraction strictly decreasing
};

struct SweepOptions {
    int n_axis = 161;          // valley-profile samples between the two sites
    int n_site_grid = 13;      // per-axis resolution of the initial site search
    double merge_tol_eV = 1e-4;
    double prominence_tol_eV = 1e-4;  // third-trap dip must clear this
    double null_fraction = 0.1;       // dip floor must sit below this fraction of its saddle
    double z_min_frac = 0.03;  // of the site spacing
    double z_max_frac = 0.40;
    double site_box_frac = 0.22;
    double profile_w_cap_frac = 0.04;   // sideways corridor of the valley profile
    double profile_z_factor = 1.15;     // height corridor, times the site height
    double third_trap_height_factor = 1.0;  // dip counts once risen to the home trapping height
};

inline std::vector<double> default_sweep_fractions() {
    std::vector<double> f;
    for (int k = 0; k <= 20; ++k) f.push_back(1.0 - 0.05 * k);
    for (int k = 0; k <= 10; ++k) f.push_back(0.48 - 0.01 * k);  // densify near third-trap onset
    std::sort(f.begin(), f.end(), std::greater<>());
    f.erase(std::unique(f.begin(), f.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-9; }),
            f.end());
    return f;
}

namespace detail {

inline Vector2d ring_centroid(const geometry::Ring& r) {
    Vector2d c(0, 0);
    for (const auto& v : r) c += v;
    return c / static_cast<double>(r.size());
}

struct PairGeometry {
    Vector2d home_a, home_b;   // centres of the two bordering site discs
    const geometry::Electrode* addressing = nullptr;
};

inline PairGeometry locate_pair(const geometry::ElectrodeLayout& layout, const std::string& group) {
    PairGeometry pg;
    for (const auto& e : layout.electrodes)
        if (e.drive_group == group && e.role == geometry::Role::rf_addressable) {
            pg.addressing = &e;
            break;
        }
    if (!pg.addressing)
        throw invalid_parameter_error("no addressable electrode in drive group '" + group + "'");
    const Vector2d c = ring_centroid(pg.addressing->outer);
    // two nearest ground discs flank the addressing electrode
    std::vector<std::pair<double, Vector2d>> grounds;
    for (const auto& e : layout.electrodes)
        if (e.role == geometry::Role::ground && e.holes.empty()) {
            const Vector2d gc = ring_centroid(e.outer);
            grounds.emplace_back((gc - c).norm(), gc);
        }
    if (grounds.size() < 2)
        throw invalid_parameter_error("layout does not have two sites around group '" + group + "'");
    std::sort(grounds.begin(), grounds.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    pg.home_a = grounds[0].second;
    pg.home_b = grounds[1].second;
    return pg;
}

}  // namespace detail

// Transverse minimiser for the valley-floor profile: Newton descent of
// Phi(x, y, z) over (y, z) at fixed x, warm-started from the previous point.
namespace detail {

template <typename Fn>
Eigen::Vector2d minimize_transverse(Fn&& f, Eigen::Vector2d wz, double scale,
                                    double w_cap, double z_lo, double z_hi) {
    const double h = 1e-4 * scale;
    auto grad = [&](const Eigen::Vector2d& q) {
        return Eigen::Vector2d((f({q.x() + h, q.y()}) - f({q.x() - h, q.y()})) / (2 * h),
                               (f({q.x(), q.y() + h}) - f({q.x(), q.y() - h})) / (2 * h));
    };
    double fq = f(wz);
    for (int it = 0; it < 60; ++it) {
        const Eigen::Vector2d g = grad(wz);
        // 2x2 Hessian by forward differences of the gradient
        const double hh = 10.0 * h;
        const Eigen::Vector2d gw = grad({wz.x() + hh, wz.y()});
        const Eigen::Vector2d gz = grad({wz.x(), wz.y() + hh});
        Eigen::Matrix2d hess;
        hess << (gw.x() - g.x()) / hh, (gz.x() - g.x()) / hh,
                (gw.y() - g.y()) / hh, (gz.y() - g.y()) / hh;
        hess = 0.5 * (hess + hess.transpose()).eval();
        Eigen::Vector2d step;
        const double det = hess.determinant();
        if (det > 0.0 && hess(0, 0) > 0.0) {
            step = -hess.inverse() * g;
        } else {
            const double gn = g.norm();
            if (gn < 1e-300) break;
            step = -(0.02 * scale / gn) * g;
        }
        const double cap = 0.05 * scale;
        if (step.norm() > cap) step *= cap / step.norm();
        Eigen::Vector2d trial = wz + step;
        trial.x() = std::clamp(trial.x(), -w_cap, w_cap);
        trial.y() = std::clamp(trial.y(), z_lo, z_hi);
        double ft = f(trial);
        int bt = 0;
        while (ft > fq && bt++ < 25) {
            trial = wz + 0.5 * (trial - wz);
            trial.x() = std::clamp(trial.x(), -w_cap, w_cap);
            trial.y() = std::clamp(trial.y(), z_lo, z_hi);
            ft = f(trial);
        }
        if (ft < fq) {
            wz = trial;
            fq = ft;
        } else {
            break;
        }
        if (step.norm() < 1e-8 * scale) break;
    }
    return wz;
}

}  // namespace detail

// Attenuate V_a/V_nom on `group` through `fractions` (descending) and track the
// morph of the two bordering point traps into a linear trap. Landmarks come
// from the valley-floor profile along the line connecting the two sites (the
// transverse minimum of the pseudopotential at each station): the inter-site
// barrier, the third trap over the addressing electrode, its saddles, and the
// merge point.
inline MorphReport sweep_addressing(const geometry::ElectrodeLayout& layout,
                                    const DriveConfig& drive, const Species& species,
                                    const std::string& group, std::vector<double> fractions,
                                    const SweepOptions& opt = {},
                                    const field::FieldOptions& field_opt = {}) {
    species.require_valid();
    drive.require_valid();
    if (fractions.empty()) throw invalid_parameter_error("sweep needs at least one fraction");
    for (double f : fractions)
        if (f < 0.0 || f > 1.0) throw invalid_parameter_error("fractions must lie in [0,1]");
    for (std::size_t i = 1; i < fractions.size(); ++i)
        if (fractions[i] >= fractions[i - 1])
            throw invalid_parameter_error("fractions must be strictly decreasing");

    const auto pg = detail::locate_pair(layout, group);
    const FieldModel model(layout, field_opt);

    const double spacing = (pg.home_b - pg.home_a).norm();
    const double z_lo = opt.z_min_frac * spacing;
    double z_hi = opt.z_max_frac * spacing;
    if (layout.ground_plane_height) z_hi = std::min(z_hi, 0.90 * *layout.ground_plane_height);

    MorphReport report;
    report.group = group;
    report.records.resize(fractions.size());
    bool merged_latch = false;

    std::optional<Vector3d> seed_a, seed_b;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        DriveConfig d = drive;
        d.amplitude_fraction[group] = fractions[fi];
        auto potential = [&](const Vector3d& p) {
            return metrics::pseudopotential_at(model, d, species, p);
        };

        MorphRecord rec;
        rec.fraction = fractions[fi];

        // site minima: initial 3D search around the home discs, then warm-started
        auto locate_site = [&](const Eigen::Vector2d& home,
                               std::optional<Vector3d> seed) -> metrics::Minimum {
            if (!seed) {
                const double half = opt.site_box_frac * spacing;
                const Vector3d lo(home.x() - half, home.y() - half, z_lo);
                const Vector3d hi(home.x() + half, home.y() + half, z_hi);
                const auto grid = metrics::GridSpec::from_box(
                    lo, hi, opt.n_site_grid, opt.n_site_grid, opt.n_site_grid + 4);
                const auto mins = metrics::find_minima_of(potential, grid);
                if (!mins.empty()) {
                    // deepest basin nearest home
                    const metrics::Minimum* best = nullptr;
                    double bd = std::numeric_limits<double>::infinity();
                    for (const auto& m : mins) {
                        const double dd =
                            (Eigen::Vector2d(m.position.x(), m.position.y()) - home).norm();
                        if (dd < bd) {
                            bd = dd;
                            best = &m;
                        }
                    }
                    return *best;
                }
                seed = Vector3d(home.x(), home.y(), 0.5 * (z_lo + z_hi));
            }
            const Vector3d lo(std::min(pg.home_a.x(), pg.home_b.x()) - 0.4 * spacing,
                              std::min(pg.home_a.y(), pg.home_b.y()) - 0.4 * spacing, z_lo);
            const Vector3d hi(std::max(pg.home_a.x(), pg.home_b.x()) + 0.4 * spacing,
                              std::max(pg.home_a.y(), pg.home_b.y()) + 0.4 * spacing, z_hi);
            return metrics::detail::refine_minimum(potential, *seed, lo, hi, 0.01 * spacing, {});
        };
        const metrics::Minimum ma = locate_site(pg.home_a, seed_a);
        const metrics::Minimum mb = locate_site(pg.home_b, seed_b);
        seed_a = ma.position;
        seed_b = mb.position;

        rec.has_sites = true;
        rec.site_a = ma.position;
        rec.site_b = mb.position;
        rec.inter_site_distance = (ma.position - mb.position).norm();
        rec.site_value_eV = std::max(ma.value_eV, mb.value_eV);

        // valley-floor profile between the sites: stations along the pair
        // axis, transverse minimum over (sideways, height) at each station
        const int n = std::max(opt.n_axis, 16);
        std::vector<double> profile(n);
        std::vector<Vector3d> stations(n);
        {
            const Vector3d pa = ma.position, pb = mb.position;
            Eigen::Vector2d axis2(pb.x() - pa.x(), pb.y() - pa.y());
            if (axis2.norm() < 1e-12) axis2 = (pg.home_b - pg.home_a);
            axis2.normalize();
            const Eigen::Vector2d perp(-axis2.y(), axis2.x());
            const double w_cap = opt.profile_w_cap_frac * spacing;
            const double z_top = std::min(z_hi, opt.profile_z_factor *
                                                    0.5 * (pa.z() + pb.z()));
            Eigen::Vector2d wz(0.0, pa.z());
            for (int i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / (n - 1);
                const Vector3d base = pa + t * (pb - pa);
                auto f_station = [&](const Eigen::Vector2d& q) {
                    return potential(Vector3d(base.x() + q.x() * perp.x(),
                                              base.y() + q.x() * perp.y(), q.y()));
                };
                wz = detail::minimize_transverse(f_station, wz, spacing, w_cap, z_lo, z_top);
                stations[i] = Vector3d(base.x() + wz.x() * perp.x(),
                                       base.y() + wz.x() * perp.y(), wz.y());
                profile[i] = f_station(wz);
            }
        }

        // barrier: highest profile station between the site floors
        int i_max = 0;
        for (int i = 1; i < n; ++i)
            if (profile[i] > profile[i_max]) i_max = i;
        rec.barrier_eV = std::max(0.0, profile[i_max] - rec.site_value_eV);
        const double coalesce_dist = spacing / static_cast<double>(n - 1);
        rec.merged = rec.barrier_eV < opt.merge_tol_eV || rec.inter_site_distance < coalesce_dist;

        // third trap: interior dip of the profile over the addressing electrode
        int i_dip = -1;
        for (int i = 2; i + 2 < n; ++i) {
            if (profile[i] > profile[i - 1] || profile[i] > profile[i + 1]) continue;
            if (!pg.addressing->contains({stations[i].x(), stations[i].y()})) continue;
            if (i_dip < 0 || profile[i] < profile[i_dip]) i_dip = i;
        }
        if (i_dip >= 0 && !rec.merged) {
            double left = profile[i_dip], right = profile[i_dip];
            for (int i = 0; i < i_dip; ++i) left = std::max(left, profile[i]);
            for (int i = i_dip + 1; i < n; ++i) right = std::max(right, profile[i]);
            const double saddle = std::min(left, right);
            if (saddle - profile[i_dip] > opt.prominence_tol_eV &&
                profile[i_dip] < opt.null_fraction * saddle) {
                rec.third_trap_position = stations[i_dip];
                rec.third_trap_value_eV = profile[i_dip];
                rec.saddle_eV = saddle;
            }
        }

        // slowest secular frequency across the two sites
        double wmin = std::numeric_limits<double>::infinity();
        for (const auto* m : {&ma, &mb}) {
            const auto h = metrics::fd_hessian(potential, m->position,
                                               std::max(1e-3 * spacing, 1e-6)) *
                           constants::elementary_charge;
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
            for (int k = 0; k < 3; ++k)
                wmin = std::min(wmin, std::sqrt(std::max(0.0, es.eigenvalues()[k]) / species.mass));
        }
        rec.min_secular = std::isfinite(wmin) ? wmin : 0.0;

        merged_latch = merged_latch || rec.merged;
        rec.merged = merged_latch;
        report.records[fi] = rec;
    }

    // a dip registers as the open third trap once it has risen to the array's
    // home trapping height (the fixed slice height of the full-drive array)
    double z_ref = 0.0;
    for (const auto& r : report.records)
        if (r.has_sites) {
            z_ref = 0.5 * (r.site_a.z() + r.site_b.z());
            break;
        }
    for (auto& r : report.records)
        r.third_trap_present = r.saddle_eV > 0.0 && !r.merged &&
                               r.third_trap_position.z() >=
                                   opt.third_trap_height_factor * z_ref;
    return report;
}

struct ScalingFit {
    double exponent = 0.0;
    double residual = 0.0;  // rms of log-space fit residuals
    int points = 0;
};

// Least-squares slope of log(saddle) vs log(fraction) over the sweep points
// where the third trap exists.
inline ScalingFit saddle_scaling_fit(const MorphReport& report) {
    std::vector<double> lx, ly;
    for (const auto& r : report.records)
        if (r.third_trap_present && r.saddle_eV > 0.0 && r.fraction > 0.0) {
            lx.push_back(std::log(r.fraction));
            ly.push_back(std::log(r.saddle_eV));
        }
    if (lx.size() < 4)
        throw insufficient_data_error("saddle scaling fit needs at least 4 sweep points with a third trap");
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    ScalingFit fit;
    fit.points = static_cast<int>(lx.size());
    fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - fit.exponent * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - (intercept + fit.exponent * lx[i]);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

}  // namespace traplab::addressing
