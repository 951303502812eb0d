#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "traplab/constants.hpp"
#include "traplab/errors.hpp"
#include "traplab/field.hpp"
#include "traplab/parallel.hpp"

namespace traplab::metrics {

using Eigen::Matrix3d;
using Eigen::Vector3d;
using field::DriveConfig;
using field::FieldModel;

struct saddle_not_minimum_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Species {
    double charge = 0.0;  // C
    double mass = 0.0;    // kg
    std::string label;

    void require_valid() const {
        if (charge == 0.0) throw invalid_parameter_error("species charge must be nonzero");
        if (mass <= 0.0) throw invalid_parameter_error("species mass must be positive");
    }
    static Species ca40_ion() {
        return {constants::elementary_charge, constants::ca40_mass, "Ca-40+"};
    }
    // Charged dust grain with a given charge-to-mass ratio; the trajectory of a
    // single particle depends on q/m only, the absolute mass is nominal.
    static Species dust(double charge_to_mass, double mass = 1e-11) {
        return {charge_to_mass * mass, mass, "dust"};
    }
};

// Effective potential for the secular motion, in eV:
//   q^2 |E_RF|^2 / (4 m Omega^2)  +  q * Phi_DC
inline double pseudopotential_at(const FieldModel& model, const DriveConfig& drive,
                                 const Species& species, const Vector3d& p) {
    species.require_valid();
    drive.require_valid();
    const auto s = model.sample(drive, p);
    const double joules =
        species.charge * species.charge * s.rf_field_amplitude.squaredNorm() /
            (4.0 * species.mass * drive.omega * drive.omega) +
        species.charge * s.dc_potential;
    return joules / constants::elementary_charge;
}

// ---------------------------------------------------------------------------
// grids

struct GridSpec {
    Vector3d origin = Vector3d::Zero();
    Vector3d spacing = Vector3d::Zero();
    int nx = 0, ny = 0, nz = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * ny + j) * nz + k;
    }
    Vector3d point(int i, int j, int k) const {
        return origin + Vector3d(i * spacing.x(), j * spacing.y(), k * spacing.z());
    }
    Vector3d point(std::size_t idx) const {
        const int k = static_cast<int>(idx % nz);
        const int j = static_cast<int>((idx / nz) % ny);
        const int i = static_cast<int>(idx / (static_cast<std::size_t>(ny) * nz));
        return point(i, j, k);
    }
    static GridSpec from_box(const Vector3d& lo, const Vector3d& hi, int nx, int ny, int nz) {
        if (nx < 2 || ny < 2 || nz < 2) throw invalid_parameter_error("grid needs >= 2 points per axis");
        GridSpec g;
        g.origin = lo;
        g.spacing = Vector3d((hi.x() - lo.x()) / (nx - 1), (hi.y() - lo.y()) / (ny - 1),
                             (hi.z() - lo.z()) / (nz - 1));
        g.nx = nx; g.ny = ny; g.nz = nz;
        return g;
    }
};

template <typename Fn>
std::vector<double> sample_grid(const GridSpec& grid, Fn&& fn) {
    std::vector<double> values(grid.count());
    parallel_for(grid.count(), [&](std::size_t idx) { values[idx] = fn(grid.point(idx)); });
    return values;
}

inline std::vector<double> sample_pseudopotential(const FieldModel& model, const DriveConfig& drive,
                                                  const Species& species, const GridSpec& grid) {
    return sample_grid(grid, [&](const Vector3d& p) {
        return pseudopotential_at(model, drive, species, p);
    });
}

// ---------------------------------------------------------------------------
// derivatives of the effective potential

// Central-difference gradient, eV/m.
template <typename Fn>
Vector3d fd_gradient(Fn&& f, const Vector3d& p, double h) {
    Vector3d g;
    for (int a = 0; a < 3; ++a) {
        Vector3d dp = Vector3d::Zero();
        dp[a] = h;
        g[a] = (f(p + dp) - f(p - dp)) / (2.0 * h);
    }
    return g;
}

// Symmetric second-derivative matrix with one Richardson step, eV/m^2.
template <typename Fn>
Matrix3d fd_hessian(Fn&& f, const Vector3d& p, double h) {
    auto hess_at = [&](double step) {
        Matrix3d m;
        const double f0 = f(p);
        for (int a = 0; a < 3; ++a) {
            Vector3d da = Vector3d::Zero();
            da[a] = step;
            m(a, a) = (f(p + da) - 2.0 * f0 + f(p - da)) / (step * step);
            for (int b = a + 1; b < 3; ++b) {
                Vector3d db = Vector3d::Zero();
                db[b] = step;
                const double v = (f(p + da + db) - f(p + da - db) - f(p - da + db) + f(p - da - db)) /
                                 (4.0 * step * step);
                m(a, b) = v;
                m(b, a) = v;
            }
        }
        return m;
    };
    const Matrix3d coarse = hess_at(h);
    const Matrix3d fine = hess_at(0.5 * h);
    return (4.0 * fine - coarse) / 3.0;
}

struct SecularResult {
    std::array<double, 3> omega{};      // rad/s, ascending
    Matrix3d axes = Matrix3d::Identity();  // principal axes in columns
    Matrix3d hessian_joule = Matrix3d::Zero();  // J/m^2
};

// Parabolic fit of the effective potential around a minimum via the
// finite-difference Hessian; omega_k = sqrt(lambda_k / m).
template <typename Fn>
SecularResult secular_from_potential(Fn&& f_eV, const Vector3d& site, double mass, double step) {
    SecularResult r;
    const Matrix3d h_eV = fd_hessian(f_eV, site, step);
    r.hessian_joule = h_eV * constants::elementary_charge;
    Eigen::SelfAdjointEigenSolver<Matrix3d> es(r.hessian_joule);
    const Vector3d ev = es.eigenvalues();
    const double lam_max = std::max(1e-300, ev.maxCoeff());
    for (int k = 0; k < 3; ++k) {
        if (ev[k] < -1e-6 * lam_max)
            throw saddle_not_minimum_error("potential curvature is negative along a principal axis");
        r.omega[k] = std::sqrt(std::max(0.0, ev[k]) / mass);
    }
    r.axes = es.eigenvectors();
    return r;
}

inline SecularResult secular_frequencies(const FieldModel& model, const DriveConfig& drive,
                                         const Species& species, const Vector3d& site,
                                         std::optional<double> step = {}) {
    const double h = step ? *step : std::max(1e-3 * site.z(), 1e-6);
    return secular_from_potential(
        [&](const Vector3d& p) { return pseudopotential_at(model, drive, species, p); }, site,
        species.mass, h);
}

// ---------------------------------------------------------------------------
// stability

enum class StabilityClass { stable_centered, marginal, unstable_risk };

struct StabilityThresholds {
    double centered = 1.0 / 7.0 + 1e-9;
    double marginal = 0.25;
};

inline double stability_ratio(double omega_sec, double omega_drive) {
    if (omega_drive <= 0.0) throw invalid_parameter_error("drive frequency must be positive");
    if (omega_sec < 0.0) throw invalid_parameter_error("secular frequency must be non-negative");
    return omega_sec / omega_drive;
}

inline StabilityClass classify_stability(double ratio, const StabilityThresholds& t = {}) {
    if (ratio <= t.centered) return StabilityClass::stable_centered;
    if (ratio <= t.marginal) return StabilityClass::marginal;
    return StabilityClass::unstable_risk;
}

inline const char* to_string(StabilityClass c) {
    switch (c) {
        case StabilityClass::stable_centered: return "stable-centered";
        case StabilityClass::marginal: return "marginal";
        case StabilityClass::unstable_risk: return "unstable-risk";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// minima search

struct Minimum {
    Vector3d position;
    double value_eV = 0.0;
    bool refined = false;     // gradient tolerance reached
    bool is_minimum = true;   // curvature check (saddles are discarded upstream)
};

struct MinimaOptions {
    double grad_tol = 1e-9;   // eV/m, scaled by local curvature
    int max_iterations = 200;
};

namespace detail {

template <typename Fn>
Minimum refine_minimum(Fn&& f, Vector3d x, const Vector3d& lo_box, const Vector3d& hi_box,
                       double cell, const MinimaOptions& opt) {
    const double h = std::max(1e-4 * cell, 1e-12);
    // keep finite-difference probes inside the sampling box
    const Vector3d margin = Vector3d::Constant(20.0 * h);
    const Vector3d lo = lo_box + margin;
    const Vector3d hi = hi_box - margin;
    x = x.cwiseMax(lo).cwiseMin(hi);
    double fx = f(x);
    bool converged = false;
    double step = cell;  // initial trial step
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Vector3d g = fd_gradient(f, x, h);
        const double gn = g.norm();
        const double curvature = std::abs(fd_hessian(f, x, std::max(h, 1e-2 * cell)).trace());
        const double tol = opt.grad_tol * std::max(1.0, curvature * cell);
        if (gn < tol) {
            converged = true;
            break;
        }
        // Armijo backtracking along -g
        const Vector3d dir = -g / gn;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            Vector3d trial = (x + step * dir).cwiseMax(lo).cwiseMin(hi);
            const double ft = f(trial);
            if (ft <= fx - 1e-4 * step * gn) {
                x = trial;
                fx = ft;
                accepted = true;
                step *= 1.6;
                break;
            }
            step *= 0.5;
        }
        if (!accepted || step < 1e-15) break;
    }
    // Newton polish when the curvature is positive definite
    for (int it = 0; it < 8; ++it) {
        const Matrix3d hess = fd_hessian(f, x, std::max(h, 1e-3 * cell));
        Eigen::LLT<Matrix3d> llt(hess);
        if (llt.info() != Eigen::Success) break;
        const Vector3d g = fd_gradient(f, x, h);
        Vector3d dx = llt.solve(-g);
        if (dx.norm() > cell) dx *= cell / dx.norm();
        const Vector3d trial = (x + dx).cwiseMax(lo).cwiseMin(hi);
        const double ft = f(trial);
        if (!(ft <= fx)) break;
        x = trial;
        fx = ft;
        if (dx.norm() < 1e-14) break;
    }
    // a vanished gradient alone also marks ridge saddles; check the curvature
    Eigen::SelfAdjointEigenSolver<Matrix3d> es(fd_hessian(f, x, std::max(h, 1e-2 * cell)));
    const double lam_max = es.eigenvalues().cwiseAbs().maxCoeff();
    const bool is_min = es.eigenvalues().minCoeff() > -1e-4 * std::max(lam_max, 1e-300);
    return {x, fx, converged, is_min};
}

}  // namespace detail

// Interior grid cells that are minimal among their 26 neighbours.
inline std::vector<std::size_t> grid_local_minima(const std::vector<double>& values,
                                                  const GridSpec& grid) {
    std::vector<std::size_t> candidates;
    for (int i = 1; i + 1 < grid.nx; ++i)
        for (int j = 1; j + 1 < grid.ny; ++j)
            for (int k = 1; k + 1 < grid.nz; ++k) {
                const double v = values[grid.index(i, j, k)];
                bool is_min = true;
                for (int di = -1; di <= 1 && is_min; ++di)
                    for (int dj = -1; dj <= 1 && is_min; ++dj)
                        for (int dk = -1; dk <= 1 && is_min; ++dk) {
                            if (!di && !dj && !dk) continue;
                            if (values[grid.index(i + di, j + dj, k + dk)] < v) is_min = false;
                        }
                if (is_min) candidates.push_back(grid.index(i, j, k));
            }
    return candidates;
}

// All local minima of fn on the grid (26-neighbour test), each refined by
// Armijo gradient descent plus Newton polish; duplicates within half a grid
// cell are merged. Returns positions sorted lexicographically.
template <typename Fn>
std::vector<Minimum> refine_grid_minima(Fn&& fn, const GridSpec& grid,
                                        const std::vector<std::size_t>& candidates,
                                        const MinimaOptions& opt = {}) {
    const Vector3d lo = grid.origin;
    const Vector3d hi = grid.point(grid.nx - 1, grid.ny - 1, grid.nz - 1);
    const double cell = grid.spacing.minCoeff();
    std::vector<Minimum> minima(candidates.size());
    parallel_for(candidates.size(), [&](std::size_t c) {
        minima[c] = detail::refine_minimum(fn, grid.point(candidates[c]), lo, hi, cell, opt);
    });

    // merge duplicates within half a grid cell (refined copies of one basin)
    const double merge_dist = 0.5 * grid.spacing.maxCoeff();
    std::vector<Minimum> unique;
    for (const auto& m : minima) {
        if (!m.is_minimum) continue;
        bool dup = false;
        for (auto& u : unique)
            if ((u.position - m.position).norm() < merge_dist) {
                if (m.value_eV < u.value_eV) u = m;
                dup = true;
                break;
            }
        if (!dup) unique.push_back(m);
    }
    std::sort(unique.begin(), unique.end(), [](const Minimum& a, const Minimum& b) {
        if (a.position.x() != b.position.x()) return a.position.x() < b.position.x();
        if (a.position.y() != b.position.y()) return a.position.y() < b.position.y();
        return a.position.z() < b.position.z();
    });
    return unique;
}

template <typename Fn>
std::vector<Minimum> find_minima_of(Fn&& fn, const GridSpec& grid, const MinimaOptions& opt = {}) {
    const std::vector<double> values = sample_grid(grid, fn);
    return refine_grid_minima(fn, grid, grid_local_minima(values, grid), opt);
}

inline std::vector<Minimum> find_minima(const FieldModel& model, const DriveConfig& drive,
                                        const Species& species, const GridSpec& grid,
                                        const MinimaOptions& opt = {}) {
    return find_minima_of(
        [&](const Vector3d& p) { return pseudopotential_at(model, drive, species, p); }, grid, opt);
}

// ---------------------------------------------------------------------------
// trap depth by sublevel flood fill

struct ConnectResult {
    double level = 0.0;        // value at which the components join
    std::size_t cell = 0;      // cell whose activation joined them
    double level_step = 0.0;   // local level quantisation (uncertainty)
    bool connected = false;
};

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace detail

// Smallest sublevel threshold at which cell `a` becomes 26-connected to `b`
// (or, with b empty, to the grid boundary). Cells are activated in ascending
// value order.
inline ConnectResult sublevel_connection(const std::vector<double>& values, const GridSpec& grid,
                                         std::size_t cell_a, std::optional<std::size_t> cell_b) {
    const std::size_t n = values.size();
    const std::size_t boundary_node = n;
    detail::UnionFind uf(n + 1);
    std::vector<bool> active(n, false);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });

    auto decode = [&](std::size_t idx, int& i, int& j, int& k) {
        k = static_cast<int>(idx % grid.nz);
        j = static_cast<int>((idx / grid.nz) % grid.ny);
        i = static_cast<int>(idx / (static_cast<std::size_t>(grid.ny) * grid.nz));
    };

    double prev_level = values[order.front()];
    for (std::size_t rank = 0; rank < n; ++rank) {
        const std::size_t idx = order[rank];
        active[idx] = true;
        int i, j, k;
        decode(idx, i, j, k);
        if (i == 0 || j == 0 || k == 0 || i == grid.nx - 1 || j == grid.ny - 1 || k == grid.nz - 1)
            uf.unite(idx, boundary_node);
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj)
                for (int dk = -1; dk <= 1; ++dk) {
                    if (!di && !dj && !dk) continue;
                    const int ii = i + di, jj = j + dj, kk = k + dk;
                    if (ii < 0 || jj < 0 || kk < 0 || ii >= grid.nx || jj >= grid.ny || kk >= grid.nz)
                        continue;
                    const std::size_t nb = grid.index(ii, jj, kk);
                    if (active[nb]) uf.unite(idx, nb);
                }
        const std::size_t target = cell_b ? uf.find(*cell_b) : uf.find(boundary_node);
        if (active[cell_a] && (!cell_b || active[*cell_b]) && uf.find(cell_a) == target) {
            ConnectResult r;
            r.level = values[idx];
            r.cell = idx;
            r.level_step = std::max(0.0, values[idx] - prev_level);
            if (rank + 1 < n) r.level_step = std::max(r.level_step, values[order[rank + 1]] - values[idx]);
            r.connected = true;
            return r;
        }
        prev_level = values[idx];
    }
    return {};
}

struct DepthResult {
    double depth_eV = 0.0;
    double site_value_eV = 0.0;
    double level_eV = 0.0;
    Vector3d escape_point = Vector3d::Zero();
    double uncertainty_eV = 0.0;
    bool refined = false;
};

namespace detail {

// One local Newton polish of the saddle found by the flood fill; accepted only
// if it stays near the grid cell, inside the sampling box, and close to the
// grid level.
template <typename Fn>
bool refine_saddle(Fn&& f, Vector3d& saddle, double& level, const GridSpec& grid,
                   double level_step) {
    const double cell = grid.spacing.maxCoeff();
    const double h = 1e-3 * cell;
    const Vector3d lo = grid.origin + Vector3d::Constant(20.0 * h);
    const Vector3d hi = grid.point(grid.nx - 1, grid.ny - 1, grid.nz - 1) - Vector3d::Constant(20.0 * h);
    const Vector3d start = saddle;
    Vector3d x = saddle.cwiseMax(lo).cwiseMin(hi);
    if ((x - start).norm() > 1e-12 + 1e-9 * cell) return false;  // boundary escape, keep grid level
    for (int it = 0; it < 12; ++it) {
        const Vector3d g = fd_gradient(f, x, h);
        const Matrix3d hess = fd_hessian(f, x, 10.0 * h);
        Eigen::FullPivLU<Matrix3d> lu(hess);
        if (!lu.isInvertible()) return false;
        Vector3d dx = lu.solve(-g);
        if (dx.norm() > cell) dx *= cell / dx.norm();
        x = (x + dx).cwiseMax(lo).cwiseMin(hi);
        if ((x - start).norm() > 2.5 * cell) return false;
        if (dx.norm() < 1e-13) break;
    }
    const double fx = f(x);
    if (std::abs(fx - level) > std::max(5.0 * level_step, 1e-12 + 0.05 * std::abs(level)))
        return false;
    saddle = x;
    level = fx;
    return true;
}

}  // namespace detail

// Depth of the basin around `site`: smallest level whose sublevel set connected
// to the site touches the sampling-box boundary, minus the site value. The
// saddle is then polished once with a local Newton step on grad(f) = 0.
template <typename Fn>
DepthResult trap_depth_of(Fn&& fn, const GridSpec& grid, const Vector3d& site) {
    const std::vector<double> values = sample_grid(grid, fn);

    // nearest grid cell to the site, nudged to the local minimum value
    int si = static_cast<int>(std::lround((site.x() - grid.origin.x()) / grid.spacing.x()));
    int sj = static_cast<int>(std::lround((site.y() - grid.origin.y()) / grid.spacing.y()));
    int sk = static_cast<int>(std::lround((site.z() - grid.origin.z()) / grid.spacing.z()));
    si = std::clamp(si, 0, grid.nx - 1);
    sj = std::clamp(sj, 0, grid.ny - 1);
    sk = std::clamp(sk, 0, grid.nz - 1);
    std::size_t site_cell = grid.index(si, sj, sk);
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -1; dk <= 1; ++dk) {
                const int ii = si + di, jj = sj + dj, kk = sk + dk;
                if (ii < 0 || jj < 0 || kk < 0 || ii >= grid.nx || jj >= grid.ny || kk >= grid.nz)
                    continue;
                if (values[grid.index(ii, jj, kk)] < values[site_cell])
                    site_cell = grid.index(ii, jj, kk);
            }

    const auto conn = sublevel_connection(values, grid, site_cell, {});
    DepthResult r;
    r.site_value_eV = fn(site);
    if (!conn.connected) return r;
    r.level_eV = conn.level;
    r.escape_point = grid.point(conn.cell);
    r.uncertainty_eV = conn.level_step;
    r.refined = detail::refine_saddle(fn, r.escape_point, r.level_eV, grid, conn.level_step);
    r.depth_eV = std::max(0.0, r.level_eV - r.site_value_eV);
    return r;
}

inline DepthResult trap_depth(const FieldModel& model, const DriveConfig& drive,
                              const Species& species, const Vector3d& site, const GridSpec& grid) {
    return trap_depth_of(
        [&](const Vector3d& p) { return pseudopotential_at(model, drive, species, p); }, grid, site);
}

// Kappa_d from the measured depth: ratio to the depth of an ideal
// hyperbolic-electrode trap with the same q, m, V, Omega and ion-electrode
// distance d, i.e. kappa_d = 4 m Omega^2 d^2 D / (q^2 V^2).
inline double depth_efficiency(double depth_eV, const Species& species, const DriveConfig& drive,
                               double ion_electrode_distance) {
    species.require_valid();
    if (drive.v_nom <= 0.0) throw invalid_parameter_error("depth efficiency needs a nonzero drive voltage");
    if (drive.omega <= 0.0) throw invalid_parameter_error("drive omega must be positive");
    if (ion_electrode_distance <= 0.0)
        throw invalid_parameter_error("ion-electrode distance must be positive");
    const double depth_j = depth_eV * constants::elementary_charge;
    return 4.0 * species.mass * drive.omega * drive.omega * ion_electrode_distance *
           ion_electrode_distance * depth_j / (species.charge * species.charge * drive.v_nom * drive.v_nom);
}

// Reference constants of the hyperbolic-trap comparison (axial direction).
// kappa enters Eq.-style stability estimates for ideal traps; no numerical
// path here consumes them beyond depth_efficiency's definition.
inline constexpr double hyperbolic_reference_K = 1.4142135623730951;  // sqrt(2), axial
inline constexpr double typical_planar_kappa = 0.2;

struct TrapSiteReport {
    Vector3d position = Vector3d::Zero();
    Matrix3d hessian_joule = Matrix3d::Zero();
    std::array<double, 3> secular_frequencies{};  // rad/s ascending
    Matrix3d principal_axes = Matrix3d::Identity();
    std::array<double, 3> stability_ratios{};
    double value_eV = 0.0;
    double depth_eV = std::numeric_limits<double>::quiet_NaN();
    Vector3d escape_point = Vector3d::Zero();
    double kappa_d = std::numeric_limits<double>::quiet_NaN();
    bool refined = true;
};

inline TrapSiteReport site_report(const FieldModel& model, const DriveConfig& drive,
                                  const Species& species, const Minimum& minimum,
                                  std::optional<GridSpec> depth_grid = {},
                                  std::optional<double> hessian_step = {}) {
    TrapSiteReport rep;
    rep.position = minimum.position;
    rep.value_eV = minimum.value_eV;
    rep.refined = minimum.refined;
    const auto sec = secular_frequencies(model, drive, species, minimum.position, hessian_step);
    rep.hessian_joule = sec.hessian_joule;
    rep.secular_frequencies = sec.omega;
    rep.principal_axes = sec.axes;
    for (int k = 0; k < 3; ++k)
        rep.stability_ratios[k] = stability_ratio(sec.omega[k], drive.omega);
    if (depth_grid) {
        const auto d = trap_depth(model, drive, species, minimum.position, *depth_grid);
        rep.depth_eV = d.depth_eV;
        rep.escape_point = d.escape_point;
        rep.kappa_d = depth_efficiency(d.depth_eV, species, drive, minimum.position.z());
    }
    return rep;
}

}  // namespace traplab::metrics
