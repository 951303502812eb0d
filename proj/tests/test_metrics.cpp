#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "traplab/constants.hpp"
#include "traplab/field.hpp"
#include "traplab/geometry.hpp"
#include "traplab/metrics.hpp"

using namespace traplab;
using namespace traplab::metrics;
using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

field::DriveConfig drive_215() {
    field::DriveConfig d;
    d.v_nom = 215.0;
    d.omega = 2.0 * std::numbers::pi * 10e6;
    return d;
}

}  // namespace

TEST_CASE("pseudopotential of a uniform field, Ca-40 at 2pi x 10 MHz") {
    // direct evaluation with CODATA constants: q^2 E^2 / (4 m Omega^2) = 1.53 eV
    const double e_field = 1e5;
    const double omega = 2.0 * std::numbers::pi * 1e7;
    const auto ca = Species::ca40_ion();
    const double joules = ca.charge * ca.charge * e_field * e_field /
                          (4.0 * ca.mass * omega * omega);
    const double ev = joules / constants::elementary_charge;
    CHECK_THAT(ev, Catch::Matchers::WithinAbs(1.53, 0.01));
}

TEST_CASE("pseudopotential scalings") {
    const auto layout = geometry::make_point_trap(200e-6, 300e-6, 50e-6);
    const field::FieldModel model(layout);
    const auto ca = Species::ca40_ion();
    const Vector3d p(0.1e-3, -0.05e-3, 0.5e-3);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uxy(-0.4e-3, 0.4e-3), uz(0.2e-3, 1.2e-3);

    SECTION("drive with zero RF fraction gives zero") {
        auto off = drive_215();
        off.amplitude_fraction["rf"] = 0.0;
        CHECK(pseudopotential_at(model, off, ca, p) == 0.0);
    }
    SECTION("doubling the drive frequency quarters the pseudopotential") {
        auto d1 = drive_215();
        auto d2 = drive_215();
        d2.omega *= 2.0;
        CHECK_THAT(pseudopotential_at(model, d2, ca, p),
                   Catch::Matchers::WithinRel(0.25 * pseudopotential_at(model, d1, ca, p), 1e-12));
    }
    SECTION("voltage scaling is exactly quadratic at random points") {
        for (int k = 0; k < 8; ++k) {
            const Vector3d q(uxy(rng), uxy(rng), uz(rng));
            auto d1 = drive_215();
            auto d2 = drive_215();
            const double c = 1.7;
            d2.v_nom *= c;
            CHECK_THAT(pseudopotential_at(model, d2, ca, q),
                       Catch::Matchers::WithinRel(c * c * pseudopotential_at(model, d1, ca, q), 1e-12));
        }
    }
    SECTION("pseudopotential is inversely proportional to mass") {
        auto heavy = ca;
        heavy.mass *= 3.0;
        CHECK_THAT(pseudopotential_at(model, drive_215(), heavy, p),
                   Catch::Matchers::WithinRel(pseudopotential_at(model, drive_215(), ca, p) / 3.0,
                                              1e-12));
    }
}

TEST_CASE("secular frequencies of a synthetic harmonic well") {
    // closed-form oracle: phi(r) = sum k_i (r_i - c_i)^2 / 2 (in eV),
    // omega_i = sqrt(k_i * e / m)
    const auto ca = Species::ca40_ion();
    const Vector3d center(1e-4, -2e-4, 6e-4);
    const Vector3d k_ev(4e6, 9e6, 1e6);  // eV/m^2
    auto well = [&](const Vector3d& p) {
        const Vector3d d = p - center;
        return 0.5 * (k_ev.x() * d.x() * d.x() + k_ev.y() * d.y() * d.y() + k_ev.z() * d.z() * d.z());
    };
    const auto sec = secular_from_potential(well, center, ca.mass, 1e-5);
    std::array<double, 3> expected;
    for (int i = 0; i < 3; ++i)
        expected[i] = std::sqrt(k_ev[i] * constants::elementary_charge / ca.mass);
    std::sort(expected.begin(), expected.end());
    for (int i = 0; i < 3; ++i)
        CHECK_THAT(sec.omega[i], Catch::Matchers::WithinRel(expected[i], 1e-6));
}

TEST_CASE("secular frequencies reject a saddle") {
    auto saddle = [](const Vector3d& p) {
        return 1e6 * (p.x() * p.x() + p.y() * p.y() - 0.5 * p.z() * p.z());
    };
    CHECK_THROWS_AS(secular_from_potential(saddle, Vector3d::Zero(), 1e-26, 1e-5),
                    saddle_not_minimum_error);
}

TEST_CASE("point trap has one minimum on the symmetry axis") {
    const auto layout = geometry::make_point_trap(200e-6, 300e-6, 50e-6);
    const field::FieldModel model(layout);
    const auto ca = Species::ca40_ion();
    const auto grid = GridSpec::from_box({-0.4e-3, -0.4e-3, 0.1e-3}, {0.4e-3, 0.4e-3, 1.2e-3}, 15, 15, 21);
    const auto minima = find_minima(model, drive_215(), ca, grid);
    REQUIRE(minima.size() == 1);
    CHECK(std::abs(minima.front().position.x()) < 2e-6);
    CHECK(std::abs(minima.front().position.y()) < 2e-6);
    CHECK(minima.front().position.z() > 0.15e-3);

    // mirror-symmetric site: transverse principal axes align with the planes
    const auto sec = secular_frequencies(model, drive_215(), ca, minima.front().position);
    int axis_aligned = 0;
    for (int c = 0; c < 3; ++c) {
        const Vector3d a = sec.axes.col(c).cwiseAbs();
        if (a.maxCoeff() > 0.999) ++axis_aligned;
    }
    CHECK(axis_aligned >= 1);  // z always separates; x/y pair may be degenerate
}

TEST_CASE("2x2 array holds four sites above the ground discs") {
    const auto layout = geometry::make_addressable_array(geometry::ArrayParams::square(2, 2, 6e-3));
    const field::FieldModel model(layout);
    const auto ca = Species::ca40_ion();
    const auto grid = GridSpec::from_box({-4.2e-3, -4.2e-3, 0.2e-3}, {4.2e-3, 4.2e-3, 1.8e-3}, 29, 29, 17);
    const auto minima = find_minima(model, drive_215(), ca, grid);
    REQUIRE(minima.size() == 4);
    for (const auto& m : minima) {
        CHECK_THAT(std::abs(m.position.x()), Catch::Matchers::WithinAbs(3e-3, 0.35e-3));
        CHECK_THAT(std::abs(m.position.y()), Catch::Matchers::WithinAbs(3e-3, 0.35e-3));
    }
}

TEST_CASE("stability ratio and classification") {
    CHECK_THAT(stability_ratio(1e6, 7e6), Catch::Matchers::WithinRel(1.0 / 7.0, 1e-12));
    CHECK(classify_stability(stability_ratio(1e6, 7e6)) == StabilityClass::stable_centered);
    CHECK(classify_stability(stability_ratio(0.0, 7e6)) == StabilityClass::stable_centered);
    CHECK(classify_stability(0.2) == StabilityClass::marginal);
    CHECK(classify_stability(0.3) == StabilityClass::unstable_risk);
    CHECK_THROWS_AS(stability_ratio(1e6, 0.0), invalid_parameter_error);
    // a drive relaxed tenfold lowers the ratio tenfold
    CHECK_THAT(stability_ratio(1e5, 7e6),
               Catch::Matchers::WithinRel(stability_ratio(1e6, 7e6) / 10.0, 1e-12));
}

namespace {

// analytic double well along x, harmonic transverse; barrier height exactly 1
double double_well(const Vector3d& p) {
    const double x = p.x() / 1e-3;
    const double well = (x * x - 1.0) * (x * x - 1.0);
    return well + 3.0 * (p.y() / 1e-3) * (p.y() / 1e-3) + 3.0 * ((p.z() - 1e-3) / 1e-3) * ((p.z() - 1e-3) / 1e-3);
}

}  // namespace

TEST_CASE("flood-fill depth of a synthetic double well equals the barrier") {
    const auto grid = GridSpec::from_box({-2.4e-3, -1.4e-3, 0.05e-3}, {2.4e-3, 1.4e-3, 2.4e-3}, 81, 41, 41);
    const auto r = trap_depth_of(double_well, grid, {-1e-3, 0, 1e-3});
    // escape across the central hump at x = 0, height exactly 1 above the well
    CHECK(r.refined);
    CHECK_THAT(r.depth_eV, Catch::Matchers::WithinAbs(1.0, 5e-3));
    CHECK_THAT(r.escape_point.x(), Catch::Matchers::WithinAbs(0.0, 0.1e-3));

    SECTION("grid refinement x2 changes the depth by < 0.5%") {
        const auto fine = GridSpec::from_box({-2.4e-3, -1.4e-3, 0.05e-3}, {2.4e-3, 1.4e-3, 2.4e-3},
                                             161, 81, 81);
        const auto r2 = trap_depth_of(double_well, fine, {-1e-3, 0, 1e-3});
        CHECK(std::abs(r2.depth_eV - r.depth_eV) < 0.005 * r.depth_eV);
    }
}

TEST_CASE("depth efficiency definition") {
    const auto ca = Species::ca40_ion();
    auto drive = drive_215();
    // a perfect hyperbolic trap: D = q^2 V^2 / (4 m Omega^2 d^2) gives kappa = 1
    const double d = 0.5e-3;
    const double depth_j = ca.charge * ca.charge * drive.v_nom * drive.v_nom /
                           (4.0 * ca.mass * drive.omega * drive.omega * d * d);
    const double kappa = depth_efficiency(depth_j / constants::elementary_charge, ca, drive, d);
    CHECK_THAT(kappa, Catch::Matchers::WithinRel(1.0, 1e-12));

    auto zero_v = drive;
    zero_v.v_nom = 0.0;
    CHECK_THROWS_AS(depth_efficiency(0.1, ca, zero_v, d), invalid_parameter_error);
}

TEST_CASE("planar point trap depth efficiency stays below 2 percent") {
    const auto layout = geometry::make_point_trap(200e-6, 300e-6, 50e-6);
    const field::FieldModel model(layout);
    const auto ca = Species::ca40_ion();
    auto drive = drive_215();
    drive.v_nom = 100.0;
    const auto grid = GridSpec::from_box({-0.4e-3, -0.4e-3, 0.1e-3}, {0.4e-3, 0.4e-3, 1.2e-3}, 13, 13, 19);
    const auto minima = find_minima(model, drive, ca, grid);
    REQUIRE_FALSE(minima.empty());
    const auto dgrid = GridSpec::from_box({-2.5e-3, -2.5e-3, 0.05e-3}, {2.5e-3, 2.5e-3, 4e-3}, 51, 51, 41);
    const auto dep = trap_depth(model, drive, ca, minima.front().position, dgrid);
    const double kappa = depth_efficiency(dep.depth_eV, ca, drive, minima.front().position.z());
    CHECK(kappa > 0.0);
    CHECK(kappa <= 0.02);
}

TEST_CASE("hessian frequencies agree with 1D parabolic fits") {
    const auto layout = geometry::make_point_trap(200e-6, 300e-6, 50e-6);
    const field::FieldModel model(layout);
    const auto ca = Species::ca40_ion();
    const auto grid = GridSpec::from_box({-0.3e-3, -0.3e-3, 0.15e-3}, {0.3e-3, 0.3e-3, 0.9e-3}, 13, 13, 17);
    const auto minima = find_minima(model, drive_215(), ca, grid);
    REQUIRE_FALSE(minima.empty());
    const Vector3d site = minima.front().position;
    const auto sec = secular_frequencies(model, drive_215(), ca, site);

    // quadratic fit of the potential along each principal axis
    for (int c = 0; c < 3; ++c) {
        const Vector3d axis = sec.axes.col(c);
        const double h = 5e-6;
        double sxx = 0, sxy = 0;  // fit phi = a * s^2 (+ const), s in {-2h..2h}
        for (int s = -2; s <= 2; ++s) {
            const double phi = pseudopotential_at(model, drive_215(), ca, site + s * h * axis) -
                               pseudopotential_at(model, drive_215(), ca, site);
            sxx += std::pow(s * h, 4);
            sxy += s * h * s * h * phi;
        }
        const double curvature_ev = 2.0 * sxy / sxx;  // d2(phi)/ds2
        const double omega_fit = std::sqrt(curvature_ev * constants::elementary_charge / ca.mass);
        CHECK_THAT(omega_fit, Catch::Matchers::WithinRel(sec.omega[c], 0.01));
    }
}

TEST_CASE("sublevel connection finds the pass between two wells") {
    const auto grid = GridSpec::from_box({-2.4e-3, -1.4e-3, 0.05e-3}, {2.4e-3, 1.4e-3, 2.4e-3}, 81, 41, 41);
    const auto values = sample_grid(grid, double_well);
    auto cell_of = [&](const Vector3d& p) {
        const int i = static_cast<int>(std::lround((p.x() - grid.origin.x()) / grid.spacing.x()));
        const int j = static_cast<int>(std::lround((p.y() - grid.origin.y()) / grid.spacing.y()));
        const int k = static_cast<int>(std::lround((p.z() - grid.origin.z()) / grid.spacing.z()));
        return grid.index(i, j, k);
    };
    const auto conn = sublevel_connection(values, grid, cell_of({-1e-3, 0, 1e-3}),
                                          cell_of({1e-3, 0, 1e-3}));
    REQUIRE(conn.connected);
    CHECK_THAT(conn.level, Catch::Matchers::WithinAbs(1.0, 0.01));
}
