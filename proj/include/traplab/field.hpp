#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "traplab/errors.hpp"
#include "traplab/geometry.hpp"
#include "traplab/solid_angle.hpp"

namespace traplab::field {

using Eigen::Vector3d;
using geometry::ElectrodeLayout;
using geometry::Role;

// One common RF phase for every electrode; per-group amplitude fractions
// (V_a / V_nom) and DC biases. RF-role electrodes default to fraction 1,
// everything else to 0; dc_bias defaults to 0 for all groups.
struct DriveConfig {
    double v_nom = 0.0;   // V, nominal RF amplitude
    double omega = 0.0;   // rad/s
    std::map<std::string, double> amplitude_fraction;
    std::map<std::string, double> dc_bias;
    double phase = 0.0;   // rad, common RF phase offset

    double fraction_for(Role role, const std::string& group) const {
        if (auto it = amplitude_fraction.find(group); it != amplitude_fraction.end()) {
            if (it->second < 0.0 || it->second > 1.0)
                throw invalid_parameter_error("amplitude fraction for '" + group +
                                              "' must lie in [0,1]");
            return it->second;
        }
        return (role == Role::rf_fixed || role == Role::rf_addressable) ? 1.0 : 0.0;
    }
    double bias_for(const std::string& group) const {
        if (auto it = dc_bias.find(group); it != dc_bias.end()) return it->second;
        return 0.0;
    }
    void require_valid() const {
        if (omega <= 0.0) throw invalid_parameter_error("drive omega must be positive");
        if (v_nom < 0.0) throw invalid_parameter_error("drive v_nom must be non-negative");
        for (const auto& [g, f] : amplitude_fraction)
            if (f < 0.0 || f > 1.0)
                throw invalid_parameter_error("amplitude fraction for '" + g + "' must lie in [0,1]");
    }
};

// Per-electrode dimensionless potential weight and gradient at one point.
struct BasisEvaluation {
    std::vector<double> beta;
    std::vector<Vector3d> grad;
};

struct FieldOptions {
    int image_pairs = 8;                  // ground-plane image expansion depth
    std::optional<double> gap_dilation;   // default: half the minimal clearance
};

// Gapless-plane solver: each electrode patch held at V contributes
// V * (subtended solid angle) / (2*pi) to the potential above the plane.
// Gap strips are split between their neighbours at the midline by dilating
// every patch by half the minimal inter-electrode clearance. A ground plane
// at z = H is handled by image reflections across z = 0 and z = H.
class FieldModel {
public:
    explicit FieldModel(const ElectrodeLayout& layout, const FieldOptions& opt = {})
        : image_pairs_(opt.image_pairs), plane_h_(layout.ground_plane_height) {
        if (image_pairs_ < 1) throw invalid_parameter_error("image_pairs must be >= 1");
        if (plane_h_ && *plane_h_ <= 0.0)
            throw invalid_parameter_error("ground plane height must be positive");
        double delta = opt.gap_dilation ? *opt.gap_dilation : 0.5 * min_clearance(layout);
        if (!std::isfinite(delta) || delta < 0.0) delta = 0.0;
        patches_.reserve(layout.electrodes.size());
        for (const auto& e : layout.electrodes) {
            Patch p;
            p.id = e.id;
            p.group = e.drive_group;
            p.role = e.role;
            p.outer = delta > 0.0 ? geometry::offset_ring(e.outer, delta) : e.outer;
            for (const auto& h : e.holes)
                p.holes.push_back(delta > 0.0 ? geometry::offset_ring(h, -delta) : h);
            patches_.push_back(std::move(p));
        }
    }

    std::size_t electrode_count() const { return patches_.size(); }
    const std::string& electrode_id(std::size_t i) const { return patches_[i].id; }
    const std::string& electrode_group(std::size_t i) const { return patches_[i].group; }
    Role electrode_role(std::size_t i) const { return patches_[i].role; }
    std::optional<double> ground_plane_height() const { return plane_h_; }
    int image_pairs() const { return image_pairs_; }

    void require_in_domain(const Vector3d& p) const {
        if (!(p.z() > 0.0)) throw out_of_domain_error("point must lie strictly above the electrode plane");
        if (plane_h_ && !(p.z() < *plane_h_))
            throw out_of_domain_error("point must lie strictly below the ground plane");
    }

    BasisEvaluation basis_at(const Vector3d& p) const {
        require_in_domain(p);
        BasisEvaluation out;
        out.beta.resize(patches_.size());
        out.grad.resize(patches_.size());
        for (std::size_t i = 0; i < patches_.size(); ++i) {
            auto [b, g] = patch_beta(patches_[i], p);
            out.beta[i] = b;
            out.grad[i] = g;
        }
        return out;
    }

    // Instantaneous potential at RF phase angle phi:
    //   sum_i beta_i * (fraction_i * v_nom * cos(phi) + dc_i)
    double potential_at(const DriveConfig& drive, const Vector3d& p, double phase_angle) const {
        require_in_domain(p);
        const double c = std::cos(phase_angle);
        double phi = 0.0;
        for (const auto& patch : patches_) {
            const double v = drive.fraction_for(patch.role, patch.group) * drive.v_nom * c +
                             drive.bias_for(patch.group);
            if (v != 0.0) phi += v * patch_beta(patch, p).first;
        }
        return phi;
    }

    // Amplitude vector of the RF component of -grad(potential).
    Vector3d rf_field_at(const DriveConfig& drive, const Vector3d& p) const {
        require_in_domain(p);
        Vector3d e = Vector3d::Zero();
        for (const auto& patch : patches_) {
            const double v = drive.fraction_for(patch.role, patch.group) * drive.v_nom;
            if (v != 0.0) e -= v * patch_beta(patch, p).second;
        }
        return e;
    }

    struct Sample {
        Vector3d rf_field_amplitude = Vector3d::Zero();  // V/m
        Vector3d dc_field = Vector3d::Zero();            // V/m
        double dc_potential = 0.0;                       // V
    };

    Sample sample(const DriveConfig& drive, const Vector3d& p) const {
        require_in_domain(p);
        Sample s;
        for (const auto& patch : patches_) {
            const double v_rf = drive.fraction_for(patch.role, patch.group) * drive.v_nom;
            const double v_dc = drive.bias_for(patch.group);
            if (v_rf == 0.0 && v_dc == 0.0) continue;
            auto [b, g] = patch_beta(patch, p);
            if (v_rf != 0.0) s.rf_field_amplitude -= v_rf * g;
            if (v_dc != 0.0) {
                s.dc_field -= v_dc * g;
                s.dc_potential += v_dc * b;
            }
        }
        return s;
    }

    static double min_clearance(const ElectrodeLayout& layout) {
        double best = std::numeric_limits<double>::infinity();
        const auto& es = layout.electrodes;
        for (std::size_t i = 0; i < es.size(); ++i)
            for (std::size_t j = i + 1; j < es.size(); ++j) {
                auto rings_of = [](const geometry::Electrode& e) {
                    std::vector<const geometry::Ring*> r{&e.outer};
                    for (const auto& h : e.holes) r.push_back(&h);
                    return r;
                };
                for (const auto* ra : rings_of(es[i]))
                    for (const auto* rb : rings_of(es[j]))
                        best = std::min(best, geometry::ring_distance(*ra, *rb));
            }
        return best;
    }

private:
    struct Patch {
        std::string id, group;
        Role role = Role::ground;
        geometry::Ring outer;
        std::vector<geometry::Ring> holes;
    };

    std::pair<double, Vector3d> patch_beta(const Patch& patch, const Vector3d& p) const {
        if (!plane_h_) {
            auto t = field_detail::polygon_beta(patch.outer, patch.holes, p);
            return {t.beta, t.grad};
        }
        const double h = *plane_h_;
        double beta = 0.0;
        Vector3d grad = Vector3d::Zero();
        for (int n = 0; n < image_pairs_; ++n) {
            const Vector3d up(p.x(), p.y(), p.z() + 2.0 * n * h);
            const Vector3d dn(p.x(), p.y(), (2.0 * n + 2.0) * h - p.z());
            auto tu = field_detail::polygon_beta(patch.outer, patch.holes, up);
            auto td = field_detail::polygon_beta(patch.outer, patch.holes, dn);
            beta += tu.beta - td.beta;
            grad.x() += tu.grad.x() - td.grad.x();
            grad.y() += tu.grad.y() - td.grad.y();
            grad.z() += tu.grad.z() + td.grad.z();  // reflected height flips dz/dz
        }
        return {beta, grad};
    }

    std::vector<Patch> patches_;
    int image_pairs_;
    std::optional<double> plane_h_;
};

// Image-series self check: grow the expansion until the potential at `p`
// changes by less than rel_tol; returns the number of pairs that sufficed.
inline int converged_image_pairs(const ElectrodeLayout& layout, const DriveConfig& drive,
                                 const Vector3d& p, double rel_tol = 1e-4, int max_pairs = 64) {
    FieldOptions opt;
    opt.image_pairs = 1;
    double prev = FieldModel(layout, opt).potential_at(drive, p, 0.0);
    for (int pairs = 2; pairs <= max_pairs; ++pairs) {
        opt.image_pairs = pairs;
        const double cur = FieldModel(layout, opt).potential_at(drive, p, 0.0);
        const double scale = std::max({std::abs(cur), std::abs(prev), 1e-300});
        if (std::abs(cur - prev) / scale < rel_tol) return pairs;
        prev = cur;
    }
    return max_pairs;
}

}  // namespace traplab::field
