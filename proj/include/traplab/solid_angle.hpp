#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <vector>

#include "traplab/geometry.hpp"

namespace traplab::field_detail {

using Eigen::Vector2d;
using Eigen::Vector3d;

// Solid angle of the planar CCW polygon (z = 0) seen from p (p.z > 0), as a
// fraction of 2*pi, together with its gradient with respect to p.
//
// The angle is accumulated per fan triangle with the Van Oosterom-Strackee
// arctangent form; the gradient is the Biot-Savart line integral around the
// polygon edges, which for a straight edge with endpoint vectors a, b reduces
// to (|a|+|b|) (a x b) / (|a||b| (|a||b| + a.b)).
struct BetaTerm {
    double beta = 0.0;
    Vector3d grad = Vector3d::Zero();
};

inline void accumulate_ring(const geometry::Ring& ring, const Vector3d& p, double sign,
                            double& beta, Vector3d& grad) {
    const std::size_t n = ring.size();
    const Vector3d r0(ring[0].x() - p.x(), ring[0].y() - p.y(), -p.z());
    const double n0 = r0.norm();
    double omega = 0.0;

    Vector3d r1(ring[1].x() - p.x(), ring[1].y() - p.y(), -p.z());
    double n1 = r1.norm();
    double d01 = r0.dot(r1);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const Vector3d r2(ring[i + 1].x() - p.x(), ring[i + 1].y() - p.y(), -p.z());
        const double n2 = r2.norm();
        const double num = r0.dot(r1.cross(r2));
        const double den = n0 * n1 * n2 + d01 * n2 + r0.dot(r2) * n1 + r1.dot(r2) * n0;
        omega += 2.0 * std::atan2(num, den);
        r1 = r2;
        n1 = n2;
        d01 = r0.dot(r2);
    }

    Vector3d gsum = Vector3d::Zero();
    Vector3d a(ring[n - 1].x() - p.x(), ring[n - 1].y() - p.y(), -p.z());
    double na = a.norm();
    for (std::size_t i = 0; i < n; ++i) {
        const Vector3d b(ring[i].x() - p.x(), ring[i].y() - p.y(), -p.z());
        const double nb = b.norm();
        gsum += (na + nb) / (na * nb * (na * nb + a.dot(b))) * a.cross(b);
        a = b;
        na = nb;
    }

    // CCW ring viewed from above winds negatively in the VOS convention
    constexpr double two_pi = 6.283185307179586476925286766559;
    beta += sign * (-omega / two_pi);
    grad += sign * (-1.0 / two_pi) * gsum;
}

inline BetaTerm polygon_beta(const geometry::Ring& outer, const std::vector<geometry::Ring>& holes,
                             const Vector3d& p) {
    BetaTerm t;
    accumulate_ring(outer, p, +1.0, t.beta, t.grad);
    for (const auto& h : holes) accumulate_ring(h, p, -1.0, t.beta, t.grad);
    return t;
}

}  // namespace traplab::field_detail
