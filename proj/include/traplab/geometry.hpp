#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "traplab/errors.hpp"

namespace traplab::geometry {

using Eigen::Vector2d;

using Ring = std::vector<Vector2d>;  // closed polygon, CCW, last vertex != first

enum class Role { rf_fixed, rf_addressable, dc, ground };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::rf_fixed: return "rf_fixed";
        case Role::rf_addressable: return "rf_addressable";
        case Role::dc: return "dc";
        case Role::ground: return "ground";
    }
    return "?";
}

inline Role role_from_string(const std::string& s) {
    if (s == "rf_fixed") return Role::rf_fixed;
    if (s == "rf_addressable") return Role::rf_addressable;
    if (s == "dc") return Role::dc;
    if (s == "ground") return Role::ground;
    throw invalid_parameter_error("unknown electrode role: " + s);
}

// ---------------------------------------------------------------------------
// polygon primitives

inline double signed_area(const Ring& p) {
    double a = 0.0;
    for (std::size_t i = 0, n = p.size(); i < n; ++i) {
        const Vector2d& u = p[i];
        const Vector2d& v = p[(i + 1) % n];
        a += u.x() * v.y() - v.x() * u.y();
    }
    return 0.5 * a;
}

inline void make_ccw(Ring& p) {
    if (signed_area(p) < 0.0) std::reverse(p.begin(), p.end());
}

namespace detail {

inline double cross2(const Vector2d& a, const Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

// proper or touching intersection of segments [a,b] and [c,d]
inline bool segments_intersect(const Vector2d& a, const Vector2d& b,
                               const Vector2d& c, const Vector2d& d) {
    const double d1 = cross2(b - a, c - a);
    const double d2 = cross2(b - a, d - a);
    const double d3 = cross2(d - c, a - c);
    const double d4 = cross2(d - c, b - c);
    if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) return true;
    auto on_segment = [](const Vector2d& p, const Vector2d& q, const Vector2d& r) {
        return std::min(p.x(), r.x()) <= q.x() && q.x() <= std::max(p.x(), r.x()) &&
               std::min(p.y(), r.y()) <= q.y() && q.y() <= std::max(p.y(), r.y());
    };
    if (d1 == 0 && on_segment(a, c, b)) return true;
    if (d2 == 0 && on_segment(a, d, b)) return true;
    if (d3 == 0 && on_segment(c, a, d)) return true;
    if (d4 == 0 && on_segment(c, b, d)) return true;
    return false;
}

inline double point_segment_distance(const Vector2d& p, const Vector2d& a, const Vector2d& b) {
    const Vector2d ab = b - a;
    const double t = std::clamp(ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

inline double segment_segment_distance(const Vector2d& a, const Vector2d& b,
                                       const Vector2d& c, const Vector2d& d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

}  // namespace detail

inline bool is_simple(const Ring& p) {
    const std::size_t n = p.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // skip shared-endpoint neighbours
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (detail::segments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

inline bool point_in_ring(const Vector2d& q, const Ring& p) {
    bool in = false;
    for (std::size_t i = 0, n = p.size(), j = n - 1; i < n; j = i++) {
        const bool cond = (p[i].y() > q.y()) != (p[j].y() > q.y());
        if (cond) {
            const double x = p[j].x() + (q.y() - p[j].y()) / (p[i].y() - p[j].y()) * (p[i].x() - p[j].x());
            if (q.x() < x) in = !in;
        }
    }
    return in;
}

inline double ring_distance(const Ring& a, const Ring& b) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, n = a.size(); i < n; ++i)
        for (std::size_t j = 0, m = b.size(); j < m; ++j)
            best = std::min(best, detail::segment_segment_distance(
                                      a[i], a[(i + 1) % n], b[j], b[(j + 1) % m]));
    return best;
}

inline bool rings_edges_cross(const Ring& a, const Ring& b) {
    for (std::size_t i = 0, n = a.size(); i < n; ++i)
        for (std::size_t j = 0, m = b.size(); j < m; ++j)
            if (detail::segments_intersect(a[i], a[(i + 1) % n], b[j], b[(j + 1) % m]))
                return true;
    return false;
}

// Outward miter offset (delta > 0 grows a CCW ring, delta < 0 shrinks it).
inline Ring offset_ring(const Ring& p, double delta) {
    const std::size_t n = p.size();
    Ring out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector2d& prev = p[(i + n - 1) % n];
        const Vector2d& cur = p[i];
        const Vector2d& next = p[(i + 1) % n];
        Vector2d e0 = (cur - prev).normalized();
        Vector2d e1 = (next - cur).normalized();
        const Vector2d n0(e0.y(), -e0.x());  // outward normal of CCW edge
        const Vector2d n1(e1.y(), -e1.x());
        const double denom = 1.0 + n0.dot(n1);
        Vector2d dir = (denom > 1e-12) ? Vector2d((n0 + n1) / denom) : n0;
        out[i] = cur + delta * dir;
    }
    return out;
}

inline Ring make_circle(const Vector2d& center, double radius, int segments = 64) {
    if (radius <= 0) throw invalid_parameter_error("circle radius must be positive");
    Ring r(segments);
    for (int k = 0; k < segments; ++k) {
        const double th = 2.0 * std::numbers::pi * k / segments;
        r[k] = center + radius * Vector2d(std::cos(th), std::sin(th));
    }
    return r;
}

inline Ring make_rect(const Vector2d& center, double half_x, double half_y) {
    return {center + Vector2d(-half_x, -half_y), center + Vector2d(half_x, -half_y),
            center + Vector2d(half_x, half_y), center + Vector2d(-half_x, half_y)};
}

// ---------------------------------------------------------------------------
// electrodes and layouts

struct Rect2 {
    Vector2d min{0, 0};
    Vector2d max{0, 0};
    bool contains(const Vector2d& p) const {
        return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
    }
};

struct Electrode {
    std::string id;
    std::string drive_group;
    Role role = Role::ground;
    Ring outer;               // CCW
    std::vector<Ring> holes;  // CCW, strictly inside outer

    bool contains(const Vector2d& p) const {
        if (!point_in_ring(p, outer)) return false;
        for (const auto& h : holes)
            if (point_in_ring(p, h)) return false;
        return true;
    }
};

struct ElectrodeLayout {
    std::vector<Electrode> electrodes;
    std::optional<double> ground_plane_height;  // m above the z=0 electrode plane
    Rect2 bounding_region;

    const Electrode* find(const std::string& id) const {
        for (const auto& e : electrodes)
            if (e.id == id) return &e;
        return nullptr;
    }
    bool has_group(const std::string& group) const {
        for (const auto& e : electrodes)
            if (e.drive_group == group) return true;
        return false;
    }
};

inline bool electrodes_overlap(const Electrode& a, const Electrode& b) {
    if (rings_edges_cross(a.outer, b.outer)) return true;
    // containment without edge crossing: one interior point decides
    if (a.contains(b.outer.front())) {
        // b may live entirely inside a hole of a; contains() already excludes holes
        return true;
    }
    if (b.contains(a.outer.front())) return true;
    return false;
}

struct Violation {
    std::string electrode_id;  // offender ("a,b" for pair violations)
    std::string message;
};

inline std::vector<Violation> validate_layout(const ElectrodeLayout& layout) {
    std::vector<Violation> v;
    for (const auto& e : layout.electrodes) {
        if (e.outer.size() < 3 || !is_simple(e.outer))
            v.push_back({e.id, "outer polygon is not a simple polygon"});
        for (const auto& h : e.holes) {
            if (h.size() < 3 || !is_simple(h)) {
                v.push_back({e.id, "hole polygon is not a simple polygon"});
                continue;
            }
            bool inside = true;
            for (const auto& q : h)
                if (!point_in_ring(q, e.outer)) inside = false;
            if (!inside || rings_edges_cross(h, e.outer))
                v.push_back({e.id, "hole polygon is not strictly inside the outer polygon"});
        }
        for (std::size_t i = 0; i < e.holes.size(); ++i)
            for (std::size_t j = i + 1; j < e.holes.size(); ++j)
                if (rings_edges_cross(e.holes[i], e.holes[j]) ||
                    point_in_ring(e.holes[j].front(), e.holes[i]))
                    v.push_back({e.id, "hole polygons overlap"});
        for (const auto& q : e.outer)
            if (!layout.bounding_region.contains(q)) {
                v.push_back({e.id, "electrode extends outside the bounding region"});
                break;
            }
    }
    for (std::size_t i = 0; i < layout.electrodes.size(); ++i)
        for (std::size_t j = i + 1; j < layout.electrodes.size(); ++j) {
            const auto& a = layout.electrodes[i];
            const auto& b = layout.electrodes[j];
            if (electrodes_overlap(a, b))
                v.push_back({a.id + "," + b.id, "electrode interiors overlap"});
        }
    if (layout.ground_plane_height && *layout.ground_plane_height <= 0.0)
        v.push_back({"", "ground_plane_height must be positive"});
    return v;
}

// ---------------------------------------------------------------------------
// constructors

struct PointTrapOptions {
    int segments = 64;
    double outer_ground_factor = 4.0;  // outer ground extent / RF ring outer radius
};

// Central ground disc, one RF annulus, and a far ground annulus around it.
inline ElectrodeLayout make_point_trap(double inner_ground_radius, double ring_width,
                                       double gap, const PointTrapOptions& opt = {}) {
    if (inner_ground_radius <= 0 || ring_width <= 0 || gap <= 0)
        throw invalid_parameter_error("point trap lengths must be positive");
    const double r1 = inner_ground_radius + gap;        // RF annulus inner radius
    const double r2 = r1 + ring_width;                  // RF annulus outer radius
    const double r3 = r2 + gap;                         // outer ground inner radius
    const double r4 = opt.outer_ground_factor * r2;     // outer ground extent
    if (r4 <= r3) throw invalid_parameter_error("outer ground extent too small");

    ElectrodeLayout layout;
    const Vector2d origin(0, 0);
    layout.electrodes.push_back(
        {"center_ground", "gnd", Role::ground, make_circle(origin, inner_ground_radius, opt.segments), {}});
    layout.electrodes.push_back(
        {"rf_ring", "rf", Role::rf_fixed, make_circle(origin, r2, opt.segments),
         {make_circle(origin, r1, opt.segments)}});
    layout.electrodes.push_back(
        {"outer_ground", "gnd", Role::ground, make_circle(origin, r4, opt.segments),
         {make_circle(origin, r3, opt.segments)}});
    const double ext = 1.05 * r4;
    layout.bounding_region = {Vector2d(-ext, -ext), Vector2d(ext, ext)};
    return layout;
}

struct ArrayParams {
    int rows = 2;
    int cols = 2;
    double pitch = 6e-3;                   // site-to-site spacing a
    double inner_ground_radius = 275e-6;   // site ground disc
    double addressing_length = 5.35e-3;    // along the inter-site axis
    double addressing_width = 550e-6;      // transverse
    double gap = 50e-6;
    double outer_ring_width = 2.7e-3;      // fixed RF ring around the array
    int segments = 64;
    std::optional<double> ground_plane_height;

    // Default proportions: addressing_length + gap = 0.9 * pitch, so two sites
    // morphing toward the shared electrode close about 10% of their spacing.
    static ArrayParams square(int rows, int cols, double pitch, double gap = 50e-6) {
        ArrayParams p;
        p.rows = rows;
        p.cols = cols;
        p.pitch = pitch;
        p.gap = gap;
        p.addressing_length = 0.9 * pitch - gap;
        p.inner_ground_radius = 0.5 * (pitch - p.addressing_length - 2.0 * gap);
        p.addressing_width = 0.1 * pitch;
        p.outer_ring_width = 0.45 * pitch;
        return p;
    }

    // 4x4, 1.5 mm pitch, diameter-400 um site discs, shielding plane above.
    static ArrayParams folsom() {
        ArrayParams p;
        p.rows = 4;
        p.cols = 4;
        p.pitch = 1.5e-3;
        p.gap = 50e-6;
        p.inner_ground_radius = 200e-6;
        p.addressing_length = p.pitch - 2.0 * p.inner_ground_radius - 2.0 * p.gap;  // 1.0 mm
        p.addressing_width = 400e-6;
        p.outer_ring_width = 0.45 * p.pitch;
        p.ground_plane_height = 1.5e-3;
        return p;
    }

    void validate() const {
        if (rows < 1 || cols < 1) throw invalid_parameter_error("rows/cols must be >= 1");
        if (pitch <= 0 || inner_ground_radius <= 0 || addressing_length <= 0 ||
            addressing_width <= 0 || gap <= 0 || outer_ring_width <= 0)
            throw invalid_parameter_error("array lengths must be positive");
        if (addressing_length + gap >= pitch)
            throw invalid_parameter_error("addressing_length + gap must stay below pitch");
        if (addressing_length + 2.0 * inner_ground_radius + 2.0 * gap > pitch * (1.0 + 1e-12))
            throw invalid_parameter_error("site discs, gaps and addressing electrode exceed pitch");
        if (segments < 8) throw invalid_parameter_error("segments must be >= 8");
    }
};

inline int addressable_electrode_count(int rows, int cols) {
    return 2 * rows * cols - rows - cols;
}

// rows x cols site discs; one addressable electrode between each adjacent pair;
// fixed RF filler in each interior plaquette; a fixed RF ring around the array
// and a ground electrode around that.
inline ElectrodeLayout make_addressable_array(const ArrayParams& p) {
    p.validate();
    const double a = p.pitch;
    const double rg = p.inner_ground_radius;
    const double halfL = 0.5 * p.addressing_length;
    const double halfW = 0.5 * p.addressing_width;
    const double g = p.gap;

    auto site_x = [&](int c) { return (c - 0.5 * (p.cols - 1)) * a; };
    auto site_y = [&](int r) { return (r - 0.5 * (p.rows - 1)) * a; };

    ElectrodeLayout layout;
    layout.ground_plane_height = p.ground_plane_height;

    for (int r = 0; r < p.rows; ++r)
        for (int c = 0; c < p.cols; ++c)
            layout.electrodes.push_back(
                {"site_" + std::to_string(r) + "_" + std::to_string(c),
                 "site_" + std::to_string(r) + "_" + std::to_string(c), Role::ground,
                 make_circle({site_x(c), site_y(r)}, rg, p.segments), {}});

    for (int r = 0; r < p.rows; ++r)
        for (int c = 0; c + 1 < p.cols; ++c) {
            const std::string name = "addr_h_" + std::to_string(r) + "_" + std::to_string(c);
            layout.electrodes.push_back(
                {name, name, Role::rf_addressable,
                 make_rect({0.5 * (site_x(c) + site_x(c + 1)), site_y(r)}, halfL, halfW), {}});
        }
    for (int r = 0; r + 1 < p.rows; ++r)
        for (int c = 0; c < p.cols; ++c) {
            const std::string name = "addr_v_" + std::to_string(r) + "_" + std::to_string(c);
            layout.electrodes.push_back(
                {name, name, Role::rf_addressable,
                 make_rect({site_x(c), 0.5 * (site_y(r) + site_y(r + 1))}, halfW, halfL), {}});
        }

    // interior filler: square per plaquette, inset past the addressing strips
    const double fill_half = 0.5 * a - halfW - g;
    for (int r = 0; r + 1 < p.rows; ++r)
        for (int c = 0; c + 1 < p.cols; ++c) {
            if (fill_half <= 0) break;
            // plaquette corners must clear the site discs
            const double corner_clearance = std::numbers::sqrt2 * (halfW + g);
            if (corner_clearance < rg + g)
                throw geometry_error("filler square would overlap a site disc; widen addressing electrodes");
            layout.electrodes.push_back(
                {"fill_" + std::to_string(r) + "_" + std::to_string(c), "rf_fill", Role::rf_fixed,
                 make_rect({0.5 * (site_x(c) + site_x(c + 1)), 0.5 * (site_y(r) + site_y(r + 1))},
                           fill_half, fill_half),
                 {}});
        }

    const double in_x = site_x(p.cols - 1) + std::max(rg, halfW) + g;
    const double in_y = site_y(p.rows - 1) + std::max(rg, halfW) + g;
    const double out_x = in_x + p.outer_ring_width;
    const double out_y = in_y + p.outer_ring_width;
    layout.electrodes.push_back({"rf_ring", "rf_ring", Role::rf_fixed,
                                 make_rect({0, 0}, out_x, out_y),
                                 {make_rect({0, 0}, in_x, in_y)}});

    const double gx = out_x + g, gy = out_y + g;
    const double ext_x = gx + 1.5 * a, ext_y = gy + 1.5 * a;
    layout.electrodes.push_back({"outer_ground", "gnd", Role::ground,
                                 make_rect({0, 0}, ext_x, ext_y),
                                 {make_rect({0, 0}, gx, gy)}});

    layout.bounding_region = {Vector2d(-1.05 * ext_x, -1.05 * ext_y),
                              Vector2d(1.05 * ext_x, 1.05 * ext_y)};

    auto violations = validate_layout(layout);
    if (!violations.empty())
        throw geometry_error("array construction produced an invalid layout: " +
                             violations.front().electrode_id + ": " + violations.front().message);
    return layout;
}

}  // namespace traplab::geometry
