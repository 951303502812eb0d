#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "traplab/errors.hpp"

namespace traplab::resonator {

using cplx = std::complex<double>;

// Impedance-matched tank drive: EMF with source resistance, series matching
// capacitor C_A, shunt C_B, the coil (series loss omega L / Q_unloaded), and
// the capacitive trap load at the output node.
//
//   EMF --R_source-- n1 --C_A-- n2 --(R_L + L)-- n3(out)
//                            C_B: n2-gnd     C_trap: n3-gnd
struct TankResonator {
    double inductance = 0.0;     // H
    double unloaded_q = 0.0;
    double c_a = 0.0;            // F
    double c_b = 0.0;            // F
    double c_trap = 0.0;         // F, electrode + wiring + feedthrough load
    double r_source = 50.0;      // ohm
    double drive_frequency = 0.0;  // Hz, nominal operating point

    void require_valid() const {
        if (inductance <= 0.0 || c_a <= 0.0 || c_b <= 0.0 || c_trap <= 0.0 || r_source <= 0.0)
            throw invalid_parameter_error("tank elements must be positive");
        if (unloaded_q <= 1.0) throw invalid_parameter_error("unloaded Q must exceed 1");
    }

    // Bench-calibrated representation of the measured 10.5 MHz drive build
    // (4.7 uH coil, Q 84, 47 pF trap load, 50 ohm source; matching capacitors
    // fitted to the measured gain 22.5 and loaded Q 51).
    static TankResonator paper_tank() {
        return {4.7e-6, 84.0, 885e-12, 1127e-12, 47e-12, 50.0, 10.9e6};
    }
    static TankResonator paper_tank_published_caps() {
        return {4.7e-6, 84.0, 220e-12, 820e-12, 47e-12, 50.0, 10.5e6};
    }
};

struct TankResponse {
    cplx gain;  // output voltage over the incident source amplitude (EMF/2)
    cplx z_in;  // impedance looking into C_A
};

inline TankResponse tank_state(const TankResonator& t, double frequency, double extra_c_trap = 0.0) {
    if (frequency <= 0.0) throw invalid_parameter_error("frequency must be positive");
    const double w = 2.0 * std::numbers::pi * frequency;
    const cplx s(0.0, w);
    const cplx z_coil = w * t.inductance / t.unloaded_q + s * t.inductance;
    const cplx v3 = 1.0;
    const cplx i3 = v3 * s * (t.c_trap + extra_c_trap);
    const cplx v2 = v3 + z_coil * i3;
    const cplx i_in = i3 + v2 * s * t.c_b;
    const cplx v1 = v2 + i_in / (s * t.c_a);
    const cplx emf = v1 + t.r_source * i_in;
    return {2.0 * v3 / emf, v1 / i_in};
}

// Complex voltage gain of the output node, referenced to the incident source
// amplitude EMF/2 (what a matched generator delivers into its own impedance).
inline cplx tank_response(const TankResonator& t, double frequency, double extra_c_trap = 0.0) {
    t.require_valid();
    return tank_state(t, frequency, extra_c_trap).gain;
}

inline cplx input_impedance(const TankResonator& t, double frequency) {
    t.require_valid();
    return tank_state(t, frequency).z_in;
}

struct ResonanceInfo {
    double f0 = 0.0;        // Hz, |gain| peak
    double gain_abs = 0.0;
    double loaded_q = 0.0;  // f0 / FWHM of |gain|
    double phase = 0.0;     // arg(gain) at f0
};

namespace detail {

template <typename Fn>
double golden_max(Fn&& f, double lo, double hi, double tol) {
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a); f2 = f(x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a); f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

template <typename Fn>
double bisect_crossing(Fn&& f, double lo, double hi, double target, int iters = 80) {
    // f assumed monotone through the crossing between lo and hi
    double flo = f(lo) - target;
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid) - target;
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline ResonanceInfo find_resonance(const TankResonator& t, double extra_c_trap = 0.0) {
    t.require_valid();
    auto mag = [&](double f) { return std::abs(tank_state(t, f, extra_c_trap).gain); };
    const double f_anchor = 1.0 / (2.0 * std::numbers::pi *
                                   std::sqrt(t.inductance * (t.c_trap + extra_c_trap)));
    // coarse scan, then golden-section refinement
    double best_f = f_anchor, best_m = 0.0;
    const int n = 2001;
    for (int i = 0; i < n; ++i) {
        const double f = f_anchor * (0.5 + 1.5 * i / (n - 1.0));
        const double m = mag(f);
        if (m > best_m) {
            best_m = m;
            best_f = f;
        }
    }
    ResonanceInfo r;
    r.f0 = detail::golden_max(mag, best_f * 0.99, best_f * 1.01, best_f * 1e-9);
    r.gain_abs = mag(r.f0);
    r.phase = std::arg(tank_state(t, r.f0, extra_c_trap).gain);
    const double half = r.gain_abs / std::numbers::sqrt2;
    const double f_lo = detail::bisect_crossing(mag, 0.5 * r.f0, r.f0, half);
    const double f_hi = detail::bisect_crossing([&](double f) { return -mag(f); }, r.f0, 2.0 * r.f0,
                                                -half);
    r.loaded_q = r.f0 / (f_hi - f_lo);
    return r;
}

// Empirical step-up law of the measured resonator: G = eta * sqrt(Q / R).
inline double gain_formula(double eta, double q, double r) {
    if (eta <= 0.0 || q <= 0.0 || r <= 0.0) throw invalid_parameter_error("inputs must be positive");
    return eta * std::sqrt(q / r);
}

// Power a bare 50-ohm drive would need for the same electrode voltage: V^2/R.
inline double unresonated_drive_power(double voltage_amplitude, double r = 50.0) {
    return voltage_amplitude * voltage_amplitude / r;
}

// Effective capacitance resonating against the coil (source branch shorted):
// the trap load in series with C_A + C_B.
inline double effective_tank_capacitance(const TankResonator& t) {
    const double s = t.c_a + t.c_b;
    return t.c_trap * s / (t.c_trap + s);
}

// Matching capacitors so that the input impedance at f_target is R_source
// (real) and the gain peak sits at f_target; damped 2D Newton on the nodal
// equations starting from an L-section estimate.
inline std::pair<double, double> design_match(double inductance, double unloaded_q, double c_trap,
                                              double r_source, double f_target) {
    if (inductance <= 0 || unloaded_q <= 1 || c_trap <= 0 || r_source <= 0 || f_target <= 0)
        throw invalid_parameter_error("design_match inputs must be positive (Q > 1)");

    const double w = 2.0 * std::numbers::pi * f_target;
    // series resonance of coil + trap bounds the reachable band from below
    const double f_floor = 1.0 / (2.0 * std::numbers::pi * std::sqrt(inductance * c_trap));
    if (f_target < 0.995 * f_floor)
        throw no_solution_error(
            "target frequency below the coil/trap series resonance (" +
            std::to_string(f_floor * 1e-6) + " MHz); no capacitor pair can resonate there");

    auto z_of = [&](double ca, double cb) {
        TankResonator t{inductance, unloaded_q, ca, cb, c_trap, r_source, f_target};
        return tank_state(t, f_target).z_in;
    };

    // initial guess: shunt leg sized against the transformed branch impedance
    double ca = 1.0 / (w * r_source);
    double cb = 3.0 * ca;
    double err = std::abs(z_of(ca, cb) - r_source);
    for (int it = 0; it < 200 && err > r_source * 1e-10; ++it) {
        const cplx z = z_of(ca, cb);
        const cplx f0c = z - r_source;
        const double rel = 1e-6;
        const cplx dza = (z_of(ca * (1 + rel), cb) - z) / (ca * rel);
        const cplx dzb = (z_of(ca, cb * (1 + rel)) - z) / (cb * rel);
        // solve 2x2 real system J * dx = -F
        const double j11 = dza.real(), j12 = dzb.real();
        const double j21 = dza.imag(), j22 = dzb.imag();
        const double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-30) break;
        double dca = (-f0c.real() * j22 + f0c.imag() * j12) / det;
        double dcb = (-j11 * f0c.imag() + j21 * f0c.real()) / det;
        double lambda = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 30; ++bt) {
            const double ta = ca + lambda * dca;
            const double tb = cb + lambda * dcb;
            if (ta > 0 && tb > 0) {
                const double e2 = std::abs(z_of(ta, tb) - r_source);
                if (e2 < err) {
                    ca = ta;
                    cb = tb;
                    err = e2;
                    moved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!moved) break;
    }

    const cplx z_final = z_of(ca, cb);
    if (std::abs(z_final - r_source) > 0.01 * r_source)
        throw no_solution_error("matching did not converge: Z_in = " +
                                std::to_string(z_final.real()) + (z_final.imag() < 0 ? " - " : " + ") +
                                std::to_string(std::abs(z_final.imag())) + "j ohm at target frequency");

    TankResonator t{inductance, unloaded_q, ca, cb, c_trap, r_source, f_target};
    const auto res = find_resonance(t);
    if (std::abs(res.f0 - f_target) > 0.001 * f_target)
        throw no_solution_error("matched network resonates at " + std::to_string(res.f0 * 1e-6) +
                                " MHz, not at the requested target");
    return {ca, cb};
}

// ---------------------------------------------------------------------------
// coupled resonators

struct CoupledPair {
    TankResonator node1;
    TankResonator node2;
    double c_coupling = 0.0;  // F, electrode-to-electrode stray

    void require_valid() const {
        node1.require_valid();
        node2.require_valid();
        if (c_coupling < 0.0) throw invalid_parameter_error("coupling capacitance must be >= 0");
    }
};

struct CoupledShift {
    double delta_f0 = 0.0;          // Hz
    double delta_phase_at_f0 = 0.0;  // rad, at the original resonant frequency
};

// With the other node grounded, the coupling capacitor adds directly to the
// trap load; report the resonance shift and the phase change at the original
// drive point, per node.
inline std::pair<CoupledShift, CoupledShift> coupled_shift(const CoupledPair& pair) {
    pair.require_valid();
    auto one = [&](const TankResonator& t) {
        const auto base = find_resonance(t);
        const auto moved = find_resonance(t, pair.c_coupling);
        CoupledShift s;
        s.delta_f0 = moved.f0 - base.f0;
        const double p0 = std::arg(tank_state(t, base.f0).gain);
        const double p1 = std::arg(tank_state(t, base.f0, pair.c_coupling).gain);
        s.delta_phase_at_f0 = std::remainder(p1 - p0, 2.0 * std::numbers::pi);
        return s;
    };
    return {one(pair.node1), one(pair.node2)};
}

// ---------------------------------------------------------------------------
// varactor phase lock

struct PhaseLockLoop {
    TankResonator resonator;       // c_trap is the bare electrode load
    double varactor_min = 0.0;     // F
    double varactor_max = 0.0;     // F
    double c_divider = 2e-12;      // F, protects the varactor from the RF swing
    double loop_gain = 0.4;        // dimensionless integrator gain per step
    double lowpass_corner = 1e4;   // Hz
    double setpoint_phase = std::numbers::pi / 2.0;  // ideal 90-degree lock point

    void require_valid() const {
        resonator.require_valid();
        if (!(varactor_min > 0.0) || !(varactor_min < varactor_max))
            throw invalid_parameter_error("varactor range must satisfy 0 < C_min < C_max");
        if (c_divider <= 0.0) throw invalid_parameter_error("divider capacitance must be positive");
        if (loop_gain <= 0.0) throw invalid_parameter_error("loop gain must be positive");
        if (lowpass_corner <= 0.0) throw invalid_parameter_error("lowpass corner must be positive");
    }

    double varactor_chain(double c_v) const { return c_divider * c_v / (c_divider + c_v); }
};

struct LockResult {
    double residual_phase = 0.0;  // rad, error vs the undisturbed lock point
    double varactor_c = 0.0;      // F
    bool locked = false;
    std::string diagnostic;
    std::vector<double> residual_history;  // rad, per loop step
};

// Largest integrator gain with monotone residual decay. The discretised loop
// iterates [u, y] by [[1, -g], [alpha, 1 - alpha - alpha g]]; the decay stays
// monotone while both eigenvalues are real and non-negative, which holds up
// to the critically damped gain g = (2 - alpha - 2 sqrt(1 - alpha)) / alpha.
inline double lock_stability_bound(double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) throw invalid_parameter_error("lowpass blend must be in (0, 1]");
    return (2.0 - alpha - 2.0 * std::sqrt(std::max(0.0, 1.0 - alpha))) / alpha;
}

// Discrete-time lock: measure arg(gain) at the drive frequency, low-pass the
// mixer error against the undisturbed resonance phase, integrate onto the
// varactor (clamped to its range), repeat until settle_time.
inline LockResult phase_lock_sim(const PhaseLockLoop& loop, double disturbance_c, double settle_time) {
    loop.require_valid();
    if (settle_time <= 0.0) throw invalid_parameter_error("settle time must be positive");

    const double cv0 = 0.5 * (loop.varactor_min + loop.varactor_max);
    TankResonator nominal = loop.resonator;
    nominal.c_trap += loop.varactor_chain(cv0);
    const auto base = find_resonance(nominal);
    const double f_drive = base.f0;
    const double phase_ref = base.phase;

    auto phase_at = [&](double c_v, double d_c) {
        TankResonator t = loop.resonator;
        t.c_trap += loop.varactor_chain(c_v) + d_c;
        return std::remainder(std::arg(tank_state(t, f_drive).gain) - phase_ref,
                              2.0 * std::numbers::pi);
    };

    // mixer slope, rad per farad of varactor command, at the operating point
    const double dcv = 1e-4 * (loop.varactor_max - loop.varactor_min);
    const double slope = (phase_at(cv0 + dcv, 0.0) - phase_at(cv0 - dcv, 0.0)) / (2.0 * dcv);
    if (std::abs(slope) < 1e-30) throw no_solution_error("varactor has no phase authority");

    const double dt = 1.0 / (8.0 * loop.lowpass_corner);
    const double alpha = std::min(1.0, 2.0 * std::numbers::pi * loop.lowpass_corner * dt);
    const auto steps = static_cast<std::size_t>(std::ceil(settle_time / dt));

    LockResult r;
    double cv = cv0;
    double filtered = 0.0;
    bool clamped = false;
    r.residual_history.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double err = phase_at(cv, disturbance_c);
        filtered += alpha * (err - filtered);
        cv -= loop.loop_gain * filtered / slope;
        if (cv <= loop.varactor_min || cv >= loop.varactor_max) {
            cv = std::clamp(cv, loop.varactor_min, loop.varactor_max);
            clamped = true;
        }
        r.residual_history.push_back(err);
    }
    r.residual_phase = phase_at(cv, disturbance_c);
    r.varactor_c = cv;
    constexpr double one_degree = std::numbers::pi / 180.0;
    r.locked = std::abs(r.residual_phase) < one_degree && !clamped;
    if (clamped) r.diagnostic = "varactor range exhausted";
    return r;
}

}  // namespace traplab::resonator
