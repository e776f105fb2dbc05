#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "enedina/domain.hpp"

namespace enedina {

// Bachelor-level analysis of a simply supported shaft: reactions, internal
// force diagrams, and Timoshenko deflection w = w_bending + w_shear. Two
// independent deflection paths are provided: closed-form superposition
// (solve) and trapezoidal integration of the first-order system
// (numerical_oracle).

struct Reactions {
    double R1_n = 0.0; // support at x = 0
    double R2_n = 0.0; // support at x = L
};

inline Reactions reactions(const ShaftSpec& spec) {
    spec.validate();
    const double L = spec.length_m;
    double r1 = 0.0, r2 = 0.0;
    for (const auto& p : spec.loads) {
        r1 += p.magnitude_n * (L - p.position_m) / L;
        r2 += p.magnitude_n * p.position_m / L;
    }
    return {r1, r2};
}

// Uniform n-point grid on [0, L] augmented with every load and torque
// position, strictly increasing. Near-coincident points (within 1e-9 L) are
// merged with discontinuity positions taking precedence over uniform nodes,
// so no degenerate interval survives.
inline std::vector<double> build_grid(const ShaftSpec& spec, int n_grid) {
    require(n_grid >= 2, "build_grid: n_grid must be >= 2");
    const double L = spec.length_m;
    std::vector<std::pair<double, bool>> pts; // (position, is_discontinuity)
    pts.reserve(static_cast<std::size_t>(n_grid) + spec.loads.size() + 2);
    for (int i = 0; i < n_grid; ++i)
        pts.emplace_back(L * static_cast<double>(i) / static_cast<double>(n_grid - 1), false);
    pts.back().first = L;
    for (const auto& p : spec.loads) pts.emplace_back(p.position_m, true);
    if (spec.has_torque()) {
        pts.emplace_back(spec.torque_in->position_m, true);
        pts.emplace_back(spec.torque_out->position_m, true);
    }
    std::sort(pts.begin(), pts.end());
    const double eps = 1e-9 * L;
    std::vector<std::pair<double, bool>> merged;
    merged.reserve(pts.size());
    for (const auto& [v, special] : pts) {
        if (merged.empty() || v - merged.back().first > eps) {
            merged.emplace_back(v, special);
        } else if (special && !merged.back().second) {
            merged.back() = {v, true};
        }
    }
    std::vector<double> out;
    out.reserve(merged.size());
    for (const auto& [v, special] : merged) out.push_back(v);
    out.front() = 0.0;
    out.back() = L;
    return out;
}

struct InternalForces {
    std::vector<double> V_n;
    std::vector<double> M_nm;
    std::vector<double> T_nm;
};

// V is piecewise constant with jumps -P_i at load points and reports the
// left limit there; M is continuous and piecewise linear with M(0)=M(L)=0;
// T equals the applied torque on the interval between the torque points
// (left-limit convention at both ends) and zero outside.
inline InternalForces internal_forces(const ShaftSpec& spec, std::span<const double> grid) {
    spec.validate();
    const double L = spec.length_m;
    require(!grid.empty(), "internal_forces: grid must be non-empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i] >= 0.0 && grid[i] <= L, "internal_forces: grid point outside span");
        if (i > 0) require(grid[i] > grid[i - 1], "internal_forces: grid must be strictly increasing");
    }
    const Reactions r = reactions(spec);
    InternalForces f;
    f.V_n.resize(grid.size());
    f.M_nm.resize(grid.size());
    f.T_nm.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        double v = r.R1_n;
        double m = r.R1_n * x;
        for (const auto& p : spec.loads) {
            if (p.position_m < x) { // strict: left limit at load points
                v -= p.magnitude_n;
                m -= p.magnitude_n * (x - p.position_m);
            }
        }
        f.V_n[i] = v;
        f.M_nm[i] = m;
        double t = 0.0;
        if (spec.has_torque()) {
            const auto [lo, hi] = spec.torque_span();
            if (x > lo && x <= hi) t = spec.torque_in->magnitude_nm;
        }
        f.T_nm[i] = t;
    }
    return f;
}

namespace detail {

// Bending deflection of one point load P at a (b = L - a), downward
// positive, from the simply supported superposition tables:
//   x <= a: w = P b x (L^2 - b^2 - x^2) / (6 L EI)
//   x >= a: w = P a (L-x) (2Lx - a^2 - x^2) / (6 L EI)
inline double bending_w(double P, double a, double L, double EI, double x) {
    const double b = L - a;
    if (x <= a) return P * b * x * (L * L - b * b - x * x) / (6.0 * L * EI);
    return P * a * (L - x) * (2.0 * L * x - a * a - x * x) / (6.0 * L * EI);
}

// Cross-section rotation theta = -dw_b/dx (so that dtheta/dx = M/EI).
inline double bending_theta(double P, double a, double L, double EI, double x) {
    const double b = L - a;
    if (x <= a) return -P * b * (L * L - b * b - 3.0 * x * x) / (6.0 * L * EI);
    return -P * a * (2.0 * L * L - 6.0 * L * x + 3.0 * x * x + a * a) / (6.0 * L * EI);
}

// Shear deflection of one point load, dw_s/dx = V/(kGA) with w_s(0)=0:
//   x <= a: w_s = P b x / (L kGA);  x >= a: w_s = P a (L-x) / (L kGA)
inline double shear_w(double P, double a, double L, double kGA, double x) {
    const double b = L - a;
    if (x <= a) return P * b * x / (L * kGA);
    return P * a * (L - x) / (L * kGA);
}

} // namespace detail

// Closed-form Timoshenko solution by superposition over point loads.
inline BeamFields solve(const ShaftSpec& spec, int n_grid = 257) {
    spec.validate();
    require(n_grid >= 16, "solve: n_grid must be >= 16");
    const double L = spec.length_m;
    const SectionProperties sec = section_properties(spec.diameter_m, spec.material.nu);
    const double EI = spec.material.E_pa * sec.I_m4;
    const double kGA = sec.kappa * spec.material.shear_modulus_pa() * sec.area_m2;

    BeamFields f;
    f.x_m = build_grid(spec, n_grid);
    InternalForces fo = internal_forces(spec, f.x_m);
    f.V_n = std::move(fo.V_n);
    f.M_nm = std::move(fo.M_nm);
    f.T_nm = std::move(fo.T_nm);
    f.theta_rad.assign(f.x_m.size(), 0.0);
    f.w_m.assign(f.x_m.size(), 0.0);
    for (std::size_t i = 0; i < f.x_m.size(); ++i) {
        const double x = f.x_m[i];
        double w = 0.0, th = 0.0;
        for (const auto& p : spec.loads) {
            w += detail::bending_w(p.magnitude_n, p.position_m, L, EI, x);
            w += detail::shear_w(p.magnitude_n, p.position_m, L, kGA, x);
            th += detail::bending_theta(p.magnitude_n, p.position_m, L, EI, x);
        }
        f.w_m[i] = w;
        f.theta_rad[i] = th;
    }
    return f;
}

// Independent deflection path: composite trapezoidal integration of
//   dtheta/dx = M/EI,  dw/dx = -theta + V/(kGA)
// from the analytic V and M, then a linear correction enforcing
// w(0) = w(L) = 0. Shares no deflection code with solve.
inline BeamFields numerical_oracle(const ShaftSpec& spec, int n_grid = 2048) {
    spec.validate();
    require(n_grid >= 256, "numerical_oracle: n_grid must be >= 256");
    const double L = spec.length_m;
    const SectionProperties sec = section_properties(spec.diameter_m, spec.material.nu);
    const double EI = spec.material.E_pa * sec.I_m4;
    const double kGA = sec.kappa * spec.material.shear_modulus_pa() * sec.area_m2;

    BeamFields f;
    f.x_m = build_grid(spec, n_grid);
    InternalForces fo = internal_forces(spec, f.x_m);
    f.V_n = std::move(fo.V_n);
    f.M_nm = std::move(fo.M_nm);
    f.T_nm = std::move(fo.T_nm);

    const std::size_t n = f.x_m.size();
    std::vector<double> phi(n, 0.0);   // integral of M/EI, phi(0)=0
    std::vector<double> w_raw(n, 0.0); // integral of (-phi + V/kGA)
    for (std::size_t i = 1; i < n; ++i) {
        const double dx = f.x_m[i] - f.x_m[i - 1];
        phi[i] = phi[i - 1] + 0.5 * dx * (f.M_nm[i - 1] + f.M_nm[i]) / EI;
        const double gl = -phi[i - 1] + f.V_n[i - 1] / kGA;
        const double gr = -phi[i] + f.V_n[i] / kGA;
        w_raw[i] = w_raw[i - 1] + 0.5 * dx * (gl + gr);
    }
    // Unknown end rotation theta(0) follows from w(L) = 0.
    const double theta0 = w_raw[n - 1] / L;
    f.theta_rad.resize(n);
    f.w_m.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.theta_rad[i] = theta0 + phi[i];
        f.w_m[i] = w_raw[i] - theta0 * f.x_m[i];
    }
    return f;
}

// Max |w_a - w_b| relative to max |w_a| on a shared grid.
inline double max_relative_deflection_gap(const BeamFields& a, const BeamFields& b) {
    require(a.size() == b.size(), "deflection gap: grids differ in size");
    double wmax = 0.0, gap = 0.0;
    for (double w : a.w_m) wmax = std::max(wmax, std::abs(w));
    for (std::size_t i = 0; i < a.size(); ++i)
        gap = std::max(gap, std::abs(a.w_m[i] - b.w_m[i]));
    return wmax > 0.0 ? gap / wmax : gap;
}

} // namespace enedina
