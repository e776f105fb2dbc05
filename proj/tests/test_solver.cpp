#include <catch2/catch_amalgamated.hpp>

#include <enedina/rng.hpp>
#include <enedina/solver.hpp>

using namespace enedina;

namespace {

ShaftSpec base_spec() {
    ShaftSpec s;
    s.id = "S-000000";
    s.length_m = 1.0;
    s.diameter_m = 0.05;
    s.loads = {{0.5, 1000.0}};
    s.material = {"test steel", 2.0e11, 0.3, 3.5e8, 6.0e8, SurfaceFinish::Machined};
    return s;
}

// Random valid spec used by the oracle-agreement property.
ShaftSpec random_spec(SplitMix64& rng) {
    ShaftSpec s;
    s.id = "R-000000";
    s.diameter_m = rng.log_uniform(0.02, 0.10);
    s.length_m = rng.uniform(std::max(0.3, 5.0 * s.diameter_m), 2.0);
    const std::size_t n = 1 + rng.below(3);
    for (std::size_t i = 0; i < n; ++i)
        s.loads.push_back({rng.uniform(0.05 * s.length_m, 0.95 * s.length_m),
                           rng.uniform(100.0, 3000.0)});
    s.material = {"test steel", 2.0e11, 0.3, 3.5e8, 6.0e8, SurfaceFinish::Machined};
    return s;
}

} // namespace

TEST_CASE("reactions: symmetry, off-center, and force balance") {
    auto s = base_spec();
    auto r = reactions(s);
    CHECK(r.R1_n == Catch::Approx(500.0).epsilon(1e-12));
    CHECK(r.R2_n == Catch::Approx(500.0).epsilon(1e-12));

    s.loads = {{0.25, 1000.0}};
    r = reactions(s);
    CHECK(r.R1_n == Catch::Approx(750.0).epsilon(1e-12));
    CHECK(r.R2_n == Catch::Approx(250.0).epsilon(1e-12));

    s.loads = {{0.3, 600.0}, {0.7, 400.0}};
    r = reactions(s);
    CHECK(r.R1_n + r.R2_n == Catch::Approx(1000.0).epsilon(1e-12));
    // Moment balance about x = 0.
    CHECK(r.R2_n * s.length_m ==
          Catch::Approx(600.0 * 0.3 + 400.0 * 0.7).epsilon(1e-12));
}

TEST_CASE("internal forces: jumps, midspan moment, left-limit convention") {
    auto s = base_spec();
    const std::vector<double> grid = {0.0, 0.25, 0.4999, 0.5, 0.5001, 0.75, 1.0};
    const auto f = internal_forces(s, grid);
    CHECK(f.V_n[1] == Catch::Approx(500.0));   // left of the load
    CHECK(f.V_n[3] == Catch::Approx(500.0));   // at the load: left limit
    CHECK(f.V_n[4] == Catch::Approx(-500.0));  // right of the load
    CHECK(f.M_nm[3] == Catch::Approx(250.0));  // M(L/2) = 250 N.m
    CHECK(f.M_nm[0] == 0.0);
    CHECK(std::abs(f.M_nm[6]) < 1e-9);
    for (double t : f.T_nm) CHECK(t == 0.0); // no torque specified
}

TEST_CASE("internal torque spans the application interval with left limits") {
    auto s = base_spec();
    s.torque_in = TorquePoint{0.25, 80.0};
    s.torque_out = TorquePoint{0.75, -80.0};
    const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 0.9, 1.0};
    const auto f = internal_forces(s, grid);
    CHECK(f.T_nm[0] == 0.0);
    CHECK(f.T_nm[1] == 0.0);  // left limit at the input point
    CHECK(f.T_nm[2] == 80.0);
    CHECK(f.T_nm[3] == 80.0); // left limit at the output point
    CHECK(f.T_nm[4] == 0.0);
    CHECK(f.T_nm[5] == 0.0);
}

TEST_CASE("internal forces rejects a grid outside the span") {
    const auto s = base_spec();
    const std::vector<double> grid = {0.0, 1.5};
    CHECK_THROWS_AS(internal_forces(s, grid), std::invalid_argument);
}

TEST_CASE("midspan deflection matches the two-term hand benchmark") {
    const auto s = base_spec();
    const auto f = solve(s, 257);
    const auto sec = section_properties(s.diameter_m, s.material.nu);
    const double EI = s.material.E_pa * sec.I_m4;
    const double kGA = sec.kappa * s.material.shear_modulus_pa() * sec.area_m2;
    const double bending = 1000.0 * 1.0 / (48.0 * EI); // PL^3/(48EI), L = 1
    const double shear = 1000.0 * 1.0 / (4.0 * kGA);   // PL/(4kGA)
    CHECK(bending == Catch::Approx(3.395e-4).epsilon(2e-4));
    CHECK(shear == Catch::Approx(1.87e-6).epsilon(2e-3));
    double w_max = 0.0;
    for (double w : f.w_m) w_max = std::max(w_max, w);
    CHECK(w_max == Catch::Approx(bending + shear).epsilon(1e-9));
}

TEST_CASE("zero-magnitude load leaves the shaft undeformed") {
    auto s = base_spec();
    s.loads[0].magnitude_n = 0.0;
    const auto f = solve(s, 64);
    for (double w : f.w_m) CHECK(w == 0.0);
    for (double th : f.theta_rad) CHECK(th == 0.0);
}

TEST_CASE("linearity: doubling loads doubles every field") {
    auto s = base_spec();
    s.loads = {{0.3, 600.0}, {0.7, 400.0}};
    const auto f1 = solve(s, 64);
    for (auto& p : s.loads) p.magnitude_n *= 2.0;
    const auto f2 = solve(s, 64);
    for (std::size_t i = 0; i < f1.size(); ++i) {
        CHECK(f2.V_n[i] == Catch::Approx(2.0 * f1.V_n[i]).margin(1e-9));
        CHECK(f2.M_nm[i] == Catch::Approx(2.0 * f1.M_nm[i]).margin(1e-9));
        CHECK(f2.w_m[i] == Catch::Approx(2.0 * f1.w_m[i]).margin(1e-15));
        CHECK(f2.theta_rad[i] == Catch::Approx(2.0 * f1.theta_rad[i]).margin(1e-15));
    }
}

TEST_CASE("superposition over load sets") {
    auto sa = base_spec();
    sa.loads = {{0.3, 600.0}};
    auto sb = base_spec();
    sb.loads = {{0.7, 400.0}};
    auto sab = base_spec();
    sab.loads = {{0.3, 600.0}, {0.7, 400.0}};
    const auto fa = solve(sa, 129);
    const auto fb = solve(sb, 129);
    const auto fab = solve(sab, 129);
    // Grids differ only at the other load's position; compare on shared x.
    auto find_at = [](const BeamFields& f, double x) -> std::size_t {
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f.x_m[i] == x) return i;
        return f.size();
    };
    double w_scale = 0.0;
    for (double w : fab.w_m) w_scale = std::max(w_scale, std::abs(w));
    std::size_t compared = 0;
    for (std::size_t i = 0; i < fab.size(); ++i) {
        const double x = fab.x_m[i];
        const std::size_t ia = find_at(fa, x);
        const std::size_t ib = find_at(fb, x);
        if (ia == fa.size() || ib == fb.size()) continue;
        CHECK(std::abs(fab.w_m[i] - (fa.w_m[ia] + fb.w_m[ib])) <= 1e-9 * w_scale);
        CHECK(std::abs(fab.M_nm[i] - (fa.M_nm[ia] + fb.M_nm[ib])) <= 1e-9 * 250.0);
        ++compared;
    }
    CHECK(compared >= 129);
}

TEST_CASE("boundary invariants hold on solved fields") {
    auto s = base_spec();
    s.loads = {{0.21, 700.0}, {0.52, 300.0}, {0.83, 500.0}};
    const auto f = solve(s, 257);
    double w_max = 0.0, m_max = 0.0;
    for (double w : f.w_m) w_max = std::max(w_max, std::abs(w));
    for (double m : f.M_nm) m_max = std::max(m_max, std::abs(m));
    CHECK(std::abs(f.w_m.front()) <= 1e-12 * w_max);
    CHECK(std::abs(f.w_m.back()) <= 1e-12 * w_max);
    CHECK(std::abs(f.M_nm.front()) <= 1e-12 * m_max);
    CHECK(std::abs(f.M_nm.back()) <= 1e-12 * m_max);
}

TEST_CASE("theta is the rotation conjugate to M: dtheta/dx = M/EI") {
    const auto s = base_spec();
    const auto f = solve(s, 513);
    const auto sec = section_properties(s.diameter_m, s.material.nu);
    const double EI = s.material.E_pa * sec.I_m4;
    // Central differences away from the load point.
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
        if (std::abs(f.x_m[i] - 0.5) < 0.05) continue;
        const double dtheta = (f.theta_rad[i + 1] - f.theta_rad[i - 1]) /
                              (f.x_m[i + 1] - f.x_m[i - 1]);
        CHECK(dtheta == Catch::Approx(f.M_nm[i] / EI).epsilon(5e-3));
    }
}

TEST_CASE("grid includes every discontinuity point exactly") {
    auto s = base_spec();
    s.loads = {{0.123456, 500.0}, {0.654321, 800.0}};
    s.torque_in = TorquePoint{0.3333, 40.0};
    s.torque_out = TorquePoint{0.7777, -40.0};
    const auto grid = build_grid(s, 257);
    for (double p : {0.123456, 0.654321, 0.3333, 0.7777})
        CHECK(std::count(grid.begin(), grid.end(), p) == 1);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == s.length_m);
}

TEST_CASE("a load point colliding with a uniform node keeps one grid entry") {
    auto s = base_spec();
    s.loads = {{0.5 + 1e-13, 1000.0}};
    const auto grid = build_grid(s, 257);
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] - grid[i - 1] > 1e-10 * s.length_m);
    CHECK(std::count(grid.begin(), grid.end(), 0.5 + 1e-13) == 1);
}

TEST_CASE("oracle agrees with the closed form on the midspan case") {
    const auto s = base_spec();
    const auto a = solve(s, 2048);
    const auto b = numerical_oracle(s, 2048);
    CHECK(max_relative_deflection_gap(a, b) < 1e-4);
    // theta agrees too
    double th_scale = 0.0;
    for (double th : a.theta_rad) th_scale = std::max(th_scale, std::abs(th));
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a.theta_rad[i] - b.theta_rad[i]) <= 1e-3 * th_scale);
}

TEST_CASE("oracle error shrinks under grid refinement") {
    const auto s = base_spec();
    const auto coarse_cf = solve(s, 256);
    const auto coarse = numerical_oracle(s, 256);
    const auto fine_cf = solve(s, 1024);
    const auto fine = numerical_oracle(s, 1024);
    const double gap_coarse = max_relative_deflection_gap(coarse_cf, coarse);
    const double gap_fine = max_relative_deflection_gap(fine_cf, fine);
    CHECK(gap_fine < gap_coarse);
}

TEST_CASE("oracle on zero loads returns identically zero fields") {
    auto s = base_spec();
    s.loads[0].magnitude_n = 0.0;
    const auto f = numerical_oracle(s, 256);
    for (double w : f.w_m) CHECK(w == 0.0);
}

TEST_CASE("oracle agreement over seeded random specs") {
    SplitMix64 rng(substream_seed(1234, "solver-prop"));
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto s = random_spec(rng);
        const auto a = solve(s, 2048);
        const auto b = numerical_oracle(s, 2048);
        worst = std::max(worst, max_relative_deflection_gap(a, b));
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("slender limit: shear fraction vanishes as d/L shrinks") {
    double prev_fraction = 1.0;
    for (double d : {0.1, 0.05, 0.02, 0.01}) {
        auto s = base_spec();
        s.diameter_m = d; // L = 1
        const auto sec = section_properties(d, s.material.nu);
        const double EI = s.material.E_pa * sec.I_m4;
        const double kGA = sec.kappa * s.material.shear_modulus_pa() * sec.area_m2;
        const double bending = 1000.0 / (48.0 * EI);
        const double shear = 1000.0 / (4.0 * kGA);
        const auto f = solve(s, 257);
        double w_max = 0.0;
        for (double w : f.w_m) w_max = std::max(w_max, w);
        const double fraction = shear / w_max;
        CHECK(w_max == Catch::Approx(bending + shear).epsilon(1e-9));
        CHECK(fraction < prev_fraction);
        prev_fraction = fraction;
        if (d == 0.01) CHECK(std::abs(w_max - bending) / bending < 0.01);
    }
}

TEST_CASE("solver precondition checks") {
    const auto s = base_spec();
    CHECK_THROWS_AS(solve(s, 8), std::invalid_argument);
    CHECK_THROWS_AS(numerical_oracle(s, 128), std::invalid_argument);
    auto degenerate = s;
    degenerate.diameter_m = 2.0; // d >= L
    CHECK_THROWS_AS(solve(degenerate, 257), std::invalid_argument);
}
