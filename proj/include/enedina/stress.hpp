#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "enedina/domain.hpp"
#include "enedina/solver.hpp"

namespace enedina {

// Master-level stress/yield analysis and Doctor-level fatigue analysis for
// a solid circular shaft under combined bending and torsion.

enum class Reliability { R50, R90, R99 };

inline const char* to_string(Reliability r) {
    switch (r) {
        case Reliability::R50: return "R50";
        case Reliability::R90: return "R90";
        case Reliability::R99: return "R99";
    }
    return "R50";
}

inline Reliability reliability_from_string(const std::string& s) {
    if (s == "R50") return Reliability::R50;
    if (s == "R90") return Reliability::R90;
    if (s == "R99") return Reliability::R99;
    throw std::invalid_argument("unknown reliability: " + s);
}

// sigma = 32 M / (pi d^3)
inline double bending_stress(double moment_nm, double diameter_m) {
    const double d3 = diameter_m * diameter_m * diameter_m;
    return 32.0 * moment_nm / (std::numbers::pi * d3);
}

// tau = 16 T / (pi d^3)
inline double torsion_stress(double torque_nm, double diameter_m) {
    const double d3 = diameter_m * diameter_m * diameter_m;
    return 16.0 * torque_nm / (std::numbers::pi * d3);
}

inline double von_mises(double sigma_pa, double tau_pa) {
    return std::sqrt(sigma_pa * sigma_pa + 3.0 * tau_pa * tau_pa);
}

struct StressReport {
    double sigma_vm_max_pa = 0.0;
    double location_x_m = 0.0;
    double n_yield = std::numeric_limits<double>::infinity();
    bool unstressed = false; // all-zero stress state; n_yield is a sentinel

    njson to_json() const {
        njson j;
        j["sigma_vm_max_pa"] = sigma_vm_max_pa;
        j["location_x_m"] = location_x_m;
        if (std::isfinite(n_yield))
            j["n_yield"] = n_yield;
        else
            j["n_yield"] = nullptr;
        j["unstressed"] = unstressed;
        return j;
    }

    static StressReport from_json(const njson& j) {
        StressReport r;
        r.sigma_vm_max_pa = j.at("sigma_vm_max_pa").get<double>();
        r.location_x_m = j.at("location_x_m").get<double>();
        r.unstressed = j.at("unstressed").get<bool>();
        r.n_yield = j.at("n_yield").is_null() ? std::numeric_limits<double>::infinity()
                                              : j.at("n_yield").get<double>();
        return r;
    }
};

// Scans the solved grid for the worst von Mises stress.
inline StressReport yield_analysis(const ShaftSpec& spec, const BeamFields& fields) {
    require(fields.well_formed(), "yield_analysis: malformed fields");
    StressReport rep;
    rep.sigma_vm_max_pa = -1.0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const double s = bending_stress(std::abs(fields.M_nm[i]), spec.diameter_m);
        const double t = torsion_stress(std::abs(fields.T_nm[i]), spec.diameter_m);
        const double vm = von_mises(s, t);
        if (vm > rep.sigma_vm_max_pa) {
            rep.sigma_vm_max_pa = vm;
            rep.location_x_m = fields.x_m[i];
        }
    }
    if (rep.sigma_vm_max_pa > 0.0) {
        rep.n_yield = spec.material.Sy_pa / rep.sigma_vm_max_pa;
    } else {
        rep.sigma_vm_max_pa = 0.0;
        rep.unstressed = true; // n_yield stays at the +inf sentinel
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Fatigue (Marin factors, modified endurance limit, Goodman criterion)
// ---------------------------------------------------------------------------

struct MarinFactors {
    double k_a = 1.0; // surface
    double k_b = 1.0; // size
    double k_c = 1.0; // load
    double k_d = 1.0; // temperature
    double k_e = 1.0; // reliability
    double k_f = 1.0; // miscellaneous

    double product() const { return k_a * k_b * k_c * k_d * k_e * k_f; }
};

namespace detail {

// Surface-condition power law k_a = a * (Sut in MPa)^b.
inline std::pair<double, double> surface_coefficients(SurfaceFinish f) {
    switch (f) {
        case SurfaceFinish::Ground: return {1.58, -0.085};
        case SurfaceFinish::Machined: return {4.51, -0.265}; // also cold-drawn
        case SurfaceFinish::HotRolled: return {57.7, -0.718};
        case SurfaceFinish::AsForged: return {272.0, -0.995};
    }
    return {4.51, -0.265};
}

// Temperature factor table, linearly interpolated above 50 C.
inline double temperature_factor(double temperature_c) {
    require(temperature_c > -273.15 && temperature_c <= 600.0,
            "marin_factors: temperature outside supported range");
    if (temperature_c <= 50.0) return 1.0;
    static constexpr double pts[][2] = {
        {50.0, 1.0},   {100.0, 1.020}, {150.0, 1.025}, {200.0, 1.020},
        {250.0, 1.000}, {300.0, 0.975}, {350.0, 0.943}, {400.0, 0.900},
        {450.0, 0.843}, {500.0, 0.768}, {550.0, 0.672}, {600.0, 0.549}};
    for (std::size_t i = 1; i < std::size(pts); ++i) {
        if (temperature_c <= pts[i][0]) {
            const double f = (temperature_c - pts[i - 1][0]) / (pts[i][0] - pts[i - 1][0]);
            return pts[i - 1][1] + f * (pts[i][1] - pts[i - 1][1]);
        }
    }
    return pts[std::size(pts) - 1][1];
}

} // namespace detail

// Size-factor validity window for the rotating-shaft k_b formula.
inline constexpr double kMarinDiameterMin = 0.00279;
inline constexpr double kMarinDiameterMax = 0.254;

inline MarinFactors marin_factors(const Material& material, double diameter_m,
                                  Reliability reliability, double temperature_c) {
    material.validate();
    require(diameter_m >= kMarinDiameterMin && diameter_m <= kMarinDiameterMax,
            "marin_factors: diameter outside size-factor validity window");
    MarinFactors k;
    const auto [a, b] = detail::surface_coefficients(material.finish);
    k.k_a = a * std::pow(material.Sut_pa / 1e6, b);
    k.k_b = diameter_m <= 0.051 ? std::pow(diameter_m / 0.00762, -0.107)
                                : 1.51 * std::pow(diameter_m * 1000.0, -0.157);
    k.k_c = 1.0; // combined loading enters through the von Mises transformation
    k.k_d = detail::temperature_factor(temperature_c);
    switch (reliability) {
        case Reliability::R50: k.k_e = 1.0; break;
        case Reliability::R90: k.k_e = 0.897; break;
        case Reliability::R99: k.k_e = 0.814; break;
    }
    k.k_f = 1.0; // plain shaft, no stress concentration modeled
    return k;
}

// Se' = 0.5 Sut capped at 700 MPa; Se = (product of Marin factors) * Se'.
inline std::pair<double, double> endurance_limit(const Material& material,
                                                 const MarinFactors& k) {
    const double se_prime = material.Sut_pa <= 1.4e9 ? 0.5 * material.Sut_pa : 7.0e8;
    return {se_prime, k.product() * se_prime};
}

// Goodman line: 1/n = sigma_a/Se + sigma_m/Sut. Both stresses zero yields
// the infinite-life sentinel.
inline double goodman_safety(double sigma_a_pa, double sigma_m_pa, double Se_pa,
                             double Sut_pa) {
    require(Se_pa > 0.0 && Sut_pa > 0.0, "goodman_safety: Se and Sut must be positive");
    require(sigma_a_pa >= 0.0 && sigma_m_pa >= 0.0,
            "goodman_safety: stresses must be non-negative");
    const double inv = sigma_a_pa / Se_pa + sigma_m_pa / Sut_pa;
    if (inv == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / inv;
}

struct FatigueReport {
    MarinFactors k;
    double Se_prime_pa = 0.0;
    double Se_pa = 0.0;
    double sigma_a_eq_pa = 0.0; // fully reversed bending at max |M|
    double sigma_m_eq_pa = 0.0; // steady torsion via von Mises
    double n_fatigue = std::numeric_limits<double>::infinity();
    bool infinite_life = false;

    njson to_json() const {
        njson j;
        j["k_a"] = k.k_a;
        j["k_b"] = k.k_b;
        j["k_c"] = k.k_c;
        j["k_d"] = k.k_d;
        j["k_e"] = k.k_e;
        j["k_f"] = k.k_f;
        j["Se_prime_pa"] = Se_prime_pa;
        j["Se_pa"] = Se_pa;
        j["sigma_a_eq_pa"] = sigma_a_eq_pa;
        j["sigma_m_eq_pa"] = sigma_m_eq_pa;
        if (std::isfinite(n_fatigue))
            j["n_fatigue"] = n_fatigue;
        else
            j["n_fatigue"] = nullptr;
        j["infinite_life"] = infinite_life;
        return j;
    }

    static FatigueReport from_json(const njson& j) {
        FatigueReport r;
        r.k = {j.at("k_a").get<double>(), j.at("k_b").get<double>(), j.at("k_c").get<double>(),
               j.at("k_d").get<double>(), j.at("k_e").get<double>(), j.at("k_f").get<double>()};
        r.Se_prime_pa = j.at("Se_prime_pa").get<double>();
        r.Se_pa = j.at("Se_pa").get<double>();
        r.sigma_a_eq_pa = j.at("sigma_a_eq_pa").get<double>();
        r.sigma_m_eq_pa = j.at("sigma_m_eq_pa").get<double>();
        r.infinite_life = j.at("infinite_life").get<bool>();
        r.n_fatigue = j.at("n_fatigue").is_null() ? std::numeric_limits<double>::infinity()
                                                  : j.at("n_fatigue").get<double>();
        return r;
    }
};

// Rotating-shaft classification: bending is fully alternating (grid argmax
// of |M|), torsion is fully steady.
inline FatigueReport fatigue_analysis(const ShaftSpec& spec, const BeamFields& fields,
                                      Reliability reliability, double temperature_c) {
    require(fields.well_formed(), "fatigue_analysis: malformed fields");
    FatigueReport rep;
    rep.k = marin_factors(spec.material, spec.diameter_m, reliability, temperature_c);
    std::tie(rep.Se_prime_pa, rep.Se_pa) = endurance_limit(spec.material, rep.k);
    double m_max = 0.0;
    for (double m : fields.M_nm) m_max = std::max(m_max, std::abs(m));
    rep.sigma_a_eq_pa = bending_stress(m_max, spec.diameter_m);
    rep.sigma_m_eq_pa =
        std::sqrt(3.0) * torsion_stress(spec.torque_magnitude_nm(), spec.diameter_m);
    if (rep.sigma_a_eq_pa == 0.0 && rep.sigma_m_eq_pa == 0.0) {
        rep.infinite_life = true; // n_fatigue stays at the sentinel
    } else {
        rep.n_fatigue = goodman_safety(rep.sigma_a_eq_pa, rep.sigma_m_eq_pa, rep.Se_pa,
                                       spec.material.Sut_pa);
    }
    return rep;
}

} // namespace enedina
