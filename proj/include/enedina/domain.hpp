#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace enedina {

using njson = nlohmann::ordered_json;

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// ---------------------------------------------------------------------------
// Materials
// ---------------------------------------------------------------------------

enum class SurfaceFinish { Ground, Machined, HotRolled, AsForged };

inline const char* to_string(SurfaceFinish f) {
    switch (f) {
        case SurfaceFinish::Ground: return "ground";
        case SurfaceFinish::Machined: return "machined";
        case SurfaceFinish::HotRolled: return "hot_rolled";
        case SurfaceFinish::AsForged: return "as_forged";
    }
    return "machined";
}

inline SurfaceFinish surface_finish_from_string(const std::string& s) {
    if (s == "ground") return SurfaceFinish::Ground;
    if (s == "machined") return SurfaceFinish::Machined;
    if (s == "hot_rolled") return SurfaceFinish::HotRolled;
    if (s == "as_forged") return SurfaceFinish::AsForged;
    throw std::invalid_argument("unknown surface_finish: " + s);
}

struct Material {
    std::string name;
    double E_pa = 0.0;   // Young's modulus
    double nu = 0.0;     // Poisson ratio
    double Sy_pa = 0.0;  // yield strength
    double Sut_pa = 0.0; // ultimate tensile strength
    SurfaceFinish finish = SurfaceFinish::Machined;

    // G is always derived from E and nu, never stored.
    double shear_modulus_pa() const { return E_pa / (2.0 * (1.0 + nu)); }

    void validate() const {
        require(!name.empty(), "material: name must be non-empty");
        require(std::isfinite(E_pa) && E_pa > 0.0, "material: E must be positive");
        require(std::isfinite(nu) && nu > 0.0 && nu < 0.5, "material: nu must be in (0, 0.5)");
        require(std::isfinite(Sy_pa) && Sy_pa > 0.0, "material: Sy must be positive");
        require(std::isfinite(Sut_pa) && Sut_pa > Sy_pa, "material: Sut must exceed Sy");
    }
};

// ---------------------------------------------------------------------------
// Problem instance
// ---------------------------------------------------------------------------

// Sign convention, used everywhere: transverse loads act downward and are
// positive; deflection w is positive downward; sagging bending moment is
// positive. Cross-section rotation theta satisfies M = EI * dtheta/dx.

struct PointLoad {
    double position_m = 0.0;
    double magnitude_n = 0.0; // downward positive
};

struct TorquePoint {
    double position_m = 0.0;
    double magnitude_nm = 0.0;
};

// A shaft on two simple supports (bearings) at x = 0 and x = L, carrying
// 1..n transverse point loads and at most one torque input/output pair.
struct ShaftSpec {
    std::string id;
    double length_m = 0.0;
    double diameter_m = 0.0;
    std::vector<PointLoad> loads;
    std::optional<TorquePoint> torque_in;
    std::optional<TorquePoint> torque_out;
    Material material;

    bool has_torque() const { return torque_in.has_value(); }

    double torque_magnitude_nm() const {
        return torque_in ? std::abs(torque_in->magnitude_nm) : 0.0;
    }

    // Interval on which the internal torque is nonzero.
    std::pair<double, double> torque_span() const {
        const double a = torque_in->position_m;
        const double b = torque_out->position_m;
        return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    }

    void validate() const {
        require(!id.empty(), "spec: id must be non-empty");
        require(std::isfinite(length_m) && length_m > 0.0, "spec: length must be positive");
        require(std::isfinite(diameter_m) && diameter_m > 0.0, "spec: diameter must be positive");
        require(diameter_m < length_m, "spec: diameter must be smaller than span length");
        require(!loads.empty(), "spec: at least one transverse load required");
        for (const auto& p : loads) {
            require(std::isfinite(p.position_m) && p.position_m > 0.0 && p.position_m < length_m,
                    "spec: load position must lie strictly inside (0, L)");
            require(std::isfinite(p.magnitude_n), "spec: load magnitude must be finite");
        }
        require(torque_in.has_value() == torque_out.has_value(),
                "spec: torque_in and torque_out must both be present or both absent");
        if (torque_in) {
            for (const auto* t : {&*torque_in, &*torque_out}) {
                require(std::isfinite(t->position_m) && t->position_m > 0.0 &&
                            t->position_m < length_m,
                        "spec: torque position must lie strictly inside (0, L)");
            }
            const double sum = torque_in->magnitude_nm + torque_out->magnitude_nm;
            require(std::abs(sum) <= 1e-12 * std::abs(torque_in->magnitude_nm),
                    "spec: torque_in + torque_out must balance to zero");
            require(torque_in->position_m != torque_out->position_m,
                    "spec: torque application points must be distinct");
        }
        material.validate();
    }
};

// ---------------------------------------------------------------------------
// Section properties (solid circular section)
// ---------------------------------------------------------------------------

struct SectionProperties {
    double area_m2 = 0.0;
    double I_m4 = 0.0;  // second moment of area
    double J_m4 = 0.0;  // polar moment, 2*I for a circle
    double kappa = 0.0; // shear correction factor
};

// A = pi d^2/4, I = pi d^4/64, J = 2I; kappa is Cowper's value for a solid
// circular section, kappa = 6(1+nu) / (7+6nu).
inline SectionProperties section_properties(double diameter_m, double nu) {
    require(std::isfinite(diameter_m) && diameter_m > 0.0,
            "section_properties: diameter must be positive");
    require(std::isfinite(nu) && nu > 0.0 && nu < 0.5,
            "section_properties: nu must be in (0, 0.5)");
    const double d2 = diameter_m * diameter_m;
    SectionProperties s;
    s.area_m2 = std::numbers::pi * d2 / 4.0;
    s.I_m4 = std::numbers::pi * d2 * d2 / 64.0;
    s.J_m4 = 2.0 * s.I_m4;
    s.kappa = 6.0 * (1.0 + nu) / (7.0 + 6.0 * nu);
    return s;
}

// ---------------------------------------------------------------------------
// Solved fields
// ---------------------------------------------------------------------------

struct BeamFields {
    std::vector<double> x_m;       // grid, includes 0 and L, strictly increasing
    std::vector<double> V_n;       // shear force (left limit at discontinuities)
    std::vector<double> M_nm;      // bending moment
    std::vector<double> T_nm;      // internal torque (left limit at ends of span)
    std::vector<double> theta_rad; // cross-section rotation
    std::vector<double> w_m;       // deflection, downward positive

    std::size_t size() const { return x_m.size(); }

    bool well_formed() const {
        const std::size_t n = x_m.size();
        if (n < 2) return false;
        if (V_n.size() != n || M_nm.size() != n || T_nm.size() != n ||
            theta_rad.size() != n || w_m.size() != n)
            return false;
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_m[i] > x_m[i - 1])) return false;
        return true;
    }

    bool all_finite() const {
        for (const auto* v : {&x_m, &V_n, &M_nm, &T_nm, &theta_rad, &w_m})
            for (double d : *v)
                if (!std::isfinite(d)) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// JSON (schema_version 1; field names carry SI unit suffixes)
// ---------------------------------------------------------------------------

inline njson to_json(const Material& m) {
    return njson{{"name", m.name},       {"E_pa", m.E_pa},     {"nu", m.nu},
                 {"Sy_pa", m.Sy_pa},     {"Sut_pa", m.Sut_pa},
                 {"surface_finish", to_string(m.finish)}};
}

inline Material material_from_json(const njson& j) {
    Material m;
    m.name = j.at("name").get<std::string>();
    m.E_pa = j.at("E_pa").get<double>();
    m.nu = j.at("nu").get<double>();
    m.Sy_pa = j.at("Sy_pa").get<double>();
    m.Sut_pa = j.at("Sut_pa").get<double>();
    m.finish = surface_finish_from_string(j.at("surface_finish").get<std::string>());
    return m;
}

inline njson to_json(const ShaftSpec& s) {
    njson j;
    j["schema_version"] = 1;
    j["id"] = s.id;
    j["length_m"] = s.length_m;
    j["diameter_m"] = s.diameter_m;
    j["material"] = to_json(s.material);
    njson loads = njson::array();
    for (const auto& p : s.loads)
        loads.push_back(njson{{"position_m", p.position_m}, {"magnitude_n", p.magnitude_n}});
    j["loads"] = loads;
    if (s.torque_in) {
        j["torque_in"] = njson{{"position_m", s.torque_in->position_m},
                               {"magnitude_nm", s.torque_in->magnitude_nm}};
        j["torque_out"] = njson{{"position_m", s.torque_out->position_m},
                                {"magnitude_nm", s.torque_out->magnitude_nm}};
    } else {
        j["torque_in"] = nullptr;
        j["torque_out"] = nullptr;
    }
    return j;
}

inline ShaftSpec shaft_spec_from_json(const njson& j) {
    require(j.is_object(), "spec json: expected an object");
    require(j.contains("schema_version") && j.at("schema_version").is_number_integer() &&
                j.at("schema_version").get<int>() == 1,
            "spec json: schema_version must be 1");
    ShaftSpec s;
    s.id = j.at("id").get<std::string>();
    s.length_m = j.at("length_m").get<double>();
    s.diameter_m = j.at("diameter_m").get<double>();
    s.material = material_from_json(j.at("material"));
    for (const auto& p : j.at("loads"))
        s.loads.push_back({p.at("position_m").get<double>(), p.at("magnitude_n").get<double>()});
    if (j.contains("torque_in") && !j.at("torque_in").is_null()) {
        s.torque_in = TorquePoint{j.at("torque_in").at("position_m").get<double>(),
                                  j.at("torque_in").at("magnitude_nm").get<double>()};
        s.torque_out = TorquePoint{j.at("torque_out").at("position_m").get<double>(),
                                   j.at("torque_out").at("magnitude_nm").get<double>()};
    }
    s.validate();
    return s;
}

inline njson to_json(const BeamFields& f) {
    return njson{{"schema_version", 1}, {"x_m", f.x_m},       {"V_n", f.V_n},
                 {"M_nm", f.M_nm},      {"T_nm", f.T_nm},     {"theta_rad", f.theta_rad},
                 {"w_m", f.w_m}};
}

inline BeamFields beam_fields_from_json(const njson& j) {
    BeamFields f;
    f.x_m = j.at("x_m").get<std::vector<double>>();
    f.V_n = j.at("V_n").get<std::vector<double>>();
    f.M_nm = j.at("M_nm").get<std::vector<double>>();
    f.T_nm = j.at("T_nm").get<std::vector<double>>();
    f.theta_rad = j.at("theta_rad").get<std::vector<double>>();
    f.w_m = j.at("w_m").get<std::vector<double>>();
    require(f.well_formed(), "fields json: arrays malformed");
    return f;
}

} // namespace enedina
