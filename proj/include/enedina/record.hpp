#pragma once

#include <optional>
#include <string>
#include <vector>

#include "enedina/domain.hpp"
#include "enedina/solver.hpp"
#include "enedina/stress.hpp"
#include "enedina/verification.hpp"

namespace enedina {

enum class Level { Bachelor, Master, Doctor };

inline const char* to_string(Level l) {
    switch (l) {
        case Level::Bachelor: return "bachelor";
        case Level::Master: return "master";
        case Level::Doctor: return "doctor";
    }
    return "bachelor";
}

inline const char* display_name(Level l) {
    switch (l) {
        case Level::Bachelor: return "Bachelor";
        case Level::Master: return "Master";
        case Level::Doctor: return "Doctor";
    }
    return "Bachelor";
}

inline char level_letter(Level l) {
    switch (l) {
        case Level::Bachelor: return 'B';
        case Level::Master: return 'M';
        case Level::Doctor: return 'D';
    }
    return 'B';
}

inline Level level_from_string(const std::string& s) {
    if (s == "bachelor") return Level::Bachelor;
    if (s == "master") return Level::Master;
    if (s == "doctor") return Level::Doctor;
    throw std::invalid_argument("unknown level: " + s);
}

inline constexpr int kLevelCount = 3;

enum class Locale { PtBr, En };

inline const char* to_string(Locale l) { return l == Locale::PtBr ? "pt-BR" : "en"; }

inline Locale locale_from_string(const std::string& s) {
    if (s == "pt-BR") return Locale::PtBr;
    if (s == "en") return Locale::En;
    throw std::invalid_argument("unknown locale: " + s);
}

// Draws that accompany a Doctor-level analysis (defaults used elsewhere).
struct AnalysisOptions {
    Reliability reliability = Reliability::R50;
    double temperature_c = 20.0;
};

// Key quantities of a solved record; also the source of the result-channel
// lines.
struct FieldsSummary {
    int n_grid = 0;
    double R1_n = 0.0;
    double R2_n = 0.0;
    double V_max_n = 0.0;
    double M_max_nm = 0.0;
    double x_at_M_max_m = 0.0;
    double theta_max_rad = 0.0;
    double w_max_m = 0.0;
    double x_at_w_max_m = 0.0;
    double T_nm = 0.0;

    njson to_json() const {
        return njson{{"n_grid", n_grid},
                     {"R1_n", R1_n},
                     {"R2_n", R2_n},
                     {"V_max_n", V_max_n},
                     {"M_max_nm", M_max_nm},
                     {"x_at_M_max_m", x_at_M_max_m},
                     {"theta_max_rad", theta_max_rad},
                     {"w_max_m", w_max_m},
                     {"x_at_w_max_m", x_at_w_max_m},
                     {"T_nm", T_nm}};
    }

    static FieldsSummary from_json(const njson& j) {
        FieldsSummary s;
        s.n_grid = j.at("n_grid").get<int>();
        s.R1_n = j.at("R1_n").get<double>();
        s.R2_n = j.at("R2_n").get<double>();
        s.V_max_n = j.at("V_max_n").get<double>();
        s.M_max_nm = j.at("M_max_nm").get<double>();
        s.x_at_M_max_m = j.at("x_at_M_max_m").get<double>();
        s.theta_max_rad = j.at("theta_max_rad").get<double>();
        s.w_max_m = j.at("w_max_m").get<double>();
        s.x_at_w_max_m = j.at("x_at_w_max_m").get<double>();
        s.T_nm = j.at("T_nm").get<double>();
        return s;
    }
};

inline FieldsSummary summarize(const ShaftSpec& spec, const BeamFields& fields, int n_grid) {
    FieldsSummary s;
    s.n_grid = n_grid;
    const Reactions r = reactions(spec);
    s.R1_n = r.R1_n;
    s.R2_n = r.R2_n;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        s.V_max_n = std::max(s.V_max_n, std::abs(fields.V_n[i]));
        s.theta_max_rad = std::max(s.theta_max_rad, std::abs(fields.theta_rad[i]));
        if (std::abs(fields.M_nm[i]) > s.M_max_nm) {
            s.M_max_nm = std::abs(fields.M_nm[i]);
            s.x_at_M_max_m = fields.x_m[i];
        }
        if (std::abs(fields.w_m[i]) > s.w_max_m) {
            s.w_max_m = std::abs(fields.w_m[i]);
            s.x_at_w_max_m = fields.x_m[i];
        }
    }
    s.T_nm = spec.torque_magnitude_nm();
    return s;
}

// ---------------------------------------------------------------------------
// Result-quantity registry
// ---------------------------------------------------------------------------

// Fixed registry of labeled quantities that may appear in a result channel.
// Unit "" marks a dimensionless quantity (rendered without a unit token).
struct QuantityInfo {
    const char* label;
    const char* unit;
    Level min_level;        // first level at which the label appears
    bool torque_only;       // present only when the spec carries torque
};

inline const std::vector<QuantityInfo>& quantity_registry() {
    static const std::vector<QuantityInfo> reg = {
        {"R1", "N", Level::Bachelor, false},
        {"R2", "N", Level::Bachelor, false},
        {"V_max", "N", Level::Bachelor, false},
        {"M_max", "N.m", Level::Bachelor, false},
        {"theta_max", "rad", Level::Bachelor, false},
        {"w_max", "m", Level::Bachelor, false},
        {"T", "N.m", Level::Bachelor, true},
        {"sigma_vm_max", "Pa", Level::Master, false},
        {"n_yield", "", Level::Master, false},
        {"Se_prime", "Pa", Level::Doctor, false},
        {"Se", "Pa", Level::Doctor, false},
        {"sigma_a_eq", "Pa", Level::Doctor, false},
        {"sigma_m_eq", "Pa", Level::Doctor, false},
        {"n_fatigue", "", Level::Doctor, false},
    };
    return reg;
}

inline const QuantityInfo* quantity_info(const std::string& label) {
    for (const auto& q : quantity_registry())
        if (label == q.label) return &q;
    return nullptr;
}

struct NamedQuantity {
    std::string label;
    double value = 0.0;
    std::string unit;
};

// The ordered quantity list for one record, as rendered into the result
// channel and as recomputed by the grounding check.
inline std::vector<NamedQuantity> result_quantities(Level level, bool has_torque,
                                                    const FieldsSummary& summary,
                                                    const StressReport* stress,
                                                    const FatigueReport* fatigue) {
    std::vector<NamedQuantity> out;
    auto add = [&out](const char* label, double value, const char* unit) {
        out.push_back({label, value, unit});
    };
    add("R1", summary.R1_n, "N");
    add("R2", summary.R2_n, "N");
    add("V_max", summary.V_max_n, "N");
    add("M_max", summary.M_max_nm, "N.m");
    add("theta_max", summary.theta_max_rad, "rad");
    add("w_max", summary.w_max_m, "m");
    if (has_torque) add("T", summary.T_nm, "N.m");
    if (level != Level::Bachelor) {
        require(stress != nullptr, "result_quantities: stress report required");
        add("sigma_vm_max", stress->sigma_vm_max_pa, "Pa");
        add("n_yield", stress->n_yield, "");
    }
    if (level == Level::Doctor) {
        require(fatigue != nullptr, "result_quantities: fatigue report required");
        add("Se_prime", fatigue->Se_prime_pa, "Pa");
        add("Se", fatigue->Se_pa, "Pa");
        add("sigma_a_eq", fatigue->sigma_a_eq_pa, "Pa");
        add("sigma_m_eq", fatigue->sigma_m_eq_pa, "Pa");
        add("n_fatigue", fatigue->n_fatigue, "");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset record
// ---------------------------------------------------------------------------

struct DatasetRecord {
    std::string id;
    Level level = Level::Bachelor;
    Locale locale = Locale::PtBr;
    ShaftSpec spec;
    AnalysisOptions options;
    FieldsSummary summary;
    std::optional<StressReport> stress;
    std::optional<FatigueReport> fatigue;
    VerificationReport verification;
    std::string harmony_text;
    long token_count = -1;    // set after tokenizer training
    double difficulty = -1.0; // within-level token-count quantile

    njson to_json() const {
        njson j;
        j["schema_version"] = 1;
        j["id"] = id;
        j["level"] = to_string(level);
        j["locale"] = to_string(locale);
        j["spec"] = enedina::to_json(spec);
        j["analysis"] = njson{{"reliability", to_string(options.reliability)},
                              {"temperature_c", options.temperature_c}};
        j["fields_summary"] = summary.to_json();
        njson reports = njson::object();
        if (stress) reports["stress"] = stress->to_json();
        if (fatigue) reports["fatigue"] = fatigue->to_json();
        j["reports"] = reports;
        j["verification"] = verification.to_json();
        j["harmony_text"] = harmony_text;
        j["token_count"] = token_count;
        j["difficulty"] = difficulty;
        return j;
    }

    static DatasetRecord from_json(const njson& j) {
        require(j.at("schema_version").get<int>() == 1, "record json: schema_version must be 1");
        DatasetRecord r;
        r.id = j.at("id").get<std::string>();
        r.level = level_from_string(j.at("level").get<std::string>());
        r.locale = locale_from_string(j.at("locale").get<std::string>());
        r.spec = shaft_spec_from_json(j.at("spec"));
        r.options.reliability =
            reliability_from_string(j.at("analysis").at("reliability").get<std::string>());
        r.options.temperature_c = j.at("analysis").at("temperature_c").get<double>();
        r.summary = FieldsSummary::from_json(j.at("fields_summary"));
        const auto& reports = j.at("reports");
        if (reports.contains("stress")) r.stress = StressReport::from_json(reports.at("stress"));
        if (reports.contains("fatigue"))
            r.fatigue = FatigueReport::from_json(reports.at("fatigue"));
        r.verification = VerificationReport::from_json(j.at("verification"));
        r.harmony_text = j.at("harmony_text").get<std::string>();
        r.token_count = j.at("token_count").get<long>();
        r.difficulty = j.at("difficulty").get<double>();
        return r;
    }
};

} // namespace enedina
