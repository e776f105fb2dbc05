#pragma once

#include <string>

#include "enedina/numfmt.hpp"
#include "enedina/record.hpp"
#include "enedina/rng.hpp"

namespace enedina {

// Bilingual text templates for the structured training samples. Portuguese
// (pt-BR) is the default locale; English is bundled for review. The code,
// verification and result channels are locale-independent so downstream
// extraction never depends on language.

inline constexpr const char* kTemplateVersion = "templates-v1";

namespace tmpl {

inline std::string num(double v) { return format_sig6(v); }

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

} // namespace tmpl

inline std::string build_prompt(const ShaftSpec& spec, Level level,
                                const AnalysisOptions& options, Locale locale) {
    using tmpl::num;
    const Material& m = spec.material;
    std::string p;
    if (locale == Locale::PtBr) {
        p = "Analise o eixo de transmissão " + spec.id +
            ", apoiado em mancais simples nas duas extremidades. Comprimento L = " +
            num(spec.length_m) + " m, diâmetro d = " + num(spec.diameter_m) +
            " m. Material " + m.name + ": E = " + num(m.E_pa) + " Pa, nu = " + num(m.nu) +
            ", Sy = " + num(m.Sy_pa) + " Pa, Sut = " + num(m.Sut_pa) + " Pa. ";
        p += "Cargas transversais (positivas para baixo): ";
        for (std::size_t i = 0; i < spec.loads.size(); ++i) {
            if (i > 0) p += "; ";
            p += "P" + std::to_string(i + 1) + " = " + num(spec.loads[i].magnitude_n) +
                 " N em x = " + num(spec.loads[i].position_m) + " m";
        }
        p += ". ";
        if (spec.has_torque()) {
            const auto [lo, hi] = spec.torque_span();
            p += "Torque aplicado T = " + num(spec.torque_magnitude_nm()) +
                 " N.m atuando entre x = " + num(lo) + " m e x = " + num(hi) + " m. ";
        }
        p += "Determine as reações de apoio, os diagramas de esforço cortante V(x) e momento "
             "fletor M(x) e a deflexão máxima pela teoria de viga de Timoshenko.";
        if (level != Level::Bachelor)
            p += " Calcule também a tensão equivalente de von Mises máxima e o fator de "
                 "segurança ao escoamento.";
        if (level == Level::Doctor)
            p += " Em seguida, faça a análise de fadiga: fatores de Marin, limite de resistência "
                 "à fadiga modificado e fator de segurança pelo critério de Goodman "
                 "(confiabilidade " +
                 std::string(to_string(options.reliability)) + ", temperatura " +
                 num(options.temperature_c) + " °C).";
    } else {
        p = "Analyze transmission shaft " + spec.id +
            ", simply supported on bearings at both ends. Length L = " + num(spec.length_m) +
            " m, diameter d = " + num(spec.diameter_m) + " m. Material " + m.name +
            ": E = " + num(m.E_pa) + " Pa, nu = " + num(m.nu) + ", Sy = " + num(m.Sy_pa) +
            " Pa, Sut = " + num(m.Sut_pa) + " Pa. ";
        p += "Transverse loads (downward positive): ";
        for (std::size_t i = 0; i < spec.loads.size(); ++i) {
            if (i > 0) p += "; ";
            p += "P" + std::to_string(i + 1) + " = " + num(spec.loads[i].magnitude_n) +
                 " N at x = " + num(spec.loads[i].position_m) + " m";
        }
        p += ". ";
        if (spec.has_torque()) {
            const auto [lo, hi] = spec.torque_span();
            p += "Applied torque T = " + num(spec.torque_magnitude_nm()) +
                 " N.m acting between x = " + num(lo) + " m and x = " + num(hi) + " m. ";
        }
        p += "Determine the support reactions, the shear V(x) and bending moment M(x) "
             "diagrams, and the maximum deflection using Timoshenko beam theory.";
        if (level != Level::Bachelor)
            p += " Also compute the maximum von Mises equivalent stress and the yield safety "
                 "factor.";
        if (level == Level::Doctor)
            p += " Then perform the fatigue analysis: Marin factors, modified endurance limit, "
                 "and the Goodman safety factor (reliability " +
                 std::string(to_string(options.reliability)) + ", temperature " +
                 num(options.temperature_c) + " °C).";
    }
    return p;
}

inline std::string analysis_body(const ShaftSpec& spec, Level level, Locale locale) {
    using tmpl::num;
    const SectionProperties sec = section_properties(spec.diameter_m, spec.material.nu);
    const Material& m = spec.material;
    std::string b;
    if (locale == Locale::PtBr) {
        b = "nível: " + std::string(display_name(level)) + "\n";
        b += "eixo " + spec.id + ": L = " + num(spec.length_m) + " m, d = " +
             num(spec.diameter_m) + " m\n";
        b += "material " + m.name + ": E = " + num(m.E_pa) + " Pa, G = " +
             num(m.shear_modulus_pa()) + " Pa, nu = " + num(m.nu) + ", Sy = " + num(m.Sy_pa) +
             " Pa, Sut = " + num(m.Sut_pa) + " Pa, acabamento = " + to_string(m.finish) + "\n";
        b += "seção circular: A = " + num(sec.area_m2) + " m^2, I = " + num(sec.I_m4) +
             " m^4, J = " + num(sec.J_m4) + " m^4, kappa = " + num(sec.kappa) + "\n";
        b += "apoios simples em x = 0 m e x = " + num(spec.length_m) + " m\n";
        b += "cargas pontuais: " + std::to_string(spec.loads.size()) + "\n";
        if (spec.has_torque()) {
            const auto [lo, hi] = spec.torque_span();
            b += "torque interno: " + num(spec.torque_magnitude_nm()) + " N.m entre x = " +
                 num(lo) + " m e x = " + num(hi) + " m";
        } else {
            b += "sem torque aplicado";
        }
    } else {
        b = "level: " + std::string(display_name(level)) + "\n";
        b += "shaft " + spec.id + ": L = " + num(spec.length_m) + " m, d = " +
             num(spec.diameter_m) + " m\n";
        b += "material " + m.name + ": E = " + num(m.E_pa) + " Pa, G = " +
             num(m.shear_modulus_pa()) + " Pa, nu = " + num(m.nu) + ", Sy = " + num(m.Sy_pa) +
             " Pa, Sut = " + num(m.Sut_pa) + " Pa, finish = " + to_string(m.finish) + "\n";
        b += "circular section: A = " + num(sec.area_m2) + " m^2, I = " + num(sec.I_m4) +
             " m^4, J = " + num(sec.J_m4) + " m^4, kappa = " + num(sec.kappa) + "\n";
        b += "simple supports at x = 0 m and x = " + num(spec.length_m) + " m\n";
        b += "point loads: " + std::to_string(spec.loads.size()) + "\n";
        if (spec.has_torque()) {
            const auto [lo, hi] = spec.torque_span();
            b += "internal torque: " + num(spec.torque_magnitude_nm()) + " N.m between x = " +
                 num(lo) + " m and x = " + num(hi) + " m";
        } else {
            b += "no applied torque";
        }
    }
    return b;
}

inline std::string reasoning_body(const ShaftSpec& spec, Level level,
                                  const FieldsSummary& summary, const StressReport* stress,
                                  const FatigueReport* fatigue, Locale locale) {
    using tmpl::num;
    std::string b;
    int step = 1;
    auto line = [&b, &step](const std::string& text) {
        b += std::to_string(step++) + ". " + text + "\n";
    };
    if (locale == Locale::PtBr) {
        line("Reações por equilíbrio de forças e momentos: R1 = " + num(summary.R1_n) +
             " N, R2 = " + num(summary.R2_n) + " N.");
        line("V(x) é constante por trechos com salto -P em cada carga; M(x) é linear por "
             "trechos com M(0) = M(L) = 0.");
        line("Momento fletor máximo |M| = " + num(summary.M_max_nm) + " N.m em x = " +
             num(summary.x_at_M_max_m) + " m.");
        line("Deflexão de Timoshenko por superposição, w = w_flexão + w_cisalhamento com "
             "dw_s/dx = V/(kappa G A): w_max = " +
             num(summary.w_max_m) + " m em x = " + num(summary.x_at_w_max_m) + " m.");
        if (level != Level::Bachelor && stress != nullptr) {
            line("Tensões na fibra externa: sigma = 32M/(pi d^3), tau = 16T/(pi d^3); "
                 "sigma_vm = sqrt(sigma^2 + 3 tau^2) atinge " +
                 num(stress->sigma_vm_max_pa) + " Pa em x = " + num(stress->location_x_m) +
                 " m; n_escoamento = Sy/sigma_vm = " + num(stress->n_yield) + ".");
        }
        if (level == Level::Doctor && fatigue != nullptr) {
            line("Fatores de Marin: ka = " + num(fatigue->k.k_a) + ", kb = " +
                 num(fatigue->k.k_b) + ", kc = " + num(fatigue->k.k_c) + ", kd = " +
                 num(fatigue->k.k_d) + ", ke = " + num(fatigue->k.k_e) + ", kf = " +
                 num(fatigue->k.k_f) + "; Se' = " + num(fatigue->Se_prime_pa) + " Pa, Se = " +
                 num(fatigue->Se_pa) + " Pa.");
            line("Goodman com flexão alternada e torção média: 1/n = sigma_a/Se + "
                 "sigma_m/Sut com sigma_a = " +
                 num(fatigue->sigma_a_eq_pa) + " Pa e sigma_m = " + num(fatigue->sigma_m_eq_pa) +
                 " Pa; n_fadiga = " + num(fatigue->n_fatigue) + ".");
        }
    } else {
        line("Reactions from force and moment equilibrium: R1 = " + num(summary.R1_n) +
             " N, R2 = " + num(summary.R2_n) + " N.");
        line("V(x) is piecewise constant with a -P jump at each load; M(x) is piecewise "
             "linear with M(0) = M(L) = 0.");
        line("Maximum bending moment |M| = " + num(summary.M_max_nm) + " N.m at x = " +
             num(summary.x_at_M_max_m) + " m.");
        line("Timoshenko deflection by superposition, w = w_bending + w_shear with "
             "dw_s/dx = V/(kappa G A): w_max = " +
             num(summary.w_max_m) + " m at x = " + num(summary.x_at_w_max_m) + " m.");
        if (level != Level::Bachelor && stress != nullptr) {
            line("Outer-fiber stresses: sigma = 32M/(pi d^3), tau = 16T/(pi d^3); "
                 "sigma_vm = sqrt(sigma^2 + 3 tau^2) peaks at " +
                 num(stress->sigma_vm_max_pa) + " Pa at x = " + num(stress->location_x_m) +
                 " m; n_yield = Sy/sigma_vm = " + num(stress->n_yield) + ".");
        }
        if (level == Level::Doctor && fatigue != nullptr) {
            line("Marin factors: ka = " + num(fatigue->k.k_a) + ", kb = " + num(fatigue->k.k_b) +
                 ", kc = " + num(fatigue->k.k_c) + ", kd = " + num(fatigue->k.k_d) + ", ke = " +
                 num(fatigue->k.k_e) + ", kf = " + num(fatigue->k.k_f) + "; Se' = " +
                 num(fatigue->Se_prime_pa) + " Pa, Se = " + num(fatigue->Se_pa) + " Pa.");
            line("Goodman with alternating bending and steady torsion: 1/n = sigma_a/Se + "
                 "sigma_m/Sut with sigma_a = " +
                 num(fatigue->sigma_a_eq_pa) + " Pa and sigma_m = " + num(fatigue->sigma_m_eq_pa) +
                 " Pa; n_fatigue = " + num(fatigue->n_fatigue) + ".");
        }
    }
    if (!b.empty() && b.back() == '\n') b.pop_back();
    return b;
}

// Declarative restatement of the problem and solver invocation, emitted as
// JSON with all numerals under the shared 6-digit rule. This is the channel
// the grounding check re-solves from.
inline std::string code_body(const ShaftSpec& spec, Level level, const AnalysisOptions& options,
                             int n_grid) {
    using tmpl::json_escape;
    using tmpl::num;
    std::string b = "{\n  \"shaft_spec\": {\n";
    b += "    \"schema_version\": 1,\n";
    b += "    \"id\": \"" + json_escape(spec.id) + "\",\n";
    b += "    \"length_m\": " + num(spec.length_m) + ",\n";
    b += "    \"diameter_m\": " + num(spec.diameter_m) + ",\n";
    b += "    \"material\": {\"name\": \"" + json_escape(spec.material.name) +
         "\", \"E_pa\": " + num(spec.material.E_pa) + ", \"nu\": " + num(spec.material.nu) +
         ", \"Sy_pa\": " + num(spec.material.Sy_pa) + ", \"Sut_pa\": " +
         num(spec.material.Sut_pa) + ", \"surface_finish\": \"" +
         to_string(spec.material.finish) + "\"},\n";
    b += "    \"loads\": [";
    for (std::size_t i = 0; i < spec.loads.size(); ++i) {
        if (i > 0) b += ", ";
        b += "{\"position_m\": " + num(spec.loads[i].position_m) + ", \"magnitude_n\": " +
             num(spec.loads[i].magnitude_n) + "}";
    }
    b += "],\n";
    if (spec.has_torque()) {
        b += "    \"torque_in\": {\"position_m\": " + num(spec.torque_in->position_m) +
             ", \"magnitude_nm\": " + num(spec.torque_in->magnitude_nm) + "},\n";
        b += "    \"torque_out\": {\"position_m\": " + num(spec.torque_out->position_m) +
             ", \"magnitude_nm\": " + num(spec.torque_out->magnitude_nm) + "}\n";
    } else {
        b += "    \"torque_in\": null,\n    \"torque_out\": null\n";
    }
    b += "  },\n";
    b += "  \"solver\": {\"level\": \"" + std::string(to_string(level)) +
         "\", \"n_grid\": " + std::to_string(n_grid) + ", \"reliability\": \"" +
         to_string(options.reliability) + "\", \"temperature_c\": " +
         num(options.temperature_c) + "}\n";
    b += "}";
    return b;
}

inline std::string verification_body(const VerificationReport& report) {
    std::string b;
    for (const auto& r : report.level_results) {
        b += std::string(to_string(r.level)) + ": " + (r.passed ? "PASS" : "FAIL") +
             " (residual = " + format_sig6(r.residual) + ")\n";
    }
    b += std::string("overall: ") + (report.overall ? "PASS" : "FAIL");
    return b;
}

inline std::string result_body(Level level, bool has_torque, const FieldsSummary& summary,
                               const StressReport* stress, const FatigueReport* fatigue) {
    std::string b;
    for (const auto& q : result_quantities(level, has_torque, summary, stress, fatigue)) {
        b += q.label + " = " + format_sig6(q.value);
        if (!q.unit.empty()) b += " " + q.unit;
        b += "\n";
    }
    if (!b.empty() && b.back() == '\n') b.pop_back();
    return b;
}

// Hash of every template literal above; recorded in dataset manifests so a
// template change shows up as a config change.
inline std::uint64_t template_hash() {
    ShaftSpec probe;
    probe.id = "hash-probe";
    probe.length_m = 1.0;
    probe.diameter_m = 0.05;
    probe.loads = {{0.5, 1000.0}, {0.75, 250.0}};
    probe.torque_in = TorquePoint{0.25, 40.0};
    probe.torque_out = TorquePoint{0.875, -40.0};
    probe.material = {"hash-steel", 2.0e11, 0.3, 3.5e8, 6.0e8, SurfaceFinish::Machined};
    const BeamFields fields = solve(probe, 33);
    const FieldsSummary summary = summarize(probe, fields, 33);
    const StressReport stress = yield_analysis(probe, fields);
    const FatigueReport fatigue = fatigue_analysis(probe, fields, Reliability::R90, 80.0);
    std::uint64_t h = fnv1a(kTemplateVersion);
    for (Locale loc : {Locale::PtBr, Locale::En}) {
        for (Level lvl : {Level::Bachelor, Level::Master, Level::Doctor}) {
            h = fnv1a(build_prompt(probe, lvl, AnalysisOptions{Reliability::R90, 80.0}, loc), h);
            h = fnv1a(analysis_body(probe, lvl, loc), h);
            h = fnv1a(reasoning_body(probe, lvl, summary, &stress, &fatigue, loc), h);
        }
    }
    h = fnv1a(code_body(probe, Level::Doctor, AnalysisOptions{}, 257), h);
    h = fnv1a(result_body(Level::Doctor, true, summary, &stress, &fatigue), h);
    return h;
}

} // namespace enedina
