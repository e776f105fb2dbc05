#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enedina/harmony.hpp"
#include "enedina/record.hpp"
#include "enedina/rng.hpp"
#include "enedina/solver.hpp"
#include "enedina/stress.hpp"

namespace enedina::evalkit {

// Evaluation harness over model-output dumps: structural validity,
// numerical grounding by native re-solve, stop-token accounting, perplexity
// over supplied log-probabilities, degeneracy detection, OOD probes, and
// the formal calculators (expected harm, monotropy index, parameter count).
// No model is run here; inputs are JSONL dumps.

struct TokenLogprob {
    long id = 0;
    double logprob = 0.0; // converted to nats on load
};

struct ModelOutputRecord {
    std::string id;
    std::string prompt_text;
    std::string completion_text;
    std::vector<TokenLogprob> tokens;
    bool has_logprobs = false;
    std::optional<Level> level;

    static ModelOutputRecord from_json(const njson& j) {
        ModelOutputRecord r;
        r.id = j.at("id").get<std::string>();
        r.prompt_text = j.value("prompt_text", std::string());
        r.completion_text = j.at("completion_text").get<std::string>();
        if (j.contains("level") && !j.at("level").is_null())
            r.level = level_from_string(j.at("level").get<std::string>());
        double base_ln = 1.0; // natural log by default
        if (j.contains("log_base") && !j.at("log_base").is_null()) {
            const auto& lb = j.at("log_base");
            if (lb.is_string()) {
                const std::string s = lb.get<std::string>();
                if (s == "e") base_ln = 1.0;
                else if (s == "2") base_ln = std::log(2.0);
                else if (s == "10") base_ln = std::log(10.0);
                else throw std::invalid_argument("outputs: unknown log_base " + s);
            } else {
                base_ln = std::log(lb.get<double>());
                require(std::isfinite(base_ln) && base_ln > 0.0,
                        "outputs: log_base must exceed 1");
            }
        }
        if (j.contains("tokens") && !j.at("tokens").is_null()) {
            for (const auto& t : j.at("tokens")) {
                TokenLogprob tl;
                tl.id = t.at("id").get<long>();
                tl.logprob = t.at("logprob").get<double>() * base_ln;
                require(std::isfinite(tl.logprob) && tl.logprob <= 0.0,
                        "outputs: logprobs must be finite and <= 0");
                r.tokens.push_back(tl);
            }
            r.has_logprobs = true;
        }
        return r;
    }
};

inline std::vector<ModelOutputRecord> load_outputs(std::istream& in) {
    std::vector<ModelOutputRecord> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(ModelOutputRecord::from_json(njson::parse(line)));
        } catch (const std::exception& e) {
            throw std::invalid_argument("outputs line " + std::to_string(line_no) + ": " +
                                        e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rate metrics
// ---------------------------------------------------------------------------

struct RecordDiagnostic {
    std::string id;
    std::string bucket; // level name or "unknown"
    bool passed = false;
    std::string detail;
};

struct RateResult {
    double overall = 0.0;
    std::map<std::string, double> by_bucket;
    std::map<std::string, std::pair<long, long>> counts; // bucket -> (passed, total)
    std::vector<RecordDiagnostic> diagnostics;
};

namespace detail {

inline std::string bucket_name(const ModelOutputRecord& r,
                               const std::optional<Level>& parsed_level) {
    if (r.level) return to_string(*r.level);
    if (parsed_level) return to_string(*parsed_level);
    return "unknown";
}

inline std::optional<Level> level_from_doc(const harmony::HarmonyDoc& doc) {
    try {
        const njson code = njson::parse(doc.code());
        return level_from_string(code.at("solver").at("level").get<std::string>());
    } catch (...) {
        return std::nullopt;
    }
}

inline RateResult finalize(RateResult r) {
    long passed = 0, total = 0;
    for (auto& [bucket, pt] : r.counts) {
        passed += pt.first;
        total += pt.second;
        r.by_bucket[bucket] =
            pt.second == 0 ? 0.0 : static_cast<double>(pt.first) / static_cast<double>(pt.second);
    }
    r.overall = total == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(total);
    return r;
}

} // namespace detail

// Fraction of completions accepted by the strict format grammar.
inline RateResult eval_structural_validity(const std::vector<ModelOutputRecord>& records) {
    RateResult res;
    for (const auto& r : records) {
        const auto parsed = harmony::parse(r.completion_text);
        const bool ok = std::holds_alternative<harmony::HarmonyDoc>(parsed);
        std::optional<Level> lvl;
        std::string detail = "ok";
        if (ok)
            lvl = detail::level_from_doc(std::get<harmony::HarmonyDoc>(parsed));
        else
            detail = std::get<harmony::ParseError>(parsed).message();
        const std::string bucket = detail::bucket_name(r, lvl);
        res.counts[bucket].first += ok ? 1 : 0;
        res.counts[bucket].second += 1;
        res.diagnostics.push_back({r.id, bucket, ok, detail});
    }
    return detail::finalize(std::move(res));
}

struct GroundingOptions {
    double rel_tol = 1e-4;
    bool use_oracle = false; // re-check deflections with the quadrature path
    int oracle_n_grid = 2048;
};

namespace detail {

inline double rel_gap(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

struct GroundingCheck {
    bool grounded = false;
    std::string detail;
};

// Reconstructs the problem from the declarative code channel, re-solves it
// natively, and compares every extracted result quantity.
inline GroundingCheck ground_one(const harmony::HarmonyDoc& doc, const GroundingOptions& opt) {
    njson code;
    try {
        code = njson::parse(doc.code());
    } catch (const std::exception& e) {
        return {false, std::string("code channel is not valid JSON: ") + e.what()};
    }
    ShaftSpec spec;
    Level level;
    AnalysisOptions options;
    int n_grid = 0;
    try {
        spec = shaft_spec_from_json(code.at("shaft_spec"));
        const njson& solver = code.at("solver");
        level = level_from_string(solver.at("level").get<std::string>());
        options.reliability =
            reliability_from_string(solver.at("reliability").get<std::string>());
        options.temperature_c = solver.at("temperature_c").get<double>();
        n_grid = solver.at("n_grid").get<int>();
    } catch (const std::exception& e) {
        return {false, std::string("unreconstructable spec: ") + e.what()};
    }

    const auto extracted = harmony::extract_quantities(doc);
    if (std::holds_alternative<harmony::ExtractionError>(extracted))
        return {false, std::get<harmony::ExtractionError>(extracted).message};
    const auto& got = std::get<std::map<std::string, harmony::Quantity>>(extracted);

    std::map<std::string, double> expected;
    try {
        const BeamFields fields = opt.use_oracle ? numerical_oracle(spec, opt.oracle_n_grid)
                                                 : solve(spec, n_grid);
        const FieldsSummary summary =
            summarize(spec, fields, opt.use_oracle ? opt.oracle_n_grid : n_grid);
        std::optional<StressReport> stress;
        std::optional<FatigueReport> fatigue;
        if (level != Level::Bachelor) stress = yield_analysis(spec, fields);
        if (level == Level::Doctor)
            fatigue = fatigue_analysis(spec, fields, options.reliability, options.temperature_c);
        for (const auto& q :
             result_quantities(level, spec.has_torque(), summary,
                               stress ? &*stress : nullptr, fatigue ? &*fatigue : nullptr))
            expected[q.label] = q.value;
    } catch (const std::exception& e) {
        return {false, std::string("re-solve failed: ") + e.what()};
    }

    for (const auto& [label, value] : expected) {
        const auto it = got.find(label);
        if (it == got.end()) return {false, "missing result quantity " + label};
        const double gap = rel_gap(it->second.value, value);
        if (gap > opt.rel_tol)
            return {false, "quantity " + label + " off by relative " + format_sig6(gap)};
    }
    for (const auto& [label, q] : got)
        if (expected.find(label) == expected.end())
            return {false, "unexpected result quantity " + label};
    return {true, "grounded"};
}

} // namespace detail

inline RateResult eval_numerical_grounding(const std::vector<ModelOutputRecord>& records,
                                           const GroundingOptions& opt = {}) {
    RateResult res;
    for (const auto& r : records) {
        const auto parsed = harmony::parse(r.completion_text);
        std::optional<Level> lvl;
        bool ok = false;
        std::string detail;
        if (std::holds_alternative<harmony::ParseError>(parsed)) {
            detail = "parse failed: " + std::get<harmony::ParseError>(parsed).message();
        } else {
            const auto& doc = std::get<harmony::HarmonyDoc>(parsed);
            lvl = detail::level_from_doc(doc);
            const auto check = detail::ground_one(doc, opt);
            ok = check.grounded;
            detail = check.detail;
        }
        const std::string bucket = detail::bucket_name(r, lvl);
        res.counts[bucket].first += ok ? 1 : 0;
        res.counts[bucket].second += 1;
        res.diagnostics.push_back({r.id, bucket, ok, detail});
    }
    return detail::finalize(std::move(res));
}

// A completion stops correctly when its final special token is STOP, either
// immediately followed by EOS at end of text or itself at end of text.
inline bool stops_correctly(std::string_view completion) {
    std::vector<std::pair<std::size_t, harmony::Token>> specials;
    std::size_t pos = 0;
    while (auto hit = harmony::find_special(completion, pos)) {
        specials.push_back(*hit);
        pos = hit->first + harmony::surface(hit->second).size();
    }
    if (specials.empty()) return false;
    const auto [last_at, last_tok] = specials.back();
    const std::size_t last_end = last_at + harmony::surface(last_tok).size();
    if (last_tok == harmony::Token::Stop) return last_end == completion.size();
    if (last_tok != harmony::Token::Eos || specials.size() < 2) return false;
    const auto [prev_at, prev_tok] = specials[specials.size() - 2];
    const std::size_t prev_end = prev_at + harmony::surface(prev_tok).size();
    return prev_tok == harmony::Token::Stop && prev_end == last_at &&
           last_end == completion.size();
}

inline RateResult eval_stop_token(const std::vector<ModelOutputRecord>& records) {
    RateResult res;
    for (const auto& r : records) {
        const bool ok = stops_correctly(r.completion_text);
        std::optional<Level> lvl;
        if (const auto parsed = harmony::parse(r.completion_text);
            std::holds_alternative<harmony::HarmonyDoc>(parsed))
            lvl = detail::level_from_doc(std::get<harmony::HarmonyDoc>(parsed));
        const std::string bucket = detail::bucket_name(r, lvl);
        res.counts[bucket].first += ok ? 1 : 0;
        res.counts[bucket].second += 1;
        res.diagnostics.push_back({r.id, bucket, ok, ok ? "stopped" : "missing terminal STOP"});
    }
    return detail::finalize(std::move(res));
}

// exp of the token-weighted mean negative log-probability, pooled across
// all records; invariant under record reordering and concatenation.
inline double perplexity(const std::vector<ModelOutputRecord>& records) {
    require(!records.empty(), "perplexity: no records");
    double nll = 0.0;
    long tokens = 0;
    for (const auto& r : records) {
        require(r.has_logprobs, "perplexity: record " + r.id + " carries no logprobs");
        for (const auto& t : r.tokens) {
            nll -= t.logprob;
            ++tokens;
        }
    }
    require(tokens > 0, "perplexity: no tokens");
    return std::exp(nll / static_cast<double>(tokens));
}

// ---------------------------------------------------------------------------
// Degeneracy
// ---------------------------------------------------------------------------

struct DegeneracyResult {
    bool degenerate = false;
    std::size_t span_begin = 0;
    std::size_t span_end = 0;
};

// True iff some contiguous n-gram repeats at least `repeats` times
// back-to-back.
inline DegeneracyResult detect_degenerate(std::span<const int> ids, int n = 8, int repeats = 4) {
    require(n >= 1 && repeats >= 2, "detect_degenerate: need n >= 1 and repeats >= 2");
    const std::size_t need = static_cast<std::size_t>(n) * static_cast<std::size_t>(repeats);
    if (ids.size() < need) return {};
    for (std::size_t start = 0; start + need <= ids.size(); ++start) {
        bool all = true;
        for (std::size_t k = static_cast<std::size_t>(n); k < need && all; ++k)
            all = ids[start + k] == ids[start + k - static_cast<std::size_t>(n)];
        if (all) return {true, start, start + need};
    }
    return {};
}

// ---------------------------------------------------------------------------
// OOD probes
// ---------------------------------------------------------------------------

struct OodPrompt {
    std::string id;
    std::string category;
    std::string locale;
    std::string text;
};

inline constexpr const char* kOodProbeVersion = "ood-probes-v1";

// Bundled out-of-domain prompts in both locales, shuffled by seed. None of
// them parses as a shaft problem.
inline std::vector<OodPrompt> ood_probe_set(std::uint64_t seed) {
    struct Base {
        const char* category;
        const char* pt;
        const char* en;
    };
    static const std::vector<Base> base = {
        {"history", "Quais foram as principais causas da Revolução Francesa?",
         "What were the main causes of the French Revolution?"},
        {"history", "Descreva o papel de Zumbi dos Palmares na história do Brasil.",
         "Describe the role of Zumbi dos Palmares in Brazilian history."},
        {"history", "Quando terminou a Segunda Guerra Mundial e quais tratados se seguiram?",
         "When did the Second World War end and which treaties followed?"},
        {"literature", "Interprete o simbolismo do rio em Grande Sertão: Veredas.",
         "Interpret the symbolism of the river in Grande Sertão: Veredas."},
        {"literature", "Compare os narradores de Dom Casmurro e Memórias Póstumas.",
         "Compare the narrators of Dom Casmurro and Memórias Póstumas."},
        {"literature", "O que caracteriza o realismo mágico de Gabriel García Márquez?",
         "What characterizes Gabriel García Márquez's magical realism?"},
        {"general_physics", "Explique o efeito fotoelétrico e sua importância histórica.",
         "Explain the photoelectric effect and its historical importance."},
        {"general_physics", "Por que o céu é azul durante o dia e avermelhado no pôr do sol?",
         "Why is the sky blue during the day and reddish at sunset?"},
        {"general_physics", "O que é entropia e como ela se relaciona com a segunda lei?",
         "What is entropy and how does it relate to the second law?"},
        {"geography", "Quais são os maiores desertos do mundo e onde ficam?",
         "What are the largest deserts in the world and where are they?"},
        {"geography", "Descreva o regime de cheias do rio Amazonas.",
         "Describe the flood regime of the Amazon river."},
        {"music", "Qual é a diferença entre compasso binário e ternário?",
         "What is the difference between duple and triple meter?"},
        {"music", "Explique a forma sonata no período clássico.",
         "Explain sonata form in the classical period."},
        {"cooking", "Como se prepara um pão de fermentação natural?",
         "How do you prepare a naturally leavened bread?"},
        {"cooking", "Quais temperos são típicos da culinária baiana?",
         "Which seasonings are typical of Bahian cuisine?"},
        {"mathematics", "Prove que existem infinitos números primos.",
         "Prove that there are infinitely many prime numbers."},
        {"mathematics", "O que é a conjectura de Collatz?", "What is the Collatz conjecture?"},
        {"current_affairs", "Como funcionam as eleições parlamentares em sistemas proporcionais?",
         "How do parliamentary elections work in proportional systems?"},
    };
    std::vector<OodPrompt> out;
    int idx = 0;
    for (const auto& b : base) {
        out.push_back({"ood-pt-" + std::to_string(idx), b.category, "pt-BR", b.pt});
        out.push_back({"ood-en-" + std::to_string(idx), b.category, "en", b.en});
        ++idx;
    }
    SplitMix64 rng(substream_seed(seed, kOodProbeVersion));
    seeded_shuffle(out, rng);
    return out;
}

// ---------------------------------------------------------------------------
// Formal calculators
// ---------------------------------------------------------------------------

struct HarmDomain {
    std::string name;
    double p_q = 0.0;     // query probability mass
    double epsilon = 0.0; // error rate in [0,1]
    double harm = 0.0;    // harm per error, >= 0
    bool refuses = false;
};

struct HarmProfile {
    std::vector<HarmDomain> domains;

    void validate() const {
        require(!domains.empty(), "harm profile: at least one domain required");
        double total = 0.0;
        for (const auto& d : domains) {
            require(d.p_q >= 0.0, "harm profile: probabilities must be >= 0");
            require(d.epsilon >= 0.0 && d.epsilon <= 1.0,
                    "harm profile: error rates must lie in [0,1]");
            require(d.harm >= 0.0, "harm profile: harms must be >= 0");
            total += d.p_q;
        }
        require(std::abs(total - 1.0) <= 1e-9, "harm profile: probabilities must sum to 1");
    }

    static HarmProfile from_json(const njson& j) {
        HarmProfile p;
        for (const auto& d : j.at("domains"))
            p.domains.push_back({d.at("name").get<std::string>(), d.at("p_q").get<double>(),
                                 d.at("epsilon").get<double>(), d.at("harm").get<double>(),
                                 d.value("refuses", false)});
        p.validate();
        return p;
    }
};

// E[H] = sum over non-refusing domains of P(q in d) * epsilon_d * H_d.
// Refusing a domain removes its (non-negative) term.
inline double expected_harm(const HarmProfile& profile) {
    profile.validate();
    double e = 0.0;
    for (const auto& d : profile.domains)
        if (!d.refuses) e += d.p_q * d.epsilon * d.harm;
    return e;
}

struct AllocationProfile {
    std::vector<std::string> names;
    std::vector<double> allocation;

    double total() const {
        double a = 0.0;
        for (double f : allocation) a += f;
        return a;
    }

    void validate() const {
        require(!allocation.empty(), "allocation: at least one domain required");
        require(names.size() == allocation.size(), "allocation: names/values length mismatch");
        for (double f : allocation) require(f >= 0.0, "allocation: masses must be >= 0");
        require(total() > 0.0, "allocation: total mass must be positive");
    }

    static AllocationProfile from_json(const njson& j) {
        AllocationProfile p;
        for (const auto& d : j.at("domains")) {
            p.names.push_back(d.at("name").get<std::string>());
            p.allocation.push_back(d.at("allocation").get<double>());
        }
        p.validate();
        return p;
    }
};

struct MonotropyResult {
    long k_min = 0;
    double ratio = 0.0;
    bool is_monotropic = false;
};

// Smallest top-k (by allocation, ties by stable input order) capturing at
// least (1 - delta) of the total; monotropic when k/|D| <= rho.
inline MonotropyResult monotropy_index(const AllocationProfile& alloc, double delta, double rho) {
    alloc.validate();
    require(delta > 0.0 && delta < 1.0, "monotropy: delta must lie in (0,1)");
    require(rho > 0.0 && rho < 1.0, "monotropy: rho must lie in (0,1)");
    std::vector<std::size_t> order(alloc.allocation.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return alloc.allocation[a] > alloc.allocation[b];
    });
    const double target = (1.0 - delta) * alloc.total();
    double acc = 0.0;
    MonotropyResult res;
    for (std::size_t i = 0; i < order.size(); ++i) {
        acc += alloc.allocation[order[i]];
        if (acc >= target) {
            res.k_min = static_cast<long>(i) + 1;
            break;
        }
    }
    if (res.k_min == 0) res.k_min = static_cast<long>(order.size());
    res.ratio = static_cast<double>(res.k_min) / static_cast<double>(order.size());
    res.is_monotropic = res.ratio <= rho;
    return res;
}

// ---------------------------------------------------------------------------
// Architecture parameter count
// ---------------------------------------------------------------------------

struct ArchConfig {
    int layers = 0;
    int heads = 1;
    int d_model = 0;
    int d_ff = 0;
    int vocab = 0;
    int max_seq = 0;
    bool tied_output = false;
    bool learned_positions = true;

    void validate() const {
        require(layers >= 0 && d_model > 0 && d_ff > 0 && vocab > 0 && max_seq > 0 && heads > 0,
                "arch: dimensions must be positive");
        require(d_model % heads == 0, "arch: d_model must be divisible by heads");
    }

    static ArchConfig from_json(const njson& j) {
        ArchConfig a;
        a.layers = j.at("layers").get<int>();
        a.heads = j.at("heads").get<int>();
        a.d_model = j.at("d_model").get<int>();
        a.d_ff = j.at("d_ff").get<int>();
        a.vocab = j.at("vocab").get<int>();
        a.max_seq = j.at("max_seq").get<int>();
        a.tied_output = j.at("tied_output").get<bool>();
        a.learned_positions = j.at("learned_positions").get<bool>();
        a.validate();
        return a;
    }
};

// Term-by-term dense transformer count:
//   token embedding   vocab * d
//   positions         max_seq * d           (when learned)
//   per layer         attention 4d^2 + 4d, two layer norms 2*(2d),
//                     feed-forward 2*d*d_ff + d_ff + d
//   final norm        2d
//   output head       vocab * d             (when untied, no bias)
inline njson param_breakdown(const ArchConfig& a) {
    a.validate();
    const long long d = a.d_model;
    const long long token_embedding = static_cast<long long>(a.vocab) * d;
    const long long position_embedding =
        a.learned_positions ? static_cast<long long>(a.max_seq) * d : 0;
    const long long attention = 4 * d * d + 4 * d;
    const long long layer_norms = 2 * (2 * d);
    const long long feed_forward = 2 * d * a.d_ff + a.d_ff + d;
    const long long per_layer = attention + layer_norms + feed_forward;
    const long long layers_total = per_layer * a.layers;
    const long long final_norm = 2 * d;
    const long long output_head = a.tied_output ? 0 : static_cast<long long>(a.vocab) * d;
    const long long total =
        token_embedding + position_embedding + layers_total + final_norm + output_head;
    return njson{{"token_embedding", token_embedding},
                 {"position_embedding", position_embedding},
                 {"per_layer", njson{{"attention", attention},
                                     {"layer_norms", layer_norms},
                                     {"feed_forward", feed_forward},
                                     {"total", per_layer}}},
                 {"layers", a.layers},
                 {"layers_total", layers_total},
                 {"final_norm", final_norm},
                 {"output_head", output_head},
                 {"total", total}};
}

inline long long param_count(const ArchConfig& a) {
    return param_breakdown(a).at("total").get<long long>();
}

} // namespace enedina::evalkit
