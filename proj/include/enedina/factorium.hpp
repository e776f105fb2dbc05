#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "enedina/curriculum.hpp"
#include "enedina/harmony.hpp"
#include "enedina/record.hpp"
#include "enedina/rng.hpp"
#include "enedina/tokenizer.hpp"

namespace enedina::factorium {

// The dataset factory: parameter sampling, per-level record generation,
// verification gating, BPE vocabulary training over the accepted corpus,
// difficulty scoring, sharding, and the manifest. (config, seed) fully
// determines every emitted byte.

// Representative steel catalog the sampler draws from. Values are catalog
// constants, not fitted data.
struct MaterialEntry {
    Material material;
};

inline const std::vector<Material>& steel_table() {
    static const std::vector<Material> table = {
        {"AISI 1020 HR", 2.05e11, 0.29, 2.10e8, 3.80e8, SurfaceFinish::HotRolled},
        {"AISI 1020 CD", 2.05e11, 0.29, 3.90e8, 4.70e8, SurfaceFinish::Machined},
        {"AISI 1045 HR", 2.05e11, 0.29, 3.10e8, 5.70e8, SurfaceFinish::HotRolled},
        {"AISI 1045 CD", 2.05e11, 0.29, 5.30e8, 6.30e8, SurfaceFinish::Machined},
        {"AISI 1050 G",  2.07e11, 0.29, 5.80e8, 6.90e8, SurfaceFinish::Ground},
        {"AISI 4140 QT", 2.05e11, 0.29, 6.55e8, 9.50e8, SurfaceFinish::Machined},
        {"AISI 4340 QT", 2.07e11, 0.29, 1.180e9, 1.280e9, SurfaceFinish::Machined},
        {"AISI 4340 HT", 2.07e11, 0.29, 1.340e9, 1.470e9, SurfaceFinish::Ground},
    };
    return table;
}

struct GenerationConfig {
    long bachelor_count = 200;
    long master_count = 200;
    long doctor_count = 200;
    std::uint64_t seed = 42;
    Locale locale = Locale::PtBr;
    long shard_size = 100;
    int n_grid = 257;
    int bpe_target = bpe::kDefaultBpeTarget; // smaller corpora may lower this

    // Parameter ranges.
    double d_min_m = 0.02;
    double d_max_m = 0.10;
    double L_min_m = 0.3;
    double L_max_m = 2.0;
    double w_ratio_min = 2e-5; // target max deflection / L
    double w_ratio_max = 8e-3;
    double yield_target_min = 0.8; // target yield safety factor
    double yield_target_max = 10.0;
    double tau_ratio_min = 0.1; // torsion / bending stress ratio
    double tau_ratio_max = 0.6;
    double temperature_min_c = 20.0;
    double temperature_max_c = 120.0;

    ToleranceProfile tolerances;
    int max_attempts_factor = 10;

    long count_for(Level l) const {
        switch (l) {
            case Level::Bachelor: return bachelor_count;
            case Level::Master: return master_count;
            case Level::Doctor: return doctor_count;
        }
        return 0;
    }

    void validate() const {
        require(bachelor_count >= 0 && master_count >= 0 && doctor_count >= 0,
                "config: counts must be >= 0");
        require(shard_size > 0, "config: shard_size must be positive");
        require(n_grid >= 16, "config: n_grid must be >= 16");
        require(bpe_target >= bpe::kByteAlphabet, "config: bpe_target below byte alphabet");
        require(d_min_m > 0.0 && d_min_m < d_max_m, "config: degenerate diameter range");
        require(d_min_m >= kMarinDiameterMin && d_max_m <= kMarinDiameterMax,
                "config: diameter range outside Marin size-factor validity");
        require(L_min_m > 0.0 && L_min_m < L_max_m, "config: degenerate length range");
        require(w_ratio_min > 0.0 && w_ratio_min < w_ratio_max, "config: degenerate w ratio range");
        require(yield_target_min > 0.0 && yield_target_min < yield_target_max,
                "config: degenerate yield target range");
        require(tau_ratio_min > 0.0 && tau_ratio_min < tau_ratio_max,
                "config: degenerate torsion ratio range");
        require(temperature_min_c < temperature_max_c, "config: degenerate temperature range");
        require(max_attempts_factor >= 1, "config: max_attempts_factor must be >= 1");
    }

    njson to_json() const {
        return njson{{"bachelor_count", bachelor_count},
                     {"master_count", master_count},
                     {"doctor_count", doctor_count},
                     {"seed", seed},
                     {"locale", to_string(locale)},
                     {"shard_size", shard_size},
                     {"n_grid", n_grid},
                     {"bpe_target", bpe_target},
                     {"d_min_m", d_min_m},
                     {"d_max_m", d_max_m},
                     {"L_min_m", L_min_m},
                     {"L_max_m", L_max_m},
                     {"w_ratio_min", w_ratio_min},
                     {"w_ratio_max", w_ratio_max},
                     {"yield_target_min", yield_target_min},
                     {"yield_target_max", yield_target_max},
                     {"tau_ratio_min", tau_ratio_min},
                     {"tau_ratio_max", tau_ratio_max},
                     {"temperature_min_c", temperature_min_c},
                     {"temperature_max_c", temperature_max_c},
                     {"tolerances", tolerances.to_json()},
                     {"max_attempts_factor", max_attempts_factor}};
    }
};

inline std::string config_hash_hex(const GenerationConfig& cfg) {
    const std::uint64_t h = fnv1a(cfg.to_json().dump());
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Parameter sampling
// ---------------------------------------------------------------------------

struct SampleDraw {
    ShaftSpec spec;
    AnalysisOptions options;
};

// Draw order is fixed; every sample is reproducible from its substream
// alone. Geometry first, then the load pattern with unit magnitudes; the
// pattern is solved once and all magnitudes are scaled so both the
// deflection target and the yield-safety target hold, which keeps the
// plausibility rejection rate near zero by construction.
inline SampleDraw sample_parameters(Level level, const GenerationConfig& cfg, SplitMix64& rng,
                                    std::string id) {
    SampleDraw out;
    ShaftSpec& spec = out.spec;
    spec.id = std::move(id);
    spec.material = steel_table()[static_cast<std::size_t>(rng.below(steel_table().size()))];

    spec.diameter_m = rng.log_uniform(cfg.d_min_m, cfg.d_max_m);
    double L = 0.0;
    for (int tries = 0; tries < 1000; ++tries) {
        L = rng.uniform(cfg.L_min_m, cfg.L_max_m);
        if (spec.diameter_m < L / 5.0) break;
    }
    if (spec.diameter_m >= L / 5.0)
        L = rng.uniform(std::max(cfg.L_min_m, 5.0 * spec.diameter_m), cfg.L_max_m);
    spec.length_m = L;

    const std::size_t n_loads = 1 + rng.below(3);
    for (std::size_t i = 0; i < n_loads; ++i) {
        PointLoad p;
        p.position_m = rng.uniform(0.05 * L, 0.95 * L);
        p.magnitude_n = rng.uniform(0.2, 1.0); // relative pattern, scaled below
        spec.loads.push_back(p);
    }
    std::sort(spec.loads.begin(), spec.loads.end(),
              [](const PointLoad& a, const PointLoad& b) { return a.position_m < b.position_m; });

    const double w_ratio = rng.log_uniform(cfg.w_ratio_min, cfg.w_ratio_max);
    const double yield_target = rng.log_uniform(cfg.yield_target_min, cfg.yield_target_max);
    double tau_ratio = 0.0;
    double torque_lo = 0.0, torque_hi = 0.0;
    if (level != Level::Bachelor) {
        tau_ratio = rng.uniform(cfg.tau_ratio_min, cfg.tau_ratio_max);
        for (int tries = 0; tries < 1000; ++tries) {
            torque_lo = rng.uniform(0.05 * L, 0.95 * L);
            torque_hi = rng.uniform(0.05 * L, 0.95 * L);
            if (torque_lo > torque_hi) std::swap(torque_lo, torque_hi);
            if (torque_hi - torque_lo >= 0.1 * L) break;
        }
        if (torque_hi - torque_lo < 0.1 * L) {
            torque_lo = 0.2 * L;
            torque_hi = 0.8 * L;
        }
    }
    if (level == Level::Doctor) {
        static constexpr Reliability rel[3] = {Reliability::R50, Reliability::R90,
                                               Reliability::R99};
        out.options.reliability = rel[rng.below(3)];
        out.options.temperature_c = rng.uniform(cfg.temperature_min_c, cfg.temperature_max_c);
    }

    // Solve the unit pattern, then scale.
    const BeamFields unit = solve(spec, 65);
    double w_unit = 0.0, m_unit = 0.0;
    for (std::size_t i = 0; i < unit.size(); ++i) {
        w_unit = std::max(w_unit, std::abs(unit.w_m[i]));
        m_unit = std::max(m_unit, std::abs(unit.M_nm[i]));
    }
    const double sigma_unit = bending_stress(m_unit, spec.diameter_m);
    const double s_deflection = w_ratio * L / w_unit;
    // 1.5 covers the worst von Mises amplification at tau_ratio <= 0.6.
    const double s_yield = spec.material.Sy_pa / (yield_target * 1.5 * sigma_unit);
    const double scale = std::min(s_deflection, s_yield);
    for (auto& p : spec.loads) p.magnitude_n *= scale;

    if (level != Level::Bachelor) {
        const double torque = 2.0 * tau_ratio * (m_unit * scale);
        spec.torque_in = TorquePoint{torque_lo, torque};
        spec.torque_out = TorquePoint{torque_hi, -torque};
    }
    spec.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Generation pipeline
// ---------------------------------------------------------------------------

struct RejectionEntry {
    std::string id;
    Level level = Level::Bachelor;
    std::string reason; // "verification" or "token_limit"
    njson verification;

    njson to_json() const {
        return njson{{"id", id},
                     {"level", to_string(level)},
                     {"reason", reason},
                     {"verification", verification}};
    }
};

struct GenerationOutput {
    std::filesystem::path out_dir;
    njson manifest;
    std::vector<DatasetRecord> records; // in shard order
    long rejected = 0;
};

inline std::string failing_levels(const njson& verification) {
    std::string out;
    if (!verification.is_object() || !verification.contains("levels")) return "none";
    for (const auto& l : verification.at("levels")) {
        if (!l.at("passed").get<bool>()) {
            if (!out.empty()) out += ",";
            out += l.at("level").get<std::string>();
        }
    }
    return out.empty() ? "none" : out;
}

namespace detail {

struct Attempt {
    bool accepted = false;
    DatasetRecord record;
    RejectionEntry rejection;
};

inline Attempt process_attempt(const GenerationConfig& cfg, Level level, long index) {
    Attempt a;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "%c-%06ld", level_letter(level), index);
    SplitMix64 rng(substream_seed(cfg.seed, "record", static_cast<std::uint64_t>(level),
                                  static_cast<std::uint64_t>(index)));
    SampleDraw draw = sample_parameters(level, cfg, rng, idbuf);

    DatasetRecord rec;
    rec.id = draw.spec.id;
    rec.level = level;
    rec.locale = cfg.locale;
    rec.spec = std::move(draw.spec);
    rec.options = draw.options;

    const BeamFields fields = solve(rec.spec, cfg.n_grid);
    rec.summary = summarize(rec.spec, fields, cfg.n_grid);
    if (level != Level::Bachelor) rec.stress = yield_analysis(rec.spec, fields);
    if (level == Level::Doctor)
        rec.fatigue = fatigue_analysis(rec.spec, fields, rec.options.reliability,
                                       rec.options.temperature_c);

    const StressReport* stress = rec.stress ? &*rec.stress : nullptr;
    rec.verification = verify_all(rec.spec, fields, cfg.tolerances, stress);
    if (!rec.verification.overall) {
        a.accepted = false;
        a.rejection = {rec.id, level, "verification", rec.verification.to_json()};
        return a;
    }
    rec.harmony_text = harmony::render(rec);
    a.accepted = true;
    a.record = std::move(rec);
    return a;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open for writing: " + path.string());
    out << content;
    require(out.good(), "write failed: " + path.string());
}

} // namespace detail

// Generates the dataset into out_dir: JSONL shards named
// shard-{level}-{index:05}.jsonl, a rejection log, the trained vocabulary,
// and manifest.json. `jobs` parallelizes record generation across per-record
// substreams without changing any output byte.
inline GenerationOutput generate_dataset(const GenerationConfig& cfg,
                                         const std::filesystem::path& out_dir, int jobs = 1) {
    cfg.validate();
    require(jobs >= 1, "generate_dataset: jobs must be >= 1");
    std::filesystem::create_directories(out_dir);

    GenerationOutput out;
    out.out_dir = out_dir;
    std::vector<RejectionEntry> rejections;
    std::map<std::string, long> rejection_breakdown;

    std::array<std::vector<DatasetRecord>, kLevelCount> accepted;
    std::array<long, kLevelCount> attempts_used{};

    for (int li = 0; li < kLevelCount; ++li) {
        const Level level = static_cast<Level>(li);
        const long target = cfg.count_for(level);
        if (target == 0) continue;
        const long cap = target * cfg.max_attempts_factor + 8;
        long next_index = 0;
        std::vector<RejectionEntry> pending_rejections;
        while (static_cast<long>(accepted[li].size()) < target && next_index < cap) {
            const long chunk =
                std::min<long>(std::max<long>(jobs, 16), cap - next_index);
            std::vector<detail::Attempt> results(static_cast<std::size_t>(chunk));
            if (jobs == 1) {
                for (long k = 0; k < chunk; ++k)
                    results[static_cast<std::size_t>(k)] =
                        detail::process_attempt(cfg, level, next_index + k);
            } else {
                std::atomic<long> cursor{0};
                std::vector<std::thread> pool;
                const int nt = std::min<long>(jobs, chunk);
                pool.reserve(static_cast<std::size_t>(nt));
                for (int t = 0; t < nt; ++t) {
                    pool.emplace_back([&] {
                        while (true) {
                            const long k = cursor.fetch_add(1);
                            if (k >= chunk) return;
                            results[static_cast<std::size_t>(k)] =
                                detail::process_attempt(cfg, level, next_index + k);
                        }
                    });
                }
                for (auto& t : pool) t.join();
            }
            for (long k = 0; k < chunk; ++k) {
                auto& r = results[static_cast<std::size_t>(k)];
                if (static_cast<long>(accepted[li].size()) >= target) break;
                attempts_used[li] = next_index + k + 1;
                if (r.accepted) {
                    accepted[li].push_back(std::move(r.record));
                } else {
                    pending_rejections.push_back(std::move(r.rejection));
                }
            }
            next_index += chunk;
        }
        if (static_cast<long>(accepted[li].size()) < target) {
            std::string msg = "generate: level " + std::string(to_string(level)) +
                              " exhausted " + std::to_string(attempts_used[li]) +
                              " attempts with only " + std::to_string(accepted[li].size()) +
                              "/" + std::to_string(target) + " accepted";
            throw std::runtime_error(msg);
        }
        for (auto& rej : pending_rejections) {
            rejection_breakdown[rej.reason + ":" + failing_levels(rej.verification)] += 1;
            rejections.push_back(std::move(rej));
        }
    }

    // Tokenizer pass over the accepted corpus, in deterministic order.
    std::vector<std::string> corpus;
    for (const auto& level_records : accepted)
        for (const auto& r : level_records) corpus.push_back(r.harmony_text);

    njson tokenizer_info = nullptr;
    if (!corpus.empty()) {
        bpe::Vocabulary vocab = bpe::train_bpe(corpus, cfg.bpe_target);
        bpe::save_vocabulary(vocab, out_dir / "vocab");
        long over_limit = 0;
        for (auto& level_records : accepted) {
            for (auto& r : level_records) {
                r.token_count = static_cast<long>(bpe::encode(vocab, r.harmony_text).size());
                if (r.token_count > bpe::kMaxSequenceTokens) ++over_limit;
            }
            std::erase_if(level_records, [&](const DatasetRecord& r) {
                if (r.token_count > bpe::kMaxSequenceTokens) {
                    rejections.push_back(
                        {r.id, r.level, "token_limit", r.verification.to_json()});
                    rejection_breakdown["token_limit"] += 1;
                    return true;
                }
                return false;
            });
        }
        if (over_limit > 0) {
            for (int li = 0; li < kLevelCount; ++li) {
                require(static_cast<long>(accepted[li].size()) ==
                            cfg.count_for(static_cast<Level>(li)),
                        "generate: token-limit rejections left a level short; rerun with a "
                        "larger attempt budget");
            }
        }
        tokenizer_info = njson{{"vocab_size", static_cast<int>(vocab.size())},
                               {"bpe_size", vocab.bpe_size},
                               {"merges", static_cast<long>(vocab.merges.size())},
                               {"merges_hash", hash_hex(bpe::merges_hash(vocab))},
                               {"max_sequence_tokens", bpe::kMaxSequenceTokens}};
    }

    // Difficulty = within-level token-count quantile (rank order, ties by id).
    for (auto& level_records : accepted) {
        const std::size_t n = level_records.size();
        if (n == 0) continue;
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (level_records[a].token_count != level_records[b].token_count)
                return level_records[a].token_count < level_records[b].token_count;
            return level_records[a].id < level_records[b].id;
        });
        for (std::size_t rank = 0; rank < n; ++rank)
            level_records[order[rank]].difficulty =
                n == 1 ? 0.0 : static_cast<double>(rank) / static_cast<double>(n - 1);
    }

    // Shards.
    njson records_index = njson::array();
    njson level_stats = njson::object();
    for (int li = 0; li < kLevelCount; ++li) {
        const Level level = static_cast<Level>(li);
        auto& level_records = accepted[li];
        long tokens_total = 0;
        std::vector<long> token_counts;
        for (std::size_t i = 0; i < level_records.size(); i += cfg.shard_size) {
            char name[64];
            std::snprintf(name, sizeof name, "shard-%s-%05zu.jsonl", to_string(level),
                          i / cfg.shard_size);
            std::string content;
            for (std::size_t k = i;
                 k < std::min(level_records.size(), i + static_cast<std::size_t>(cfg.shard_size));
                 ++k) {
                content += level_records[k].to_json().dump();
                content += '\n';
                records_index.push_back(njson{{"id", level_records[k].id},
                                              {"level", to_string(level)},
                                              {"shard", name},
                                              {"token_count", level_records[k].token_count},
                                              {"difficulty", level_records[k].difficulty}});
            }
            detail::write_text_file(out_dir / name, content);
        }
        for (const auto& r : level_records) {
            tokens_total += r.token_count;
            token_counts.push_back(r.token_count);
        }
        std::sort(token_counts.begin(), token_counts.end());
        auto quantile = [&token_counts](double q) -> long {
            if (token_counts.empty()) return 0;
            const std::size_t idx = static_cast<std::size_t>(
                q * static_cast<double>(token_counts.size() - 1) + 0.5);
            return token_counts[std::min(idx, token_counts.size() - 1)];
        };
        level_stats[to_string(level)] =
            njson{{"requested", cfg.count_for(level)},
                  {"accepted", static_cast<long>(level_records.size())},
                  {"attempts", attempts_used[li]},
                  {"tokens_total", tokens_total},
                  {"token_count_quantiles", njson{{"q0", quantile(0.0)},
                                                  {"q25", quantile(0.25)},
                                                  {"q50", quantile(0.5)},
                                                  {"q75", quantile(0.75)},
                                                  {"q100", quantile(1.0)}}}};
    }

    // Rejection log.
    {
        std::string content;
        for (const auto& rej : rejections) {
            content += rej.to_json().dump();
            content += '\n';
        }
        detail::write_text_file(out_dir / "rejections.jsonl", content);
    }

    njson rejections_j = njson::object();
    for (const auto& [k, v] : rejection_breakdown) rejections_j[k] = v;

    njson manifest{{"schema_version", 1},
                   {"seed", cfg.seed},
                   {"locale", to_string(cfg.locale)},
                   {"config", cfg.to_json()},
                   {"config_hash", config_hash_hex(cfg)},
                   {"template_hash", hash_hex(template_hash())},
                   {"tokenizer", tokenizer_info},
                   {"levels", level_stats},
                   {"rejected", static_cast<long>(rejections.size())},
                   {"rejection_breakdown", rejections_j},
                   {"records", records_index}};
    detail::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    out.manifest = std::move(manifest);
    out.rejected = static_cast<long>(rejections.size());
    for (auto& level_records : accepted)
        for (auto& r : level_records) out.records.push_back(std::move(r));
    return out;
}

// ---------------------------------------------------------------------------
// Stats
// ---------------------------------------------------------------------------

// Recomputes per-level counts, token totals, and token histograms from the
// shards and cross-checks them against the manifest.
inline njson dataset_stats(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    require(in.good(), "stats: cannot read manifest " + manifest_path.string());
    const njson manifest = njson::parse(in);
    const std::filesystem::path dir = manifest_path.parent_path();

    std::map<std::string, long> counts, tokens;
    std::map<std::string, std::map<long, long>> histograms; // bucket start -> count
    constexpr long kBucket = 512;
    std::set<std::string> shard_names;
    for (const auto& e : manifest.at("records"))
        shard_names.insert(e.at("shard").get<std::string>());
    long invalid_verification = 0;
    for (const auto& name : shard_names) {
        std::ifstream shard(dir / name, std::ios::binary);
        require(shard.good(), "stats: cannot read shard " + name);
        std::string line;
        while (std::getline(shard, line)) {
            if (line.empty()) continue;
            const njson rec = njson::parse(line);
            const std::string level = rec.at("level").get<std::string>();
            const long tc = rec.at("token_count").get<long>();
            counts[level] += 1;
            tokens[level] += tc;
            histograms[level][(tc / kBucket) * kBucket] += 1;
            if (!rec.at("verification").at("overall").get<bool>()) ++invalid_verification;
        }
    }

    bool consistent = invalid_verification == 0;
    njson levels = njson::object();
    long total_count = 0, total_tokens = 0;
    for (const char* level : {"bachelor", "master", "doctor"}) {
        const long c = counts.count(level) ? counts[level] : 0;
        const long t = tokens.count(level) ? tokens[level] : 0;
        total_count += c;
        total_tokens += t;
        njson hist = njson::object();
        if (histograms.count(level))
            for (const auto& [bucket, n] : histograms[level])
                hist[std::to_string(bucket)] = n;
        const auto& m = manifest.at("levels");
        const long manifest_accepted =
            m.contains(level) ? m.at(level).at("accepted").get<long>() : 0;
        const long manifest_tokens =
            m.contains(level) ? m.at(level).at("tokens_total").get<long>() : 0;
        if (manifest_accepted != c || manifest_tokens != t) consistent = false;
        levels[level] = njson{{"samples", c},
                              {"tokens", t},
                              {"manifest_samples", manifest_accepted},
                              {"manifest_tokens", manifest_tokens},
                              {"token_histogram", hist}};
    }
    return njson{{"schema_version", 1},
                 {"levels", levels},
                 {"total", njson{{"samples", total_count}, {"tokens", total_tokens}}},
                 {"rejected", manifest.at("rejected")},
                 {"rejection_breakdown", manifest.at("rejection_breakdown")},
                 {"consistent", consistent}};
}

// Record metadata for the curriculum, straight from a manifest.
inline std::vector<curriculum::RecordMeta> manifest_record_meta(const njson& manifest) {
    std::vector<curriculum::RecordMeta> out;
    for (const auto& e : manifest.at("records")) {
        curriculum::RecordMeta m;
        m.id = e.at("id").get<std::string>();
        m.level = level_from_string(e.at("level").get<std::string>());
        m.token_count = e.at("token_count").get<long>();
        m.difficulty = e.at("difficulty").get<double>();
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace enedina::factorium
