// Command-line front end for the shaft-analysis data factory: solving,
// dataset generation, verification, format round-trips, tokenizer
// train/encode/decode, curriculum streams, evaluation, and the formal
// calculators. Exit codes: 0 success, 1 input/validation failure, 2
// internal error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include <enedina/curriculum.hpp>
#include <enedina/evalkit.hpp>
#include <enedina/factorium.hpp>
#include <enedina/harmony.hpp>
#include <enedina/record.hpp>
#include <enedina/solver.hpp>
#include <enedina/tokenizer.hpp>

namespace {

using namespace enedina;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

njson read_json_file(const std::string& path) {
    try {
        return njson::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

void emit(const njson& j) { std::cout << j.dump(2) << "\n"; }

struct CommonFlags {
    bool json = false;
    std::uint64_t seed = 42;
    std::string locale = "pt-BR";
    std::string out_dir = "dataset-out";
    int jobs = 1;
    std::string tolerance_profile = "default";
};

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve(const std::string& spec_path, int n_grid, bool use_oracle, bool json) {
    const ShaftSpec spec = shaft_spec_from_json(read_json_file(spec_path));
    const BeamFields fields = use_oracle ? numerical_oracle(spec, std::max(n_grid, 256))
                                         : solve(spec, n_grid);
    if (json) {
        emit(to_json(fields));
        return 0;
    }
    const FieldsSummary s = summarize(spec, fields, n_grid);
    std::printf("shaft %s  L = %s m  d = %s m  (%zu grid points)\n", spec.id.c_str(),
                format_sig6(spec.length_m).c_str(), format_sig6(spec.diameter_m).c_str(),
                fields.size());
    std::printf("  R1      = %s N\n", format_sig6(s.R1_n).c_str());
    std::printf("  R2      = %s N\n", format_sig6(s.R2_n).c_str());
    std::printf("  V_max   = %s N\n", format_sig6(s.V_max_n).c_str());
    std::printf("  M_max   = %s N.m at x = %s m\n", format_sig6(s.M_max_nm).c_str(),
                format_sig6(s.x_at_M_max_m).c_str());
    std::printf("  w_max   = %s m at x = %s m\n", format_sig6(s.w_max_m).c_str(),
                format_sig6(s.x_at_w_max_m).c_str());
    std::printf("  theta_max = %s rad\n", format_sig6(s.theta_max_rad).c_str());
    if (spec.has_torque()) std::printf("  T       = %s N.m\n", format_sig6(s.T_nm).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int cmd_generate(const factorium::GenerationConfig& cfg, const CommonFlags& common) {
    const auto out = factorium::generate_dataset(cfg, common.out_dir, common.jobs);
    if (common.json) {
        emit(out.manifest);
        return 0;
    }
    std::printf("dataset written to %s\n", common.out_dir.c_str());
    for (const auto& [level, stats] : out.manifest.at("levels").items())
        std::printf("  %-9s accepted %ld / requested %ld  (%ld tokens)\n", level.c_str(),
                    stats.at("accepted").get<long>(), stats.at("requested").get<long>(),
                    stats.at("tokens_total").get<long>());
    std::printf("  rejected  %ld (see rejections.jsonl)\n", out.rejected);
    return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int cmd_verify(const std::string& shard_path, const ToleranceProfile& profile, bool json) {
    std::ifstream in(shard_path, std::ios::binary);
    require(in.good(), "cannot read shard: " + shard_path);
    std::string line;
    long line_no = 0, failed = 0, checked = 0;
    njson failures = njson::array();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::string id = "?";
        std::string problem;
        try {
            const njson j = njson::parse(line);
            DatasetRecord rec = DatasetRecord::from_json(j);
            id = rec.id;
            const BeamFields fields = solve(rec.spec, rec.summary.n_grid);
            const StressReport* stress = rec.stress ? &*rec.stress : nullptr;
            const VerificationReport fresh = verify_all(rec.spec, fields, profile, stress);
            if (!fresh.overall) problem = "verification failed on re-solve";
            if (problem.empty() && !rec.verification.overall)
                problem = "stored verification marks record invalid";
            if (problem.empty()) {
                const auto parsed = harmony::parse(rec.harmony_text);
                if (std::holds_alternative<harmony::ParseError>(parsed))
                    problem = "harmony text does not parse: " +
                              std::get<harmony::ParseError>(parsed).message();
                else if (harmony::render(rec) != rec.harmony_text)
                    problem = "harmony text is not the canonical rendering";
            }
            if (problem.empty() && rec.token_count > bpe::kMaxSequenceTokens)
                problem = "token_count exceeds the sequence limit";
        } catch (const std::exception& e) {
            problem = e.what();
        }
        ++checked;
        if (!problem.empty()) {
            ++failed;
            failures.push_back(njson{{"line", line_no}, {"id", id}, {"problem", problem}});
        }
    }
    if (json) {
        emit(njson{{"schema_version", 1},
                   {"shard", shard_path},
                   {"records", checked},
                   {"failed", failed},
                   {"failures", failures}});
    } else {
        std::printf("%s: %ld records, %ld failed\n", shard_path.c_str(), checked, failed);
        for (const auto& f : failures)
            std::printf("  line %ld (%s): %s\n", f.at("line").get<long>(),
                        f.at("id").get<std::string>().c_str(),
                        f.at("problem").get<std::string>().c_str());
    }
    return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// render / parse
// ---------------------------------------------------------------------------

int cmd_render(const std::string& record_path) {
    const DatasetRecord rec = DatasetRecord::from_json(read_json_file(record_path));
    std::cout << harmony::render(rec);
    return 0;
}

int cmd_parse(const std::string& text_path, bool json) {
    const std::string text = read_file(text_path);
    const auto res = harmony::parse(text);
    if (std::holds_alternative<harmony::ParseError>(res)) {
        const auto& e = std::get<harmony::ParseError>(res);
        if (json)
            emit(njson{{"ok", false},
                       {"error", e.message()},
                       {"offset", e.offset},
                       {"expected", e.expected},
                       {"found", e.found}});
        else
            std::fprintf(stderr, "parse error in %s: %s\n", text_path.c_str(),
                         e.message().c_str());
        return 1;
    }
    const auto& doc = std::get<harmony::HarmonyDoc>(res);
    njson quantities = njson::object();
    const auto extracted = harmony::extract_quantities(doc);
    if (std::holds_alternative<std::map<std::string, harmony::Quantity>>(extracted))
        for (const auto& [label, q] :
             std::get<std::map<std::string, harmony::Quantity>>(extracted))
            quantities[label] = njson{{"value", q.value}, {"unit", q.unit}};
    if (json) {
        njson channels = njson::object();
        static const char* names[5] = {"analysis", "reasoning", "code", "verification",
                                       "result"};
        for (int i = 0; i < 5; ++i) channels[names[i]] = doc.channels[i].size();
        emit(njson{{"ok", true},
                   {"prompt_bytes", doc.prompt.size()},
                   {"channel_bytes", channels},
                   {"quantities", quantities}});
    } else {
        std::printf("%s: valid (%zu-byte prompt, %zu quantities)\n", text_path.c_str(),
                    doc.prompt.size(), quantities.size());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// tokenizer
// ---------------------------------------------------------------------------

std::vector<std::string> corpus_from_inputs(const std::vector<std::string>& inputs) {
    std::vector<std::string> corpus;
    for (const auto& path : inputs) {
        if (path.size() > 6 && path.substr(path.size() - 6) == ".jsonl") {
            std::ifstream in(path, std::ios::binary);
            require(in.good(), "cannot read input: " + path);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                corpus.push_back(njson::parse(line).at("harmony_text").get<std::string>());
            }
        } else {
            corpus.push_back(read_file(path));
        }
    }
    return corpus;
}

int cmd_tokenizer_train(const std::vector<std::string>& inputs, const std::string& out_dir,
                        int target, bool json) {
    const auto corpus = corpus_from_inputs(inputs);
    const bpe::Vocabulary vocab = bpe::train_bpe(corpus, target);
    bpe::save_vocabulary(vocab, out_dir);
    const njson info{{"vocab_size", vocab.size()},
                     {"bpe_size", vocab.bpe_size},
                     {"merges", vocab.merges.size()},
                     {"merges_hash", factorium::hash_hex(bpe::merges_hash(vocab))},
                     {"out", out_dir}};
    if (json)
        emit(info);
    else
        std::printf("trained %d-token vocabulary (%zu merges) into %s\n", vocab.size(),
                    vocab.merges.size(), out_dir.c_str());
    return 0;
}

int cmd_tokenizer_encode(const std::string& vocab_dir, const std::string& file, bool json) {
    const bpe::Vocabulary vocab = bpe::load_vocabulary(vocab_dir);
    const std::vector<int> ids = bpe::encode(vocab, read_file(file));
    if (json) {
        emit(njson{{"count", ids.size()}, {"ids", ids}});
    } else {
        std::printf("%zu tokens\n", ids.size());
    }
    return 0;
}

int cmd_tokenizer_decode(const std::string& vocab_dir, const std::string& ids_path) {
    const bpe::Vocabulary vocab = bpe::load_vocabulary(vocab_dir);
    const njson j = read_json_file(ids_path);
    const std::vector<int> ids =
        j.is_array() ? j.get<std::vector<int>>() : j.at("ids").get<std::vector<int>>();
    std::cout << bpe::decode(vocab, ids);
    return 0;
}

// ---------------------------------------------------------------------------
// curriculum
// ---------------------------------------------------------------------------

int cmd_curriculum(const std::string& manifest_path, const std::string& schedule_path,
                   std::uint64_t seed, bool json) {
    const njson manifest = read_json_file(manifest_path);
    const auto schedule = curriculum::CurriculumSchedule::from_json(read_json_file(schedule_path));
    const auto records = factorium::manifest_record_meta(manifest);
    const auto phases = curriculum::curriculum_stream(records, schedule, seed);
    if (json) {
        emit(curriculum::stream_to_json(phases, seed));
        return 0;
    }
    for (const auto& ph : phases)
        std::printf("%-14s total %5zu  bachelor %ld  master %ld  doctor %ld\n", ph.name.c_str(),
                    ph.ids.size(), ph.counts[0], ph.counts[1], ph.counts[2]);
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

njson rate_to_json(const evalkit::RateResult& r) {
    njson by_bucket = njson::object();
    for (const auto& [bucket, rate] : r.by_bucket) by_bucket[bucket] = rate;
    return njson{{"overall", r.overall}, {"by_level", by_bucket}};
}

int cmd_eval(const std::string& outputs_path, double rel_tol, bool use_oracle,
             const std::string& vocab_dir, const std::string& diagnostics_path, bool json) {
    std::ifstream in(outputs_path, std::ios::binary);
    require(in.good(), "cannot read outputs: " + outputs_path);
    const auto records = evalkit::load_outputs(in);
    require(!records.empty(), "outputs file contains no records");

    const auto validity = evalkit::eval_structural_validity(records);
    evalkit::GroundingOptions gopt;
    gopt.rel_tol = rel_tol;
    gopt.use_oracle = use_oracle;
    const auto grounding = evalkit::eval_numerical_grounding(records, gopt);
    const auto stop = evalkit::eval_stop_token(records);

    njson ppl = nullptr;
    bool all_logprobs = true;
    for (const auto& r : records) all_logprobs = all_logprobs && r.has_logprobs;
    if (all_logprobs) ppl = evalkit::perplexity(records);

    njson degeneracy = nullptr;
    std::optional<bpe::Vocabulary> vocab;
    if (!vocab_dir.empty()) vocab = bpe::load_vocabulary(vocab_dir);
    long degenerate = 0, degeneracy_checked = 0;
    for (const auto& r : records) {
        std::vector<int> ids;
        if (r.has_logprobs) {
            for (const auto& t : r.tokens) ids.push_back(static_cast<int>(t.id));
        } else if (vocab) {
            ids = bpe::encode(*vocab, r.completion_text);
        } else {
            continue;
        }
        ++degeneracy_checked;
        if (evalkit::detect_degenerate(ids).degenerate) ++degenerate;
    }
    if (degeneracy_checked > 0)
        degeneracy = njson{{"checked", degeneracy_checked},
                           {"degenerate", degenerate},
                           {"rate", static_cast<double>(degenerate) /
                                        static_cast<double>(degeneracy_checked)},
                           {"ngram", 8},
                           {"repeats", 4}};

    njson report{{"schema_version", 1},
                 {"records", records.size()},
                 {"structural_validity", rate_to_json(validity)},
                 {"numerical_grounding", rate_to_json(grounding)},
                 {"stop_token", rate_to_json(stop)},
                 {"grounding_rel_tol", rel_tol},
                 {"perplexity", ppl},
                 {"degeneracy", degeneracy}};

    if (!diagnostics_path.empty()) {
        std::ofstream diag(diagnostics_path, std::ios::binary | std::ios::trunc);
        require(diag.good(), "cannot write diagnostics: " + diagnostics_path);
        auto dump_diag = [&diag](const char* metric, const evalkit::RateResult& r) {
            for (const auto& d : r.diagnostics)
                diag << njson{{"metric", metric},
                              {"id", d.id},
                              {"level", d.bucket},
                              {"passed", d.passed},
                              {"detail", d.detail}}
                            .dump()
                     << "\n";
        };
        dump_diag("structural_validity", validity);
        dump_diag("numerical_grounding", grounding);
        dump_diag("stop_token", stop);
    }

    if (json) {
        emit(report);
        return 0;
    }
    auto print_rate = [](const char* name, const evalkit::RateResult& r) {
        std::printf("%-20s overall %6.2f%%", name, 100.0 * r.overall);
        for (const auto& [bucket, rate] : r.by_bucket)
            std::printf("  %s %6.2f%%", bucket.c_str(), 100.0 * rate);
        std::printf("\n");
    };
    print_rate("structural validity", validity);
    print_rate("numerical grounding", grounding);
    print_rate("stop token", stop);
    if (!ppl.is_null()) std::printf("%-20s %.6f\n", "perplexity", ppl.get<double>());
    if (!degeneracy.is_null())
        std::printf("%-20s %ld/%ld degenerate\n", "degeneracy",
                    degeneracy.at("degenerate").get<long>(),
                    degeneracy.at("checked").get<long>());
    return 0;
}

// ---------------------------------------------------------------------------
// calculators and stats
// ---------------------------------------------------------------------------

int cmd_harm(const std::string& profile_path, bool json) {
    const auto profile = evalkit::HarmProfile::from_json(read_json_file(profile_path));
    const double e = evalkit::expected_harm(profile);
    if (json)
        emit(njson{{"expected_harm", e}});
    else
        std::printf("expected harm E[H] = %s\n", format_sig6(e).c_str());
    return 0;
}

int cmd_monotropy(const std::string& alloc_path, double delta, double rho, bool json) {
    const auto alloc = evalkit::AllocationProfile::from_json(read_json_file(alloc_path));
    const auto res = evalkit::monotropy_index(alloc, delta, rho);
    if (json)
        emit(njson{{"k_min", res.k_min},
                   {"ratio", res.ratio},
                   {"is_monotropic", res.is_monotropic},
                   {"delta", delta},
                   {"rho", rho}});
    else
        std::printf("k_min = %ld of %zu domains (ratio %s): %s at rho = %s\n", res.k_min,
                    alloc.allocation.size(), format_sig6(res.ratio).c_str(),
                    res.is_monotropic ? "monotropic" : "not monotropic",
                    format_sig6(rho).c_str());
    return 0;
}

int cmd_params(const std::string& arch_path, bool json) {
    const auto arch = evalkit::ArchConfig::from_json(read_json_file(arch_path));
    const njson breakdown = evalkit::param_breakdown(arch);
    if (json) {
        emit(breakdown);
        return 0;
    }
    std::printf("token embedding     %12lld\n", breakdown.at("token_embedding").get<long long>());
    std::printf("position embedding  %12lld\n",
                breakdown.at("position_embedding").get<long long>());
    std::printf("transformer layers  %12lld  (%d x %lld)\n",
                breakdown.at("layers_total").get<long long>(), arch.layers,
                breakdown.at("per_layer").at("total").get<long long>());
    std::printf("final norm          %12lld\n", breakdown.at("final_norm").get<long long>());
    std::printf("output head         %12lld\n", breakdown.at("output_head").get<long long>());
    std::printf("total               %12lld\n", breakdown.at("total").get<long long>());
    return 0;
}

int cmd_stats(const std::string& manifest_path, bool json) {
    const njson report = factorium::dataset_stats(manifest_path);
    if (json) {
        emit(report);
        return 0;
    }
    std::printf("%-10s %10s %12s\n", "Level", "Samples", "Tokens");
    for (const char* level : {"bachelor", "master", "doctor"}) {
        const auto& l = report.at("levels").at(level);
        std::printf("%-10s %10ld %12ld\n", level, l.at("samples").get<long>(),
                    l.at("tokens").get<long>());
    }
    std::printf("%-10s %10ld %12ld\n", "total", report.at("total").at("samples").get<long>(),
                report.at("total").at("tokens").get<long>());
    std::printf("rejected %ld; consistent with manifest: %s\n",
                report.at("rejected").get<long>(),
                report.at("consistent").get<bool>() ? "yes" : "no");
    return report.at("consistent").get<bool>() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Timoshenko shaft analysis data factory and evaluation toolkit"};
    app.require_subcommand(1);

    CommonFlags common;
    app.add_flag("--json", common.json, "Emit machine-readable JSON on stdout")
        ->envname("ENEDINA_JSON");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Solve a shaft spec and print the fields");
    std::string spec_path;
    int n_grid = 257;
    bool use_oracle = false;
    solve_cmd->add_option("spec", spec_path, "ShaftSpec JSON file")->required();
    solve_cmd->add_option("--n-grid", n_grid, "Grid resolution");
    solve_cmd->add_flag("--oracle", use_oracle, "Use the quadrature oracle path");

    // generate
    auto* gen_cmd = app.add_subcommand("generate", "Generate a verified dataset");
    factorium::GenerationConfig gen_cfg;
    std::string gen_config_path;
    gen_cmd->add_option("--config", gen_config_path,
                        "TOML config file (flags override file values)")
        ->envname("ENEDINA_CONFIG");
    gen_cmd->add_option("--bachelor_count", gen_cfg.bachelor_count, "Bachelor record count");
    gen_cmd->add_option("--master_count", gen_cfg.master_count, "Master record count");
    gen_cmd->add_option("--doctor_count", gen_cfg.doctor_count, "Doctor record count");
    gen_cmd->add_option("--seed", gen_cfg.seed, "Master seed")->envname("ENEDINA_SEED");
    std::string gen_locale = "pt-BR";
    gen_cmd->add_option("--locale", gen_locale, "Prompt locale (pt-BR or en)")
        ->envname("ENEDINA_LOCALE");
    gen_cmd->add_option("--shard_size", gen_cfg.shard_size, "Records per shard");
    gen_cmd->add_option("--n_grid", gen_cfg.n_grid, "Solver grid resolution");
    gen_cmd->add_option("--bpe_target", gen_cfg.bpe_target, "BPE vocabulary target");
    gen_cmd->add_option("--out", common.out_dir, "Output directory")->envname("ENEDINA_OUT");
    gen_cmd->add_option("--jobs", common.jobs, "Parallel generation workers")
        ->envname("ENEDINA_JOBS");
    std::string gen_profile = "default";
    gen_cmd->add_option("--tolerance-profile", gen_profile,
                        "Tolerance profile: default, strict, relaxed")
        ->envname("ENEDINA_TOLERANCE_PROFILE");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "Re-verify every record in a shard");
    std::string shard_path;
    std::string verify_profile = "default";
    verify_cmd->add_option("shard", shard_path, "JSONL shard file")->required();
    verify_cmd->add_option("--tolerance-profile", verify_profile,
                           "Tolerance profile: default, strict, relaxed");

    // render / parse
    auto* render_cmd = app.add_subcommand("render", "Render a record to structured text");
    std::string record_path;
    render_cmd->add_option("record", record_path, "DatasetRecord JSON file")->required();
    auto* parse_cmd = app.add_subcommand("parse", "Parse structured text");
    std::string text_path;
    parse_cmd->add_option("text", text_path, "Text file to parse")->required();

    // tokenizer
    auto* tok_cmd = app.add_subcommand("tokenizer", "Train or apply the BPE tokenizer");
    tok_cmd->require_subcommand(1);
    auto* tok_train = tok_cmd->add_subcommand("train", "Train a vocabulary");
    std::vector<std::string> tok_inputs;
    std::string tok_out = "vocab";
    int tok_target = bpe::kDefaultBpeTarget;
    tok_train->add_option("inputs", tok_inputs, "Corpus files (.txt or .jsonl shards)")
        ->required();
    tok_train->add_option("--out", tok_out, "Vocabulary output directory");
    tok_train->add_option("--target", tok_target, "BPE token target");
    auto* tok_encode = tok_cmd->add_subcommand("encode", "Encode a file to token ids");
    std::string tok_vocab, tok_file;
    tok_encode->add_option("--vocab", tok_vocab, "Vocabulary directory")->required();
    tok_encode->add_option("file", tok_file, "Text file to encode")->required();
    auto* tok_decode = tok_cmd->add_subcommand("decode", "Decode token ids to text");
    std::string tok_ids;
    tok_decode->add_option("--vocab", tok_vocab, "Vocabulary directory")->required();
    tok_decode->add_option("ids", tok_ids, "JSON file with an id array")->required();

    // curriculum
    auto* cur_cmd = app.add_subcommand("curriculum", "Emit a curriculum record-id stream");
    std::string manifest_path, schedule_path;
    cur_cmd->add_option("manifest", manifest_path, "Dataset manifest JSON")->required();
    cur_cmd->add_option("schedule", schedule_path, "Curriculum schedule JSON")->required();
    cur_cmd->add_option("--seed", common.seed, "Stream seed")->envname("ENEDINA_SEED");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate model-output dumps");
    std::string outputs_path, eval_vocab, diagnostics_path;
    double rel_tol = 1e-4;
    bool eval_oracle = false;
    eval_cmd->add_option("outputs", outputs_path, "JSONL model outputs")->required();
    eval_cmd->add_option("--rel-tol", rel_tol, "Grounding relative tolerance");
    eval_cmd->add_flag("--oracle", eval_oracle, "Ground against the quadrature oracle");
    eval_cmd->add_option("--vocab", eval_vocab, "Vocabulary for degeneracy checks");
    eval_cmd->add_option("--diagnostics", diagnostics_path, "Per-record diagnostics JSONL");

    // calculators
    auto* harm_cmd = app.add_subcommand("harm", "Expected harm of a domain profile");
    std::string harm_path;
    harm_cmd->add_option("profile", harm_path, "Harm profile JSON")->required();
    auto* mono_cmd = app.add_subcommand("monotropy", "Monotropy index of an allocation");
    std::string alloc_path;
    double delta = 0.1, rho = 0.1;
    mono_cmd->add_option("allocation", alloc_path, "Allocation profile JSON")->required();
    mono_cmd->add_option("--delta", delta, "Mass tolerance in (0,1)");
    mono_cmd->add_option("--rho", rho, "Concentration threshold in (0,1)");
    auto* params_cmd = app.add_subcommand("params", "Parameter count of an architecture");
    std::string arch_path;
    params_cmd->add_option("arch", arch_path, "Architecture config JSON")->required();
    auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics from a manifest");
    std::string stats_manifest;
    stats_cmd->add_option("manifest", stats_manifest, "Dataset manifest JSON")->required();

    // `generate <config.toml>` is sugar for `generate --config <config.toml>`;
    // the path must directly follow the subcommand.
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "generate" && !args[i + 1].empty() && args[i + 1][0] != '-') {
            args[i + 1] = "--config=" + args[i + 1];
            break;
        }
    }

    try {
        std::reverse(args.begin(), args.end()); // CLI11 consumes back-to-front
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*solve_cmd) return cmd_solve(spec_path, n_grid, use_oracle, common.json);
        if (*gen_cmd) {
            // Apply TOML values for every flag not given on the command line.
            if (!gen_config_path.empty()) {
                std::vector<CLI::ConfigItem> items;
                try {
                    items = CLI::ConfigTOML{}.from_file(gen_config_path);
                } catch (const CLI::Error& e) {
                    throw std::invalid_argument(gen_config_path + ": " + e.what());
                }
                for (const auto& item : items) {
                    if (!item.parents.empty())
                        throw std::invalid_argument(gen_config_path +
                                                    ": nested config sections are not supported");
                    CLI::Option* opt = gen_cmd->get_option_no_throw("--" + item.name);
                    if (opt == nullptr)
                        throw std::invalid_argument(gen_config_path + ": unknown config key '" +
                                                    item.name + "'");
                    if (opt->count() > 0) continue; // command-line flag wins
                    for (const auto& value : item.inputs) opt->add_result(value);
                    opt->run_callback();
                }
            }
            gen_cfg.locale = locale_from_string(gen_locale);
            gen_cfg.tolerances = ToleranceProfile::named(gen_profile);
            return cmd_generate(gen_cfg, common);
        }
        if (*verify_cmd)
            return cmd_verify(shard_path, ToleranceProfile::named(verify_profile), common.json);
        if (*render_cmd) return cmd_render(record_path);
        if (*parse_cmd) return cmd_parse(text_path, common.json);
        if (*tok_cmd) {
            if (*tok_train) return cmd_tokenizer_train(tok_inputs, tok_out, tok_target, common.json);
            if (*tok_encode) return cmd_tokenizer_encode(tok_vocab, tok_file, common.json);
            if (*tok_decode) return cmd_tokenizer_decode(tok_vocab, tok_ids);
        }
        if (*cur_cmd) return cmd_curriculum(manifest_path, schedule_path, common.seed, common.json);
        if (*eval_cmd)
            return cmd_eval(outputs_path, rel_tol, eval_oracle, eval_vocab, diagnostics_path,
                            common.json);
        if (*harm_cmd) return cmd_harm(harm_path, common.json);
        if (*mono_cmd) return cmd_monotropy(alloc_path, delta, rho, common.json);
        if (*params_cmd) return cmd_params(arch_path, common.json);
        if (*stats_cmd) return cmd_stats(stats_manifest, common.json);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 2;
    }
    return 2;
}
