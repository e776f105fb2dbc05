#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include <enedina/evalkit.hpp>
#include <enedina/factorium.hpp>

using namespace enedina;
namespace ek = enedina::evalkit;

namespace {

DatasetRecord pipeline_record(Level level) {
    DatasetRecord rec;
    rec.id = "E-000001";
    rec.level = level;
    rec.spec.id = rec.id;
    rec.spec.length_m = 1.0;
    rec.spec.diameter_m = 0.05;
    rec.spec.loads = {{0.5, 1000.0}};
    rec.spec.material = {"test steel", 2.0e11, 0.3, 3.5e8, 6.0e8, SurfaceFinish::Machined};
    if (level != Level::Bachelor) {
        rec.spec.torque_in = TorquePoint{0.25, 60.0};
        rec.spec.torque_out = TorquePoint{0.75, -60.0};
    }
    const auto fields = solve(rec.spec, 257);
    rec.summary = summarize(rec.spec, fields, 257);
    if (level != Level::Bachelor) rec.stress = yield_analysis(rec.spec, fields);
    if (level == Level::Doctor)
        rec.fatigue = fatigue_analysis(rec.spec, fields, Reliability::R50, 20.0);
    const StressReport* stress = rec.stress ? &*rec.stress : nullptr;
    rec.verification = verify_all(rec.spec, fields, ToleranceProfile{}, stress);
    rec.harmony_text = harmony::render(rec);
    return rec;
}

ek::ModelOutputRecord as_output(const DatasetRecord& rec) {
    ek::ModelOutputRecord m;
    m.id = rec.id;
    m.completion_text = rec.harmony_text;
    m.level = rec.level;
    return m;
}

} // namespace

TEST_CASE("structural validity: rendered texts pass, corrupted halves fail") {
    std::vector<ek::ModelOutputRecord> outputs;
    for (Level l : {Level::Bachelor, Level::Master, Level::Doctor})
        outputs.push_back(as_output(pipeline_record(l)));
    CHECK(ek::eval_structural_validity(outputs).overall == 1.0);

    auto empty = outputs;
    for (auto& o : empty) o.completion_text.clear();
    CHECK(ek::eval_structural_validity(empty).overall == 0.0);

    auto half = outputs;
    half.push_back(outputs[0]);
    half[0].completion_text = "garbage";
    half[1].completion_text = "more garbage";
    const auto res = ek::eval_structural_validity(half);
    CHECK(res.overall == 0.5);
}

TEST_CASE("grounding: pipeline outputs are grounded; perturbed numerals are not") {
    std::vector<ek::ModelOutputRecord> outputs;
    for (Level l : {Level::Bachelor, Level::Master, Level::Doctor})
        outputs.push_back(as_output(pipeline_record(l)));
    const auto res = ek::eval_numerical_grounding(outputs);
    for (const auto& d : res.diagnostics) INFO(d.id << ": " << d.detail);
    CHECK(res.overall == 1.0);

    // Perturb one digit of the result channel's w_max beyond the tolerance.
    auto bad = outputs;
    auto& text = bad[0].completion_text;
    const std::size_t result_at = text.find("<|result|>");
    REQUIRE(result_at != std::string::npos);
    const std::size_t at = text.find("w_max = ", result_at);
    REQUIRE(at != std::string::npos);
    text[at + 10] = text[at + 10] == '4' ? '7' : '4';
    const auto res2 = ek::eval_numerical_grounding(bad);
    CHECK(res2.counts.at("bachelor").first == 0);
    CHECK(res2.overall < 1.0);
}

TEST_CASE("grounding via the quadrature oracle at its looser tolerance") {
    std::vector<ek::ModelOutputRecord> outputs;
    for (Level l : {Level::Bachelor, Level::Doctor})
        outputs.push_back(as_output(pipeline_record(l)));
    ek::GroundingOptions opt;
    opt.rel_tol = 1e-3;
    opt.use_oracle = true;
    const auto res = ek::eval_numerical_grounding(outputs, opt);
    for (const auto& d : res.diagnostics) INFO(d.id << ": " << d.detail);
    CHECK(res.overall == 1.0);
}

TEST_CASE("grounding rejects a wrong unit as an extraction failure") {
    auto out = as_output(pipeline_record(Level::Bachelor));
    const std::size_t at = out.completion_text.find("w_max = ");
    const std::size_t unit_at = out.completion_text.find(" m\n", at);
    out.completion_text.replace(unit_at, 3, " mm\n");
    // Still structurally valid...
    CHECK(ek::eval_structural_validity({out}).overall == 1.0);
    // ...but extraction fails, so the record is ungrounded.
    const auto res = ek::eval_numerical_grounding({out});
    CHECK(res.overall == 0.0);
    CHECK(res.diagnostics[0].detail.find("extraction") != std::string::npos);
}

TEST_CASE("stop-token accounting") {
    auto ok = as_output(pipeline_record(Level::Bachelor));
    CHECK(ek::eval_stop_token({ok}).overall == 1.0);

    auto truncated = ok;
    truncated.completion_text.resize(truncated.completion_text.size() / 2);
    CHECK(ek::eval_stop_token({truncated}).overall == 0.0);

    auto no_eos = ok;
    no_eos.completion_text.resize(no_eos.completion_text.size() - 7); // strip <|eos|>
    CHECK(ek::eval_stop_token({no_eos}).overall == 1.0); // STOP at end-of-text

    auto trailing = ok;
    trailing.completion_text += "tail";
    CHECK(ek::eval_stop_token({trailing}).overall == 0.0);

    const auto mixed = ek::eval_stop_token({ok, truncated, ok, trailing});
    CHECK(mixed.overall == 0.5);
}

TEST_CASE("perplexity: deterministic, uniform, and hand-mixed cases") {
    ek::ModelOutputRecord r;
    r.id = "p";
    r.has_logprobs = true;
    r.tokens = {{1, 0.0}, {2, 0.0}, {3, 0.0}};
    CHECK(ek::perplexity({r}) == Catch::Approx(1.0));

    const double uniform_lp = -std::log(8012.0);
    for (auto& t : r.tokens) t.logprob = uniform_lp;
    CHECK(ek::perplexity({r}) == Catch::Approx(8012.0).epsilon(1e-9));

    r.tokens = {{1, -std::log(2.0)}, {2, -std::log(8.0)}};
    CHECK(ek::perplexity({r}) == Catch::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("perplexity pools token-weighted across records") {
    ek::ModelOutputRecord a, b;
    a.id = "a";
    a.has_logprobs = true;
    a.tokens = {{1, -1.0}, {2, -1.0}, {3, -1.0}};
    b.id = "b";
    b.has_logprobs = true;
    b.tokens = {{1, -4.0}};
    // Token-weighted mean: (3*1 + 4)/4 nats.
    CHECK(ek::perplexity({a, b}) == Catch::Approx(std::exp(7.0 / 4.0)).epsilon(1e-12));
    CHECK(ek::perplexity({b, a}) == Catch::Approx(std::exp(7.0 / 4.0)).epsilon(1e-12));

    ek::ModelOutputRecord c;
    c.id = "c";
    CHECK_THROWS_AS(ek::perplexity({a, c}), std::invalid_argument);
}

TEST_CASE("log-base conversion on load") {
    std::istringstream in(
        R"({"id":"x","completion_text":"","log_base":"2","tokens":[{"id":1,"logprob":-1.0}]})"
        "\n");
    const auto records = ek::load_outputs(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].tokens[0].logprob == Catch::Approx(-std::log(2.0)));
}

TEST_CASE("degeneracy detector: constructed loop fires, prefixes do not") {
    std::vector<int> ids;
    for (int i = 0; i < 100; ++i) ids.push_back(i * 131 % 997);
    CHECK_FALSE(ek::detect_degenerate(ids).degenerate);

    std::vector<int> loop = ids;
    for (int rep = 0; rep < 4; ++rep)
        for (int k = 0; k < 8; ++k) loop.push_back(1000 + k);
    const auto res = ek::detect_degenerate(loop);
    CHECK(res.degenerate);
    CHECK(res.span_begin == 100);
    CHECK(res.span_end == 132);

    // Shorter than n * r never fires.
    std::vector<int> tiny(31, 7);
    CHECK_FALSE(ek::detect_degenerate(tiny).degenerate);
    std::vector<int> exact(32, 7);
    CHECK(ek::detect_degenerate(exact).degenerate);
}

TEST_CASE("ood probe set: categories, locales, determinism, disjointness") {
    const auto probes = ek::ood_probe_set(42);
    CHECK(probes.size() >= 30);
    std::set<std::string> categories, locales;
    for (const auto& p : probes) {
        categories.insert(p.category);
        locales.insert(p.locale);
        // No probe parses as a structured document.
        CHECK(std::holds_alternative<harmony::ParseError>(harmony::parse(p.text)));
    }
    CHECK(categories.count("history") == 1);
    CHECK(categories.count("literature") == 1);
    CHECK(categories.count("general_physics") == 1);
    CHECK(locales == std::set<std::string>{"en", "pt-BR"});

    const auto again = ek::ood_probe_set(42);
    for (std::size_t i = 0; i < probes.size(); ++i) CHECK(probes[i].id == again[i].id);
    const auto other = ek::ood_probe_set(43);
    bool any_moved = false;
    for (std::size_t i = 0; i < probes.size(); ++i)
        any_moved = any_moved || probes[i].id != other[i].id;
    CHECK(any_moved);
}

TEST_CASE("expected harm: hand case, refusal, and linearity") {
    ek::HarmProfile p;
    p.domains = {{"a", 0.6, 0.01, 10.0, false}, {"b", 0.4, 0.2, 5.0, false}};
    CHECK(ek::expected_harm(p) == Catch::Approx(0.46).epsilon(1e-12));

    // The monotropic limiting case: zero error inside, refusal outside.
    ek::HarmProfile mono;
    mono.domains = {{"focus", 1.0, 0.0, 10.0, false}, {"rest", 0.0, 0.5, 100.0, true}};
    CHECK(ek::expected_harm(mono) == 0.0);

    // Scaling every harm by c scales E[H] by c.
    auto scaled = p;
    for (auto& d : scaled.domains) d.harm *= 3.0;
    CHECK(ek::expected_harm(scaled) == Catch::Approx(3.0 * 0.46).epsilon(1e-12));

    // Refusing a domain never increases expected harm.
    auto refusing = p;
    refusing.domains[1].refuses = true;
    CHECK(ek::expected_harm(refusing) <= ek::expected_harm(p));
}

TEST_CASE("expected harm is monotone in epsilon and harm") {
    ek::HarmProfile p;
    p.domains = {{"a", 0.5, 0.1, 2.0, false}, {"b", 0.5, 0.3, 1.0, false}};
    const double base = ek::expected_harm(p);
    auto worse = p;
    worse.domains[0].epsilon = 0.2;
    CHECK(ek::expected_harm(worse) >= base);
    worse = p;
    worse.domains[1].harm = 9.0;
    CHECK(ek::expected_harm(worse) >= base);
}

TEST_CASE("harm profile validation") {
    ek::HarmProfile p;
    p.domains = {{"a", 0.7, 0.1, 1.0, false}};
    CHECK_THROWS_AS(ek::expected_harm(p), std::invalid_argument); // mass != 1
    p.domains = {{"a", 0.5, 1.5, 1.0, false}, {"b", 0.5, 0.1, 1.0, false}};
    CHECK_THROWS_AS(ek::expected_harm(p), std::invalid_argument); // epsilon > 1
}

TEST_CASE("monotropy index: delta allocation, uniform, ties") {
    ek::AllocationProfile delta_alloc;
    for (int i = 0; i < 100; ++i) {
        delta_alloc.names.push_back("d" + std::to_string(i));
        delta_alloc.allocation.push_back(i == 37 ? 10.0 : 0.0);
    }
    const auto res = ek::monotropy_index(delta_alloc, 0.1, 0.05);
    CHECK(res.k_min == 1);
    CHECK(res.is_monotropic);

    ek::AllocationProfile uniform;
    for (int i = 0; i < 100; ++i) {
        uniform.names.push_back("u" + std::to_string(i));
        uniform.allocation.push_back(1.0);
    }
    const auto res2 = ek::monotropy_index(uniform, 0.1, 0.1);
    CHECK(res2.k_min >= 90);
    CHECK_FALSE(res2.is_monotropic);

    // Ties resolve by stable input order.
    ek::AllocationProfile tied;
    tied.names = {"first", "second", "third"};
    tied.allocation = {1.0, 1.0, 1.0};
    const auto res3 = ek::monotropy_index(tied, 0.5, 0.9);
    CHECK(res3.k_min == 2); // 2/3 of the mass needs two domains
    const auto res4 = ek::monotropy_index(tied, 0.5, 0.9);
    CHECK(res3.k_min == res4.k_min);
}

TEST_CASE("parameter count: embeddings-only and d_ff difference identities") {
    ek::ArchConfig a;
    a.layers = 0;
    a.heads = 1;
    a.d_model = 512;
    a.d_ff = 2048;
    a.vocab = 8012;
    a.max_seq = 14336;
    a.tied_output = true;
    a.learned_positions = false;
    CHECK(ek::param_count(a) == 8012LL * 512 + 2 * 512); // embeddings + final norm

    ek::ArchConfig b = a;
    b.layers = 7;
    b.tied_output = false;
    b.learned_positions = true;
    const long long base = ek::param_count(b);
    ek::ArchConfig c = b;
    c.d_ff = 2 * b.d_ff;
    // Doubling d_ff adds 2 * layers * d_model * d_ff plus the new bias rows.
    CHECK(ek::param_count(c) - base ==
          2LL * b.layers * b.d_model * b.d_ff + static_cast<long long>(b.layers) * b.d_ff);
}

TEST_CASE("parameter count validation") {
    ek::ArchConfig a;
    a.layers = 2;
    a.heads = 7;
    a.d_model = 512; // not divisible by 7
    a.d_ff = 128;
    a.vocab = 100;
    a.max_seq = 64;
    CHECK_THROWS_AS(ek::param_count(a), std::invalid_argument);
}

TEST_CASE("evaluating a generated desk corpus reproduces the perfect rows") {
    factorium::GenerationConfig cfg;
    cfg.bachelor_count = 6;
    cfg.master_count = 6;
    cfg.doctor_count = 6;
    cfg.bpe_target = 900;
    cfg.seed = 4242;
    const auto dir = std::filesystem::temp_directory_path() / "enedina-evalkit-gen";
    std::filesystem::remove_all(dir);
    const auto out = factorium::generate_dataset(cfg, dir, 1);
    std::vector<ek::ModelOutputRecord> outputs;
    for (const auto& r : out.records) outputs.push_back(as_output(r));
    CHECK(ek::eval_structural_validity(outputs).overall == 1.0);
    CHECK(ek::eval_numerical_grounding(outputs).overall == 1.0);
    CHECK(ek::eval_stop_token(outputs).overall == 1.0);
    // Degeneracy never fires on generated samples.
    const auto vocab = bpe::load_vocabulary(dir / "vocab");
    for (const auto& r : out.records)
        CHECK_FALSE(ek::detect_degenerate(bpe::encode(vocab, r.harmony_text)).degenerate);
    std::filesystem::remove_all(dir);
}
