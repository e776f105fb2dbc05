#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <enedina/factorium.hpp>

using namespace enedina;
namespace fx = enedina::factorium;
namespace fs = std::filesystem;

namespace {

fx::GenerationConfig small_config() {
    fx::GenerationConfig cfg;
    cfg.bachelor_count = 12;
    cfg.master_count = 12;
    cfg.doctor_count = 12;
    cfg.shard_size = 5;
    cfg.bpe_target = 1200;
    cfg.seed = 2024;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("sampling is deterministic per substream") {
    const auto cfg = small_config();
    SplitMix64 a(substream_seed(cfg.seed, "record", 0, 5));
    SplitMix64 b(substream_seed(cfg.seed, "record", 0, 5));
    const auto da = fx::sample_parameters(Level::Bachelor, cfg, a, "B-000005");
    const auto db = fx::sample_parameters(Level::Bachelor, cfg, b, "B-000005");
    CHECK(to_json(da.spec).dump() == to_json(db.spec).dump());
}

TEST_CASE("Bachelor draws never carry torque; Master and Doctor always do") {
    const auto cfg = small_config();
    for (int i = 0; i < 200; ++i) {
        SplitMix64 rng(substream_seed(cfg.seed, "record", 0, i));
        const auto d = fx::sample_parameters(Level::Bachelor, cfg, rng, "B-x");
        CHECK_FALSE(d.spec.has_torque());
    }
    for (int i = 0; i < 50; ++i) {
        SplitMix64 rng(substream_seed(cfg.seed, "record", 1, i));
        const auto d = fx::sample_parameters(Level::Master, cfg, rng, "M-x");
        CHECK(d.spec.has_torque());
        CHECK(d.spec.torque_in->magnitude_nm > 0.0);
    }
}

TEST_CASE("sampled specs respect the configured ranges") {
    const auto cfg = small_config();
    for (int i = 0; i < 300; ++i) {
        SplitMix64 rng(substream_seed(cfg.seed, "ranges", 2, i));
        const auto d = fx::sample_parameters(Level::Doctor, cfg, rng, "D-x");
        CHECK(d.spec.diameter_m >= cfg.d_min_m);
        CHECK(d.spec.diameter_m <= cfg.d_max_m);
        CHECK(d.spec.length_m <= cfg.L_max_m);
        CHECK(d.spec.diameter_m < d.spec.length_m / 5.0);
        CHECK(d.spec.loads.size() >= 1);
        CHECK(d.spec.loads.size() <= 3);
        CHECK(d.options.temperature_c >= cfg.temperature_min_c);
        CHECK(d.options.temperature_c <= cfg.temperature_max_c);
        CHECK_NOTHROW(d.spec.validate());
    }
}

TEST_CASE("plausibility rejection rate over 1000 draws stays below 5%") {
    const auto cfg = small_config();
    int rejected = 0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        SplitMix64 rng(substream_seed(77, "record", 1, i));
        const auto d = fx::sample_parameters(Level::Master, cfg, rng, "M-x");
        const auto fields = solve(d.spec, cfg.n_grid);
        if (!verify_plausibility(d.spec, fields, cfg.tolerances).passed) ++rejected;
    }
    CHECK(rejected < n / 20);
}

TEST_CASE("generate produces gated, sharded, self-consistent output") {
    TempDir dir("enedina-gen-test");
    const auto cfg = small_config();
    const auto out = fx::generate_dataset(cfg, dir.path, 1);
    CHECK(out.records.size() == 36);
    CHECK(fs::exists(dir.path / "manifest.json"));
    CHECK(fs::exists(dir.path / "rejections.jsonl"));
    CHECK(fs::exists(dir.path / "vocab" / "merges.txt"));
    // shard files: 12 records / 5 per shard = 3 shards per level
    for (const char* level : {"bachelor", "master", "doctor"})
        for (int i = 0; i < 3; ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "shard-%s-%05d.jsonl", level, i);
            CHECK(fs::exists(dir.path / name));
        }
    for (const auto& rec : out.records) {
        CHECK(rec.verification.overall);
        CHECK(rec.token_count > 0);
        CHECK(rec.token_count <= bpe::kMaxSequenceTokens);
        CHECK(rec.difficulty >= 0.0);
        CHECK(rec.difficulty <= 1.0);
        const bool has_stress = rec.stress.has_value();
        const bool has_fatigue = rec.fatigue.has_value();
        CHECK(has_stress == (rec.level != Level::Bachelor));
        CHECK(has_fatigue == (rec.level == Level::Doctor));
    }
    // The manifest's level stats agree with the emitted records.
    const njson manifest = njson::parse(slurp(dir.path / "manifest.json"));
    CHECK(manifest.at("levels").at("bachelor").at("accepted") == 12);
    CHECK(manifest.at("records").size() == 36);
    CHECK(manifest.at("config_hash") == fx::config_hash_hex(cfg));
}

TEST_CASE("record json round-trips through the shard format") {
    TempDir dir("enedina-rt-test");
    auto cfg = small_config();
    cfg.bachelor_count = 3;
    cfg.master_count = 0;
    cfg.doctor_count = 3;
    cfg.bpe_target = 700;
    const auto out = fx::generate_dataset(cfg, dir.path, 1);
    for (const auto& rec : out.records) {
        const njson j = rec.to_json();
        const DatasetRecord back = DatasetRecord::from_json(j);
        CHECK(back.to_json().dump() == j.dump());
        CHECK(back.harmony_text == rec.harmony_text);
    }
}

TEST_CASE("difficulty is the within-level token-count quantile") {
    TempDir dir("enedina-diff-test");
    auto cfg = small_config();
    cfg.master_count = 0;
    cfg.doctor_count = 0;
    cfg.bpe_target = 900;
    const auto out = fx::generate_dataset(cfg, dir.path, 1);
    std::vector<const DatasetRecord*> by_difficulty;
    for (const auto& r : out.records) by_difficulty.push_back(&r);
    std::sort(by_difficulty.begin(), by_difficulty.end(),
              [](const DatasetRecord* a, const DatasetRecord* b) {
                  return a->difficulty < b->difficulty;
              });
    CHECK(by_difficulty.front()->difficulty == 0.0);
    CHECK(by_difficulty.back()->difficulty == 1.0);
    for (std::size_t i = 1; i < by_difficulty.size(); ++i)
        CHECK(by_difficulty[i]->token_count >= by_difficulty[i - 1]->token_count);
}

TEST_CASE("reruns are byte-identical; jobs do not change output") {
    TempDir a("enedina-det-a"), b("enedina-det-b"), c("enedina-det-c");
    const auto cfg = small_config();
    fx::generate_dataset(cfg, a.path, 1);
    fx::generate_dataset(cfg, b.path, 1);
    fx::generate_dataset(cfg, c.path, 3);
    for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a.path);
        INFO(rel);
        const std::string ref = slurp(entry.path());
        CHECK(ref == slurp(b.path / rel));
        CHECK(ref == slurp(c.path / rel));
    }
}

TEST_CASE("different seeds change the emitted bytes") {
    TempDir a("enedina-seed-a"), b("enedina-seed-b");
    auto cfg = small_config();
    cfg.bachelor_count = 4;
    cfg.master_count = 0;
    cfg.doctor_count = 0;
    cfg.bpe_target = 700;
    fx::generate_dataset(cfg, a.path, 1);
    cfg.seed = 2025;
    fx::generate_dataset(cfg, b.path, 1);
    CHECK(slurp(a.path / "shard-bachelor-00000.jsonl") !=
          slurp(b.path / "shard-bachelor-00000.jsonl"));
}

TEST_CASE("zero-count config yields an empty dataset and manifest") {
    TempDir dir("enedina-empty-test");
    auto cfg = small_config();
    cfg.bachelor_count = cfg.master_count = cfg.doctor_count = 0;
    const auto out = fx::generate_dataset(cfg, dir.path, 1);
    CHECK(out.records.empty());
    CHECK(out.rejected == 0);
    const njson manifest = njson::parse(slurp(dir.path / "manifest.json"));
    CHECK(manifest.at("records").empty());
    CHECK(manifest.at("tokenizer").is_null());
}

TEST_CASE("an impossible gate aborts with statistics") {
    TempDir dir("enedina-abort-test");
    auto cfg = small_config();
    cfg.bachelor_count = 3;
    cfg.master_count = 0;
    cfg.doctor_count = 0;
    cfg.max_attempts_factor = 2;
    cfg.tolerances.cross_oracle = 0.0; // nothing can pass
    try {
        fx::generate_dataset(cfg, dir.path, 1);
        FAIL("expected generation to abort");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("attempts") != std::string::npos);
        CHECK(msg.find("0/3") != std::string::npos);
    }
}

TEST_CASE("config validation rejects out-of-window diameter ranges") {
    auto cfg = small_config();
    cfg.d_min_m = 0.001; // below the Marin size-factor window
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.d_max_m = 0.3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.bachelor_count = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("dataset_stats recomputation matches the manifest") {
    TempDir dir("enedina-stats-test");
    const auto cfg = small_config();
    fx::generate_dataset(cfg, dir.path, 1);
    const njson stats = fx::dataset_stats(dir.path / "manifest.json");
    CHECK(stats.at("consistent") == true);
    CHECK(stats.at("levels").at("bachelor").at("samples") == 12);
    CHECK(stats.at("total").at("samples") == 36);
    const njson manifest = njson::parse(slurp(dir.path / "manifest.json"));
    CHECK(stats.at("levels").at("doctor").at("tokens") ==
          manifest.at("levels").at("doctor").at("tokens_total"));
}
