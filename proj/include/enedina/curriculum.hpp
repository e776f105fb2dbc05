#pragma once

#include <array>
#include <string>
#include <vector>

#include "enedina/record.hpp"
#include "enedina/rng.hpp"

namespace enedina::curriculum {

// Multidimensional curriculum: every phase mixes all three levels and caps
// per-level difficulty (a token-count quantile in [0,1]). Level counts
// within a phase are exact largest-remainder apportionments of the mix.

struct PhaseSpec {
    std::string name;
    long total = 0;
    std::array<double, kLevelCount> mix{};     // fractions, sum to 1
    std::array<double, kLevelCount> ceiling{}; // difficulty ceilings in [0,1]
};

struct CurriculumSchedule {
    std::vector<PhaseSpec> phases;

    void validate() const {
        require(!phases.empty(), "schedule: at least one phase required");
        for (std::size_t p = 0; p < phases.size(); ++p) {
            const PhaseSpec& ph = phases[p];
            require(!ph.name.empty(), "schedule: phase name must be non-empty");
            require(ph.total > 0, "schedule: phase total must be positive");
            double sum = 0.0;
            for (int l = 0; l < kLevelCount; ++l) {
                require(ph.mix[l] > 0.0, "schedule: every phase must include all three levels");
                require(ph.ceiling[l] >= 0.0 && ph.ceiling[l] <= 1.0,
                        "schedule: ceilings must lie in [0,1]");
                if (p > 0)
                    require(ph.ceiling[l] >= phases[p - 1].ceiling[l],
                            "schedule: ceilings must be non-decreasing across phases");
                sum += ph.mix[l];
            }
            require(std::abs(sum - 1.0) <= 1e-9, "schedule: phase mix must sum to 1");
        }
    }

    njson to_json() const {
        njson phases_j = njson::array();
        for (const auto& ph : phases) {
            phases_j.push_back(
                njson{{"name", ph.name},
                      {"total", ph.total},
                      {"mix", njson{{"bachelor", ph.mix[0]},
                                    {"master", ph.mix[1]},
                                    {"doctor", ph.mix[2]}}},
                      {"ceiling", njson{{"bachelor", ph.ceiling[0]},
                                        {"master", ph.ceiling[1]},
                                        {"doctor", ph.ceiling[2]}}}});
        }
        return njson{{"schema_version", 1}, {"phases", phases_j}};
    }

    static CurriculumSchedule from_json(const njson& j) {
        require(j.at("schema_version").get<int>() == 1, "schedule: schema_version must be 1");
        CurriculumSchedule s;
        for (const auto& e : j.at("phases")) {
            PhaseSpec ph;
            ph.name = e.at("name").get<std::string>();
            ph.total = e.at("total").get<long>();
            ph.mix = {e.at("mix").at("bachelor").get<double>(),
                      e.at("mix").at("master").get<double>(),
                      e.at("mix").at("doctor").get<double>()};
            ph.ceiling = {e.at("ceiling").at("bachelor").get<double>(),
                          e.at("ceiling").at("master").get<double>(),
                          e.at("ceiling").at("doctor").get<double>()};
            s.phases.push_back(std::move(ph));
        }
        s.validate();
        return s;
    }

    // Four phases interpolating from the 70/20/10 foundation mix to uniform,
    // with rising difficulty ceilings.
    static CurriculumSchedule default_schedule(long per_phase_total = 100) {
        CurriculumSchedule s;
        const double third = 1.0 / 3.0;
        s.phases = {
            {"foundation", per_phase_total, {0.70, 0.20, 0.10}, {0.5, 0.5, 0.5}},
            {"expansion", per_phase_total, {0.50, 0.30, 0.20}, {0.7, 0.7, 0.7}},
            {"consolidation", per_phase_total, {0.40, 0.30, 0.30}, {0.9, 0.9, 0.9}},
            {"uniform", per_phase_total, {third, third, third}, {1.0, 1.0, 1.0}},
        };
        return s;
    }
};

// Hamilton/largest-remainder apportionment: counts differ from
// fraction*total by less than one and sum exactly to total. Remainder ties
// go to the lower level index.
inline std::array<long, kLevelCount> largest_remainder(const std::array<double, kLevelCount>& mix,
                                                       long total) {
    std::array<long, kLevelCount> counts{};
    std::array<double, kLevelCount> rem{};
    long assigned = 0;
    for (int l = 0; l < kLevelCount; ++l) {
        const double exact = mix[l] * static_cast<double>(total);
        counts[l] = static_cast<long>(std::floor(exact));
        rem[l] = exact - std::floor(exact);
        assigned += counts[l];
    }
    long leftover = total - assigned;
    std::array<int, kLevelCount> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&rem](int a, int b) {
        if (rem[a] != rem[b]) return rem[a] > rem[b];
        return a < b;
    });
    for (int i = 0; leftover > 0; ++i, --leftover) counts[order[static_cast<std::size_t>(i)]] += 1;
    return counts;
}

struct RecordMeta {
    std::string id;
    Level level = Level::Bachelor;
    long token_count = 0;
    double difficulty = 0.0;
};

struct PhaseStream {
    std::string name;
    std::array<long, kLevelCount> counts{};
    std::vector<std::string> ids; // seeded within-phase order
};

// Draws each phase independently: per level, the eligible pool (difficulty
// <= ceiling) is shuffled on a named substream and the exact apportioned
// count is taken; the combined phase is then shuffled again. Errors name the
// phase and level whose pool is too small.
inline std::vector<PhaseStream> curriculum_stream(const std::vector<RecordMeta>& records,
                                                  const CurriculumSchedule& schedule,
                                                  std::uint64_t seed) {
    schedule.validate();
    std::array<std::vector<const RecordMeta*>, kLevelCount> by_level;
    for (const auto& r : records) by_level[static_cast<int>(r.level)].push_back(&r);
    for (auto& pool : by_level)
        std::sort(pool.begin(), pool.end(),
                  [](const RecordMeta* a, const RecordMeta* b) { return a->id < b->id; });

    std::vector<PhaseStream> out;
    for (std::size_t p = 0; p < schedule.phases.size(); ++p) {
        const PhaseSpec& ph = schedule.phases[p];
        PhaseStream stream;
        stream.name = ph.name;
        stream.counts = largest_remainder(ph.mix, ph.total);
        for (int l = 0; l < kLevelCount; ++l) {
            std::vector<std::string> eligible;
            for (const RecordMeta* r : by_level[l])
                if (r->difficulty <= ph.ceiling[l]) eligible.push_back(r->id);
            if (static_cast<long>(eligible.size()) < stream.counts[l])
                throw std::invalid_argument(
                    "curriculum: phase '" + ph.name + "' needs " +
                    std::to_string(stream.counts[l]) + " " +
                    to_string(static_cast<Level>(l)) + " records but only " +
                    std::to_string(eligible.size()) + " are eligible");
            SplitMix64 rng(substream_seed(seed, "curriculum-select", p, static_cast<std::uint64_t>(l)));
            seeded_shuffle(eligible, rng);
            eligible.resize(static_cast<std::size_t>(stream.counts[l]));
            stream.ids.insert(stream.ids.end(), eligible.begin(), eligible.end());
        }
        SplitMix64 rng(substream_seed(seed, "curriculum-order", p));
        seeded_shuffle(stream.ids, rng);
        out.push_back(std::move(stream));
    }
    return out;
}

inline njson stream_to_json(const std::vector<PhaseStream>& phases, std::uint64_t seed) {
    njson phases_j = njson::array();
    for (const auto& ph : phases) {
        phases_j.push_back(njson{{"name", ph.name},
                                 {"counts", njson{{"bachelor", ph.counts[0]},
                                                  {"master", ph.counts[1]},
                                                  {"doctor", ph.counts[2]}}},
                                 {"ids", ph.ids}});
    }
    return njson{{"schema_version", 1}, {"seed", seed}, {"phases", phases_j}};
}

} // namespace enedina::curriculum
