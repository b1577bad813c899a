#pragma once

#include "vaxsim/allocation.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vaxsim {

/// The six race/ethnicity classes the death-rate source reports.
enum class DeathRace : std::uint8_t { indigenous, asian, black, latino, white, pacific_islander };
inline constexpr int kDeathRaceCount = 6;

std::string_view to_string(DeathRace r);
std::optional<DeathRace> parse_death_race(std::string_view s);

struct RaceDeathEntry {
    double population_share = 0.0;
    double death_rate = 0.0;
    double age_adjusted_death_rate = 0.0;
};

struct RaceDeathTable {
    std::array<RaceDeathEntry, kDeathRaceCount> entries;

    const RaceDeathEntry &at(DeathRace r) const { return entries[std::size_t(r)]; }
};

RaceDeathTable load_race_death_table(const std::filesystem::path &path);

/// Sum of population*rate over the chosen races divided by the same sum
/// over all six classes; deaths of unreported classes are implicitly
/// apportioned in proportion.
double death_share_estimate(const RaceDeathTable &table, const std::set<DeathRace> &races,
                            bool age_adjusted = false);

/// Per-supply-point statistic over a sweep: a population-share indicator or
/// the allocation-weighted mean age. Undefined (absent) at supply 0.
struct GroupShareStatistic {
    enum class Kind : std::uint8_t { indicator, mean_age };
    Kind kind = Kind::indicator;
    CellPredicate predicate; // indicator only

    static GroupShareStatistic indicator(CellPredicate p) { return {Kind::indicator, std::move(p)}; }
    static GroupShareStatistic mean_age() { return {Kind::mean_age, nullptr}; }
};

std::vector<std::optional<double>> group_share_curve(const Strata &strata,
                                                     const std::vector<AllocationResult> &sweep,
                                                     const GroupShareStatistic &statistic);

struct StateOutcome {
    double cases = 0.0;
    double deaths = 0.0;
};
using StateOutcomeTable = std::map<std::string, StateOutcome>;

StateOutcomeTable load_state_outcomes(const std::filesystem::path &path);

enum class FairShareBenchmark : std::uint8_t { population, cases, deaths };

std::string_view to_string(FairShareBenchmark b);

struct FairShareEntry {
    std::string state;
    double index = 0.0;
    bool infinite = false; // vaccines with a zero benchmark share
};

/// index = (state share of allocated vaccines) / (state share of the
/// benchmark); 1 means exact proportionality.
std::vector<FairShareEntry> state_fair_share_index(const Strata &strata, const AllocationResult &allocation,
                                                   const StateOutcomeTable &outcomes, FairShareBenchmark benchmark);

} // namespace vaxsim
