#include "vaxsim/equity.hpp"

#include "vaxsim/csv.hpp"
#include "vaxsim/errors.hpp"

namespace vaxsim {

namespace {

constexpr std::string_view kDeathRaceNames[kDeathRaceCount] = {
    "indigenous", "asian", "black", "latino", "white", "pacific_islander",
};

} // namespace

std::string_view to_string(DeathRace r) { return kDeathRaceNames[std::size_t(r)]; }

std::optional<DeathRace> parse_death_race(std::string_view s) {
    for (int i = 0; i < kDeathRaceCount; ++i)
        if (kDeathRaceNames[i] == s)
            return DeathRace(i);
    return std::nullopt;
}

RaceDeathTable load_race_death_table(const std::filesystem::path &path) {
    csv::Reader reader(path, {"race", "population_share", "death_rate", "age_adjusted_death_rate"});
    RaceDeathTable table;
    std::array<bool, kDeathRaceCount> seen{};
    while (auto row = reader.next()) {
        auto race = parse_death_race((*row)[0]);
        if (!race)
            reader.fail("unknown race class '" + (*row)[0] + "'");
        if (seen[std::size_t(*race)])
            reader.fail("duplicate race class '" + (*row)[0] + "'");
        seen[std::size_t(*race)] = true;
        RaceDeathEntry e;
        e.population_share = reader.number(*row, 1);
        e.death_rate = reader.number(*row, 2);
        e.age_adjusted_death_rate = reader.number(*row, 3);
        if (e.population_share < 0.0 || e.death_rate < 0.0 || e.age_adjusted_death_rate < 0.0)
            reader.fail("negative share or rate");
        table.entries[std::size_t(*race)] = e;
    }
    for (int i = 0; i < kDeathRaceCount; ++i)
        if (!seen[i])
            throw ValidationError(path.string() + ": missing race class '" +
                                  std::string(kDeathRaceNames[i]) + "'");
    return table;
}

double death_share_estimate(const RaceDeathTable &table, const std::set<DeathRace> &races, bool age_adjusted) {
    auto rate = [&](const RaceDeathEntry &e) { return age_adjusted ? e.age_adjusted_death_rate : e.death_rate; };
    double numerator = 0.0, denominator = 0.0;
    for (int i = 0; i < kDeathRaceCount; ++i) {
        const auto &e = table.entries[std::size_t(i)];
        double product = e.population_share * rate(e);
        denominator += product;
        if (races.count(DeathRace(i)))
            numerator += product;
    }
    if (denominator <= 0.0)
        throw ValidationError("death share estimate: zero denominator");
    return numerator / denominator;
}

std::vector<std::optional<double>> group_share_curve(const Strata &strata,
                                                     const std::vector<AllocationResult> &sweep,
                                                     const GroupShareStatistic &statistic) {
    std::vector<std::optional<double>> curve;
    curve.reserve(sweep.size());
    for (const auto &result : sweep) {
        if (result.total_allocated <= 0.0) {
            curve.push_back(std::nullopt);
            continue;
        }
        if (statistic.kind == GroupShareStatistic::Kind::mean_age)
            curve.push_back(allocated_mean_age(strata, result));
        else
            curve.push_back(allocated_share(strata, result, statistic.predicate));
    }
    return curve;
}

StateOutcomeTable load_state_outcomes(const std::filesystem::path &path) {
    csv::Reader reader(path, {"state", "cases", "deaths"});
    StateOutcomeTable table;
    while (auto row = reader.next()) {
        StateOutcome o;
        o.cases = reader.number(*row, 1);
        o.deaths = reader.number(*row, 2);
        if (o.cases < 0.0 || o.deaths < 0.0)
            reader.fail("negative count");
        if (!table.emplace((*row)[0], o).second)
            reader.fail("duplicate state '" + (*row)[0] + "'");
    }
    return table;
}

std::string_view to_string(FairShareBenchmark b) {
    switch (b) {
    case FairShareBenchmark::population: return "population";
    case FairShareBenchmark::cases: return "cases";
    case FairShareBenchmark::deaths: return "deaths";
    }
    return "?";
}

std::vector<FairShareEntry> state_fair_share_index(const Strata &strata, const AllocationResult &allocation,
                                                   const StateOutcomeTable &outcomes,
                                                   FairShareBenchmark benchmark) {
    if (allocation.total_allocated <= 0.0)
        throw ValidationError("fair-share indices need a positive allocated mass");

    std::map<std::string, double> vaccine_mass, population_mass;
    for (std::size_t c = 0; c < strata.cells().size(); ++c) {
        const auto &cell = strata.cells()[c];
        vaccine_mass[cell.state] += allocation.allocated[c];
        population_mass[cell.state] += cell.mass;
    }

    double benchmark_total = 0.0;
    auto benchmark_value = [&](const std::string &state) -> double {
        if (benchmark == FairShareBenchmark::population)
            return population_mass[state];
        auto it = outcomes.find(state);
        if (it == outcomes.end())
            throw ValidationError("state " + state + " missing from the outcome table");
        return benchmark == FairShareBenchmark::cases ? it->second.cases : it->second.deaths;
    };
    for (const auto &[state, mass] : vaccine_mass) {
        (void)mass;
        benchmark_total += benchmark_value(state);
    }
    if (benchmark_total <= 0.0)
        throw ValidationError("benchmark total is zero");

    std::vector<FairShareEntry> entries;
    for (const auto &[state, mass] : vaccine_mass) {
        FairShareEntry e;
        e.state = state;
        double vaccine_share = mass / allocation.total_allocated;
        double benchmark_share = benchmark_value(state) / benchmark_total;
        if (benchmark_share <= 0.0) {
            if (vaccine_share > 0.0)
                e.infinite = true;
            e.index = 0.0;
        } else {
            e.index = vaccine_share / benchmark_share;
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

} // namespace vaxsim
