#pragma once

#include "vaxsim/population.hpp"
#include "vaxsim/rng.hpp"
#include "vaxsim/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vaxsim {

struct RiskSurveyRecord; // risk.hpp

/// Target share of the total weighted population holding a particular
/// industry/occupation code bundle; drawn among persons aged 19-64. The
/// race multipliers tilt who fills the slot while preserving its total
/// share; the slot's realized race mix is marginal * multiplier, normalized.
struct OccupationSlot {
    std::string name;
    double share = 0.0;
    double female_share = 0.5;
    std::array<double, kRaceCount> race_multiplier{1, 1, 1, 1, 1, 1, 1};
    std::vector<std::string> industry_codes;
    std::vector<std::string> occupation_codes;
    std::optional<MilitaryStatus> military_status;
};

struct AgeBin {
    int lo = 0;
    int hi = 0;
    double share = 0.0;
};

struct LogNormalSpec {
    double mu = 0.0;
    double sigma = 1.0;
};

struct EconomicsConfig {
    LogNormalSpec income{10.9, 0.75};
    std::array<double, kRaceCount> race_income_multiplier{1, 1, 1, 1, 1, 1, 1};
    double missing_income_rate = 0.05;
    double owner_rate = 0.64;
    double mortgage_rate = 0.65; // owners carrying a first mortgage
    LogNormalSpec property_value{12.2, 0.6};
    LogNormalSpec gross_rent{6.9, 0.4};
    LogNormalSpec first_mortgage{7.1, 0.5};
    double vehicle_rate = 0.91;
    double telephone_rate = 0.975;
    double plumbing_rate = 0.995;
    double single_parent_rate = 0.12; // households of 2+ only
    std::map<int, double> rooms_distribution;
    double poverty_threshold_base = 13000.0;
    double poverty_threshold_per_person = 4700.0;
    double poverty_ratio_missing_rate = 0.02;
};

/// Parameters for the synthetic health-survey sample the risk table is
/// built from. Rates are per fixed survey age bin, scaled per race and
/// Hispanic status, clamped to [0, 1].
struct RiskSurveyConfig {
    int records = 60000;
    std::vector<double> age_base_rates; // one per risk age bin (14)
    std::array<double, kRaceCount> race_multiplier{1, 1, 1, 1, 1, 1, 1};
    double hispanic_multiplier = 1.0;
};

struct SyntheticConfig {
    std::uint64_t seed = 0;
    double population_size = 0.0; // weighted persons
    double record_weight = 25.0;
    double group_quarters_fraction = 0.0;
    double race_homogeneity = 0.9; // chance a member shares the head's race
    std::map<int, double> household_size_distribution;
    std::array<double, kRaceCount> race{};
    double hispanic_rate = 0.0;
    double female_share = 0.5;
    std::vector<AgeBin> age_bins;
    std::vector<std::pair<std::string, double>> states;
    double gave_birth_rate = 0.0; // among females aged 15-50
    std::vector<OccupationSlot> occupation_slots;
    EconomicsConfig economics;
    RiskSurveyConfig risk_survey;
};

/// Throws ValidationError when a partition does not sum to 1 (within 1e-9),
/// a proportion leaves [0,1], or slot shares exceed the adult mass.
void validate(const SyntheticConfig &config);

SyntheticConfig load_synthetic_config(const std::filesystem::path &path);
SyntheticConfig parse_synthetic_config(const std::string &json_text);

/// Deterministic for equal (config, seed): equal configs give byte-identical
/// populations. Group-quarters records carry no household link.
Population generate_synthetic(const SyntheticConfig &config);

std::vector<RiskSurveyRecord> generate_risk_survey(const SyntheticConfig &config);

} // namespace vaxsim
