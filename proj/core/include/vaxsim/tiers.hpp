#pragma once

#include "vaxsim/population.hpp"
#include "vaxsim/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vaxsim {

/// A conjunction of per-field tests against a person and the derived flags
/// (risk, infant class, household contact, pregnancy duplicate).
struct PredicateAtom {
    enum class Field : std::uint8_t {
        age,
        sex,
        race,
        hispanic,
        state,
        industry_code,
        occupation_code,
        military_status,
        gave_birth_past_year,
        group_quarters,
        high_risk,
        infant_class,
        pregnant_duplicate,
        household_contact_young_infant,
    };
    enum class Op : std::uint8_t { in_list, equals_bool, between };

    Field field = Field::age;
    Op op = Op::in_list;
    std::vector<std::string> values; // in_list
    bool bool_value = false;         // equals_bool
    int lo = 0, hi = 0;              // between (age)
};

struct Predicate {
    std::vector<PredicateAtom> all;                  // every atom must hold
    std::vector<std::vector<PredicateAtom>> any_of;  // within each list, at least one
};

/// Splits some or all of a tier-1 group's members between a frontline
/// subtier and a rest subtier with an independent coin per member. A rule
/// with codes applies only to members holding one of them.
struct FrontlineRule {
    std::vector<std::string> codes;
    PredicateAtom::Field code_field = PredicateAtom::Field::occupation_code;
    double split = 0.5;
    int frontline_subtier = 0;
    int rest_subtier = 0;
};

enum class AssignmentMode : std::uint8_t { probabilistic, take_all, demographic };

struct GroupDefinition {
    std::string id;
    int tier = 0;
    std::optional<int> subtier; // tier 1 only, absent when frontline_rules used
    AssignmentMode mode = AssignmentMode::demographic;
    double external_size = 0.0; // persons, unscaled
    Predicate predicate;
    std::vector<std::string> exclusions; // earlier groups whose members leave this superset
    std::vector<FrontlineRule> frontline_rules;

    bool uses_pregnancy_flag() const;
};

struct TierSchedule {
    std::string name;
    double reference_population = 0.0; // population the external sizes refer to
    std::vector<GroupDefinition> groups;

    const GroupDefinition *find(const std::string &id) const;
    /// Distinct (tier, subtier) ranks the schedule can produce, best first.
    std::vector<Rank> ranks() const;
};

TierSchedule load_tier_schedule(const std::filesystem::path &path);
TierSchedule parse_tier_schedule(const std::string &json_text);

struct SupersetProbability {
    double probability = 0.0;
    bool take_all = false;      // superset no larger than the external estimate
    bool empty_superset = false;
};

/// min(1, external_size / superset_mass), with the undercount fallback:
/// when the superset is no larger than the external estimate the whole
/// superset is taken and the take-all diagnostic is raised.
SupersetProbability superset_probability(double external_size, double superset_mass);

struct GroupDiagnostic {
    std::string group_id;
    double superset_mass = 0.0;
    double external_size = 0.0; // scaled
    double probability = 0.0;
    bool take_all = false;
    bool empty_superset = false;
};

/// Month-class draw for age-0 persons plus the derived household-contact
/// flag. Everyone sharing a household id with a 0-5-month infant counts as
/// a contact, the infant included.
struct InfantSplit {
    std::vector<std::optional<InfantClass>> infant_class;
    std::vector<bool> household_contact;
};

InfantSplit split_infants(const Population &population, std::uint64_t seed);

/// Everything the tier stages accumulate for one population.
struct TierState {
    Population population; // augmented with pregnancy duplicates
    std::vector<bool> high_risk;
    std::vector<std::optional<InfantClass>> infant_class;
    std::vector<bool> household_contact;
    std::vector<bool> pregnant_duplicate;
    std::vector<std::uint64_t> memberships; // bit per schedule group index
    std::vector<Rank> highest;              // filled by resolve_highest_tier
    std::vector<GroupDiagnostic> diagnostics;
    std::vector<std::size_t> duplicate_sources; // original index per appended duplicate
    double original_total = 0.0;

    bool is_member(std::size_t person, std::size_t group) const {
        return (memberships[person] >> group) & 1u;
    }
};

/// Runs the schedule in order: supersetting draws for probabilistic groups,
/// whole-superset assignment for take-all groups, predicate assignment for
/// demographic groups. Pregnancy-flag groups are skipped here; duplicates
/// join them during synthesize_pregnancy_cohort.
TierState assign_group_membership(const Population &population, const TierSchedule &schedule,
                                  const std::vector<bool> &high_risk, const InfantSplit &infants,
                                  double external_scale, std::uint64_t seed);

/// Duplicates each birth-giving person not already ranked above tier 1
/// subtier 6, with an independent 268/365 coin; duplicates are one year
/// younger, marked pregnant, and belong only to the pregnancy groups.
void synthesize_pregnancy_cohort(TierState &state, const TierSchedule &schedule, std::uint64_t seed);

/// Lexicographic best (tier, subtier) over memberships. A person in no
/// group at all is a classification error.
void resolve_highest_tier(TierState &state, const TierSchedule &schedule);

struct CensusRow {
    Rank rank;
    double weighted_mass = 0.0;
    double share_black_indigenous = 0.0;
    double share_high_adi = 0.0;
    double mean_age = 0.0;
    double share_female = 0.0;
};

/// Per-rank masses and demographics, each person counted only at their
/// highest rank. high_adi runs parallel to persons (false for group
/// quarters).
std::vector<CensusRow> tier_census(const TierState &state, const TierSchedule &schedule,
                                   const std::vector<bool> &high_adi);

void write_tier_census(const std::vector<CensusRow> &census, const std::filesystem::path &path);

/// Stage substream names, for the run manifest.
std::vector<std::string> tier_substreams(const TierSchedule &schedule);

} // namespace vaxsim
