#pragma once

#include "vaxsim/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace vaxsim {

/// One weighted microdata row. `weight` is the number of real persons the
/// record stands for; all downstream arithmetic works on weighted mass.
struct PersonRecord {
    std::string person_id;
    std::string household_id; // empty for group-quarters residents
    double weight = 0.0;
    int age = 0;
    Sex sex = Sex::female;
    Race race = Race::white;
    bool hispanic = false;
    std::optional<std::string> industry_code;
    std::optional<std::string> occupation_code;
    std::optional<MilitaryStatus> military_status;
    bool gave_birth_past_year = false;
    bool group_quarters = false;
    std::string state;
};

struct HouseholdRecord {
    std::string household_id;
    std::optional<double> family_income; // constant dollars
    std::optional<double> property_value;
    std::optional<double> gross_rent;
    std::optional<double> first_mortgage;
    bool owner_occupied = false;
    bool vehicle_available = false;
    bool telephone_or_data = false;
    bool complete_plumbing = false;
    int persons_count = 0;
    int rooms_count = 0;
    bool single_parent_with_children = false;
    std::optional<double> poverty_ratio; // family-income-to-poverty, percent
};

using PersonPredicate = std::function<bool(const PersonRecord &)>;

/// Immutable weighted population, optionally with a household table.
/// Construction validates weights, household links and the renter/owner
/// missing-component invariants; afterwards it is safe to share across
/// parallel readers.
class Population {
  public:
    Population() = default;
    Population(std::vector<PersonRecord> persons, std::vector<HouseholdRecord> households);

    const std::vector<PersonRecord> &persons() const { return persons_; }
    const std::vector<HouseholdRecord> &households() const { return households_; }
    bool has_households() const { return !households_.empty(); }

    double weighted_total() const { return weighted_total_; }
    double weighted_total(const PersonPredicate &predicate) const;

    /// Index into households(), or nullopt when the person has no link.
    std::optional<std::size_t> household_index(const PersonRecord &p) const;

    /// Person indices per household, in persons() order.
    const std::vector<std::vector<std::size_t>> &household_members() const { return household_members_; }

  private:
    std::vector<PersonRecord> persons_;
    std::vector<HouseholdRecord> households_;
    std::unordered_map<std::string, std::size_t> household_by_id_;
    std::vector<std::vector<std::size_t>> household_members_;
    double weighted_total_ = 0.0;
};

/// Column orders for the person/household CSV schemas. Booleans are 0/1 and
/// the empty string means missing for optional fields.
extern const std::vector<std::string> kPersonCsvHeader;
extern const std::vector<std::string> kHouseholdCsvHeader;

Population ingest_population(const std::filesystem::path &person_csv,
                             const std::optional<std::filesystem::path> &household_csv = std::nullopt);

void write_population(const Population &population, const std::filesystem::path &person_csv,
                      const std::optional<std::filesystem::path> &household_csv = std::nullopt);

} // namespace vaxsim
