#pragma once

#include "vaxsim/population.hpp"
#include "vaxsim/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vaxsim {

enum class RiskCondition : std::uint8_t {
    skin_cancer,
    other_cancer,
    kidney_disease,
    copd,
    obese_bmi30,
    coronary_heart_disease,
    diabetes,
};
inline constexpr int kRiskConditionCount = 7;

/// One health-survey row. Demographics are optional so that rows with
/// unknown values can flow through to the table build, which drops them.
struct RiskSurveyRecord {
    int age = 18;
    std::optional<Sex> sex;
    std::optional<Race> race;
    std::optional<bool> hispanic;
    std::uint8_t conditions = 0; // bitmask over RiskCondition
    double survey_weight = 1.0;

    bool high_risk() const { return conditions != 0; }
    void set_condition(RiskCondition c) { conditions |= std::uint8_t(1u << int(c)); }
};

/// The 14 survey age bins: 18-24, then 5-year bins to 84, then 85+.
inline constexpr int kRiskAgeBinCount = 14;

/// Bin index for an age; ages under 18 use the 18-24 bin.
int risk_age_bin(int age);

std::string risk_age_bin_label(int bin);

/// High-risk probability per (age bin, sex, race, hispanic) cell, with
/// per-age-bin marginals as fallback for combinations the survey lacks.
class RiskTable {
  public:
    struct CellKey {
        int age_bin;
        Sex sex;
        Race race;
        bool hispanic;
        auto operator<=>(const CellKey &) const = default;
    };

    void set_cell(CellKey key, double probability);
    void set_age_marginal(int bin, double probability);

    std::optional<double> cell(CellKey key) const;
    std::optional<double> age_marginal(int bin) const;

    /// Lookup policy: exact cell, else the age-bin marginal, else 0.
    double probability_for(const PersonRecord &p) const;

    std::size_t populated_cells() const { return cells_.size(); }

  private:
    std::map<CellKey, double> cells_;
    std::map<int, double> age_marginals_;
};

/// Weighted high-risk proportion per demographic cell. A record is
/// high-risk iff it reports at least one condition; rows with any unknown
/// demographic are dropped.
RiskTable build_risk_table(const std::vector<RiskSurveyRecord> &records);

/// One independent draw per person with the cell probability; persons under
/// 18 use their sex/race/ethnicity's 18-24 cell. Keyed by (seed, person_id),
/// so results do not depend on person order.
std::vector<bool> impute_high_risk(const Population &population, const RiskTable &table, std::uint64_t seed);

extern const std::vector<std::string> kRiskSurveyCsvHeader;

std::vector<RiskSurveyRecord> load_risk_survey(const std::filesystem::path &path);
void write_risk_survey(const std::vector<RiskSurveyRecord> &records, const std::filesystem::path &path);

} // namespace vaxsim
