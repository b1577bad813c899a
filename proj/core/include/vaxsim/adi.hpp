#pragma once

#include "vaxsim/population.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vaxsim {

/// The 17 deprivation-score components, in canonical order. Percent
/// components live on a 0-100 scale; the four dollar components are in
/// constant dollars; income disparity is a log quantity.
enum class AdiComponent : std::uint8_t {
    education_lt9y,
    education_hs_or_more,
    white_collar,
    median_family_income,
    income_disparity,
    median_home_value,
    median_gross_rent,
    median_mortgage,
    owner_occupied,
    unemployment,
    poverty,
    below_150_poverty,
    single_parent,
    no_vehicle,
    no_telephone,
    incomplete_plumbing,
    crowding,
};
inline constexpr int kAdiComponentCount = 17;

std::string_view to_string(AdiComponent c);
std::optional<AdiComponent> parse_adi_component(std::string_view s);
bool adi_component_is_percent(AdiComponent c);

/// Ordered factor-score coefficients, one per component.
struct AdiCoefficients {
    std::array<double, kAdiComponentCount> values{};
};

/// The 1990 tract-index factor-score coefficients.
AdiCoefficients default_adi_coefficients();

enum class IncomeDisparityMode : std::uint8_t {
    zero,              // fixed at 0 for every family
    national_log_ratio // ln(100 * low-income mass / high-income mass), constant
};

struct AdiConfig {
    AdiCoefficients coefficients = default_adi_coefficients();
    IncomeDisparityMode income_disparity_mode = IncomeDisparityMode::zero;
    std::vector<std::string> white_collar_industry_codes;
    std::map<int, double> poverty_thresholds; // by family size; clamped above
};

AdiConfig load_adi_config(const std::filesystem::path &path);
AdiConfig parse_adi_config(const std::string &json_text);

double poverty_threshold(const AdiConfig &config, int family_size);

struct FamilyAdiComponents {
    std::string family_id;
    std::array<std::optional<double>, kAdiComponentCount> values;

    void set(AdiComponent c, double v) { values[std::size_t(c)] = v; }
    std::optional<double> get(AdiComponent c) const { return values[std::size_t(c)]; }
};

/// A scoring unit: a whole household when it has a family income, otherwise
/// each resident on their own. Group-quarters persons belong to no family.
struct Family {
    std::string family_id;
    std::optional<std::size_t> household; // index into population.households()
    std::vector<std::size_t> members;     // indices into population.persons()
    bool solo = false;                    // poverty judged against the threshold table
};

struct FamilyTable {
    std::vector<Family> families;
    /// Family index per person; nullopt for group-quarters persons.
    std::vector<std::optional<std::size_t>> family_of_person;
};

FamilyTable build_family_table(const Population &population);

std::vector<FamilyAdiComponents> derive_family_components(const Population &population, const FamilyTable &families,
                                                          const AdiConfig &config);

/// Weighted sum over present components; missing components count as 0.
double compute_raw_adi(const FamilyAdiComponents &components, const AdiCoefficients &coefficients);

struct AdiAssignment {
    std::string family_id;
    double raw_score = 0.0;
    std::optional<int> decile; // 1..10; absent only for group quarters
    bool high_adi = false;
};

bool flag_high_adi(const std::optional<int> &decile);

/// Person-weighted national deciles of the family raw scores over everyone
/// outside group quarters. Families are kept whole: a family straddling a
/// decile boundary lands entirely in the lower decile.
struct AdiResult {
    std::vector<AdiAssignment> assignments;            // one per family, family order
    std::vector<std::optional<int>> decile_by_person;  // absent for group quarters
    std::vector<bool> high_adi_by_person;              // false for group quarters
    std::vector<double> raw_by_person;                 // 0 for group quarters
};

AdiResult assign_national_deciles(const Population &population, const FamilyTable &families,
                                  const std::vector<double> &raw_scores);

/// Full pipeline step: families, components, raw scores, deciles.
AdiResult compute_adi(const Population &population, const AdiConfig &config);

void write_adi_assignments(const std::vector<AdiAssignment> &assignments, const std::filesystem::path &path);

} // namespace vaxsim
