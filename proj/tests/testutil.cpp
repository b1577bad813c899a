#include "testutil.hpp"

namespace testutil {

vaxsim::SyntheticConfig small_synthetic_config(double population_size, double weight) {
    using namespace vaxsim;
    SyntheticConfig c;
    c.seed = 7;
    c.population_size = population_size;
    c.record_weight = weight;
    c.group_quarters_fraction = 0.024;
    c.race_homogeneity = 0.9;
    c.household_size_distribution = {{1, 0.28}, {2, 0.345}, {3, 0.15}, {4, 0.127}, {5, 0.06}, {6, 0.028}, {7, 0.01}};
    c.race[std::size_t(Race::white)] = 0.60;
    c.race[std::size_t(Race::black)] = 0.128;
    c.race[std::size_t(Race::indigenous)] = 0.027;
    c.race[std::size_t(Race::asian)] = 0.056;
    c.race[std::size_t(Race::pacific_islander)] = 0.004;
    c.race[std::size_t(Race::other)] = 0.10;
    c.race[std::size_t(Race::multiracial)] = 0.085;
    c.hispanic_rate = 0.183;
    c.female_share = 0.508;
    c.age_bins = {{0, 0, 0.012}, {1, 2, 0.023}, {3, 18, 0.20}, {19, 44, 0.345}, {45, 64, 0.245}, {65, 94, 0.175}};
    c.states = {{"CA", 0.30}, {"TX", 0.25}, {"NY", 0.25}, {"MA", 0.20}};
    c.gave_birth_rate = 0.052;

    auto slot = [](std::string name, double share, double female, std::vector<std::string> industries,
                   std::vector<std::string> occupations = {}) {
        OccupationSlot s;
        s.name = std::move(name);
        s.share = share;
        s.female_share = female;
        s.industry_codes = std::move(industries);
        s.occupation_codes = std::move(occupations);
        return s;
    };
    c.occupation_slots = {
        slot("hospitals", 0.0185, 0.75, {"622M"}),
        slot("outpatient", 0.02, 0.75, {"6211", "6214", "6216"}),
        slot("ltcf", 0.009, 0.8, {"6231", "623M"}),
        slot("pharmacists", 0.0028, 0.6, {}, {"291051", "292052"}),
        slot("ems_law_fire", 0.0086, 0.25,
             {}, {"292042", "292043", "533011", "331011", "331012", "331021", "333050", "333012", "332011"}),
        slot("natsec", 0.004, 0.35, {"928P"}),
        slot("guard", 0.0002, 0.2, {"928110P6", "928110P7"}),
        slot("utilities", 0.0138, 0.35,
             {"211", "2211P", "2212P", "22132", "2213M", "221MP", "22S", "517311", "517Z", "522M"}),
        slot("government", 0.0077, 0.5, {"92113", "92119", "9211MP", "923", "92M1", "92M2", "92MP"}),
        slot("other_work", 0.25, 0.5, {"81XX", "7211"}),
    };
    OccupationSlot military;
    military.name = "active_duty";
    military.share = 0.0015;
    military.female_share = 0.17;
    military.military_status = MilitaryStatus::active_duty;
    c.occupation_slots.push_back(military);

    c.economics.race_income_multiplier[std::size_t(Race::black)] = 0.60;
    c.economics.race_income_multiplier[std::size_t(Race::indigenous)] = 0.58;
    c.economics.race_income_multiplier[std::size_t(Race::white)] = 1.08;
    c.economics.rooms_distribution = {{2, 0.06}, {3, 0.11}, {4, 0.21}, {5, 0.24}, {6, 0.18}, {7, 0.11}, {8, 0.09}};

    c.risk_survey.records = 20000;
    c.risk_survey.age_base_rates = {0.15, 0.17, 0.20, 0.23, 0.26, 0.30, 0.34, 0.39, 0.44, 0.50, 0.55, 0.60, 0.65, 0.70};
    c.risk_survey.race_multiplier[std::size_t(Race::black)] = 1.35;
    c.risk_survey.race_multiplier[std::size_t(Race::indigenous)] = 1.45;
    c.risk_survey.hispanic_multiplier = 1.1;
    return c;
}

} // namespace testutil
