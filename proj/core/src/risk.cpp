#include "vaxsim/risk.hpp"

#include "vaxsim/csv.hpp"
#include "vaxsim/errors.hpp"
#include "vaxsim/rng.hpp"

namespace vaxsim {

int risk_age_bin(int age) {
    if (age < 25)
        return 0; // under-18s extrapolate from the 18-24 bin
    if (age >= 85)
        return 13;
    return (age - 25) / 5 + 1;
}

std::string risk_age_bin_label(int bin) {
    if (bin == 0)
        return "18-24";
    if (bin == 13)
        return "85+";
    int lo = 25 + (bin - 1) * 5;
    return std::to_string(lo) + "-" + std::to_string(lo + 4);
}

void RiskTable::set_cell(CellKey key, double probability) {
    if (probability < 0.0 || probability > 1.0)
        throw ValidationError("risk cell probability outside [0,1]");
    cells_[key] = probability;
}

void RiskTable::set_age_marginal(int bin, double probability) { age_marginals_[bin] = probability; }

std::optional<double> RiskTable::cell(CellKey key) const {
    auto it = cells_.find(key);
    if (it == cells_.end())
        return std::nullopt;
    return it->second;
}

std::optional<double> RiskTable::age_marginal(int bin) const {
    auto it = age_marginals_.find(bin);
    if (it == age_marginals_.end())
        return std::nullopt;
    return it->second;
}

double RiskTable::probability_for(const PersonRecord &p) const {
    int bin = risk_age_bin(p.age);
    if (auto c = cell({bin, p.sex, p.race, p.hispanic}))
        return *c;
    if (auto m = age_marginal(bin))
        return *m;
    return 0.0;
}

RiskTable build_risk_table(const std::vector<RiskSurveyRecord> &records) {
    struct Acc {
        double mass = 0.0;
        double high = 0.0;
    };
    std::map<RiskTable::CellKey, Acc> cells;
    std::map<int, Acc> bins;
    for (const auto &r : records) {
        if (!r.sex || !r.race || !r.hispanic)
            continue; // unknown demographics are omitted
        int bin = risk_age_bin(r.age);
        auto &cell = cells[{bin, *r.sex, *r.race, *r.hispanic}];
        cell.mass += r.survey_weight;
        auto &marginal = bins[bin];
        marginal.mass += r.survey_weight;
        if (r.high_risk()) {
            cell.high += r.survey_weight;
            marginal.high += r.survey_weight;
        }
    }
    RiskTable table;
    for (const auto &[key, acc] : cells)
        if (acc.mass > 0.0)
            table.set_cell(key, acc.high / acc.mass);
    for (const auto &[bin, acc] : bins)
        if (acc.mass > 0.0)
            table.set_age_marginal(bin, acc.high / acc.mass);
    return table;
}

std::vector<bool> impute_high_risk(const Population &population, const RiskTable &table, std::uint64_t seed) {
    rng::Stream stream(seed, "risk");
    std::vector<bool> flags(population.persons().size());
    for (std::size_t i = 0; i < flags.size(); ++i) {
        const auto &p = population.persons()[i];
        flags[i] = stream.bernoulli(p.person_id, table.probability_for(p));
    }
    return flags;
}

const std::vector<std::string> kRiskSurveyCsvHeader = {
    "age",  "sex",         "race",        "hispanic",
    "skin_cancer", "other_cancer", "kidney_disease", "copd",
    "obese_bmi30", "coronary_heart_disease", "diabetes", "survey_weight"};

std::vector<RiskSurveyRecord> load_risk_survey(const std::filesystem::path &path) {
    csv::Reader reader(path, kRiskSurveyCsvHeader);
    std::vector<RiskSurveyRecord> records;
    while (auto row = reader.next()) {
        RiskSurveyRecord r;
        r.age = static_cast<int>(reader.integer(*row, 0));
        if (r.age < 18)
            reader.fail("survey record with age under 18");
        if (!(*row)[1].empty()) {
            r.sex = parse_sex((*row)[1]);
            if (!r.sex)
                reader.fail("unknown sex '" + (*row)[1] + "'");
        }
        if (!(*row)[2].empty()) {
            r.race = parse_race((*row)[2]);
            if (!r.race)
                reader.fail("unknown race '" + (*row)[2] + "'");
        }
        if (!(*row)[3].empty())
            r.hispanic = reader.boolean(*row, 3);
        for (int c = 0; c < kRiskConditionCount; ++c)
            if (reader.boolean(*row, 4 + std::size_t(c)))
                r.set_condition(RiskCondition(c));
        r.survey_weight = reader.number(*row, 11);
        if (!(r.survey_weight > 0.0))
            reader.fail("survey_weight must be positive");
        records.push_back(r);
    }
    return records;
}

void write_risk_survey(const std::vector<RiskSurveyRecord> &records, const std::filesystem::path &path) {
    csv::Writer w(path, kRiskSurveyCsvHeader);
    for (const auto &r : records) {
        std::vector<std::string> fields;
        fields.push_back(std::to_string(r.age));
        fields.push_back(r.sex ? std::string(to_string(*r.sex)) : "");
        fields.push_back(r.race ? std::string(to_string(*r.race)) : "");
        fields.push_back(r.hispanic ? (*r.hispanic ? "1" : "0") : "");
        for (int c = 0; c < kRiskConditionCount; ++c)
            fields.push_back((r.conditions >> c) & 1u ? "1" : "0");
        fields.push_back(csv::format_double(r.survey_weight));
        w.row(fields);
    }
    w.close();
}

} // namespace vaxsim
