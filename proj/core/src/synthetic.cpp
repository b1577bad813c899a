#include "vaxsim/synthetic.hpp"

#include "vaxsim/errors.hpp"
#include "vaxsim/risk.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace vaxsim {

using nlohmann::json;

namespace {

constexpr double kPartitionTolerance = 1e-9;

void check_share(double v, const std::string &what) {
    if (v < 0.0 || v > 1.0)
        throw ValidationError(what + " must lie in [0,1], got " + std::to_string(v));
}

double adult_share(const SyntheticConfig &c) {
    double s = 0.0;
    for (const auto &b : c.age_bins)
        if (b.lo >= 19 && b.hi <= 64)
            s += b.share;
    return s;
}

std::array<double, kRaceCount> parse_race_map(const json &j, const std::string &what, double fallback) {
    std::array<double, kRaceCount> out;
    out.fill(fallback);
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto race = parse_race(it.key());
        if (!race)
            throw ValidationError(what + ": unknown race '" + it.key() + "'");
        out[std::size_t(*race)] = it.value().get<double>();
    }
    return out;
}

LogNormalSpec parse_lognormal(const json &j) { return {j.at("mu").get<double>(), j.at("sigma").get<double>()}; }

double sample_lognormal(const LogNormalSpec &spec, rng::Sequence &seq, double multiplier = 1.0) {
    return std::round(multiplier * std::exp(spec.mu + spec.sigma * seq.normal()));
}

/// Draw from a discrete distribution given cumulative shares.
template <typename T>
const T &pick(const std::vector<std::pair<T, double>> &cdf, double u) {
    for (const auto &[value, cum] : cdf)
        if (u < cum)
            return value;
    return cdf.back().first;
}

} // namespace

void validate(const SyntheticConfig &config) {
    if (config.population_size < 0.0)
        throw ValidationError("population_size must be non-negative");
    if (!(config.record_weight > 0.0))
        throw ValidationError("record_weight must be positive");
    check_share(config.group_quarters_fraction, "group_quarters_fraction");
    check_share(config.race_homogeneity, "race_homogeneity");
    check_share(config.hispanic_rate, "hispanic_rate");
    check_share(config.female_share, "female_share");
    check_share(config.gave_birth_rate, "gave_birth_rate");

    double race_sum = 0.0;
    for (int r = 0; r < kRaceCount; ++r) {
        check_share(config.race[std::size_t(r)], "race share");
        race_sum += config.race[std::size_t(r)];
    }
    if (std::abs(race_sum - 1.0) > kPartitionTolerance)
        throw ValidationError("race marginals must sum to 1, got " + std::to_string(race_sum));

    if (config.age_bins.empty())
        throw ValidationError("age_bins missing");
    double age_sum = 0.0;
    for (const auto &b : config.age_bins) {
        if (b.lo < 0 || b.hi < b.lo)
            throw ValidationError("bad age bin [" + std::to_string(b.lo) + "," + std::to_string(b.hi) + "]");
        check_share(b.share, "age bin share");
        age_sum += b.share;
    }
    if (std::abs(age_sum - 1.0) > kPartitionTolerance)
        throw ValidationError("age-bin marginals must sum to 1, got " + std::to_string(age_sum));

    if (config.states.empty())
        throw ValidationError("state marginals missing");
    double state_sum = 0.0;
    for (const auto &[code, share] : config.states) {
        if (code.size() != 2)
            throw ValidationError("state code must be 2 letters: '" + code + "'");
        check_share(share, "state share");
        state_sum += share;
    }
    if (std::abs(state_sum - 1.0) > kPartitionTolerance)
        throw ValidationError("state marginals must sum to 1, got " + std::to_string(state_sum));

    double hh_sum = 0.0;
    for (const auto &[size, share] : config.household_size_distribution) {
        if (size < 1)
            throw ValidationError("household size must be >= 1");
        check_share(share, "household size share");
        hh_sum += share;
    }
    if (std::abs(hh_sum - 1.0) > kPartitionTolerance)
        throw ValidationError("household size distribution must sum to 1, got " + std::to_string(hh_sum));

    double adults = adult_share(config);
    bool any_slot_mass = false;
    for (const auto &slot : config.occupation_slots) {
        check_share(slot.share, "occupation slot share");
        check_share(slot.female_share, "occupation slot female_share");
        for (double m : slot.race_multiplier)
            if (m < 0.0)
                throw ValidationError("occupation slot '" + slot.name + "': negative race multiplier");
        if (slot.industry_codes.empty() && slot.occupation_codes.empty() && !slot.military_status)
            throw ValidationError("occupation slot '" + slot.name + "' assigns nothing");
        any_slot_mass = any_slot_mass || slot.share > 0.0;
    }
    if (adults <= 0.0 && any_slot_mass)
        throw ValidationError("occupation slots configured but no 19-64 age mass");
    if (adults > 0.0) {
        // Slots draw per (sex, race) among ages 19-64; every such pool must
        // cover its share of the slot mass.
        for (int race = 0; race < kRaceCount; ++race) {
            if (config.race[std::size_t(race)] <= 0.0)
                continue;
            for (double sex_share : {config.female_share, 1.0 - config.female_share}) {
                if (sex_share <= 0.0)
                    continue;
                double demand = 0.0;
                for (const auto &slot : config.occupation_slots) {
                    double fs = sex_share == config.female_share ? slot.female_share : 1.0 - slot.female_share;
                    double norm = 0.0;
                    for (int q = 0; q < kRaceCount; ++q)
                        norm += config.race[std::size_t(q)] * slot.race_multiplier[std::size_t(q)];
                    if (norm <= 0.0)
                        continue;
                    demand += slot.share * fs * slot.race_multiplier[std::size_t(race)] / norm *
                              config.race[std::size_t(race)];
                }
                if (demand > adults * sex_share * config.race[std::size_t(race)] * (1.0 + 1e-9))
                    throw ValidationError("occupation slot shares exceed the 19-64 pool for " +
                                          std::string(to_string(Race(race))));
            }
        }
    }

    if (config.risk_survey.records > 0 &&
        config.risk_survey.age_base_rates.size() != std::size_t(kRiskAgeBinCount))
        throw ValidationError("risk_survey.age_base_rates must have " + std::to_string(kRiskAgeBinCount) +
                              " entries");

    double rooms_sum = 0.0;
    for (const auto &[rooms, share] : config.economics.rooms_distribution) {
        if (rooms < 0)
            throw ValidationError("rooms_count must be >= 0");
        check_share(share, "rooms share");
        rooms_sum += share;
    }
    if (!config.economics.rooms_distribution.empty() && std::abs(rooms_sum - 1.0) > kPartitionTolerance)
        throw ValidationError("rooms distribution must sum to 1, got " + std::to_string(rooms_sum));
}

SyntheticConfig parse_synthetic_config(const std::string &json_text) {
    json j = json::parse(json_text);
    SyntheticConfig c;
    c.seed = j.value("seed", std::uint64_t{0});
    c.population_size = j.at("population_size").get<double>();
    c.record_weight = j.value("record_weight", 25.0);
    c.group_quarters_fraction = j.value("group_quarters_fraction", 0.0);
    c.race_homogeneity = j.value("race_homogeneity", 0.9);
    for (auto it = j.at("household_size_distribution").begin(); it != j.at("household_size_distribution").end(); ++it)
        c.household_size_distribution[std::stoi(it.key())] = it.value().get<double>();

    const json &m = j.at("marginals");
    c.race = parse_race_map(m.at("race"), "marginals.race", 0.0);
    c.hispanic_rate = m.at("hispanic_rate").get<double>();
    c.female_share = m.at("female_share").get<double>();
    for (const auto &bin : m.at("age_bins"))
        c.age_bins.push_back({bin.at(0).get<int>(), bin.at(1).get<int>(), bin.at(2).get<double>()});
    for (auto it = m.at("states").begin(); it != m.at("states").end(); ++it)
        c.states.emplace_back(it.key(), it.value().get<double>());
    std::sort(c.states.begin(), c.states.end());
    c.gave_birth_rate = m.value("gave_birth_rate", 0.0);
    if (m.contains("occupation_slots")) {
        for (const auto &s : m.at("occupation_slots")) {
            OccupationSlot slot;
            slot.name = s.at("name").get<std::string>();
            slot.share = s.at("share").get<double>();
            slot.female_share = s.value("female_share", 0.5);
            if (s.contains("race_multiplier"))
                slot.race_multiplier = parse_race_map(s.at("race_multiplier"), "slot race_multiplier", 1.0);
            if (s.contains("industry_codes"))
                slot.industry_codes = s.at("industry_codes").get<std::vector<std::string>>();
            if (s.contains("occupation_codes"))
                slot.occupation_codes = s.at("occupation_codes").get<std::vector<std::string>>();
            if (s.contains("military_status")) {
                auto ms = parse_military_status(s.at("military_status").get<std::string>());
                if (!ms)
                    throw ValidationError("slot " + slot.name + ": unknown military_status");
                slot.military_status = ms;
            }
            c.occupation_slots.push_back(std::move(slot));
        }
    }

    if (j.contains("economics")) {
        const json &e = j.at("economics");
        EconomicsConfig &ec = c.economics;
        if (e.contains("income"))
            ec.income = parse_lognormal(e.at("income"));
        if (e.contains("race_income_multiplier"))
            ec.race_income_multiplier = parse_race_map(e.at("race_income_multiplier"), "race_income_multiplier", 1.0);
        ec.missing_income_rate = e.value("missing_income_rate", ec.missing_income_rate);
        ec.owner_rate = e.value("owner_rate", ec.owner_rate);
        ec.mortgage_rate = e.value("mortgage_rate", ec.mortgage_rate);
        if (e.contains("property_value"))
            ec.property_value = parse_lognormal(e.at("property_value"));
        if (e.contains("gross_rent"))
            ec.gross_rent = parse_lognormal(e.at("gross_rent"));
        if (e.contains("first_mortgage"))
            ec.first_mortgage = parse_lognormal(e.at("first_mortgage"));
        ec.vehicle_rate = e.value("vehicle_rate", ec.vehicle_rate);
        ec.telephone_rate = e.value("telephone_rate", ec.telephone_rate);
        ec.plumbing_rate = e.value("plumbing_rate", ec.plumbing_rate);
        ec.single_parent_rate = e.value("single_parent_rate", ec.single_parent_rate);
        if (e.contains("rooms_distribution"))
            for (auto it = e.at("rooms_distribution").begin(); it != e.at("rooms_distribution").end(); ++it)
                ec.rooms_distribution[std::stoi(it.key())] = it.value().get<double>();
        ec.poverty_threshold_base = e.value("poverty_threshold_base", ec.poverty_threshold_base);
        ec.poverty_threshold_per_person = e.value("poverty_threshold_per_person", ec.poverty_threshold_per_person);
        ec.poverty_ratio_missing_rate = e.value("poverty_ratio_missing_rate", ec.poverty_ratio_missing_rate);
    }

    if (j.contains("risk_survey")) {
        const json &r = j.at("risk_survey");
        c.risk_survey.records = r.value("records", 0);
        if (r.contains("age_base_rates"))
            c.risk_survey.age_base_rates = r.at("age_base_rates").get<std::vector<double>>();
        if (r.contains("race_multiplier"))
            c.risk_survey.race_multiplier = parse_race_map(r.at("race_multiplier"), "risk race_multiplier", 1.0);
        c.risk_survey.hispanic_multiplier = r.value("hispanic_multiplier", 1.0);
    }

    validate(c);
    return c;
}

SyntheticConfig load_synthetic_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_synthetic_config(buf.str());
    } catch (const json::exception &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

namespace {

struct Cdfs {
    std::vector<std::pair<Race, double>> race;
    std::vector<std::pair<std::size_t, double>> age_bin;
    std::vector<std::pair<std::size_t, double>> gq_age_bin; // bins with lo >= 19
    std::vector<std::pair<std::string, double>> state;
    std::vector<std::pair<int, double>> household_size;
    std::vector<std::pair<int, double>> rooms;
    // Per-(sex, race) slot draw among ages 19-64; -1 = no slot.
    std::array<std::vector<std::pair<int, double>>, 2 * kRaceCount> slot;

    const std::vector<std::pair<int, double>> &slot_cdf(Sex sex, Race race) const {
        return slot[std::size_t(race) * 2 + (sex == Sex::female ? 0 : 1)];
    }
};

Cdfs build_cdfs(const SyntheticConfig &c) {
    Cdfs d;
    double cum = 0.0;
    for (int r = 0; r < kRaceCount; ++r) {
        cum += c.race[std::size_t(r)];
        d.race.emplace_back(Race(r), cum);
    }
    cum = 0.0;
    for (std::size_t i = 0; i < c.age_bins.size(); ++i) {
        cum += c.age_bins[i].share;
        d.age_bin.emplace_back(i, cum);
    }
    double gq_total = 0.0;
    for (const auto &b : c.age_bins)
        if (b.lo >= 19)
            gq_total += b.share;
    cum = 0.0;
    for (std::size_t i = 0; i < c.age_bins.size(); ++i) {
        if (c.age_bins[i].lo < 19)
            continue;
        cum += c.age_bins[i].share / gq_total;
        d.gq_age_bin.emplace_back(i, cum);
    }
    cum = 0.0;
    for (const auto &[code, share] : c.states) {
        cum += share;
        d.state.emplace_back(code, cum);
    }
    cum = 0.0;
    for (const auto &[size, share] : c.household_size_distribution) {
        cum += share;
        d.household_size.emplace_back(size, cum);
    }
    cum = 0.0;
    if (c.economics.rooms_distribution.empty()) {
        d.rooms = {{2, 0.1}, {3, 0.25}, {4, 0.5}, {5, 0.75}, {6, 0.9}, {8, 1.0}};
    } else {
        for (const auto &[rooms, share] : c.economics.rooms_distribution) {
            cum += share;
            d.rooms.emplace_back(rooms, cum);
        }
    }
    // Slot draws condition on (age 19-64, sex, race); rescale the population
    // shares so realized slot masses hit their targets exactly in
    // expectation regardless of each slot's sex or race composition.
    double adults = adult_share(c);
    for (int race = 0; race < kRaceCount; ++race) {
        for (int sex = 0; sex < 2; ++sex) {
            auto &cdf = d.slot[std::size_t(race) * 2 + std::size_t(sex)];
            double sex_share = sex == 0 ? c.female_share : 1.0 - c.female_share;
            double race_share = c.race[std::size_t(race)];
            if (adults > 0.0 && sex_share > 0.0 && race_share > 0.0) {
                double cum2 = 0.0;
                for (std::size_t i = 0; i < c.occupation_slots.size(); ++i) {
                    const auto &slot = c.occupation_slots[i];
                    double fs = sex == 0 ? slot.female_share : 1.0 - slot.female_share;
                    double norm = 0.0;
                    for (int q = 0; q < kRaceCount; ++q)
                        norm += c.race[std::size_t(q)] * slot.race_multiplier[std::size_t(q)];
                    if (norm <= 0.0)
                        continue;
                    cum2 += slot.share * fs * slot.race_multiplier[std::size_t(race)] /
                            (norm * adults * sex_share);
                    cdf.emplace_back(int(i), cum2);
                }
            }
            cdf.emplace_back(-1, 1.0);
        }
    }
    return d;
}

std::string zero_padded(std::uint64_t n, int width) {
    std::string s = std::to_string(n);
    if (int(s.size()) < width)
        s.insert(0, std::size_t(width - int(s.size())), '0');
    return s;
}

} // namespace

Population generate_synthetic(const SyntheticConfig &config) {
    validate(config);
    const Cdfs cdfs = build_cdfs(config);
    const EconomicsConfig &ec = config.economics;

    const auto n_records = std::uint64_t(std::llround(config.population_size / config.record_weight));
    const auto n_gq = std::uint64_t(std::llround(double(n_records) * config.group_quarters_fraction));
    const auto n_household_persons = n_records - n_gq;

    rng::Sequence households(rng::Stream(config.seed, "gen/household"));
    rng::Sequence persons(rng::Stream(config.seed, "gen/person"));

    std::vector<PersonRecord> people;
    std::vector<HouseholdRecord> homes;
    people.reserve(n_records);

    auto draw_age = [&](rng::Sequence &seq, bool gq) {
        const auto &cdf = gq ? cdfs.gq_age_bin : cdfs.age_bin;
        const AgeBin &bin = config.age_bins[pick(cdf, seq.uniform())];
        return bin.lo + int(seq.below(std::uint64_t(bin.hi - bin.lo + 1)));
    };

    auto make_person = [&](std::uint64_t index, const std::string &household_id, Race head_race,
                           const std::string &state, bool gq) {
        PersonRecord p;
        p.person_id = "p" + zero_padded(index, 7);
        p.household_id = household_id;
        p.weight = config.record_weight;
        p.group_quarters = gq;
        p.state = state;
        p.age = draw_age(persons, gq);
        p.sex = persons.bernoulli(config.female_share) ? Sex::female : Sex::male;
        p.race = (!gq && persons.bernoulli(config.race_homogeneity)) ? head_race
                                                                     : pick(cdfs.race, persons.uniform());
        p.hispanic = persons.bernoulli(config.hispanic_rate);
        if (p.sex == Sex::female && p.age >= 15 && p.age <= 50)
            p.gave_birth_past_year = persons.bernoulli(config.gave_birth_rate);
        if (!gq && p.age >= 19 && p.age <= 64 && !config.occupation_slots.empty()) {
            const auto &cdf = cdfs.slot_cdf(p.sex, p.race);
            int si = pick(cdf, persons.uniform());
            if (si >= 0) {
                const OccupationSlot &slot = config.occupation_slots[std::size_t(si)];
                if (!slot.industry_codes.empty())
                    p.industry_code = slot.industry_codes[persons.below(slot.industry_codes.size())];
                if (!slot.occupation_codes.empty())
                    p.occupation_code = slot.occupation_codes[persons.below(slot.occupation_codes.size())];
                p.military_status = slot.military_status;
            }
        }
        return p;
    };

    std::uint64_t person_index = 0;
    std::uint64_t household_index = 0;
    while (person_index < n_household_persons) {
        int size = pick(cdfs.household_size, households.uniform());
        size = int(std::min<std::uint64_t>(std::uint64_t(size), n_household_persons - person_index));

        HouseholdRecord h;
        h.household_id = "h" + zero_padded(household_index++, 7);
        h.persons_count = size;
        std::string state = pick(cdfs.state, households.uniform());
        Race head_race = pick(cdfs.race, households.uniform());

        double income_mult = ec.race_income_multiplier[std::size_t(head_race)];
        if (!households.bernoulli(ec.missing_income_rate))
            h.family_income = sample_lognormal(ec.income, households, income_mult);
        h.owner_occupied = households.bernoulli(ec.owner_rate);
        if (h.owner_occupied) {
            h.property_value = sample_lognormal(ec.property_value, households, income_mult);
            if (households.bernoulli(ec.mortgage_rate))
                h.first_mortgage = sample_lognormal(ec.first_mortgage, households, income_mult);
        } else {
            h.gross_rent = sample_lognormal(ec.gross_rent, households, income_mult);
        }
        h.vehicle_available = households.bernoulli(ec.vehicle_rate);
        h.telephone_or_data = households.bernoulli(ec.telephone_rate);
        h.complete_plumbing = households.bernoulli(ec.plumbing_rate);
        h.single_parent_with_children = size >= 2 && households.bernoulli(ec.single_parent_rate);
        h.rooms_count = pick(cdfs.rooms, households.uniform());
        if (h.family_income && !households.bernoulli(ec.poverty_ratio_missing_rate)) {
            double threshold = ec.poverty_threshold_base + ec.poverty_threshold_per_person * (size - 1);
            h.poverty_ratio = std::round(100.0 * *h.family_income / threshold);
        }

        for (int k = 0; k < size; ++k)
            people.push_back(make_person(person_index++, h.household_id, head_race, state, false));
        homes.push_back(std::move(h));
    }

    for (std::uint64_t g = 0; g < n_gq; ++g) {
        std::string state = pick(cdfs.state, persons.uniform());
        people.push_back(make_person(person_index++, "", Race::white, state, true));
    }

    return Population(std::move(people), std::move(homes));
}

std::vector<RiskSurveyRecord> generate_risk_survey(const SyntheticConfig &config) {
    validate(config);
    const RiskSurveyConfig &rc = config.risk_survey;
    rng::Sequence seq(rng::Stream(config.seed, "gen/risk_survey"));
    std::vector<RiskSurveyRecord> records;
    records.reserve(std::size_t(rc.records));
    for (int i = 0; i < rc.records; ++i) {
        RiskSurveyRecord r;
        r.age = 18 + int(seq.below(73)); // 18..90
        r.sex = seq.bernoulli(config.female_share) ? Sex::female : Sex::male;
        double u = seq.uniform();
        for (int race = 0; race < kRaceCount; ++race) {
            u -= config.race[std::size_t(race)];
            if (u < 0.0) {
                r.race = Race(race);
                break;
            }
        }
        if (!r.race)
            r.race = Race::white;
        r.hispanic = seq.bernoulli(config.hispanic_rate);
        double rate = rc.age_base_rates[std::size_t(risk_age_bin(r.age))] *
                      rc.race_multiplier[std::size_t(*r.race)] * (*r.hispanic ? rc.hispanic_multiplier : 1.0);
        rate = std::clamp(rate, 0.0, 1.0);
        if (seq.bernoulli(rate)) {
            r.set_condition(RiskCondition::obese_bmi30);
            if (seq.bernoulli(0.3))
                r.set_condition(RiskCondition::diabetes);
            if (seq.bernoulli(0.15))
                r.set_condition(RiskCondition::copd);
        }
        r.survey_weight = std::round((0.5 + seq.uniform()) * 100.0) / 100.0;
        records.push_back(r);
    }
    return records;
}

} // namespace vaxsim
