#include "vaxsim/adi.hpp"

#include "vaxsim/csv.hpp"
#include "vaxsim/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace vaxsim {

using nlohmann::json;

namespace {

constexpr std::string_view kComponentNames[kAdiComponentCount] = {
    "education_lt9y",     "education_hs_or_more", "white_collar",     "median_family_income",
    "income_disparity",   "median_home_value",    "median_gross_rent", "median_mortgage",
    "owner_occupied",     "unemployment",         "poverty",          "below_150_poverty",
    "single_parent",      "no_vehicle",           "no_telephone",     "incomplete_plumbing",
    "crowding",
};

// Factor score coefficients, tract index 1990, in component order.
constexpr double kDefaultCoefficients[kAdiComponentCount] = {
    0.0849, -0.0970, -0.0874, -0.0977, 0.0936, -0.0688, -0.0781, -0.0770, -0.0615,
    0.0806, 0.0977,  0.1037,  0.0719,  0.0694, 0.0877,  0.0510,  0.0556,
};

} // namespace

std::string_view to_string(AdiComponent c) { return kComponentNames[std::size_t(c)]; }

std::optional<AdiComponent> parse_adi_component(std::string_view s) {
    for (int i = 0; i < kAdiComponentCount; ++i)
        if (kComponentNames[i] == s)
            return AdiComponent(i);
    return std::nullopt;
}

bool adi_component_is_percent(AdiComponent c) {
    switch (c) {
    case AdiComponent::median_family_income:
    case AdiComponent::median_home_value:
    case AdiComponent::median_gross_rent:
    case AdiComponent::median_mortgage:
    case AdiComponent::income_disparity:
        return false;
    default:
        return true;
    }
}

AdiCoefficients default_adi_coefficients() {
    AdiCoefficients c;
    std::copy(std::begin(kDefaultCoefficients), std::end(kDefaultCoefficients), c.values.begin());
    return c;
}

AdiConfig parse_adi_config(const std::string &json_text) {
    json j = json::parse(json_text);
    AdiConfig config;
    if (j.contains("coefficients")) {
        const json &coeffs = j.at("coefficients");
        if (coeffs.size() != kAdiComponentCount)
            throw ValidationError("adi coefficients: expected " + std::to_string(kAdiComponentCount) +
                                  " entries, got " + std::to_string(coeffs.size()));
        std::array<bool, kAdiComponentCount> seen{};
        for (const auto &entry : coeffs) {
            auto name = entry.at("component").get<std::string>();
            auto component = parse_adi_component(name);
            if (!component)
                throw ValidationError("adi coefficients: unknown component '" + name + "'");
            if (seen[std::size_t(*component)])
                throw ValidationError("adi coefficients: duplicate component '" + name + "'");
            seen[std::size_t(*component)] = true;
            config.coefficients.values[std::size_t(*component)] = entry.at("coefficient").get<double>();
        }
    }
    if (j.contains("income_disparity")) {
        auto mode = j.at("income_disparity").get<std::string>();
        if (mode == "zero")
            config.income_disparity_mode = IncomeDisparityMode::zero;
        else if (mode == "national_log_ratio")
            config.income_disparity_mode = IncomeDisparityMode::national_log_ratio;
        else
            throw ValidationError("adi config: unknown income_disparity mode '" + mode + "'");
    }
    if (j.contains("white_collar_industry_codes"))
        config.white_collar_industry_codes = j.at("white_collar_industry_codes").get<std::vector<std::string>>();
    if (j.contains("poverty_thresholds"))
        for (auto it = j.at("poverty_thresholds").begin(); it != j.at("poverty_thresholds").end(); ++it)
            config.poverty_thresholds[std::stoi(it.key())] = it.value().get<double>();
    if (config.poverty_thresholds.empty())
        throw ValidationError("adi config: poverty_thresholds missing");
    return config;
}

AdiConfig load_adi_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_adi_config(buf.str());
    } catch (const json::exception &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

double poverty_threshold(const AdiConfig &config, int family_size) {
    if (config.poverty_thresholds.empty())
        throw ValidationError("poverty threshold table is empty");
    auto it = config.poverty_thresholds.lower_bound(family_size);
    if (it != config.poverty_thresholds.end() && it->first == family_size)
        return it->second;
    // Clamp to the largest configured size.
    return config.poverty_thresholds.rbegin()->second;
}

FamilyTable build_family_table(const Population &population) {
    if (!population.has_households())
        throw ValidationError("deriving families requires a loaded household table");
    FamilyTable table;
    table.family_of_person.resize(population.persons().size());

    auto add_family = [&](Family f) {
        std::size_t index = table.families.size();
        for (std::size_t m : f.members)
            table.family_of_person[m] = index;
        table.families.push_back(std::move(f));
    };

    for (std::size_t h = 0; h < population.households().size(); ++h) {
        const auto &household = population.households()[h];
        const auto &members = population.household_members()[h];
        if (members.empty())
            continue;
        bool whole_household = members.size() >= 2 && household.family_income.has_value();
        if (whole_household) {
            Family f;
            f.family_id = "h:" + household.household_id;
            f.household = h;
            f.members = members;
            add_family(std::move(f));
        } else {
            // Solo residents and roommate households: each person is their
            // own family. A lone resident's poverty is judged against the
            // threshold table; roommates carry no usable income.
            for (std::size_t m : members) {
                Family f;
                f.family_id = "p:" + population.persons()[m].person_id;
                f.household = h;
                f.members = {m};
                f.solo = members.size() == 1;
                add_family(std::move(f));
            }
        }
    }

    // Non-group-quarters persons without a household link still need a
    // scoring unit; they carry no components at all.
    for (std::size_t i = 0; i < population.persons().size(); ++i) {
        const auto &p = population.persons()[i];
        if (p.group_quarters || table.family_of_person[i])
            continue;
        if (!p.household_id.empty())
            continue; // linked household had no record; unreachable after validation
        Family f;
        f.family_id = "p:" + p.person_id;
        f.members = {i};
        add_family(std::move(f));
    }
    return table;
}

namespace {

double national_income_disparity(const Population &population, const FamilyTable &families) {
    double low = 0.0, high = 0.0;
    for (const auto &f : families.families) {
        if (!f.household)
            continue;
        const auto &h = population.households()[*f.household];
        if (!h.family_income)
            continue;
        double mass = 0.0;
        for (std::size_t m : f.members)
            mass += population.persons()[m].weight;
        if (*h.family_income < 10000.0)
            low += mass;
        else if (*h.family_income >= 50000.0)
            high += mass;
    }
    if (low <= 0.0 || high <= 0.0)
        return 0.0;
    return std::log(100.0 * low / high);
}

} // namespace

std::vector<FamilyAdiComponents> derive_family_components(const Population &population, const FamilyTable &families,
                                                          const AdiConfig &config) {
    double disparity = 0.0;
    if (config.income_disparity_mode == IncomeDisparityMode::national_log_ratio)
        disparity = national_income_disparity(population, families);

    std::vector<FamilyAdiComponents> out;
    out.reserve(families.families.size());
    for (const auto &family : families.families) {
        FamilyAdiComponents c;
        c.family_id = family.family_id;

        // Educational attainment and employment status are not part of the
        // person schema, so the education and unemployment components stay
        // missing for every family. Missing components score 0.
        c.set(AdiComponent::income_disparity, disparity);

        if (!config.white_collar_industry_codes.empty()) {
            double employed = 0.0, white_collar = 0.0;
            for (std::size_t m : family.members) {
                const auto &p = population.persons()[m];
                if (p.age < 16 || !p.industry_code)
                    continue;
                employed += p.weight;
                if (std::find(config.white_collar_industry_codes.begin(), config.white_collar_industry_codes.end(),
                              *p.industry_code) != config.white_collar_industry_codes.end())
                    white_collar += p.weight;
            }
            if (employed > 0.0)
                c.set(AdiComponent::white_collar, 100.0 * white_collar / employed);
        }

        if (!family.household) {
            out.push_back(std::move(c));
            continue;
        }
        const auto &h = population.households()[*family.household];
        bool whole_household = family.members.size() > 1 || family.solo;

        if (family.solo) {
            if (h.family_income) {
                c.set(AdiComponent::median_family_income, *h.family_income);
                double threshold = poverty_threshold(config, 1);
                c.set(AdiComponent::poverty, *h.family_income < threshold ? 100.0 : 0.0);
                c.set(AdiComponent::below_150_poverty, *h.family_income < 1.5 * threshold ? 100.0 : 0.0);
            }
        } else if (whole_household) {
            if (h.family_income)
                c.set(AdiComponent::median_family_income, *h.family_income);
            if (h.poverty_ratio) {
                c.set(AdiComponent::poverty, *h.poverty_ratio < 100.0 ? 100.0 : 0.0);
                c.set(AdiComponent::below_150_poverty, *h.poverty_ratio < 150.0 ? 100.0 : 0.0);
            }
        }
        // Roommate members: income and poverty stay missing.

        if (h.owner_occupied) {
            if (h.property_value)
                c.set(AdiComponent::median_home_value, *h.property_value);
            if (h.first_mortgage)
                c.set(AdiComponent::median_mortgage, *h.first_mortgage);
        } else if (h.gross_rent) {
            c.set(AdiComponent::median_gross_rent, *h.gross_rent);
        }
        c.set(AdiComponent::owner_occupied, h.owner_occupied ? 100.0 : 0.0);
        c.set(AdiComponent::single_parent, h.single_parent_with_children ? 100.0 : 0.0);
        // The vehicle and plumbing rules below follow the source methodology
        // verbatim; note they score the presence, not the absence.
        c.set(AdiComponent::no_vehicle, h.vehicle_available ? 100.0 : 0.0);
        c.set(AdiComponent::no_telephone, h.telephone_or_data ? 0.0 : 100.0);
        c.set(AdiComponent::incomplete_plumbing, h.complete_plumbing ? 100.0 : 0.0);
        c.set(AdiComponent::crowding, h.persons_count > h.rooms_count ? 100.0 : 0.0);

        out.push_back(std::move(c));
    }
    return out;
}

double compute_raw_adi(const FamilyAdiComponents &components, const AdiCoefficients &coefficients) {
    double score = 0.0;
    for (int i = 0; i < kAdiComponentCount; ++i) {
        const auto &v = components.values[std::size_t(i)];
        if (!v)
            continue;
        if (adi_component_is_percent(AdiComponent(i)) && (*v < 0.0 || *v > 100.0))
            throw ValidationError("family " + components.family_id + ": percent component " +
                                  std::string(to_string(AdiComponent(i))) + " outside [0,100]");
        score += *v * coefficients.values[std::size_t(i)];
    }
    return score;
}

bool flag_high_adi(const std::optional<int> &decile) { return decile && *decile >= 8; }

AdiResult assign_national_deciles(const Population &population, const FamilyTable &families,
                                  const std::vector<double> &raw_scores) {
    if (raw_scores.size() != families.families.size())
        throw InternalError("raw score count does not match family count");

    AdiResult result;
    result.decile_by_person.resize(population.persons().size());
    result.high_adi_by_person.assign(population.persons().size(), false);
    result.raw_by_person.assign(population.persons().size(), 0.0);

    std::vector<double> family_mass(families.families.size(), 0.0);
    double total = 0.0;
    for (std::size_t f = 0; f < families.families.size(); ++f) {
        for (std::size_t m : families.families[f].members)
            family_mass[f] += population.persons()[m].weight;
        total += family_mass[f];
    }
    if (!(total > 0.0))
        throw ValidationError("cannot assign deciles: no weighted mass outside group quarters");

    std::vector<std::size_t> order(families.families.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (raw_scores[a] != raw_scores[b])
            return raw_scores[a] < raw_scores[b];
        return families.families[a].family_id < families.families[b].family_id;
    });

    result.assignments.resize(families.families.size());
    double cum = 0.0;
    for (std::size_t f : order) {
        // The decile owning the family's first unit of mass; a family that
        // straddles a boundary stays whole in the lower decile.
        int decile = std::clamp(int(cum * 10.0 / total) + 1, 1, 10);
        cum += family_mass[f];
        AdiAssignment a;
        a.family_id = families.families[f].family_id;
        a.raw_score = raw_scores[f];
        a.decile = decile;
        a.high_adi = flag_high_adi(a.decile);
        for (std::size_t m : families.families[f].members) {
            result.decile_by_person[m] = decile;
            result.high_adi_by_person[m] = a.high_adi;
            result.raw_by_person[m] = a.raw_score;
        }
        result.assignments[f] = std::move(a);
    }
    return result;
}

AdiResult compute_adi(const Population &population, const AdiConfig &config) {
    FamilyTable families = build_family_table(population);
    auto components = derive_family_components(population, families, config);
    std::vector<double> raw(components.size());
    for (std::size_t i = 0; i < components.size(); ++i)
        raw[i] = compute_raw_adi(components[i], config.coefficients);
    return assign_national_deciles(population, families, raw);
}

void write_adi_assignments(const std::vector<AdiAssignment> &assignments, const std::filesystem::path &path) {
    std::vector<const AdiAssignment *> sorted;
    sorted.reserve(assignments.size());
    for (const auto &a : assignments)
        sorted.push_back(&a);
    std::sort(sorted.begin(), sorted.end(),
              [](const AdiAssignment *a, const AdiAssignment *b) { return a->family_id < b->family_id; });
    csv::Writer w(path, {"family_id", "raw_score", "decile", "high_adi"});
    for (const auto *a : sorted)
        w.row({a->family_id, csv::format_double(a->raw_score), a->decile ? std::to_string(*a->decile) : "",
               a->high_adi ? "1" : "0"});
    w.close();
}

} // namespace vaxsim
