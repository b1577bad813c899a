#include "vaxsim/population.hpp"

#include "vaxsim/csv.hpp"
#include "vaxsim/errors.hpp"

#include <utility>

namespace vaxsim {

const std::vector<std::string> kPersonCsvHeader = {
    "person_id",       "household_id",    "weight", "age",  "sex",
    "race",            "hispanic",        "industry_code",  "occupation_code",
    "military_status", "gave_birth_past_year", "group_quarters", "state"};

const std::vector<std::string> kHouseholdCsvHeader = {
    "household_id",  "family_income", "property_value", "gross_rent",     "first_mortgage",
    "owner_occupied", "vehicle_available", "telephone_or_data", "complete_plumbing", "persons_count",
    "rooms_count",   "single_parent_with_children", "poverty_ratio"};

Population::Population(std::vector<PersonRecord> persons, std::vector<HouseholdRecord> households)
    : persons_(std::move(persons)), households_(std::move(households)) {
    household_by_id_.reserve(households_.size());
    for (std::size_t i = 0; i < households_.size(); ++i) {
        const auto &h = households_[i];
        if (h.household_id.empty())
            throw ValidationError("household with empty id");
        if (h.persons_count < 1)
            throw ValidationError("household " + h.household_id + ": persons_count must be >= 1");
        if (h.rooms_count < 0)
            throw ValidationError("household " + h.household_id + ": rooms_count must be >= 0");
        if (h.owner_occupied && h.gross_rent)
            throw ValidationError("household " + h.household_id + ": owner-occupied with gross_rent present");
        if (!h.owner_occupied && (h.property_value || h.first_mortgage))
            throw ValidationError("household " + h.household_id +
                                  ": renter with property_value or first_mortgage present");
        if (!household_by_id_.emplace(h.household_id, i).second)
            throw ValidationError("duplicate household_id " + h.household_id);
    }
    household_members_.resize(households_.size());

    std::string dangling;
    for (std::size_t i = 0; i < persons_.size(); ++i) {
        const auto &p = persons_[i];
        if (!(p.weight > 0.0))
            throw ValidationError("person " + p.person_id + ": weight must be positive");
        if (p.age < 0)
            throw ValidationError("person " + p.person_id + ": negative age");
        weighted_total_ += p.weight;
        if (p.household_id.empty())
            continue;
        if (households_.empty())
            continue; // persons-only load: links are not resolved
        auto it = household_by_id_.find(p.household_id);
        if (it == household_by_id_.end()) {
            if (!dangling.empty())
                dangling += ", ";
            dangling += p.person_id + "->" + p.household_id;
        } else {
            household_members_[it->second].push_back(i);
        }
    }
    if (!dangling.empty())
        throw ValidationError("persons reference missing households: " + dangling);
}

double Population::weighted_total(const PersonPredicate &predicate) const {
    if (!predicate)
        return weighted_total_;
    double total = 0.0;
    for (const auto &p : persons_)
        if (predicate(p))
            total += p.weight;
    return total;
}

std::optional<std::size_t> Population::household_index(const PersonRecord &p) const {
    if (p.household_id.empty() || households_.empty())
        return std::nullopt;
    auto it = household_by_id_.find(p.household_id);
    if (it == household_by_id_.end())
        return std::nullopt;
    return it->second;
}

namespace {

std::string opt_str(const std::optional<std::string> &v) { return v.value_or(""); }

std::string opt_num(const std::optional<double> &v) { return v ? csv::format_double(*v) : ""; }

} // namespace

Population ingest_population(const std::filesystem::path &person_csv,
                             const std::optional<std::filesystem::path> &household_csv) {
    std::vector<HouseholdRecord> households;
    if (household_csv) {
        csv::Reader reader(*household_csv, kHouseholdCsvHeader);
        while (auto row = reader.next()) {
            HouseholdRecord h;
            h.household_id = (*row)[0];
            h.family_income = reader.opt_number(*row, 1);
            h.property_value = reader.opt_number(*row, 2);
            h.gross_rent = reader.opt_number(*row, 3);
            h.first_mortgage = reader.opt_number(*row, 4);
            h.owner_occupied = reader.boolean(*row, 5);
            h.vehicle_available = reader.boolean(*row, 6);
            h.telephone_or_data = reader.boolean(*row, 7);
            h.complete_plumbing = reader.boolean(*row, 8);
            h.persons_count = static_cast<int>(reader.integer(*row, 9));
            h.rooms_count = static_cast<int>(reader.integer(*row, 10));
            h.single_parent_with_children = reader.boolean(*row, 11);
            h.poverty_ratio = reader.opt_number(*row, 12);
            households.push_back(std::move(h));
        }
    }

    std::vector<PersonRecord> persons;
    {
        csv::Reader reader(person_csv, kPersonCsvHeader);
        while (auto row = reader.next()) {
            PersonRecord p;
            p.person_id = (*row)[0];
            p.household_id = (*row)[1];
            p.weight = reader.number(*row, 2);
            if (!(p.weight > 0.0))
                reader.fail("weight must be positive, got '" + (*row)[2] + "'");
            p.age = static_cast<int>(reader.integer(*row, 3));
            if (p.age < 0)
                reader.fail("negative age");
            if (auto s = parse_sex((*row)[4]))
                p.sex = *s;
            else
                reader.fail("unknown sex '" + (*row)[4] + "'");
            if (auto r = parse_race((*row)[5]))
                p.race = *r;
            else
                reader.fail("unknown race '" + (*row)[5] + "'");
            p.hispanic = reader.boolean(*row, 6);
            if (!(*row)[7].empty())
                p.industry_code = (*row)[7];
            if (!(*row)[8].empty())
                p.occupation_code = (*row)[8];
            if (!(*row)[9].empty()) {
                if (auto m = parse_military_status((*row)[9]))
                    p.military_status = *m;
                else
                    reader.fail("unknown military_status '" + (*row)[9] + "'");
            }
            p.gave_birth_past_year = reader.boolean(*row, 10);
            p.group_quarters = reader.boolean(*row, 11);
            p.state = (*row)[12];
            if (p.group_quarters && !p.household_id.empty())
                reader.fail("group-quarters person " + p.person_id + " has a household link");
            persons.push_back(std::move(p));
        }
    }
    return Population(std::move(persons), std::move(households));
}

void write_population(const Population &population, const std::filesystem::path &person_csv,
                      const std::optional<std::filesystem::path> &household_csv) {
    csv::Writer pw(person_csv, kPersonCsvHeader);
    for (const auto &p : population.persons()) {
        pw.row({p.person_id, p.household_id, csv::format_double(p.weight), std::to_string(p.age),
                std::string(to_string(p.sex)), std::string(to_string(p.race)), p.hispanic ? "1" : "0",
                opt_str(p.industry_code), opt_str(p.occupation_code),
                p.military_status ? std::string(to_string(*p.military_status)) : "",
                p.gave_birth_past_year ? "1" : "0", p.group_quarters ? "1" : "0", p.state});
    }
    pw.close();

    if (!household_csv)
        return;
    csv::Writer hw(*household_csv, kHouseholdCsvHeader);
    for (const auto &h : population.households()) {
        hw.row({h.household_id, opt_num(h.family_income), opt_num(h.property_value), opt_num(h.gross_rent),
                opt_num(h.first_mortgage), h.owner_occupied ? "1" : "0", h.vehicle_available ? "1" : "0",
                h.telephone_or_data ? "1" : "0", h.complete_plumbing ? "1" : "0", std::to_string(h.persons_count),
                std::to_string(h.rooms_count), h.single_parent_with_children ? "1" : "0", opt_num(h.poverty_ratio)});
    }
    hw.close();
}

} // namespace vaxsim
