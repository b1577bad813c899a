#include "vaxsim/tiers.hpp"

#include "vaxsim/csv.hpp"
#include "vaxsim/errors.hpp"
#include "vaxsim/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace vaxsim {

using nlohmann::json;

namespace {

constexpr double kPregnancyHeads = 268.0 / 365.0;

const std::map<std::string, PredicateAtom::Field, std::less<>> kFieldNames = {
    {"age", PredicateAtom::Field::age},
    {"sex", PredicateAtom::Field::sex},
    {"race", PredicateAtom::Field::race},
    {"hispanic", PredicateAtom::Field::hispanic},
    {"state", PredicateAtom::Field::state},
    {"industry_code", PredicateAtom::Field::industry_code},
    {"occupation_code", PredicateAtom::Field::occupation_code},
    {"military_status", PredicateAtom::Field::military_status},
    {"gave_birth_past_year", PredicateAtom::Field::gave_birth_past_year},
    {"group_quarters", PredicateAtom::Field::group_quarters},
    {"high_risk", PredicateAtom::Field::high_risk},
    {"infant_class", PredicateAtom::Field::infant_class},
    {"pregnant_duplicate", PredicateAtom::Field::pregnant_duplicate},
    {"household_contact_young_infant", PredicateAtom::Field::household_contact_young_infant},
};

bool field_is_bool(PredicateAtom::Field f) {
    switch (f) {
    case PredicateAtom::Field::hispanic:
    case PredicateAtom::Field::gave_birth_past_year:
    case PredicateAtom::Field::group_quarters:
    case PredicateAtom::Field::high_risk:
    case PredicateAtom::Field::pregnant_duplicate:
    case PredicateAtom::Field::household_contact_young_infant:
        return true;
    default:
        return false;
    }
}

/// One person plus the derived stage flags, as predicates see them.
struct PersonView {
    const PersonRecord &record;
    bool high_risk = false;
    std::optional<InfantClass> infant_class;
    bool household_contact = false;
    bool pregnant_duplicate = false;
};

bool in_list(const std::vector<std::string> &values, std::string_view v) {
    return std::find(values.begin(), values.end(), v) != values.end();
}

bool atom_matches(const PredicateAtom &atom, const PersonView &p) {
    switch (atom.field) {
    case PredicateAtom::Field::age:
        if (atom.op == PredicateAtom::Op::between)
            return p.record.age >= atom.lo && p.record.age <= atom.hi;
        return in_list(atom.values, std::to_string(p.record.age));
    case PredicateAtom::Field::sex:
        return in_list(atom.values, to_string(p.record.sex));
    case PredicateAtom::Field::race:
        return in_list(atom.values, to_string(p.record.race));
    case PredicateAtom::Field::state:
        return in_list(atom.values, p.record.state);
    case PredicateAtom::Field::industry_code:
        return p.record.industry_code && in_list(atom.values, *p.record.industry_code);
    case PredicateAtom::Field::occupation_code:
        return p.record.occupation_code && in_list(atom.values, *p.record.occupation_code);
    case PredicateAtom::Field::military_status:
        return p.record.military_status && in_list(atom.values, to_string(*p.record.military_status));
    case PredicateAtom::Field::infant_class:
        return p.infant_class && in_list(atom.values, to_string(*p.infant_class));
    case PredicateAtom::Field::hispanic:
        return p.record.hispanic == atom.bool_value;
    case PredicateAtom::Field::gave_birth_past_year:
        return p.record.gave_birth_past_year == atom.bool_value;
    case PredicateAtom::Field::group_quarters:
        return p.record.group_quarters == atom.bool_value;
    case PredicateAtom::Field::high_risk:
        return p.high_risk == atom.bool_value;
    case PredicateAtom::Field::pregnant_duplicate:
        return p.pregnant_duplicate == atom.bool_value;
    case PredicateAtom::Field::household_contact_young_infant:
        return p.household_contact == atom.bool_value;
    }
    return false;
}

bool matches(const Predicate &predicate, const PersonView &p) {
    for (const auto &atom : predicate.all)
        if (!atom_matches(atom, p))
            return false;
    for (const auto &alternatives : predicate.any_of) {
        bool hit = false;
        for (const auto &atom : alternatives)
            hit = hit || atom_matches(atom, p);
        if (!hit)
            return false;
    }
    return true;
}

PredicateAtom parse_atom(const json &j, const std::string &group_id) {
    PredicateAtom atom;
    auto field_name = j.at("field").get<std::string>();
    auto it = kFieldNames.find(field_name);
    if (it == kFieldNames.end())
        throw ValidationError("group " + group_id + ": predicate references unknown field '" + field_name + "'");
    atom.field = it->second;

    if (j.contains("between")) {
        if (atom.field != PredicateAtom::Field::age)
            throw ValidationError("group " + group_id + ": 'between' only applies to age");
        atom.op = PredicateAtom::Op::between;
        atom.lo = j.at("between").at(0).get<int>();
        atom.hi = j.at("between").at(1).get<int>();
        if (atom.lo > atom.hi)
            throw ValidationError("group " + group_id + ": empty age range");
        return atom;
    }
    if (field_is_bool(atom.field)) {
        atom.op = PredicateAtom::Op::equals_bool;
        atom.bool_value = j.at("eq").get<bool>();
        return atom;
    }
    atom.op = PredicateAtom::Op::in_list;
    if (j.contains("in"))
        atom.values = j.at("in").get<std::vector<std::string>>();
    else if (j.contains("eq"))
        atom.values = {j.at("eq").get<std::string>()};
    else
        throw ValidationError("group " + group_id + ": atom for '" + field_name + "' needs 'in' or 'eq'");
    if (atom.values.empty())
        throw ValidationError("group " + group_id + ": empty 'in' list for '" + field_name + "'");
    return atom;
}

Rank group_best_rank(const GroupDefinition &g) {
    if (g.tier != 1)
        return {g.tier, 0};
    if (g.subtier)
        return {1, *g.subtier};
    int best = 8;
    for (const auto &rule : g.frontline_rules)
        best = std::min({best, rule.frontline_subtier, rule.rest_subtier});
    return {1, best};
}

} // namespace

bool GroupDefinition::uses_pregnancy_flag() const {
    for (const auto &atom : predicate.all)
        if (atom.field == PredicateAtom::Field::pregnant_duplicate)
            return true;
    for (const auto &alternatives : predicate.any_of)
        for (const auto &atom : alternatives)
            if (atom.field == PredicateAtom::Field::pregnant_duplicate)
                return true;
    return false;
}

const GroupDefinition *TierSchedule::find(const std::string &id) const {
    for (const auto &g : groups)
        if (g.id == id)
            return &g;
    return nullptr;
}

std::vector<Rank> TierSchedule::ranks() const {
    std::set<Rank> distinct;
    for (const auto &g : groups) {
        if (g.tier != 1) {
            distinct.insert({g.tier, 0});
        } else if (g.subtier) {
            distinct.insert({1, *g.subtier});
        } else {
            for (const auto &rule : g.frontline_rules) {
                distinct.insert({1, rule.frontline_subtier});
                distinct.insert({1, rule.rest_subtier});
            }
        }
    }
    return {distinct.begin(), distinct.end()};
}

TierSchedule parse_tier_schedule(const std::string &json_text) {
    json j = json::parse(json_text);
    TierSchedule schedule;
    schedule.name = j.value("name", "");
    schedule.reference_population = j.value("reference_population", 0.0);
    if (!(schedule.reference_population > 0.0))
        throw ValidationError("tier schedule: reference_population must be positive");

    std::unordered_set<std::string> seen;
    for (const auto &gj : j.at("groups")) {
        GroupDefinition g;
        g.id = gj.at("id").get<std::string>();
        if (!seen.insert(g.id).second)
            throw ValidationError("tier schedule: duplicate group id '" + g.id + "'");
        g.tier = gj.at("tier").get<int>();
        if (g.tier < 1 || g.tier > 5)
            throw ValidationError("group " + g.id + ": tier must be 1..5");

        auto mode = gj.value("mode", std::string("demographic"));
        if (mode == "probabilistic")
            g.mode = AssignmentMode::probabilistic;
        else if (mode == "take_all")
            g.mode = AssignmentMode::take_all;
        else if (mode == "demographic")
            g.mode = AssignmentMode::demographic;
        else
            throw ValidationError("group " + g.id + ": unknown mode '" + mode + "'");

        g.external_size = gj.value("external_size", 0.0);
        if (g.mode == AssignmentMode::probabilistic && !(g.external_size > 0.0))
            throw ValidationError("group " + g.id + ": probabilistic groups need external_size > 0");

        if (gj.contains("subtier"))
            g.subtier = gj.at("subtier").get<int>();
        if (gj.contains("frontline_rules")) {
            for (const auto &rj : gj.at("frontline_rules")) {
                FrontlineRule rule;
                if (rj.contains("codes"))
                    rule.codes = rj.at("codes").get<std::vector<std::string>>();
                if (rj.contains("code_field")) {
                    auto fname = rj.at("code_field").get<std::string>();
                    auto it = kFieldNames.find(fname);
                    if (it == kFieldNames.end() || (it->second != PredicateAtom::Field::occupation_code &&
                                                    it->second != PredicateAtom::Field::industry_code))
                        throw ValidationError("group " + g.id + ": bad frontline code_field '" + fname + "'");
                    rule.code_field = it->second;
                }
                rule.split = rj.at("split").get<double>();
                if (rule.split < 0.0 || rule.split > 1.0)
                    throw ValidationError("group " + g.id + ": frontline split outside [0,1]");
                rule.frontline_subtier = rj.at("frontline_subtier").get<int>();
                rule.rest_subtier = rj.at("rest_subtier").get<int>();
                g.frontline_rules.push_back(std::move(rule));
            }
        }
        if (g.tier == 1) {
            if (g.subtier.has_value() == !g.frontline_rules.empty())
                throw ValidationError("group " + g.id + ": tier-1 groups need exactly one of subtier or "
                                      "frontline_rules");
            for (int st : {g.subtier.value_or(1)})
                if (st < 1 || st > 7)
                    throw ValidationError("group " + g.id + ": subtier must be 1..7");
            for (const auto &rule : g.frontline_rules)
                for (int st : {rule.frontline_subtier, rule.rest_subtier})
                    if (st < 1 || st > 7)
                        throw ValidationError("group " + g.id + ": subtier must be 1..7");
        } else if (g.subtier || !g.frontline_rules.empty()) {
            throw ValidationError("group " + g.id + ": subtiers only exist inside tier 1");
        }

        if (gj.contains("predicate")) {
            for (const auto &aj : gj.at("predicate")) {
                if (aj.contains("any")) {
                    std::vector<PredicateAtom> alternatives;
                    for (const auto &sub : aj.at("any"))
                        alternatives.push_back(parse_atom(sub, g.id));
                    if (alternatives.empty())
                        throw ValidationError("group " + g.id + ": empty 'any' block");
                    g.predicate.any_of.push_back(std::move(alternatives));
                } else {
                    g.predicate.all.push_back(parse_atom(aj, g.id));
                }
            }
        }
        if (g.predicate.all.empty() && g.predicate.any_of.empty())
            throw ValidationError("group " + g.id + ": predicate missing");

        if (gj.contains("exclusions")) {
            g.exclusions = gj.at("exclusions").get<std::vector<std::string>>();
            for (const auto &ex : g.exclusions)
                if (!seen.count(ex))
                    throw ValidationError("group " + g.id + ": exclusion '" + ex +
                                          "' does not name an earlier group");
        }
        if (g.uses_pregnancy_flag() && g.mode != AssignmentMode::demographic)
            throw ValidationError("group " + g.id + ": pregnancy groups must be demographic");

        schedule.groups.push_back(std::move(g));
    }
    if (schedule.groups.size() > 64)
        throw ValidationError("tier schedule: at most 64 groups supported");
    if (schedule.groups.empty())
        throw ValidationError("tier schedule: no groups");
    return schedule;
}

TierSchedule load_tier_schedule(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_tier_schedule(buf.str());
    } catch (const json::exception &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

SupersetProbability superset_probability(double external_size, double superset_mass) {
    if (superset_mass < 0.0)
        throw ValidationError("superset mass must be non-negative");
    if (superset_mass == 0.0)
        return {0.0, false, true};
    if (superset_mass <= external_size)
        return {1.0, true, false};
    return {external_size / superset_mass, false, false};
}

InfantSplit split_infants(const Population &population, std::uint64_t seed) {
    rng::Stream stream(seed, "infants");
    InfantSplit split;
    split.infant_class.resize(population.persons().size());
    split.household_contact.assign(population.persons().size(), false);

    std::unordered_set<std::string> young_households;
    for (std::size_t i = 0; i < population.persons().size(); ++i) {
        const auto &p = population.persons()[i];
        if (p.age != 0)
            continue;
        bool young = stream.bernoulli(p.person_id, 0.5);
        split.infant_class[i] = young ? InfantClass::months_0_5 : InfantClass::months_6_11;
        if (young && !p.household_id.empty())
            young_households.insert(p.household_id);
    }
    for (std::size_t i = 0; i < population.persons().size(); ++i) {
        const auto &p = population.persons()[i];
        if (!p.household_id.empty() && young_households.count(p.household_id))
            split.household_contact[i] = true;
    }
    return split;
}

TierState assign_group_membership(const Population &population, const TierSchedule &schedule,
                                  const std::vector<bool> &high_risk, const InfantSplit &infants,
                                  double external_scale, std::uint64_t seed) {
    const std::size_t n = population.persons().size();
    if (high_risk.size() != n || infants.infant_class.size() != n)
        throw InternalError("stage vectors do not match population size");
    if (!(external_scale > 0.0))
        throw ValidationError("external size scale must be positive");

    TierState state;
    state.population = population;
    state.high_risk = high_risk;
    state.infant_class = infants.infant_class;
    state.household_contact = infants.household_contact;
    state.pregnant_duplicate.assign(n, false);
    state.memberships.assign(n, 0);
    state.highest.assign(n, kNoRank);
    state.original_total = population.weighted_total();

    rng::Stream groups_stream(seed, "groups");
    rng::Stream frontline_stream(seed, "frontline");

    auto view = [&](std::size_t i) {
        return PersonView{population.persons()[i], state.high_risk[i], state.infant_class[i],
                          state.household_contact[i], false};
    };

    for (std::size_t gi = 0; gi < schedule.groups.size(); ++gi) {
        const GroupDefinition &g = schedule.groups[gi];
        if (g.uses_pregnancy_flag())
            continue; // members arrive with the pregnancy stage

        std::uint64_t exclusion_mask = 0;
        for (const auto &ex : g.exclusions) {
            for (std::size_t k = 0; k < gi; ++k)
                if (schedule.groups[k].id == ex)
                    exclusion_mask |= 1ULL << k;
        }

        std::vector<std::size_t> candidates;
        double superset_mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (state.memberships[i] & exclusion_mask)
                continue;
            if (!matches(g.predicate, view(i)))
                continue;
            candidates.push_back(i);
            superset_mass += population.persons()[i].weight;
        }

        double p_join = 1.0;
        if (g.mode == AssignmentMode::probabilistic) {
            double scaled = g.external_size * external_scale;
            auto sp = superset_probability(scaled, superset_mass);
            state.diagnostics.push_back(
                {g.id, superset_mass, scaled, sp.probability, sp.take_all, sp.empty_superset});
            p_join = sp.probability;
        } else if (g.mode == AssignmentMode::take_all) {
            state.diagnostics.push_back({g.id, superset_mass, g.external_size * external_scale, 1.0, true,
                                         candidates.empty()});
        }

        rng::Stream group_stream = groups_stream.child(g.id);
        rng::Stream group_frontline = frontline_stream.child(g.id);
        for (std::size_t i : candidates) {
            const auto &person = population.persons()[i];
            if (p_join < 1.0 && !group_stream.bernoulli(person.person_id, p_join))
                continue;
            state.memberships[i] |= 1ULL << gi;

            Rank rank{g.tier, g.subtier.value_or(0)};
            if (g.tier == 1 && !g.frontline_rules.empty()) {
                const FrontlineRule *rule = nullptr;
                for (const auto &r : g.frontline_rules) {
                    if (r.codes.empty()) {
                        rule = &r;
                        break;
                    }
                    const auto &code = r.code_field == PredicateAtom::Field::occupation_code
                                           ? person.occupation_code
                                           : person.industry_code;
                    if (code && in_list(r.codes, *code)) {
                        rule = &r;
                        break;
                    }
                }
                if (!rule)
                    throw ValidationError("group " + g.id + ": no frontline rule covers member " +
                                          person.person_id);
                bool frontline = group_frontline.bernoulli(person.person_id, rule->split);
                rank.subtier = frontline ? rule->frontline_subtier : rule->rest_subtier;
            }
            state.highest[i] = std::min(state.highest[i], rank);
        }
    }
    return state;
}

void synthesize_pregnancy_cohort(TierState &state, const TierSchedule &schedule, std::uint64_t seed) {
    rng::Stream stream(seed, "pregnancy");
    const Rank pregnancy_rank{1, 6};

    std::uint64_t pregnancy_mask = 0;
    Rank best_pregnancy_rank = kNoRank;
    for (std::size_t gi = 0; gi < schedule.groups.size(); ++gi) {
        if (!schedule.groups[gi].uses_pregnancy_flag())
            continue;
        pregnancy_mask |= 1ULL << gi;
        best_pregnancy_rank = std::min(best_pregnancy_rank, group_best_rank(schedule.groups[gi]));
    }
    if (pregnancy_mask == 0)
        return; // no pregnancy group in this schedule; stage disabled

    const auto &persons = state.population.persons();
    std::vector<PersonRecord> duplicates;
    std::vector<std::size_t> originals;
    for (std::size_t i = 0; i < persons.size(); ++i) {
        const auto &p = persons[i];
        if (!p.gave_birth_past_year)
            continue;
        if (state.highest[i] < pregnancy_rank)
            continue; // already ranked above tier 1 subtier 6
        if (!stream.bernoulli(p.person_id, kPregnancyHeads))
            continue;
        PersonRecord dup = p;
        dup.person_id = p.person_id + "#preg";
        dup.age = p.age - 1;
        if (dup.age < 0)
            throw ValidationError("person " + p.person_id + ": gave birth at age 0");
        duplicates.push_back(std::move(dup));
        originals.push_back(i);
    }
    if (duplicates.empty())
        return;

    std::vector<PersonRecord> all = persons;
    all.insert(all.end(), duplicates.begin(), duplicates.end());
    std::vector<HouseholdRecord> households = state.population.households();
    state.population = Population(std::move(all), std::move(households));

    for (std::size_t d = 0; d < originals.size(); ++d) {
        std::size_t src = originals[d];
        state.high_risk.push_back(state.high_risk[src]);
        state.infant_class.push_back(std::nullopt);
        state.household_contact.push_back(false);
        state.pregnant_duplicate.push_back(true);
        state.memberships.push_back(pregnancy_mask);
        state.highest.push_back(best_pregnancy_rank);
        state.duplicate_sources.push_back(src);
    }
}

void resolve_highest_tier(TierState &state, const TierSchedule &schedule) {
    (void)schedule;
    std::string unmatched;
    for (std::size_t i = 0; i < state.population.persons().size(); ++i) {
        if (state.memberships[i] != 0 && state.highest[i] != kNoRank)
            continue;
        if (!unmatched.empty())
            unmatched += ", ";
        unmatched += state.population.persons()[i].person_id;
    }
    if (!unmatched.empty())
        throw ValidationError("classification error: persons match no group: " + unmatched);
}

std::vector<CensusRow> tier_census(const TierState &state, const TierSchedule &schedule,
                                   const std::vector<bool> &high_adi) {
    if (high_adi.size() != state.population.persons().size())
        throw InternalError("high_adi vector does not match population size");

    std::vector<Rank> ranks = schedule.ranks();
    std::map<Rank, std::size_t> index;
    for (std::size_t i = 0; i < ranks.size(); ++i)
        index[ranks[i]] = i;

    struct Acc {
        double mass = 0, bi = 0, adi = 0, age = 0, female = 0;
    };
    std::vector<Acc> acc(ranks.size());
    for (std::size_t i = 0; i < state.population.persons().size(); ++i) {
        const auto &p = state.population.persons()[i];
        auto it = index.find(state.highest[i]);
        if (it == index.end())
            throw InternalError("person " + p.person_id + " resolved to a rank outside the schedule");
        Acc &a = acc[it->second];
        a.mass += p.weight;
        if (p.race == Race::black || p.race == Race::indigenous)
            a.bi += p.weight;
        if (high_adi[i])
            a.adi += p.weight;
        a.age += p.weight * p.age;
        if (p.sex == Sex::female)
            a.female += p.weight;
    }

    std::vector<CensusRow> rows;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        CensusRow row;
        row.rank = ranks[i];
        row.weighted_mass = acc[i].mass;
        if (acc[i].mass > 0.0) {
            row.share_black_indigenous = acc[i].bi / acc[i].mass;
            row.share_high_adi = acc[i].adi / acc[i].mass;
            row.mean_age = acc[i].age / acc[i].mass;
            row.share_female = acc[i].female / acc[i].mass;
        }
        rows.push_back(row);
    }
    return rows;
}

void write_tier_census(const std::vector<CensusRow> &census, const std::filesystem::path &path) {
    csv::Writer w(path, {"tier", "subtier", "weighted_mass", "share_black_indigenous", "share_high_adi",
                         "mean_age", "share_female"});
    for (const auto &row : census) {
        w.row({std::to_string(row.rank.tier), row.rank.subtier > 0 ? std::to_string(row.rank.subtier) : "",
               csv::format_double(row.weighted_mass), csv::format_double(row.share_black_indigenous),
               csv::format_double(row.share_high_adi), csv::format_double(row.mean_age),
               csv::format_double(row.share_female)});
    }
    w.close();
}

std::vector<std::string> tier_substreams(const TierSchedule &schedule) {
    std::vector<std::string> names = {"risk", "infants", "pregnancy"};
    for (const auto &g : schedule.groups) {
        if (g.uses_pregnancy_flag() || g.mode == AssignmentMode::demographic)
            continue;
        names.push_back("groups/" + g.id);
        if (!g.frontline_rules.empty())
            names.push_back("frontline/" + g.id);
    }
    return names;
}

} // namespace vaxsim
