#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"
#include "vaxsim/adi.hpp"
#include "vaxsim/errors.hpp"
#include "vaxsim/rng.hpp"

#include <cmath>
#include <set>

using namespace vaxsim;

namespace {

AdiConfig test_config() {
    AdiConfig c;
    c.poverty_thresholds = {{1, 13011}, {2, 16521}, {3, 20335}, {4, 26172}};
    return c;
}

/// n single-person owner households with the given incomes.
Population solo_population(const std::vector<double> &incomes, double weight = 1.0) {
    std::vector<PersonRecord> persons;
    std::vector<HouseholdRecord> households;
    for (std::size_t i = 0; i < incomes.size(); ++i) {
        std::string hid = "h" + std::to_string(i);
        persons.push_back(testutil::person("p" + std::to_string(i), hid, weight, 40));
        auto h = testutil::household(hid, 1, 5);
        h.family_income = incomes[i];
        households.push_back(h);
    }
    return Population(std::move(persons), std::move(households));
}

} // namespace

TEST_CASE("default coefficients carry the published factor scores") {
    auto c = default_adi_coefficients();
    CHECK(c.values[std::size_t(AdiComponent::education_lt9y)] == doctest::Approx(0.0849));
    CHECK(c.values[std::size_t(AdiComponent::education_hs_or_more)] == doctest::Approx(-0.0970));
    CHECK(c.values[std::size_t(AdiComponent::white_collar)] == doctest::Approx(-0.0874));
    CHECK(c.values[std::size_t(AdiComponent::median_family_income)] == doctest::Approx(-0.0977));
    CHECK(c.values[std::size_t(AdiComponent::income_disparity)] == doctest::Approx(0.0936));
    CHECK(c.values[std::size_t(AdiComponent::unemployment)] == doctest::Approx(0.0806));
    CHECK(c.values[std::size_t(AdiComponent::poverty)] == doctest::Approx(0.0977));
    CHECK(c.values[std::size_t(AdiComponent::below_150_poverty)] == doctest::Approx(0.1037));
    CHECK(c.values[std::size_t(AdiComponent::crowding)] == doctest::Approx(0.0556));
}

TEST_CASE("raw score of empty components is zero") {
    FamilyAdiComponents empty;
    empty.family_id = "f";
    CHECK(compute_raw_adi(empty, default_adi_coefficients()) == 0.0);
}

TEST_CASE("unemployment at 100 scores 8.06") {
    FamilyAdiComponents c;
    c.family_id = "f";
    c.set(AdiComponent::unemployment, 100.0);
    CHECK(compute_raw_adi(c, default_adi_coefficients()) == doctest::Approx(8.06).epsilon(1e-12));
}

TEST_CASE("two-component hand sum") {
    FamilyAdiComponents c;
    c.family_id = "f";
    c.set(AdiComponent::unemployment, 50.0);
    c.set(AdiComponent::poverty, 100.0);
    CHECK(compute_raw_adi(c, default_adi_coefficients()) == doctest::Approx(13.80).epsilon(1e-12));
}

TEST_CASE("raw score is linear in the components") {
    rng::Sequence seq(rng::Stream(3, "adi-linearity"));
    auto coeffs = default_adi_coefficients();
    for (int trial = 0; trial < 50; ++trial) {
        FamilyAdiComponents a, b;
        a.family_id = b.family_id = "f";
        for (int i = 0; i < kAdiComponentCount; ++i) {
            if (seq.uniform() < 0.3)
                continue; // leave missing
            double v = adi_component_is_percent(AdiComponent(i)) ? 50.0 * seq.uniform() : 40000.0 * seq.uniform();
            a.values[std::size_t(i)] = v;
            b.values[std::size_t(i)] = 2.0 * v;
        }
        CHECK(compute_raw_adi(b, coeffs) == doctest::Approx(2.0 * compute_raw_adi(a, coeffs)).epsilon(1e-12));
    }
}

TEST_CASE("percent components outside the scale are rejected") {
    FamilyAdiComponents c;
    c.family_id = "f";
    c.set(AdiComponent::poverty, 140.0);
    CHECK_THROWS_AS(compute_raw_adi(c, default_adi_coefficients()), ValidationError);
}

TEST_CASE("component derivation follows the household rules") {
    std::vector<PersonRecord> persons = {testutil::person("p1", "h1", 1, 40), testutil::person("p2", "h1", 1, 42),
                                         testutil::person("p3", "h1", 1, 9)};
    auto owner = testutil::household("h1", 3, 2, true);
    owner.first_mortgage = 1200.0;
    Population pop({persons}, {owner});
    auto families = build_family_table(pop);
    auto components = derive_family_components(pop, families, test_config());
    REQUIRE(components.size() == 1);
    const auto &c = components[0];

    CHECK(*c.get(AdiComponent::owner_occupied) == 100.0);     // owner-occupied
    CHECK(*c.get(AdiComponent::crowding) == 100.0);           // 3 persons, 2 rooms
    CHECK(!c.get(AdiComponent::education_lt9y).has_value());  // attainment not modeled
    CHECK(!c.get(AdiComponent::unemployment).has_value());    // employment status not modeled
    CHECK(!c.get(AdiComponent::median_gross_rent).has_value()); // owners carry no rent
    CHECK(*c.get(AdiComponent::median_home_value) == 250000.0);
    CHECK(*c.get(AdiComponent::median_mortgage) == 1200.0);
    CHECK(*c.get(AdiComponent::median_family_income) == 60000.0);
    CHECK(*c.get(AdiComponent::poverty) == 0.0);  // ratio 300 >= 100
    CHECK(*c.get(AdiComponent::income_disparity) == 0.0);
    // Indicator components follow the published wording verbatim.
    CHECK(*c.get(AdiComponent::no_vehicle) == 100.0);          // vehicle available
    CHECK(*c.get(AdiComponent::incomplete_plumbing) == 100.0); // plumbing complete
    CHECK(*c.get(AdiComponent::no_telephone) == 0.0);          // has phone or data
}

TEST_CASE("renter components") {
    std::vector<PersonRecord> persons = {testutil::person("p1", "h1", 1, 40), testutil::person("p2", "h1", 1, 41)};
    auto renter = testutil::household("h1", 2, 6, false);
    renter.poverty_ratio = 80.0;
    Population pop({persons}, {renter});
    auto components = derive_family_components(pop, build_family_table(pop), test_config());
    const auto &c = components[0];
    CHECK(*c.get(AdiComponent::owner_occupied) == 0.0);
    CHECK(*c.get(AdiComponent::median_gross_rent) == 1100.0);
    CHECK(!c.get(AdiComponent::median_home_value).has_value());
    CHECK(!c.get(AdiComponent::median_mortgage).has_value());
    CHECK(*c.get(AdiComponent::poverty) == 100.0);           // ratio 80 < 100
    CHECK(*c.get(AdiComponent::below_150_poverty) == 100.0); // ratio 80 < 150
    CHECK(*c.get(AdiComponent::crowding) == 0.0);            // 2 persons, 6 rooms
}

TEST_CASE("solo persons use the poverty threshold table") {
    auto pop = solo_population({10000.0, 25000.0});
    auto families = build_family_table(pop);
    auto components = derive_family_components(pop, families, test_config());
    REQUIRE(components.size() == 2);
    CHECK(families.families[0].solo);
    CHECK(*components[0].get(AdiComponent::poverty) == 100.0);           // 10000 < 13011
    CHECK(*components[0].get(AdiComponent::below_150_poverty) == 100.0); // < 19516.5
    CHECK(*components[1].get(AdiComponent::poverty) == 0.0);
    CHECK(*components[1].get(AdiComponent::below_150_poverty) == 0.0);
}

TEST_CASE("roommate households carry no income components") {
    std::vector<PersonRecord> persons = {testutil::person("p1", "h1", 1, 30), testutil::person("p2", "h1", 1, 31)};
    auto h = testutil::household("h1", 2, 4, false);
    h.family_income.reset();
    h.poverty_ratio.reset();
    Population pop({persons}, {h});
    auto families = build_family_table(pop);
    CHECK(families.families.size() == 2); // one per roommate
    auto components = derive_family_components(pop, families, test_config());
    for (const auto &c : components) {
        CHECK(!c.get(AdiComponent::median_family_income).has_value());
        CHECK(!c.get(AdiComponent::poverty).has_value());
        CHECK(*c.get(AdiComponent::owner_occupied) == 0.0); // indicators still derive
    }
}

TEST_CASE("white collar uses the configured industry codes") {
    std::vector<PersonRecord> persons = {testutil::person("p1", "h1", 1, 40), testutil::person("p2", "h1", 1, 41),
                                         testutil::person("p3", "h1", 1, 12)};
    persons[0].industry_code = "622M";  // white collar
    persons[1].industry_code = "81XX";  // not
    persons[2].industry_code = "622M";  // under 16: excluded
    Population pop({persons}, {testutil::household("h1", 3, 6)});
    auto config = test_config();
    config.white_collar_industry_codes = {"622M"};
    auto components = derive_family_components(pop, build_family_table(pop), config);
    CHECK(*components[0].get(AdiComponent::white_collar) == doctest::Approx(50.0));

    // Without any employed member the component stays missing.
    std::vector<PersonRecord> idle = {testutil::person("q1", "h1", 1, 40)};
    Population pop2({idle}, {testutil::household("h1", 1, 6)});
    auto c2 = derive_family_components(pop2, build_family_table(pop2), config);
    CHECK(!c2[0].get(AdiComponent::white_collar).has_value());
}

TEST_CASE("ten equal singles land in deciles 1 through 10") {
    auto pop = solo_population({10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
    auto families = build_family_table(pop);
    std::vector<double> raw;
    for (std::size_t i = 0; i < families.families.size(); ++i)
        raw.push_back(double(10 * (i + 1)));
    auto result = assign_national_deciles(pop, families, raw);
    std::set<int> seen;
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(*result.decile_by_person[i] == int(i) + 1);
        seen.insert(*result.assignments[i].decile);
    }
    CHECK(seen.size() == 10);
    CHECK(result.high_adi_by_person[7]);
    CHECK(!result.high_adi_by_person[6]);
}

TEST_CASE("identical scores still split into ten deciles deterministically") {
    std::vector<double> incomes(100, 50000.0);
    auto pop = solo_population(incomes);
    auto families = build_family_table(pop);
    std::vector<double> raw(100, 1.25);
    auto result = assign_national_deciles(pop, families, raw);
    std::array<double, 11> decile_mass{};
    for (std::size_t i = 0; i < 100; ++i)
        decile_mass[std::size_t(*result.decile_by_person[i])] += 1.0;
    for (int d = 1; d <= 10; ++d)
        CHECK(std::abs(decile_mass[std::size_t(d)] - 10.0) <= 1.0); // one person weight

    auto again = assign_national_deciles(pop, families, raw);
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(*again.decile_by_person[i] == *result.decile_by_person[i]);
}

TEST_CASE("group-quarters persons have no decile and never flag high") {
    std::vector<PersonRecord> persons = {testutil::person("gq", "", 5.0, 30), testutil::person("p1", "h1", 1.0, 30)};
    persons[0].group_quarters = true;
    Population pop({persons}, {testutil::household("h1", 1, 4)});
    auto result = compute_adi(pop, test_config());
    CHECK(!result.decile_by_person[0].has_value());
    CHECK(!result.high_adi_by_person[0]);
    CHECK(result.decile_by_person[1].has_value());
}

TEST_CASE("zero non-group-quarters mass is an error") {
    std::vector<PersonRecord> persons = {testutil::person("gq", "", 5.0, 30)};
    persons[0].group_quarters = true;
    Population pop({persons}, {testutil::household("hx", 1, 4)});
    CHECK_THROWS_AS(compute_adi(pop, test_config()), ValidationError);
}

TEST_CASE("high-ADI flag is decile >= 8") {
    CHECK(flag_high_adi(8));
    CHECK(flag_high_adi(10));
    CHECK(!flag_high_adi(7));
    CHECK(!flag_high_adi(std::nullopt));
}

TEST_CASE("family members share score and decile; decile masses stay near 10%") {
    auto config = testutil::small_synthetic_config(60000.0, 5.0);
    auto pop = generate_synthetic(config);
    auto result = compute_adi(pop, test_config());

    auto families = build_family_table(pop);
    for (const auto &family : families.families) {
        for (std::size_t m : family.members) {
            CHECK(result.raw_by_person[m] == result.raw_by_person[family.members[0]]);
            CHECK(*result.decile_by_person[m] == *result.decile_by_person[family.members[0]]);
        }
    }

    double total = pop.weighted_total();
    double gq_mass = pop.weighted_total([](const PersonRecord &p) { return p.group_quarters; });
    double non_gq = total - gq_mass;
    double high = 0.0;
    std::array<double, 11> decile_mass{};
    double max_family_mass = 0.0;
    for (const auto &family : families.families) {
        double fm = 0.0;
        for (std::size_t m : family.members)
            fm += pop.persons()[m].weight;
        max_family_mass = std::max(max_family_mass, fm);
    }
    for (std::size_t i = 0; i < pop.persons().size(); ++i) {
        if (result.high_adi_by_person[i])
            high += pop.persons()[i].weight;
        if (result.decile_by_person[i])
            decile_mass[std::size_t(*result.decile_by_person[i])] += pop.persons()[i].weight;
    }
    CHECK(high <= 0.30 * total);
    CHECK(high < 0.30 * total); // strict: group-quarters mass is positive
    for (int d = 1; d <= 10; ++d)
        CHECK(std::abs(decile_mass[std::size_t(d)] - 0.1 * non_gq) <= max_family_mass + 1e-9);
}

TEST_CASE("adi config round-trips through json") {
    testutil::TempDir dir;
    testutil::write_file(dir / "adi.json", R"({
      "coefficients": [
        {"component": "education_lt9y", "coefficient": 0.0849},
        {"component": "education_hs_or_more", "coefficient": -0.097},
        {"component": "white_collar", "coefficient": -0.0874},
        {"component": "median_family_income", "coefficient": -0.0977},
        {"component": "income_disparity", "coefficient": 0.0936},
        {"component": "median_home_value", "coefficient": -0.0688},
        {"component": "median_gross_rent", "coefficient": -0.0781},
        {"component": "median_mortgage", "coefficient": -0.077},
        {"component": "owner_occupied", "coefficient": -0.0615},
        {"component": "unemployment", "coefficient": 0.0806},
        {"component": "poverty", "coefficient": 0.0977},
        {"component": "below_150_poverty", "coefficient": 0.1037},
        {"component": "single_parent", "coefficient": 0.0719},
        {"component": "no_vehicle", "coefficient": 0.0694},
        {"component": "no_telephone", "coefficient": 0.0877},
        {"component": "incomplete_plumbing", "coefficient": 0.051},
        {"component": "crowding", "coefficient": 0.0556}
      ],
      "income_disparity": "national_log_ratio",
      "poverty_thresholds": {"1": 13011, "2": 16521}
    })");
    auto config = load_adi_config(dir / "adi.json");
    CHECK(config.income_disparity_mode == IncomeDisparityMode::national_log_ratio);
    CHECK(poverty_threshold(config, 1) == 13011);
    CHECK(poverty_threshold(config, 9) == 16521); // clamped to the largest size

    // A missing component must be rejected.
    testutil::write_file(dir / "short.json", R"({
      "coefficients": [{"component": "crowding", "coefficient": 0.0556}],
      "poverty_thresholds": {"1": 13011}
    })");
    CHECK_THROWS_AS(load_adi_config(dir / "short.json"), ValidationError);
}

TEST_CASE("national log-ratio disparity applies one constant to every family") {
    auto pop = solo_population({8000.0, 9000.0, 60000.0, 70000.0});
    auto families = build_family_table(pop);
    auto config = test_config();
    config.income_disparity_mode = IncomeDisparityMode::national_log_ratio;
    auto components = derive_family_components(pop, families, config);
    double expected = std::log(100.0 * 2.0 / 2.0);
    for (const auto &c : components)
        CHECK(*c.get(AdiComponent::income_disparity) == doctest::Approx(expected));
}
