#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"
#include "vaxsim/errors.hpp"
#include "vaxsim/risk.hpp"

#include <cmath>

using namespace vaxsim;

namespace {

RiskSurveyRecord record(int age, Sex sex, Race race, bool hispanic, bool high_risk, double weight = 1.0) {
    RiskSurveyRecord r;
    r.age = age;
    r.sex = sex;
    r.race = race;
    r.hispanic = hispanic;
    if (high_risk)
        r.set_condition(RiskCondition::obese_bmi30);
    r.survey_weight = weight;
    return r;
}

} // namespace

TEST_CASE("age bins match the survey layout") {
    CHECK(risk_age_bin(18) == 0);
    CHECK(risk_age_bin(24) == 0);
    CHECK(risk_age_bin(25) == 1);
    CHECK(risk_age_bin(29) == 1);
    CHECK(risk_age_bin(84) == 12);
    CHECK(risk_age_bin(85) == 13);
    CHECK(risk_age_bin(99) == 13);
    CHECK(risk_age_bin(5) == 0); // minors borrow the youngest bin
    CHECK(risk_age_bin_label(0) == "18-24");
    CHECK(risk_age_bin_label(12) == "80-84");
    CHECK(risk_age_bin_label(13) == "85+");
}

TEST_CASE("single high-risk record gives probability one") {
    auto table = build_risk_table({record(30, Sex::female, Race::white, false, true)});
    CHECK(*table.cell({2, Sex::female, Race::white, false}) == doctest::Approx(1.0));
}

TEST_CASE("equal-weight mixed cell gives one half") {
    auto table = build_risk_table({record(30, Sex::female, Race::white, false, true),
                                   record(31, Sex::female, Race::white, false, false)});
    CHECK(*table.cell({2, Sex::female, Race::white, false}) == doctest::Approx(0.5));
}

TEST_CASE("weighted cell proportion") {
    // weights 1,1,2 flagged yes,no,yes -> (1+2)/4
    auto table = build_risk_table({record(40, Sex::male, Race::black, false, true, 1.0),
                                   record(41, Sex::male, Race::black, false, false, 1.0),
                                   record(42, Sex::male, Race::black, false, true, 2.0)});
    CHECK(*table.cell({4, Sex::male, Race::black, false}) == doctest::Approx(0.75));
}

TEST_CASE("records with unknown demographics are dropped") {
    RiskSurveyRecord unknown = record(30, Sex::female, Race::white, false, true);
    unknown.race.reset();
    auto table = build_risk_table({unknown, record(30, Sex::female, Race::white, false, false)});
    CHECK(*table.cell({2, Sex::female, Race::white, false}) == doctest::Approx(0.0));
    CHECK(table.populated_cells() == 1);
}

TEST_CASE("survey loader validates the schema") {
    testutil::TempDir dir;
    std::string header = "age,sex,race,hispanic,skin_cancer,other_cancer,kidney_disease,copd,obese_bmi30,"
                         "coronary_heart_disease,diabetes,survey_weight";
    testutil::write_file(dir / "r.csv", header + "\n17,female,white,0,0,0,0,0,1,0,0,1\n");
    CHECK_THROWS_WITH_AS(load_risk_survey(dir / "r.csv"), doctest::Contains("age under 18"), ValidationError);

    testutil::write_file(dir / "ok.csv", header + "\n44,male,black,1,0,1,0,0,0,0,1,2.5\n44,,black,1,0,0,0,0,0,0,0,1\n");
    auto records = load_risk_survey(dir / "ok.csv");
    REQUIRE(records.size() == 2);
    CHECK(records[0].high_risk());
    CHECK(records[0].survey_weight == 2.5);
    CHECK(!records[1].sex.has_value());

    auto table = build_risk_table(records);
    CHECK(table.populated_cells() == 1); // the unknown-sex row is dropped
}

TEST_CASE("imputation respects degenerate cells") {
    std::vector<PersonRecord> persons;
    for (int i = 0; i < 50; ++i)
        persons.push_back(testutil::person("p" + std::to_string(i), "", 1.0, 30));
    Population pop(std::move(persons), {});

    RiskTable zeros;
    zeros.set_cell({2, Sex::female, Race::white, false}, 0.0);
    for (bool f : impute_high_risk(pop, zeros, 1))
        CHECK(!f);

    RiskTable ones;
    ones.set_cell({2, Sex::female, Race::white, false}, 1.0);
    for (bool f : impute_high_risk(pop, ones, 1))
        CHECK(f);
}

TEST_CASE("minors use the 18-24 cell of their sex and race") {
    std::vector<PersonRecord> persons = {testutil::person("kid", "", 1.0, 10, Sex::male, Race::asian)};
    Population pop(std::move(persons), {});
    RiskTable table;
    table.set_cell({0, Sex::male, Race::asian, false}, 1.0);
    auto flags = impute_high_risk(pop, table, 5);
    CHECK(flags[0]);
}

TEST_CASE("missing cells fall back to the age-bin marginal, then zero") {
    std::vector<PersonRecord> persons = {testutil::person("a", "", 1.0, 30, Sex::male, Race::other),
                                         testutil::person("b", "", 1.0, 90, Sex::male, Race::other)};
    Population pop(std::move(persons), {});
    RiskTable table;
    table.set_cell({2, Sex::female, Race::white, false}, 0.4);
    table.set_age_marginal(2, 1.0);
    auto flags = impute_high_risk(pop, table, 5);
    CHECK(flags[0]);  // marginal 1.0 for bin 2
    CHECK(!flags[1]); // nothing known about bin 13
    CHECK(table.probability_for(pop.persons()[1]) == 0.0);
}

TEST_CASE("empirical flag share approaches the cell probability") {
    const int n = 100000;
    std::vector<PersonRecord> persons;
    persons.reserve(n);
    for (int i = 0; i < n; ++i)
        persons.push_back(testutil::person("p" + std::to_string(i), "", 1.0, 30));
    Population pop(std::move(persons), {});
    RiskTable table;
    table.set_cell({2, Sex::female, Race::white, false}, 0.3);

    auto flags = impute_high_risk(pop, table, 99);
    double flagged = 0.0;
    for (std::size_t i = 0; i < flags.size(); ++i)
        if (flags[i])
            flagged += 1.0;
    // 3-sigma binomial bound ~0.0043, spec tolerance 0.01.
    CHECK(std::abs(flagged / n - 0.3) < 0.01);
}

TEST_CASE("imputation is deterministic and order-independent") {
    auto make_pop = [](bool reversed) {
        std::vector<PersonRecord> persons;
        for (int i = 0; i < 500; ++i)
            persons.push_back(testutil::person("p" + std::to_string(i), "", 1.0, 20 + (i % 60)));
        if (reversed)
            std::reverse(persons.begin(), persons.end());
        return Population(std::move(persons), {});
    };
    RiskTable table;
    for (int bin = 0; bin < kRiskAgeBinCount; ++bin)
        table.set_cell({bin, Sex::female, Race::white, false}, 0.5);

    auto forward = make_pop(false);
    auto reversed = make_pop(true);
    auto f1 = impute_high_risk(forward, table, 11);
    auto f2 = impute_high_risk(reversed, table, 11);
    for (std::size_t i = 0; i < forward.persons().size(); ++i) {
        std::size_t j = forward.persons().size() - 1 - i; // same person in reversed order
        CHECK(f1[i] == f2[j]);
    }
    auto f3 = impute_high_risk(forward, table, 12);
    bool any_difference = false;
    for (std::size_t i = 0; i < f1.size(); ++i)
        any_difference = any_difference || (f1[i] != f3[i]);
    CHECK(any_difference);
}
