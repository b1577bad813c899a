// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Each criterion pins its tolerances in code; the timed ones also
// enforce their runtime budgets.

#include "oracle.hpp"
#include "testutil.hpp"
#include "vaxsim/adi.hpp"
#include "vaxsim/csv.hpp"
#include "vaxsim/equity.hpp"
#include "vaxsim/errors.hpp"
#include "vaxsim/pipeline.hpp"
#include "vaxsim/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace vaxsim;

namespace {

struct Check {
    std::vector<std::string> failures;
    long checks = 0;

    void expect(bool ok, const std::string &message) {
        ++checks;
        if (!ok && failures.size() < 12)
            failures.push_back(message);
        else if (!ok)
            failures.back() = "(more failures suppressed)";
    }

    void expect_near(double actual, double expected, double tolerance, const std::string &what) {
        std::ostringstream os;
        os << what << ": got " << actual << ", want " << expected << " +/- " << tolerance;
        expect(std::abs(actual - expected) <= tolerance, os.str());
    }
};

Strata random_reserve_strata(std::uint64_t seed) {
    rng::Sequence rng(rng::Stream(seed, "acceptance-strata"));
    std::vector<std::pair<Rank, StratumCell>> cells;
    auto add = [&](Rank rank, double mass, bool adi) {
        StratumCell c;
        c.mass = mass;
        c.high_adi = adi;
        c.age = 20.0 + 60.0 * rng.uniform();
        c.race = rng.bernoulli(0.2) ? Race::black : Race::white;
        c.sex = rng.bernoulli(0.5) ? Sex::female : Sex::male;
        c.state = rng.bernoulli(0.5) ? "MA" : "TX";
        cells.emplace_back(rank, c);
    };
    for (int s = 1; s <= 1 + int(rng.below(3)); ++s)
        for (int k = 0; k < 1 + int(rng.below(3)); ++k)
            add({1, s}, 1.0 + 50.0 * rng.uniform(), rng.bernoulli(0.3));
    for (int t = 2; t <= 5; ++t)
        for (int k = 0; k < 1 + int(rng.below(4)); ++k)
            add({t, 0}, 1.0 + 80.0 * rng.uniform(), rng.bernoulli(0.3));
    return Strata::from_cells(std::move(cells));
}

double eligible_mass_of(const Strata &strata, const ReservePolicy &policy, const AllocationResult &r) {
    double mass = 0.0;
    for (std::size_t c = 0; c < strata.cells().size(); ++c)
        if (policy.cell_eligible(strata.cells()[c]))
            mass += r.allocated[c];
    return mass;
}

RunConfig default_run_config() {
    auto config = load_run_config(VAXSIM_DATA_DIR "/run_default.json");
    return config;
}

// ---------------------------------------------------------------------------
// 1. Reserve identity: marginal eligible share = r + (1-r)s, exactly 0.44 and
//    0.58 when s = 0.30. Tolerance 1e-9, budget 1 s.
void criterion_reserve_identity(Check &check) {
    std::vector<std::pair<Rank, StratumCell>> cells;
    auto add = [&](Rank rank, double mass, bool adi) {
        StratumCell c;
        c.mass = mass;
        c.high_adi = adi;
        c.state = "MA";
        cells.emplace_back(rank, c);
    };
    add({1, 1}, 70, false);
    add({1, 1}, 30, true);
    for (int t = 2; t <= 5; ++t) {
        add({t, 0}, 70, false);
        add({t, 0}, 30, true);
    }
    auto strata = Strata::from_cells(std::move(cells));
    double tier1 = strata.tier1_mass();

    // Eligible residual stays positive until tier1 + 120/0.58 under r = 0.4
    // (and longer under r = 0.2); probe inside the tighter range.
    for (double q : {tier1, tier1 + 25.0, tier1 + 133.0, tier1 + 200.0}) {
        double m20 = marginal_share(strata, q, {0.2, Eligibility::high_adi}, cell_high_adi);
        double m40 = marginal_share(strata, q, {0.4, Eligibility::high_adi}, cell_high_adi);
        check.expect_near(m20, 0.44, 1e-9, "marginal share at r=0.2, s=0.30");
        check.expect_near(m40, 0.58, 1e-9, "marginal share at r=0.4, s=0.30");
    }

    // The identity on arbitrary strata, wherever eligible residual remains.
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto random_strata = random_reserve_strata(seed);
        for (double r : {0.2, 0.4}) {
            ReservePolicy policy{r, Eligibility::high_adi};
            double q_star = exhaustion_supply(random_strata, policy);
            double t1 = random_strata.tier1_mass();
            if (q_star <= t1 * (1.0 + 1e-12))
                continue; // no eligible residual beyond tier 1: identity range empty
            rng::Sequence rng(rng::Stream(seed, "identity-q"));
            for (int i = 0; i < 10; ++i) {
                double q = t1 + (q_star - t1) * 0.999 * rng.uniform();
                double u_vol = t1 + (1 - r) * (q - t1);
                double cum = 0.0, s = 0.0;
                for (const auto &rank : random_strata.ranks()) {
                    cum += rank.mass;
                    if (u_vol < cum && rank.mass > 0) {
                        double elig = 0.0;
                        for (std::size_t c = rank.begin; c < rank.end; ++c)
                            if (random_strata.cells()[c].high_adi)
                                elig += random_strata.cells()[c].mass;
                        s = elig / rank.mass;
                        break;
                    }
                }
                double measured = marginal_share(random_strata, q, policy, cell_high_adi);
                check.expect_near(measured, r + (1 - r) * s, 1e-9, "reserve identity on random strata");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 2. Conservation at every grid point and exact convergence of the cumulative
//    statistics at full supply. 10^6 weighted persons, 1000-point grid,
//    budget 10 s.
void criterion_conservation(Check &check, const PipelineResult &pipe) {
    const Strata &strata = pipe.strata;
    double total = strata.total_mass();
    check.expect(total >= 1.0e6, "pipeline population holds 10^6 weighted persons");

    double pop_bi = 0.0, pop_female = 0.0, pop_adi = 0.0, pop_age = 0.0;
    for (const auto &c : strata.cells()) {
        if (cell_black_indigenous(c))
            pop_bi += c.mass;
        if (cell_female(c))
            pop_female += c.mass;
        if (c.high_adi)
            pop_adi += c.mass;
        pop_age += c.age * c.mass;
    }

    std::vector<double> grid = build_supply_grid("linspace:1000", total);
    for (const auto &policy :
         {ReservePolicy{}, ReservePolicy{0.2, Eligibility::high_adi}, ReservePolicy{0.4, Eligibility::high_adi}}) {
        sweep_supply(strata, policy, grid, [&](const AllocationResult &r) {
            double expected = std::min(r.supply, total);
            check.expect(std::abs(r.total_allocated - expected) <= 1e-9 * std::max(1.0, expected),
                         "conservation at supply " + std::to_string(r.supply));
        });
        auto full = allocate_with_reserve(strata, total, policy);
        check.expect_near(allocated_share(strata, full, cell_black_indigenous), pop_bi / total, 1e-9,
                          "full-supply B+I share");
        check.expect_near(allocated_share(strata, full, cell_female), pop_female / total, 1e-9,
                          "full-supply female share");
        check.expect_near(allocated_share(strata, full, cell_high_adi), pop_adi / total, 1e-9,
                          "full-supply high-ADI share");
        check.expect_near(allocated_mean_age(strata, full), pop_age / total, 1e-9, "full-supply mean age");
    }
}

// ---------------------------------------------------------------------------
// 3. Monte Carlo oracle: >= 20 random unit-weight populations, r in
//    {0, 0.2, 0.4}, 5 supplies each, 10^5 orderings, every person within
//    3 standard errors. Budget 5 min.
void criterion_mc_oracle(Check &check) {
    const int populations = 20;
    const int trials = 100000;
    const double reserve_fractions[] = {0.0, 0.2, 0.4};

    std::vector<std::string> failures[populations];
    long check_counts[populations] = {};

    auto run_population = [&](int index) {
        auto oc = testutil::random_oracle_case(1000 + std::uint64_t(index), 200);
        auto cell_of = testutil::person_to_cell(oc);
        // Seeded generic supplies outside the singular pour-boundary windows,
        // where the fluid expectation is exact (see oracle_supply_singular).
        std::vector<double> fractions_list(std::begin(reserve_fractions), std::end(reserve_fractions));
        auto supplies = testutil::oracle_supplies(oc, fractions_list, 5, 500 + std::uint64_t(index));
        for (int si = 0; si < 5; ++si) {
            double q = supplies[std::size_t(si)];
            for (double r : reserve_fractions) {
                auto estimate = testutil::mc_expected_allocation(oc.world, q, r, trials,
                                                                 std::uint64_t(9000 + index * 31 + si));
                auto fluid = allocate_with_reserve(oc.strata, q, ReservePolicy{r, Eligibility::high_adi});
                for (std::size_t p = 0; p < oc.world.size(); ++p) {
                    ++check_counts[index];
                    double diff = std::abs(fluid.allocated[cell_of[p]] - estimate.mean[p]);
                    double bound = 3.0 * estimate.standard_error[p] + 1e-9;
                    if (diff > bound && failures[index].size() < 4) {
                        std::ostringstream os;
                        os << "population " << index << " person " << p << " r=" << r << " q=" << q
                           << ": |fluid-mc| = " << diff << " > " << bound;
                        failures[index].push_back(os.str());
                    }
                }
            }
        }
    };

    std::vector<std::thread> workers;
    std::atomic<int> next{0};
    unsigned hw = std::max(2u, std::thread::hardware_concurrency());
    for (unsigned w = 0; w < hw; ++w) {
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < populations; i = next.fetch_add(1))
                run_population(i);
        });
    }
    for (auto &t : workers)
        t.join();
    for (int i = 0; i < populations; ++i) {
        check.checks += check_counts[i];
        for (const auto &f : failures[i])
            check.expect(false, f);
    }
}

// ---------------------------------------------------------------------------
// 4. Exhaustion point against a fine numerical sweep (step 1e-4 of the total
//    mass), r in {0.05, 0.2, 0.4, 1.0}, 10 random strata. The source's 175M
//    and 230M reference points need the real survey data and stay
//    documentation-only.
void criterion_exhaustion(Check &check) {
    for (std::uint64_t seed = 21; seed <= 30; ++seed) {
        auto strata = random_reserve_strata(seed);
        double eligible_total = 0.0;
        ReservePolicy probe{0.5, Eligibility::high_adi};
        for (const auto &c : strata.cells())
            if (probe.cell_eligible(c))
                eligible_total += c.mass;
        for (double r : {0.05, 0.2, 0.4, 1.0}) {
            ReservePolicy policy{r, Eligibility::high_adi};
            double analytic = exhaustion_supply(strata, policy);
            double step = 1e-4 * strata.total_mass();
            double numeric = strata.total_mass();
            for (double q = 0.0; q <= strata.total_mass() + step; q += step) {
                auto result = allocate_with_reserve(strata, std::min(q, strata.total_mass()), policy);
                if (eligible_mass_of(strata, policy, result) >= eligible_total - 1e-9 * strata.total_mass()) {
                    numeric = std::min(q, strata.total_mass());
                    break;
                }
            }
            std::ostringstream os;
            os << "exhaustion seed " << seed << " r=" << r;
            check.expect(std::abs(analytic - numeric) <= step + 1e-12, os.str() + ": analytic " +
                                                                           std::to_string(analytic) + " vs sweep " +
                                                                           std::to_string(numeric));
        }
    }
}

// ---------------------------------------------------------------------------
// 5. Deprivation-index suite: decile masses, the strict high-ADI bound with
//    group quarters present, linearity, and the single-component product.
void criterion_adi(Check &check) {
    auto config = testutil::small_synthetic_config(200000.0, 10.0);
    config.household_size_distribution = {{1, 1.0}}; // person == family
    auto pop = generate_synthetic(config);
    AdiConfig adi_config = load_adi_config(VAXSIM_DATA_DIR "/adi_coefficients.json");
    auto result = compute_adi(pop, adi_config);

    double total = pop.weighted_total();
    double gq = pop.weighted_total([](const PersonRecord &p) { return p.group_quarters; });
    check.expect(gq > 0.0, "acceptance population must include group quarters");
    double non_gq = total - gq;
    double max_weight = 0.0;
    std::array<double, 11> decile_mass{};
    double high = 0.0;
    for (std::size_t i = 0; i < pop.persons().size(); ++i) {
        max_weight = std::max(max_weight, pop.persons()[i].weight);
        if (result.decile_by_person[i])
            decile_mass[std::size_t(*result.decile_by_person[i])] += pop.persons()[i].weight;
        if (result.high_adi_by_person[i])
            high += pop.persons()[i].weight;
    }
    for (int d = 1; d <= 10; ++d)
        check.expect_near(decile_mass[std::size_t(d)], 0.1 * non_gq, max_weight + 1e-9,
                          "decile " + std::to_string(d) + " mass");
    check.expect(high < 0.30 * total, "high-ADI mass strictly below 30% of the total");

    rng::Sequence rng(rng::Stream(5, "acceptance-linearity"));
    for (int t = 0; t < 200; ++t) {
        FamilyAdiComponents a, b;
        a.family_id = b.family_id = "f";
        double scale = 0.25 + 1.5 * rng.uniform();
        for (int i = 0; i < kAdiComponentCount; ++i) {
            if (rng.uniform() < 0.35)
                continue;
            // Percent components stay inside [0,100] on both sides of the
            // scaling (100 / 1.75 > 55).
            double v = adi_component_is_percent(AdiComponent(i)) ? 55.0 * rng.uniform() : 50000.0 * rng.uniform();
            a.values[std::size_t(i)] = v;
            b.values[std::size_t(i)] = v * scale;
        }
        double ra = compute_raw_adi(a, adi_config.coefficients);
        double rb = compute_raw_adi(b, adi_config.coefficients);
        check.expect(std::abs(rb - scale * ra) <= 1e-9 * std::max(1.0, std::abs(ra)),
                     "raw score linearity under random scaling");
    }

    FamilyAdiComponents single;
    single.family_id = "f";
    single.set(AdiComponent::unemployment, 100.0);
    check.expect(compute_raw_adi(single, default_adi_coefficients()) == 8.06,
                 "single-component product 100 x 0.0806 == 8.06");
}

// ---------------------------------------------------------------------------
// 6. Supersetting: every probabilistic group's realized mass within 3 sigma
//    of min(external, superset); the undercounted guard-style group takes its
//    whole superset with a diagnostic.
void criterion_supersetting(Check &check, const PipelineResult &pipe) {
    const auto &state = pipe.state;
    const auto &schedule = pipe.schedule;

    std::vector<double> realized(schedule.groups.size(), 0.0);
    for (std::size_t i = 0; i < state.population.persons().size(); ++i)
        for (std::size_t g = 0; g < schedule.groups.size(); ++g)
            if (state.is_member(i, g))
                realized[g] += state.population.persons()[i].weight;

    bool saw_guard_style = false;
    for (const auto &diag : state.diagnostics) {
        const GroupDefinition *group = schedule.find(diag.group_id);
        check.expect(group != nullptr, "diagnostic for unknown group " + diag.group_id);
        if (!group)
            continue;
        std::size_t gi = 0;
        for (; gi < schedule.groups.size(); ++gi)
            if (schedule.groups[gi].id == diag.group_id)
                break;
        double target = std::min(diag.external_size, diag.superset_mass);
        if (diag.take_all) {
            check.expect_near(realized[gi], diag.superset_mass, 1e-9 * std::max(1.0, diag.superset_mass),
                              "take-all group " + diag.group_id + " takes its whole superset");
            if (diag.superset_mass < diag.external_size)
                saw_guard_style = true;
            continue;
        }
        // Weights are constant here, so the binomial sigma is exact.
        double w = 25.0;
        double n = diag.superset_mass / w;
        double sigma = w * std::sqrt(n * diag.probability * (1.0 - diag.probability));
        check.expect_near(realized[gi], target, 3.0 * sigma + 1e-9,
                          "group " + diag.group_id + " realized mass (3 sigma)");
    }
    check.expect(saw_guard_style, "an undercounted superset triggered the take-all diagnostic");
}

// ---------------------------------------------------------------------------
// 7. Death-share estimator on the shipped table: 24.6% / 28.7% within 0.2pp,
//    exact normalization and scale invariance.
void criterion_death_share(Check &check) {
    auto table = load_race_death_table(VAXSIM_DATA_DIR "/race_death_table.csv");
    std::set<DeathRace> bi = {DeathRace::black, DeathRace::indigenous};
    check.expect_near(death_share_estimate(table, bi), 0.246, 0.002, "B+I actual death share");
    check.expect_near(death_share_estimate(table, bi, true), 0.287, 0.002, "B+I age-adjusted death share");

    std::set<DeathRace> all = {DeathRace::indigenous, DeathRace::asian,  DeathRace::black,
                               DeathRace::latino,     DeathRace::white, DeathRace::pacific_islander};
    check.expect(death_share_estimate(table, all) == 1.0, "full-set normalization is exactly one");

    auto scaled = table;
    for (auto &e : scaled.entries) {
        e.death_rate *= 17.0;
        e.age_adjusted_death_rate *= 17.0;
    }
    check.expect(std::abs(death_share_estimate(scaled, bi) - death_share_estimate(table, bi)) < 1e-12,
                 "uniform rate scaling leaves the share unchanged");
}

// ---------------------------------------------------------------------------
// 8. Figure shapes on the calibrated population: the B+I share plateaus above
//    its population share after tier 1, and larger reserves dominate
//    pointwise beyond tier 1.
void criterion_figure_shapes(Check &check, const PipelineResult &pipe) {
    const Strata &strata = pipe.strata;
    double total = strata.total_mass();
    double tier1 = strata.tier1_mass();

    double pop_bi = 0.0;
    for (const auto &c : strata.cells())
        if (cell_black_indigenous(c))
            pop_bi += c.mass;
    pop_bi /= total;
    check.expect_near(pop_bi, 0.155, 0.01, "calibrated B+I population share");

    auto grid = build_supply_grid("linspace:400", total);
    ReservePolicy r0{}, r2{0.2, Eligibility::high_adi}, r4{0.4, Eligibility::high_adi};
    auto s0 = sweep_supply(strata, r0, grid);
    auto s2 = sweep_supply(strata, r2, grid);
    auto s4 = sweep_supply(strata, r4, grid);

    double plateau_min = 1.0, plateau_max = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double q = grid[i];
        if (q <= tier1 || q >= 0.99 * total)
            continue;
        double b0 = allocated_share(strata, s0[i], cell_black_indigenous);
        double b2 = allocated_share(strata, s2[i], cell_black_indigenous);
        double b4 = allocated_share(strata, s4[i], cell_black_indigenous);
        check.expect(b0 > pop_bi,
                     "plain B+I share above the population share at supply " + std::to_string(q));
        check.expect(b2 >= b0 - 1e-9, "r=0.2 dominates r=0 at supply " + std::to_string(q));
        check.expect(b4 >= b2 - 1e-9, "r=0.4 dominates r=0.2 at supply " + std::to_string(q));
        if (q <= 0.6 * total) {
            plateau_min = std::min(plateau_min, b0);
            plateau_max = std::max(plateau_max, b0);
        }
    }
    check.expect(plateau_max - plateau_min <= 0.02,
                 "B+I share plateaus (range " + std::to_string(plateau_max - plateau_min) + " over tier 2+)");
}

// ---------------------------------------------------------------------------
// 9. End-to-end determinism of the run bundle.
void criterion_determinism(Check &check) {
    auto config = default_run_config();
    config.synthetic->population_size = 200000.0;
    config.supply_grid_spec = "linspace:200";

    testutil::TempDir a, b;
    cmd_run(config, a.path());
    cmd_run(config, b.path());
    int files = 0;
    for (const auto &entry : std::filesystem::directory_iterator(a.path())) {
        auto name = entry.path().filename().string();
        ++files;
        check.expect(testutil::read_file(entry.path()) == testutil::read_file(b.path() / name),
                     "bundle file " + name + " identical across reruns");
    }
    check.expect(files >= 6, "bundle contains the expected outputs");
}

struct Criterion {
    int id;
    const char *name;
    std::function<void(Check &)> run;
    std::optional<double> budget_seconds;
};

} // namespace

int main() {
    // The calibrated 10^6-person pipeline backs criteria 2, 6 and 8; build it
    // once, timed inside criterion 2's budget.
    std::optional<PipelineResult> pipeline;
    auto build_pipeline = [&]() -> const PipelineResult & {
        if (!pipeline)
            pipeline = run_pipeline(default_run_config());
        return *pipeline;
    };

    std::vector<Criterion> criteria = {
        {1, "reserve identity (0.44 / 0.58, 1e-9)", criterion_reserve_identity, 1.0},
        {2, "conservation and full-supply convergence",
         [&](Check &c) { criterion_conservation(c, build_pipeline()); }, 10.0},
        {3, "Monte Carlo oracle equivalence (3 SE)", criterion_mc_oracle, 300.0},
        {4, "exhaustion point vs numerical sweep", criterion_exhaustion, std::nullopt},
        {5, "deprivation-index suite", criterion_adi, std::nullopt},
        {6, "supersetting masses within 3 sigma",
         [&](Check &c) { criterion_supersetting(c, build_pipeline()); }, std::nullopt},
        {7, "death-share estimator (24.6% / 28.7%)", criterion_death_share, std::nullopt},
        {8, "figure shapes and reserve dominance",
         [&](Check &c) { criterion_figure_shapes(c, build_pipeline()); }, std::nullopt},
        {9, "end-to-end run determinism", criterion_determinism, std::nullopt},
    };

    int failed = 0;
    for (auto &criterion : criteria) {
        Check check;
        auto start = std::chrono::steady_clock::now();
        try {
            criterion.run(check);
        } catch (const std::exception &e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.budget_seconds && elapsed > *criterion.budget_seconds) {
            std::ostringstream os;
            os << "runtime " << elapsed << "s exceeds budget " << *criterion.budget_seconds << "s";
            check.expect(false, os.str());
        }
        bool ok = check.failures.empty();
        std::printf("[%s] %d %s (%ld checks, %.2fs)\n", ok ? "PASS" : "FAIL", criterion.id, criterion.name,
                    check.checks, elapsed);
        for (const auto &f : check.failures)
            std::printf("       %s\n", f.c_str());
        failed += !ok;
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    // Reference note: the published 175M / 230M exhaustion supplies and the
    // ~25M tier-1 count depend on the full survey datasets; they are
    // calibration references, not assertions, at desk scale.
    return failed == 0 ? 0 : 1;
}
