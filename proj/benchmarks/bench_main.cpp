#include <benchmark/benchmark.h>

#include "vaxsim/adi.hpp"
#include "vaxsim/allocation.hpp"
#include "vaxsim/rng.hpp"
#include "vaxsim/synthetic.hpp"

#include <vector>

using namespace vaxsim;

namespace {

Strata make_strata(int cells_per_rank) {
    rng::Sequence rng(rng::Stream(1, "bench-strata"));
    std::vector<std::pair<Rank, StratumCell>> cells;
    for (int s = 1; s <= 7; ++s)
        for (int c = 0; c < cells_per_rank; ++c) {
            StratumCell cell;
            cell.mass = 1.0 + 100.0 * rng.uniform();
            cell.high_adi = rng.bernoulli(0.3);
            cell.age = 20.0 + 60.0 * rng.uniform();
            cell.state = "MA";
            cells.emplace_back(Rank{1, s}, cell);
        }
    for (int t = 2; t <= 5; ++t)
        for (int c = 0; c < cells_per_rank * 4; ++c) {
            StratumCell cell;
            cell.mass = 1.0 + 100.0 * rng.uniform();
            cell.high_adi = rng.bernoulli(0.3);
            cell.age = 20.0 + 60.0 * rng.uniform();
            cell.state = "TX";
            cells.emplace_back(Rank{t, 0}, cell);
        }
    return Strata::from_cells(std::move(cells));
}

SyntheticConfig bench_config(double population) {
    SyntheticConfig c;
    c.seed = 3;
    c.population_size = population;
    c.record_weight = 25.0;
    c.group_quarters_fraction = 0.02;
    c.household_size_distribution = {{1, 0.3}, {2, 0.35}, {3, 0.2}, {4, 0.15}};
    c.race = {0.6, 0.13, 0.03, 0.06, 0.004, 0.096, 0.08};
    c.hispanic_rate = 0.18;
    c.female_share = 0.5;
    c.age_bins = {{0, 0, 0.012}, {1, 2, 0.023}, {3, 18, 0.2}, {19, 44, 0.35}, {45, 64, 0.24}, {65, 94, 0.175}};
    c.states = {{"CA", 0.5}, {"TX", 0.5}};
    c.risk_survey.records = 0;
    return c;
}

void BM_AllocateWithReserve(benchmark::State &state) {
    auto strata = make_strata(int(state.range(0)));
    ReservePolicy policy{0.2, Eligibility::high_adi};
    double q = strata.total_mass() * 0.4;
    for (auto _ : state) {
        auto result = allocate_with_reserve(strata, q, policy);
        benchmark::DoNotOptimize(result.total_allocated);
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(strata.cells().size()));
}

void BM_MarginalShare(benchmark::State &state) {
    auto strata = make_strata(int(state.range(0)));
    ReservePolicy policy{0.2, Eligibility::high_adi};
    double q = strata.total_mass() * 0.4;
    for (auto _ : state) {
        double m = marginal_share(strata, q, policy, cell_high_adi);
        benchmark::DoNotOptimize(m);
    }
}

void BM_SweepSupply(benchmark::State &state) {
    auto strata = make_strata(200);
    ReservePolicy policy{0.4, Eligibility::high_adi};
    std::vector<double> grid;
    for (int i = 0; i <= int(state.range(0)); ++i)
        grid.push_back(strata.total_mass() * double(i) / double(state.range(0)));
    for (auto _ : state) {
        double sum = 0.0;
        sweep_supply(strata, policy, grid, [&](const AllocationResult &r) { sum += r.total_allocated; });
        benchmark::DoNotOptimize(sum);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GenerateSynthetic(benchmark::State &state) {
    auto config = bench_config(double(state.range(0)));
    for (auto _ : state) {
        auto pop = generate_synthetic(config);
        benchmark::DoNotOptimize(pop.weighted_total());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) / 25);
}

void BM_ComputeAdi(benchmark::State &state) {
    auto config = bench_config(double(state.range(0)));
    auto pop = generate_synthetic(config);
    AdiConfig adi;
    adi.poverty_thresholds = {{1, 13011}, {2, 16521}, {3, 20335}, {4, 26172}};
    for (auto _ : state) {
        auto result = compute_adi(pop, adi);
        benchmark::DoNotOptimize(result.assignments.size());
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(pop.persons().size()));
}

} // namespace

BENCHMARK(BM_AllocateWithReserve)->Arg(100)->Arg(1000)->Arg(10000);
BENCHMARK(BM_MarginalShare)->Arg(1000)->Arg(10000);
BENCHMARK(BM_SweepSupply)->Arg(100)->Arg(1000);
BENCHMARK(BM_GenerateSynthetic)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_ComputeAdi)->Arg(100000)->Arg(1000000);

BENCHMARK_MAIN();
