#pragma once

#include "vaxsim/tiers.hpp"
#include "vaxsim/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vaxsim {

/// One cell of the allocation strata: all persons sharing a priority rank
/// and the reporting attributes. Expectation-based allocation treats the
/// cell as a divisible pool of `mass` person-units.
struct StratumCell {
    std::size_t rank_index = 0;
    bool high_adi = false;
    Race race = Race::white;
    bool hispanic = false;
    Sex sex = Sex::female;
    double age = 0.0;
    std::string state;
    double mass = 0.0;
};

struct StratumRank {
    Rank rank;
    std::size_t begin = 0, end = 0; // cell range
    double mass = 0.0;
};

/// Immutable priority strata: ranks in priority order, cells grouped by
/// rank. Every supply evaluation is a pure function of this structure.
class Strata {
  public:
    static Strata from_tier_state(const TierState &state, const std::vector<bool> &high_adi,
                                  const TierSchedule &schedule);

    /// Build directly from cells (tests, oracle populations). Cell order
    /// within a rank is preserved.
    static Strata from_cells(std::vector<std::pair<Rank, StratumCell>> cells);

    const std::vector<StratumRank> &ranks() const { return ranks_; }
    const std::vector<StratumCell> &cells() const { return cells_; }
    double total_mass() const { return total_mass_; }
    double tier1_mass() const { return tier1_mass_; }

  private:
    std::vector<StratumRank> ranks_;
    std::vector<StratumCell> cells_;
    double total_mass_ = 0.0;
    double tier1_mass_ = 0.0;
};

enum class Eligibility : std::uint8_t { none, high_adi, black_or_indigenous };

std::string_view to_string(Eligibility e);
std::optional<Eligibility> parse_eligibility(std::string_view s);

/// Over-and-above reserve: beyond tier 1, fraction r of each marginal unit
/// flows to eligible persons at top priority, the rest through the
/// unmodified priority order. r = 0 or eligibility none degenerates to the
/// plain priority system.
struct ReservePolicy {
    double reserve_fraction = 0.0;
    Eligibility eligibility = Eligibility::none;

    bool degenerate() const { return reserve_fraction == 0.0 || eligibility == Eligibility::none; }
    bool cell_eligible(const StratumCell &cell) const;
    /// Canonical label; every degenerate policy collapses to "cdc".
    std::string label() const;
};

struct AllocationResult {
    double supply = 0.0;
    std::vector<double> allocated; // parallel to strata.cells()
    double total_allocated = 0.0;
    Rank tier_reached; // rank holding the next marginal unreserved unit
};

using CellPredicate = std::function<bool(const StratumCell &)>;

AllocationResult allocate_priority(const Strata &strata, double supply);
AllocationResult allocate_with_reserve(const Strata &strata, double supply, const ReservePolicy &policy);

/// Right-derivative of the predicate mass's allocation with respect to
/// supply, from the piecewise-linear structure (no differencing).
double marginal_share(const Strata &strata, double supply, const ReservePolicy &policy,
                      const CellPredicate &attribute);

/// Smallest supply at which every eligible person-unit is allocated.
double exhaustion_supply(const Strata &strata, const ReservePolicy &policy);

std::vector<AllocationResult> sweep_supply(const Strata &strata, const ReservePolicy &policy,
                                           const std::vector<double> &grid);
void sweep_supply(const Strata &strata, const ReservePolicy &policy, const std::vector<double> &grid,
                  const std::function<void(const AllocationResult &)> &consume);

/// The default grid: fine steps over the first 0.0307% of the mass, then
/// coarse steps of 0.0307% up to the full mass (10k / 100k steps for a
/// population of 325.7M), both scaled proportionally to the population.
std::vector<double> default_supply_grid(double total_mass);

/// Fraction of the allocated mass lying in cells satisfying the predicate.
double allocated_share(const Strata &strata, const AllocationResult &result, const CellPredicate &predicate);
double allocated_mean_age(const Strata &strata, const AllocationResult &result);

// Reporting predicates.
bool cell_black_indigenous(const StratumCell &c);
bool cell_black_indigenous_hispanic(const StratumCell &c);
bool cell_high_adi(const StratumCell &c);
bool cell_female(const StratumCell &c);

} // namespace vaxsim
