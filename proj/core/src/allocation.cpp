#include "vaxsim/allocation.hpp"

#include "vaxsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace vaxsim {

namespace {

double boundary_eps(const Strata &strata) { return 1e-12 * std::max(1.0, strata.total_mass()); }

/// Rank fill fractions under the plain priority system at volume P.
std::vector<double> fill_fractions(const Strata &strata, double volume) {
    std::vector<double> f(strata.ranks().size(), 0.0);
    double rem = volume;
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        double mass = strata.ranks()[k].mass;
        if (mass <= 0.0) {
            f[k] = 1.0;
            continue;
        }
        if (rem >= mass) {
            f[k] = 1.0;
            rem -= mass;
        } else {
            f[k] = rem > 0.0 ? rem / mass : 0.0;
            rem = 0.0;
        }
    }
    return f;
}

/// Rank receiving the next marginal unit at volume P (right-continuous).
std::size_t frontier_rank(const Strata &strata, double volume) {
    double cum = 0.0;
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        cum += strata.ranks()[k].mass;
        if (volume < cum && strata.ranks()[k].mass > 0.0)
            return k;
    }
    return strata.ranks().empty() ? 0 : strata.ranks().size() - 1;
}

struct RankEligibility {
    std::vector<double> eligible; // eligible mass per rank
    double total = 0.0;
};

RankEligibility rank_eligibility(const Strata &strata, const ReservePolicy &policy) {
    RankEligibility e;
    e.eligible.assign(strata.ranks().size(), 0.0);
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        const auto &rank = strata.ranks()[k];
        for (std::size_t c = rank.begin; c < rank.end; ++c)
            if (policy.cell_eligible(strata.cells()[c]))
                e.eligible[k] += strata.cells()[c].mass;
        e.total += e.eligible[k];
    }
    return e;
}

double eligible_under_plain(const RankEligibility &elig, const std::vector<double> &f) {
    double g = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        g += f[k] * elig.eligible[k];
    return g;
}

/// Solve P - g(P) = target for the smallest P >= start; phi is piecewise
/// linear and non-decreasing in P.
double solve_reversion_volume(const Strata &strata, const RankEligibility &elig, double start, double target) {
    double x = start;
    double phix = start - eligible_under_plain(elig, fill_fractions(strata, start));
    double eps = boundary_eps(strata);
    if (phix >= target - eps)
        return x;
    double cum = 0.0;
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        double mass = strata.ranks()[k].mass;
        cum += mass;
        if (cum <= x + eps || mass <= 0.0)
            continue;
        double slope = 1.0 - elig.eligible[k] / mass;
        double phi_end = phix + (cum - x) * slope;
        if (phi_end >= target - eps) {
            if (slope > eps)
                return x + (target - phix) / slope;
            return x; // flat segment: any point allocates identically
        }
        phix = phi_end;
        x = cum;
    }
    return strata.total_mass();
}

AllocationResult full_coverage(const Strata &strata) {
    AllocationResult r;
    r.supply = strata.total_mass();
    r.allocated.resize(strata.cells().size());
    for (std::size_t c = 0; c < strata.cells().size(); ++c)
        r.allocated[c] = strata.cells()[c].mass;
    r.total_allocated = strata.total_mass();
    r.tier_reached = strata.ranks().empty() ? Rank{1, 0} : strata.ranks().back().rank;
    return r;
}

} // namespace

Strata Strata::from_tier_state(const TierState &state, const std::vector<bool> &high_adi,
                               const TierSchedule &schedule) {
    auto rank_list = schedule.ranks();
    std::map<Rank, std::size_t> rank_index;
    for (std::size_t i = 0; i < rank_list.size(); ++i)
        rank_index[rank_list[i]] = i;

    using Key = std::tuple<std::size_t, bool, int, bool, int, int, std::string>;
    std::map<Key, double> agg;
    for (std::size_t i = 0; i < state.population.persons().size(); ++i) {
        const auto &p = state.population.persons()[i];
        auto it = rank_index.find(state.highest[i]);
        if (it == rank_index.end())
            throw InternalError("person " + p.person_id + " has no resolved rank");
        Key key{it->second, high_adi[i], int(p.race), p.hispanic, int(p.sex), p.age, p.state};
        agg[key] += p.weight;
    }

    std::vector<std::pair<Rank, StratumCell>> cells;
    cells.reserve(agg.size());
    for (const auto &[key, mass] : agg) {
        StratumCell cell;
        cell.rank_index = std::get<0>(key);
        cell.high_adi = std::get<1>(key);
        cell.race = Race(std::get<2>(key));
        cell.hispanic = std::get<3>(key);
        cell.sex = Sex(std::get<4>(key));
        cell.age = double(std::get<5>(key));
        cell.state = std::get<6>(key);
        cell.mass = mass;
        cells.emplace_back(rank_list[cell.rank_index], cell);
    }

    Strata strata;
    // Preserve every schedule rank, including empty ones, so census and
    // strata rank indices agree.
    strata.ranks_.reserve(rank_list.size());
    for (const auto &r : rank_list)
        strata.ranks_.push_back({r, 0, 0, 0.0});
    for (auto &[rank, cell] : cells) {
        (void)rank;
        strata.cells_.push_back(std::move(cell));
    }
    std::size_t begin = 0;
    for (std::size_t k = 0; k < strata.ranks_.size(); ++k) {
        std::size_t end = begin;
        double mass = 0.0;
        while (end < strata.cells_.size() && strata.cells_[end].rank_index == k) {
            mass += strata.cells_[end].mass;
            ++end;
        }
        strata.ranks_[k].begin = begin;
        strata.ranks_[k].end = end;
        strata.ranks_[k].mass = mass;
        strata.total_mass_ += mass;
        if (strata.ranks_[k].rank.tier == 1)
            strata.tier1_mass_ += mass;
        begin = end;
    }
    return strata;
}

Strata Strata::from_cells(std::vector<std::pair<Rank, StratumCell>> cells) {
    std::stable_sort(cells.begin(), cells.end(),
                     [](const auto &a, const auto &b) { return a.first < b.first; });
    Strata strata;
    std::size_t i = 0;
    while (i < cells.size()) {
        Rank rank = cells[i].first;
        StratumRank r;
        r.rank = rank;
        r.begin = strata.cells_.size();
        while (i < cells.size() && cells[i].first == rank) {
            StratumCell cell = cells[i].second;
            if (cell.mass < 0.0)
                throw ValidationError("stratum cell with negative mass");
            cell.rank_index = strata.ranks_.size();
            r.mass += cell.mass;
            strata.cells_.push_back(std::move(cell));
            ++i;
        }
        r.end = strata.cells_.size();
        strata.total_mass_ += r.mass;
        if (rank.tier == 1)
            strata.tier1_mass_ += r.mass;
        strata.ranks_.push_back(r);
    }
    return strata;
}

std::string_view to_string(Eligibility e) {
    switch (e) {
    case Eligibility::none: return "none";
    case Eligibility::high_adi: return "high_adi";
    case Eligibility::black_or_indigenous: return "black_or_indigenous";
    }
    return "?";
}

std::optional<Eligibility> parse_eligibility(std::string_view s) {
    if (s == "none") return Eligibility::none;
    if (s == "high_adi") return Eligibility::high_adi;
    if (s == "black_or_indigenous") return Eligibility::black_or_indigenous;
    return std::nullopt;
}

bool ReservePolicy::cell_eligible(const StratumCell &cell) const {
    switch (eligibility) {
    case Eligibility::none: return false;
    case Eligibility::high_adi: return cell.high_adi;
    case Eligibility::black_or_indigenous: return cell.race == Race::black || cell.race == Race::indigenous;
    }
    return false;
}

std::string ReservePolicy::label() const {
    if (degenerate())
        return "cdc";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "reserve:%s:r=%.4g", std::string(to_string(eligibility)).c_str(),
                  reserve_fraction);
    return buf;
}

AllocationResult allocate_priority(const Strata &strata, double supply) {
    if (supply < 0.0)
        throw ValidationError("supply must be non-negative");
    if (supply >= strata.total_mass()) {
        AllocationResult r = full_coverage(strata);
        r.supply = supply;
        return r;
    }
    AllocationResult r;
    r.supply = supply;
    r.allocated.assign(strata.cells().size(), 0.0);
    auto f = fill_fractions(strata, supply);
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        const auto &rank = strata.ranks()[k];
        if (f[k] <= 0.0)
            continue;
        for (std::size_t c = rank.begin; c < rank.end; ++c) {
            r.allocated[c] = strata.cells()[c].mass * f[k];
            r.total_allocated += r.allocated[c];
        }
    }
    r.tier_reached = strata.ranks().empty() ? Rank{1, 0} : strata.ranks()[frontier_rank(strata, supply)].rank;
    return r;
}

AllocationResult allocate_with_reserve(const Strata &strata, double supply, const ReservePolicy &policy) {
    if (policy.reserve_fraction < 0.0 || policy.reserve_fraction > 1.0)
        throw ValidationError("reserve fraction must lie in [0,1]");
    if (supply < 0.0)
        throw ValidationError("supply must be non-negative");
    const double tier1 = strata.tier1_mass();
    if (policy.degenerate() || supply <= tier1)
        return allocate_priority(strata, supply);
    if (supply >= strata.total_mass()) {
        AllocationResult r = full_coverage(strata);
        r.supply = supply;
        return r;
    }

    const RankEligibility elig = rank_eligibility(strata, policy);
    if (elig.total <= 0.0)
        return allocate_priority(strata, supply); // nobody eligible: instant reversion

    const double r_frac = policy.reserve_fraction;
    const double beyond = supply - tier1;
    const double eps = boundary_eps(strata);

    double unreserved_volume = tier1 + (1.0 - r_frac) * beyond;
    double reserve_volume = r_frac * beyond;

    auto f0 = fill_fractions(strata, unreserved_volume);
    double g0 = eligible_under_plain(elig, f0);
    double capacity = elig.total - g0;

    double volume = unreserved_volume;
    double pour = reserve_volume;
    if (reserve_volume > capacity + eps) {
        // Every eligible person is covered; the excess flows back through
        // the plain priority order.
        volume = solve_reversion_volume(strata, elig, unreserved_volume, supply - elig.total);
        auto f = fill_fractions(strata, volume);
        pour = elig.total - eligible_under_plain(elig, f);
    }

    AllocationResult result;
    result.supply = supply;
    result.allocated.assign(strata.cells().size(), 0.0);
    auto f = fill_fractions(strata, volume);
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        const auto &rank = strata.ranks()[k];
        for (std::size_t c = rank.begin; c < rank.end; ++c)
            result.allocated[c] = strata.cells()[c].mass * f[k];
    }
    // Reserve channel: eligible residual capacity, rank by rank.
    for (std::size_t k = 0; k < strata.ranks().size() && pour > eps; ++k) {
        if (elig.eligible[k] <= 0.0 || f[k] >= 1.0)
            continue;
        double rank_capacity = (1.0 - f[k]) * elig.eligible[k];
        double take = std::min(pour, rank_capacity);
        const auto &rank = strata.ranks()[k];
        for (std::size_t c = rank.begin; c < rank.end; ++c) {
            const auto &cell = strata.cells()[c];
            if (policy.cell_eligible(cell))
                result.allocated[c] += take * cell.mass / elig.eligible[k];
        }
        pour -= take;
    }
    for (double a : result.allocated)
        result.total_allocated += a;
    result.tier_reached = strata.ranks()[frontier_rank(strata, volume)].rank;
    return result;
}

double marginal_share(const Strata &strata, double supply, const ReservePolicy &policy,
                      const CellPredicate &attribute) {
    const double total = strata.total_mass();
    if (supply < 0.0)
        throw ValidationError("supply must be non-negative");
    if (supply > total)
        throw ValidationError("supply exceeds the total population mass");
    if (supply == total)
        return 0.0;

    auto rank_attr_mass = [&](std::size_t k, bool eligible_only, bool non_eligible_only) {
        const auto &rank = strata.ranks()[k];
        double m = 0.0;
        for (std::size_t c = rank.begin; c < rank.end; ++c) {
            const auto &cell = strata.cells()[c];
            bool elig = policy.cell_eligible(cell);
            if (eligible_only && !elig)
                continue;
            if (non_eligible_only && elig)
                continue;
            if (attribute(cell))
                m += cell.mass;
        }
        return m;
    };

    const double tier1 = strata.tier1_mass();
    const double eps = boundary_eps(strata);

    if (policy.degenerate() || supply < tier1) {
        std::size_t k = frontier_rank(strata, supply);
        return rank_attr_mass(k, false, false) / strata.ranks()[k].mass;
    }

    const RankEligibility elig = rank_eligibility(strata, policy);
    if (elig.total <= 0.0) {
        std::size_t k = frontier_rank(strata, supply);
        return rank_attr_mass(k, false, false) / strata.ranks()[k].mass;
    }

    const double r_frac = policy.reserve_fraction;
    const double beyond = supply - tier1;
    double unreserved_volume = tier1 + (1.0 - r_frac) * beyond;
    double reserve_volume = r_frac * beyond;

    auto f0 = fill_fractions(strata, unreserved_volume);
    double capacity = elig.total - eligible_under_plain(elig, f0);

    if (reserve_volume >= capacity - eps) {
        // Eligible residual exhausted: the whole flow follows plain priority
        // over what remains, which is non-eligible mass only.
        double volume = reserve_volume <= capacity
                            ? unreserved_volume
                            : solve_reversion_volume(strata, elig, unreserved_volume, supply - elig.total);
        auto f = fill_fractions(strata, volume);
        for (std::size_t k = frontier_rank(strata, volume); k < strata.ranks().size(); ++k) {
            double non_eligible = strata.ranks()[k].mass - elig.eligible[k];
            if (strata.ranks()[k].mass <= 0.0 || f[k] >= 1.0 || non_eligible <= 0.0)
                continue;
            return rank_attr_mass(k, false, true) / non_eligible;
        }
        return 0.0;
    }

    // Pre-exhaustion: locate both channel frontiers.
    std::size_t ku = frontier_rank(strata, unreserved_volume);
    double rem = reserve_volume;
    std::size_t kv = ku;
    bool found = false;
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        if (elig.eligible[k] <= 0.0 || f0[k] >= 1.0)
            continue;
        double cap_k = (1.0 - f0[k]) * elig.eligible[k];
        if (rem >= cap_k - eps) {
            rem -= cap_k;
            continue;
        }
        kv = k;
        found = true;
        break;
    }
    if (!found) {
        // Numerically at the exhaustion boundary.
        std::size_t k = frontier_rank(strata, unreserved_volume);
        double non_eligible = strata.ranks()[k].mass - elig.eligible[k];
        return non_eligible > 0.0 ? rank_attr_mass(k, false, true) / non_eligible : 0.0;
    }

    double ratio_kv = rank_attr_mass(kv, true, false) / elig.eligible[kv];
    if (kv == ku)
        return (1.0 - r_frac) * rank_attr_mass(ku, false, false) / strata.ranks()[ku].mass + r_frac * ratio_kv;
    // The unreserved channel keeps squeezing rank ku's eligible capacity,
    // which frees exactly that much reserve flow for rank kv.
    double s_ku = elig.eligible[ku] / strata.ranks()[ku].mass;
    return (1.0 - r_frac) * rank_attr_mass(ku, false, true) / strata.ranks()[ku].mass +
           (r_frac + (1.0 - r_frac) * s_ku) * ratio_kv;
}

double exhaustion_supply(const Strata &strata, const ReservePolicy &policy) {
    if (policy.eligibility == Eligibility::none)
        throw ValidationError("exhaustion supply requires a non-empty eligibility");
    const RankEligibility elig = rank_eligibility(strata, policy);
    if (elig.total <= 0.0)
        return 0.0;
    const double eps = boundary_eps(strata);
    const double tier1 = strata.tier1_mass();

    // Plain coverage may already finish the job inside tier 1.
    double cum_mass = 0.0, cum_elig = 0.0;
    double last_needed = 0.0;
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        cum_mass += strata.ranks()[k].mass;
        cum_elig += elig.eligible[k];
        if (elig.eligible[k] > 0.0)
            last_needed = cum_mass;
        if (cum_elig >= elig.total - eps)
            break;
    }
    if (last_needed <= tier1 + eps)
        return last_needed;

    const double r_frac = policy.reserve_fraction;
    double g_tier1 = eligible_under_plain(elig, fill_fractions(strata, tier1));
    if (r_frac >= 1.0)
        return tier1 + (elig.total - g_tier1);

    double cur_q = 0.0;
    double cur_elig = g_tier1;
    double cum = 0.0;
    for (std::size_t k = 0; k < strata.ranks().size(); ++k) {
        cum += strata.ranks()[k].mass;
        if (cum <= tier1 + eps || strata.ranks()[k].mass <= 0.0)
            continue;
        double volume_now = tier1 + (1.0 - r_frac) * cur_q;
        if (cum <= volume_now + eps)
            continue;
        double seg_q = (cum - volume_now) / (1.0 - r_frac);
        double slope = (1.0 - r_frac) * elig.eligible[k] / strata.ranks()[k].mass + r_frac;
        double end_elig = cur_elig + slope * seg_q;
        if (end_elig >= elig.total - eps) {
            if (slope <= eps)
                return tier1 + cur_q;
            return tier1 + cur_q + (elig.total - cur_elig) / slope;
        }
        cur_elig = end_elig;
        cur_q += seg_q;
    }
    return strata.total_mass();
}

std::vector<AllocationResult> sweep_supply(const Strata &strata, const ReservePolicy &policy,
                                           const std::vector<double> &grid) {
    std::vector<AllocationResult> results;
    results.reserve(grid.size());
    sweep_supply(strata, policy, grid, [&](const AllocationResult &r) { results.push_back(r); });
    return results;
}

void sweep_supply(const Strata &strata, const ReservePolicy &policy, const std::vector<double> &grid,
                  const std::function<void(const AllocationResult &)> &consume) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0)
            throw ValidationError("supply grid values must be non-negative");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw ValidationError("supply grid must be strictly increasing");
    }
    for (double q : grid)
        consume(allocate_with_reserve(strata, q, policy));
}

std::vector<double> default_supply_grid(double total_mass) {
    if (total_mass <= 0.0)
        return {0.0};
    // 10,000- and 100,000-unit steps for a 325.7M population, scaled.
    const double fine = total_mass * (1.0e4 / 325.7e6);
    const double coarse = total_mass * (1.0e5 / 325.7e6);
    std::vector<double> grid = {0.0};
    for (int i = 1; i <= 10; ++i)
        grid.push_back(fine * i);
    double x = coarse * 2.0;
    while (x < total_mass - coarse * 0.5) {
        grid.push_back(x);
        x += coarse;
    }
    grid.push_back(total_mass);
    return grid;
}

double allocated_share(const Strata &strata, const AllocationResult &result, const CellPredicate &predicate) {
    if (result.total_allocated <= 0.0)
        return 0.0;
    double mass = 0.0;
    for (std::size_t c = 0; c < strata.cells().size(); ++c)
        if (predicate(strata.cells()[c]))
            mass += result.allocated[c];
    return mass / result.total_allocated;
}

double allocated_mean_age(const Strata &strata, const AllocationResult &result) {
    if (result.total_allocated <= 0.0)
        return 0.0;
    double sum = 0.0;
    for (std::size_t c = 0; c < strata.cells().size(); ++c)
        sum += strata.cells()[c].age * result.allocated[c];
    return sum / result.total_allocated;
}

bool cell_black_indigenous(const StratumCell &c) { return c.race == Race::black || c.race == Race::indigenous; }

bool cell_black_indigenous_hispanic(const StratumCell &c) { return cell_black_indigenous(c) || c.hispanic; }

bool cell_high_adi(const StratumCell &c) { return c.high_adi; }

bool cell_female(const StratumCell &c) { return c.sex == Sex::female; }

} // namespace vaxsim
