#pragma once

#include "vaxsim/adi.hpp"
#include "vaxsim/allocation.hpp"
#include "vaxsim/equity.hpp"
#include "vaxsim/risk.hpp"
#include "vaxsim/synthetic.hpp"
#include "vaxsim/tiers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vaxsim {

struct InputPaths {
    std::filesystem::path person_csv;
    std::optional<std::filesystem::path> household_csv;
    std::filesystem::path risk_survey_csv;
};

/// A full run description: exactly one population source, the policy list,
/// the schedule/coefficient files, and the supply grids.
struct RunConfig {
    std::uint64_t seed = 0;
    std::optional<SyntheticConfig> synthetic;
    std::optional<InputPaths> inputs;
    std::filesystem::path tier_schedule_path;
    std::filesystem::path adi_config_path;
    std::optional<std::filesystem::path> race_death_table_path;
    std::optional<std::filesystem::path> state_outcomes_path;
    std::vector<ReservePolicy> policies;
    std::string supply_grid_spec = "default";   // default | linspace:N | q0,q1,...
    std::vector<double> fair_share_supplies = {20e6, 50e6}; // reference-population units
    std::optional<double> schedule_scale;       // absent: population total / reference

    std::string canonical_json() const; // key-sorted dump, for hashing
};

RunConfig load_run_config(const std::filesystem::path &path);
RunConfig parse_run_config(const std::string &json_text, const std::filesystem::path &base_dir);

/// Parse one --policy flag value, e.g. "r=0.2,eligibility=high_adi".
ReservePolicy parse_policy_flag(const std::string &text);

/// Canonical order, degenerates collapsed to plain priority, duplicates
/// dropped.
std::vector<ReservePolicy> canonicalize_policies(std::vector<ReservePolicy> policies);

std::vector<double> build_supply_grid(const std::string &spec, double total_mass);

/// Everything the stages produce for one population, in memory.
struct PipelineResult {
    TierSchedule schedule;
    AdiConfig adi_config;
    double external_scale = 0.0;
    TierState state;                  // augmented population
    AdiResult adi;                    // base-population families
    std::vector<bool> high_adi;       // augmented, duplicates inherit
    RiskTable risk_table;
    std::vector<CensusRow> census;
    Strata strata;
    double augmented_total = 0.0;
};

PipelineResult run_pipeline(const RunConfig &config);

/// FNV-1a over the file bytes, as a 16-digit hex string.
std::string hash_file(const std::filesystem::path &path);

/// generate: write person/household/risk-survey CSVs plus a manifest with
/// the seed, config hash and per-file hashes.
void cmd_generate(const RunConfig &config, const std::filesystem::path &out_dir);

/// run: execute the full procedure and write the output bundle
/// (allocation_curve.csv, tier_census.csv, adi_assignments.csv,
/// fair_share.csv, benchmarks.csv, manifest.json). Returns the bundle dir.
void cmd_run(const RunConfig &config, const std::filesystem::path &out_dir);

/// plot: render the bundle's curve families as SVG line charts.
void cmd_plot(const std::filesystem::path &bundle_dir, const std::filesystem::path &out_dir);

extern const std::vector<std::string> kAllocationCurveHeader;
extern const std::vector<std::string> kFairShareHeader;
extern const std::vector<std::string> kBenchmarksHeader;

} // namespace vaxsim
