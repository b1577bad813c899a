#include "vaxsim/pipeline.hpp"

#include "vaxsim/csv.hpp"
#include "vaxsim/errors.hpp"
#include "vaxsim/rng.hpp"
#include "vaxsim/svg.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace vaxsim {

using nlohmann::json;

const std::vector<std::string> kAllocationCurveHeader = {
    "supply",       "policy",       "tier_reached",
    "share_black_indigenous", "share_black_indigenous_hispanic", "share_high_adi",
    "share_female", "mean_age",     "marginal_share_high_adi"};

const std::vector<std::string> kFairShareHeader = {"state", "benchmark", "supply", "index"};

const std::vector<std::string> kBenchmarksHeader = {"metric", "value"};

namespace {

std::string read_text(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string policy_slug(const ReservePolicy &policy) {
    std::string label = policy.label();
    for (char &c : label)
        if (c == ':' || c == '=' || c == '.')
            c = '_';
    return label;
}

} // namespace

std::string hash_file(const std::filesystem::path &path) { return hex64(rng::fnv1a(read_text(path))); }

std::string RunConfig::canonical_json() const {
    json j;
    j["seed"] = seed;
    if (synthetic) {
        // The synthetic section hashes through its validated fields.
        json s;
        s["population_size"] = synthetic->population_size;
        s["record_weight"] = synthetic->record_weight;
        s["group_quarters_fraction"] = synthetic->group_quarters_fraction;
        s["race_homogeneity"] = synthetic->race_homogeneity;
        for (const auto &[size, share] : synthetic->household_size_distribution)
            s["household_size_distribution"][std::to_string(size)] = share;
        for (int r = 0; r < kRaceCount; ++r)
            s["race"][std::string(to_string(Race(r)))] = synthetic->race[std::size_t(r)];
        s["hispanic_rate"] = synthetic->hispanic_rate;
        s["female_share"] = synthetic->female_share;
        for (const auto &b : synthetic->age_bins)
            s["age_bins"].push_back({b.lo, b.hi, b.share});
        for (const auto &[code, share] : synthetic->states)
            s["states"][code] = share;
        s["gave_birth_rate"] = synthetic->gave_birth_rate;
        for (const auto &slot : synthetic->occupation_slots) {
            json sj;
            sj["name"] = slot.name;
            sj["share"] = slot.share;
            sj["female_share"] = slot.female_share;
            for (int r = 0; r < kRaceCount; ++r)
                sj["race_multiplier"][std::string(to_string(Race(r)))] = slot.race_multiplier[std::size_t(r)];
            sj["industry_codes"] = slot.industry_codes;
            sj["occupation_codes"] = slot.occupation_codes;
            if (slot.military_status)
                sj["military_status"] = std::string(to_string(*slot.military_status));
            s["occupation_slots"].push_back(sj);
        }
        const auto &e = synthetic->economics;
        s["economics"] = {{"income_mu", e.income.mu},
                          {"income_sigma", e.income.sigma},
                          {"missing_income_rate", e.missing_income_rate},
                          {"owner_rate", e.owner_rate},
                          {"mortgage_rate", e.mortgage_rate},
                          {"vehicle_rate", e.vehicle_rate},
                          {"telephone_rate", e.telephone_rate},
                          {"plumbing_rate", e.plumbing_rate},
                          {"single_parent_rate", e.single_parent_rate},
                          {"poverty_threshold_base", e.poverty_threshold_base},
                          {"poverty_threshold_per_person", e.poverty_threshold_per_person},
                          {"poverty_ratio_missing_rate", e.poverty_ratio_missing_rate}};
        for (int r = 0; r < kRaceCount; ++r)
            s["economics"]["race_income_multiplier"][std::string(to_string(Race(r)))] =
                e.race_income_multiplier[std::size_t(r)];
        s["risk_survey"] = {{"records", synthetic->risk_survey.records},
                            {"age_base_rates", synthetic->risk_survey.age_base_rates},
                            {"hispanic_multiplier", synthetic->risk_survey.hispanic_multiplier}};
        j["synthetic"] = s;
    }
    if (inputs) {
        j["inputs"]["person_csv"] = inputs->person_csv.string();
        if (inputs->household_csv)
            j["inputs"]["household_csv"] = inputs->household_csv->string();
        j["inputs"]["risk_survey_csv"] = inputs->risk_survey_csv.string();
    }
    j["tier_schedule"] = hash_file(tier_schedule_path);
    j["adi_config"] = hash_file(adi_config_path);
    if (race_death_table_path)
        j["race_death_table"] = hash_file(*race_death_table_path);
    if (state_outcomes_path)
        j["state_outcomes"] = hash_file(*state_outcomes_path);
    for (const auto &p : policies)
        j["policies"].push_back(p.label());
    j["supply_grid"] = supply_grid_spec;
    j["fair_share_supplies"] = fair_share_supplies;
    if (schedule_scale)
        j["schedule_scale"] = *schedule_scale;
    return j.dump();
}

RunConfig parse_run_config(const std::string &json_text, const std::filesystem::path &base_dir) {
    json j = json::parse(json_text);
    RunConfig config;
    config.seed = j.value("seed", std::uint64_t{0});

    if (j.contains("synthetic")) {
        config.synthetic = parse_synthetic_config(j.at("synthetic").dump());
        config.synthetic->seed = config.seed;
    }
    if (j.contains("inputs")) {
        InputPaths in;
        in.person_csv = resolve(base_dir, j.at("inputs").at("person_csv").get<std::string>());
        if (j.at("inputs").contains("household_csv"))
            in.household_csv = resolve(base_dir, j.at("inputs").at("household_csv").get<std::string>());
        in.risk_survey_csv = resolve(base_dir, j.at("inputs").at("risk_survey_csv").get<std::string>());
        config.inputs = std::move(in);
    }
    if (config.synthetic.has_value() == config.inputs.has_value())
        throw ValidationError("run config needs exactly one of 'synthetic' or 'inputs'");

    config.tier_schedule_path = resolve(base_dir, j.at("tier_schedule").get<std::string>());
    config.adi_config_path = resolve(base_dir, j.at("adi_config").get<std::string>());
    if (j.contains("race_death_table"))
        config.race_death_table_path = resolve(base_dir, j.at("race_death_table").get<std::string>());
    if (j.contains("state_outcomes"))
        config.state_outcomes_path = resolve(base_dir, j.at("state_outcomes").get<std::string>());

    if (j.contains("policies")) {
        for (const auto &pj : j.at("policies")) {
            ReservePolicy p;
            p.reserve_fraction = pj.at("reserve_fraction").get<double>();
            if (pj.contains("eligibility")) {
                auto e = parse_eligibility(pj.at("eligibility").get<std::string>());
                if (!e)
                    throw ValidationError("unknown eligibility '" +
                                          pj.at("eligibility").get<std::string>() + "'");
                p.eligibility = *e;
            }
            if (p.reserve_fraction < 0.0 || p.reserve_fraction > 1.0)
                throw ValidationError("reserve_fraction must lie in [0,1]");
            config.policies.push_back(p);
        }
    }
    if (config.policies.empty())
        throw ValidationError("run config needs at least one policy");

    config.supply_grid_spec = j.value("supply_grid", std::string("default"));
    if (j.contains("fair_share_supplies"))
        config.fair_share_supplies = j.at("fair_share_supplies").get<std::vector<double>>();
    if (j.contains("schedule_scale") && !j.at("schedule_scale").is_string())
        config.schedule_scale = j.at("schedule_scale").get<double>();
    return config;
}

RunConfig load_run_config(const std::filesystem::path &path) {
    try {
        return parse_run_config(read_text(path), path.parent_path());
    } catch (const json::exception &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

ReservePolicy parse_policy_flag(const std::string &text) {
    ReservePolicy policy;
    std::stringstream ss(text);
    std::string part;
    bool have_r = false;
    while (std::getline(ss, part, ',')) {
        auto eq = part.find('=');
        if (eq == std::string::npos)
            throw ValidationError("bad --policy segment '" + part + "', expected key=value");
        std::string key = part.substr(0, eq), value = part.substr(eq + 1);
        if (key == "r") {
            policy.reserve_fraction = std::stod(value);
            have_r = true;
        } else if (key == "eligibility") {
            auto e = parse_eligibility(value);
            if (!e)
                throw ValidationError("unknown eligibility '" + value + "'");
            policy.eligibility = *e;
        } else {
            throw ValidationError("unknown --policy key '" + key + "'");
        }
    }
    if (!have_r)
        throw ValidationError("--policy needs r=FLOAT");
    if (policy.reserve_fraction < 0.0 || policy.reserve_fraction > 1.0)
        throw ValidationError("reserve_fraction must lie in [0,1]");
    return policy;
}

std::vector<ReservePolicy> canonicalize_policies(std::vector<ReservePolicy> policies) {
    std::vector<ReservePolicy> out;
    for (auto &p : policies) {
        if (p.degenerate())
            p = ReservePolicy{}; // plain priority
        bool dup = false;
        for (const auto &q : out)
            dup = dup || q.label() == p.label();
        if (!dup)
            out.push_back(p);
    }
    return out;
}

std::vector<double> build_supply_grid(const std::string &spec, double total_mass) {
    if (spec == "default" || spec == "paper")
        return default_supply_grid(total_mass);
    if (spec.rfind("linspace:", 0) == 0) {
        int n = std::stoi(spec.substr(9));
        if (n < 1)
            throw ValidationError("linspace grid needs at least 1 step");
        std::vector<double> grid;
        for (int i = 0; i <= n; ++i)
            grid.push_back(total_mass * double(i) / double(n));
        return grid;
    }
    std::vector<double> grid;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ','))
        grid.push_back(std::stod(part));
    if (grid.empty())
        throw ValidationError("empty supply grid spec");
    return grid;
}

PipelineResult run_pipeline(const RunConfig &config) {
    PipelineResult r;
    r.schedule = load_tier_schedule(config.tier_schedule_path);
    r.adi_config = load_adi_config(config.adi_config_path);

    Population base;
    std::vector<RiskSurveyRecord> survey;
    if (config.synthetic) {
        SyntheticConfig sc = *config.synthetic;
        sc.seed = config.seed;
        base = generate_synthetic(sc);
        survey = generate_risk_survey(sc);
    } else {
        base = ingest_population(config.inputs->person_csv, config.inputs->household_csv);
        survey = load_risk_survey(config.inputs->risk_survey_csv);
    }

    r.external_scale =
        config.schedule_scale.value_or(base.weighted_total() / r.schedule.reference_population);
    if (!(r.external_scale > 0.0))
        throw ValidationError("schedule scale must be positive (is the population empty?)");

    r.adi = compute_adi(base, r.adi_config);
    r.risk_table = build_risk_table(survey);
    auto high_risk = impute_high_risk(base, r.risk_table, config.seed);
    auto infants = split_infants(base, config.seed);
    r.state = assign_group_membership(base, r.schedule, high_risk, infants, r.external_scale, config.seed);
    synthesize_pregnancy_cohort(r.state, r.schedule, config.seed);
    resolve_highest_tier(r.state, r.schedule);

    r.high_adi = r.adi.high_adi_by_person;
    for (std::size_t src : r.state.duplicate_sources)
        r.high_adi.push_back(r.adi.high_adi_by_person[src]);

    r.census = tier_census(r.state, r.schedule, r.high_adi);
    r.strata = Strata::from_tier_state(r.state, r.high_adi, r.schedule);
    r.augmented_total = r.state.population.weighted_total();
    return r;
}

namespace {

void ensure_dir(const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_manifest(const std::filesystem::path &path, json manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
}

std::string opt_field(const std::optional<double> &v) { return v ? csv::format_double(*v) : ""; }

} // namespace

void cmd_generate(const RunConfig &config, const std::filesystem::path &out_dir) {
    if (!config.synthetic)
        throw ValidationError("generate requires a synthetic population config");
    ensure_dir(out_dir);
    SyntheticConfig sc = *config.synthetic;
    sc.seed = config.seed;

    Population population = generate_synthetic(sc);
    write_population(population, out_dir / "persons.csv", out_dir / "households.csv");
    write_risk_survey(generate_risk_survey(sc), out_dir / "risk_survey.csv");

    json manifest;
    manifest["kind"] = "generate";
    manifest["seed"] = config.seed;
    manifest["config_hash"] = hex64(rng::fnv1a(config.canonical_json()));
    manifest["weighted_total"] = population.weighted_total();
    for (const char *name : {"persons.csv", "households.csv", "risk_survey.csv"})
        manifest["files"][name] = hash_file(out_dir / name);
    write_manifest(out_dir / "manifest.json", std::move(manifest));
}

namespace {

/// When ingesting from a generate bundle, recheck its recorded file hashes.
void verify_generate_manifest(const InputPaths &inputs) {
    auto manifest_path = inputs.person_csv.parent_path() / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        return;
    json manifest;
    try {
        manifest = json::parse(read_text(manifest_path));
    } catch (const json::exception &e) {
        throw ValidationError(manifest_path.string() + ": " + e.what());
    }
    if (manifest.value("kind", "") != "generate" || !manifest.contains("files"))
        return;
    for (auto it = manifest.at("files").begin(); it != manifest.at("files").end(); ++it) {
        auto file = inputs.person_csv.parent_path() / it.key();
        if (!std::filesystem::exists(file))
            continue;
        if (hash_file(file) != it.value().get<std::string>())
            throw ValidationError(file.string() + " does not match the generate manifest (drifted input?)");
    }
}

struct CurveStats {
    std::optional<double> bi, bih, adi, female, age;
    double marginal_adi = 0.0;
};

CurveStats curve_stats(const Strata &strata, const AllocationResult &result, const ReservePolicy &policy) {
    CurveStats s;
    s.marginal_adi = marginal_share(strata, result.supply, policy, cell_high_adi);
    if (result.total_allocated <= 0.0)
        return s;
    s.bi = allocated_share(strata, result, cell_black_indigenous);
    s.bih = allocated_share(strata, result, cell_black_indigenous_hispanic);
    s.adi = allocated_share(strata, result, cell_high_adi);
    s.female = allocated_share(strata, result, cell_female);
    s.age = allocated_mean_age(strata, result);
    return s;
}

} // namespace

void cmd_run(const RunConfig &config, const std::filesystem::path &out_dir) {
    if (config.inputs)
        verify_generate_manifest(*config.inputs);
    ensure_dir(out_dir);

    PipelineResult pipe = run_pipeline(config);
    const Strata &strata = pipe.strata;
    const double total = pipe.augmented_total;

    write_tier_census(pipe.census, out_dir / "tier_census.csv");
    write_adi_assignments(pipe.adi.assignments, out_dir / "adi_assignments.csv");

    auto policies = canonicalize_policies(config.policies);
    auto grid = build_supply_grid(config.supply_grid_spec, total);

    {
        csv::Writer curve(out_dir / "allocation_curve.csv", kAllocationCurveHeader);
        for (const auto &policy : policies) {
            std::string label = policy.label();
            sweep_supply(strata, policy, grid, [&](const AllocationResult &result) {
                CurveStats s = curve_stats(strata, result, policy);
                curve.row({csv::format_double(result.supply), label, std::to_string(result.tier_reached.tier),
                           opt_field(s.bi), opt_field(s.bih), opt_field(s.adi), opt_field(s.female),
                           opt_field(s.age), csv::format_double(s.marginal_adi)});
            });
        }
        curve.close();
    }

    // Benchmarks: population statistics plus the death-share estimates.
    {
        csv::Writer bench(out_dir / "benchmarks.csv", kBenchmarksHeader);
        auto full = allocate_priority(strata, total);
        bench.row({"population_share_black_indigenous",
                   csv::format_double(allocated_share(strata, full, cell_black_indigenous))});
        bench.row({"population_share_black_indigenous_hispanic",
                   csv::format_double(allocated_share(strata, full, cell_black_indigenous_hispanic))});
        bench.row({"population_share_high_adi", csv::format_double(allocated_share(strata, full, cell_high_adi))});
        bench.row({"population_share_female", csv::format_double(allocated_share(strata, full, cell_female))});
        bench.row({"population_mean_age", csv::format_double(allocated_mean_age(strata, full))});
        bench.row({"population_share_multiracial",
                   csv::format_double(allocated_share(
                       strata, full, [](const StratumCell &c) { return c.race == Race::multiracial; }))});
        if (config.race_death_table_path) {
            auto table = load_race_death_table(*config.race_death_table_path);
            std::set<DeathRace> bi = {DeathRace::black, DeathRace::indigenous};
            std::set<DeathRace> bih = {DeathRace::black, DeathRace::indigenous, DeathRace::latino};
            bench.row({"death_share_black_indigenous", csv::format_double(death_share_estimate(table, bi))});
            bench.row({"age_adjusted_death_share_black_indigenous",
                       csv::format_double(death_share_estimate(table, bi, true))});
            bench.row({"death_share_black_indigenous_hispanic",
                       csv::format_double(death_share_estimate(table, bih))});
            bench.row({"age_adjusted_death_share_black_indigenous_hispanic",
                       csv::format_double(death_share_estimate(table, bih, true))});
        }
        bench.close();
    }

    if (config.state_outcomes_path) {
        auto outcomes = load_state_outcomes(*config.state_outcomes_path);
        // Fair-share supplies are stated in reference-population units.
        double supply_scale = total / pipe.schedule.reference_population;
        bool first = true;
        for (const auto &policy : policies) {
            csv::Writer w(out_dir / ("fair_share_" + policy_slug(policy) + ".csv"), kFairShareHeader);
            for (double ref_supply : config.fair_share_supplies) {
                double supply = std::min(ref_supply * supply_scale, total);
                auto allocation = allocate_with_reserve(strata, supply, policy);
                for (auto benchmark :
                     {FairShareBenchmark::population, FairShareBenchmark::cases, FairShareBenchmark::deaths}) {
                    for (const auto &entry : state_fair_share_index(strata, allocation, outcomes, benchmark)) {
                        w.row({entry.state, std::string(to_string(benchmark)), csv::format_double(supply),
                               entry.infinite ? "inf" : csv::format_double(entry.index)});
                    }
                }
            }
            w.close();
            if (first) {
                std::filesystem::copy_file(out_dir / ("fair_share_" + policy_slug(policy) + ".csv"),
                                           out_dir / "fair_share.csv",
                                           std::filesystem::copy_options::overwrite_existing);
                first = false;
            }
        }
    }

    json manifest;
    manifest["kind"] = "run";
    manifest["seed"] = config.seed;
    manifest["config_hash"] = hex64(rng::fnv1a(config.canonical_json()));
    manifest["population"]["weighted_total"] = pipe.state.original_total;
    manifest["population"]["augmented_total"] = total;
    manifest["external_scale"] = pipe.external_scale;
    manifest["substreams"] = tier_substreams(pipe.schedule);
    for (const auto &policy : policies)
        manifest["policies"].push_back(policy.label());
    for (const auto &entry : std::filesystem::directory_iterator(out_dir)) {
        if (entry.path().filename() == "manifest.json" || !entry.is_regular_file())
            continue;
        manifest["outputs"][entry.path().filename().string()] = hash_file(entry.path());
    }
    write_manifest(out_dir / "manifest.json", std::move(manifest));
}

void cmd_plot(const std::filesystem::path &bundle_dir, const std::filesystem::path &out_dir) {
    auto curve_path = bundle_dir / "allocation_curve.csv";
    if (!std::filesystem::exists(curve_path))
        throw IoError("missing " + curve_path.string() + " (run produces it)");

    std::map<std::string, double> benchmarks;
    auto bench_path = bundle_dir / "benchmarks.csv";
    if (std::filesystem::exists(bench_path)) {
        csv::Reader reader(bench_path, kBenchmarksHeader);
        while (auto row = reader.next())
            benchmarks[(*row)[0]] = reader.number(*row, 1);
    }

    struct Rows {
        std::vector<double> supply;
        std::vector<std::array<std::optional<double>, 6>> values; // bi,bih,adi,female,age,marginal
    };
    std::map<std::string, Rows> by_policy;
    std::size_t data_rows = 0;
    {
        csv::Reader reader(curve_path, kAllocationCurveHeader);
        while (auto row = reader.next()) {
            ++data_rows;
            Rows &rows = by_policy[(*row)[1]];
            rows.supply.push_back(reader.number(*row, 0));
            rows.values.push_back({reader.opt_number(*row, 3), reader.opt_number(*row, 4),
                                   reader.opt_number(*row, 5), reader.opt_number(*row, 6),
                                   reader.opt_number(*row, 7), reader.opt_number(*row, 8)});
        }
    }
    if (data_rows == 0)
        throw ValidationError(curve_path.string() + ": no curve rows to plot");

    ensure_dir(out_dir);
    struct Family {
        int column;
        const char *file;
        const char *title;
        const char *y_label;
        std::vector<std::pair<const char *, const char *>> hlines; // metric, label
    };
    const std::vector<Family> families = {
        {0, "bi_share.svg", "Black + Indigenous share of allocated doses", "share",
         {{"population_share_black_indigenous", "population"},
          {"death_share_black_indigenous", "death share"},
          {"age_adjusted_death_share_black_indigenous", "age-adj deaths"}}},
        {1, "bih_share.svg", "Black + Indigenous + Hispanic share of allocated doses", "share",
         {{"population_share_black_indigenous_hispanic", "population"},
          {"death_share_black_indigenous_hispanic", "death share"},
          {"age_adjusted_death_share_black_indigenous_hispanic", "age-adj deaths"}}},
        {2, "high_adi_share.svg", "High-ADI share of allocated doses", "share",
         {{"population_share_high_adi", "population"}}},
        {3, "female_share.svg", "Female share of allocated doses", "share",
         {{"population_share_female", "population"}}},
        {4, "mean_age.svg", "Mean age of dose recipients", "years", {{"population_mean_age", "population"}}},
        {5, "marginal_high_adi.svg", "Marginal high-ADI share per additional dose", "share",
         {{"population_share_high_adi", "population"}}},
    };

    for (const auto &family : families) {
        svg::LineChart chart(family.title, "supply (person-units)", family.y_label);
        for (const auto &[metric, label] : family.hlines) {
            auto it = benchmarks.find(metric);
            if (it != benchmarks.end())
                chart.add_hline(label, it->second);
        }
        for (const auto &[policy, rows] : by_policy) {
            std::vector<std::pair<double, double>> points;
            for (std::size_t i = 0; i < rows.supply.size(); ++i)
                if (rows.values[i][std::size_t(family.column)])
                    points.emplace_back(rows.supply[i], *rows.values[i][std::size_t(family.column)]);
            chart.add_series(policy, std::move(points));
        }
        chart.write(out_dir / family.file);
    }
}

} // namespace vaxsim
