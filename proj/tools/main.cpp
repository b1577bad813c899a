#include "vaxsim/errors.hpp"
#include "vaxsim/pipeline.hpp"
#include "vaxsim/tiers.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> policy_flags;
    std::string supply_grid;
};

void add_common(CLI::App *cmd, CommonArgs &args, bool needs_config = true) {
    auto *opt = cmd->add_option("--config", args.config_path, "run configuration file (JSON)");
    if (needs_config)
        opt->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--policy", args.policy_flags,
                    "reserve policy, e.g. r=0.2,eligibility=high_adi (repeatable; replaces config policies)");
    cmd->add_option("--supply-grid", args.supply_grid, "default | linspace:N | q0,q1,...");
}

vaxsim::RunConfig make_config(const CommonArgs &args) {
    vaxsim::RunConfig config = vaxsim::load_run_config(args.config_path);
    if (args.seed) {
        config.seed = *args.seed;
        if (config.synthetic)
            config.synthetic->seed = *args.seed;
    }
    if (!args.policy_flags.empty()) {
        config.policies.clear();
        for (const auto &flag : args.policy_flags)
            config.policies.push_back(vaxsim::parse_policy_flag(flag));
    }
    if (!args.supply_grid.empty())
        config.supply_grid_spec = args.supply_grid;
    return config;
}

int dispatch(int argc, char **argv) {
    CLI::App app{"Priority-tier vaccine rationing microsimulator"};
    app.require_subcommand(1);

    CommonArgs gen_args, run_args, census_args, fair_args;
    std::string plot_bundle, plot_out;
    double fair_supply = 0.0;

    auto *generate = app.add_subcommand("generate", "write synthetic person/household/risk-survey CSVs");
    add_common(generate, gen_args);

    auto *run = app.add_subcommand("run", "execute the full pipeline and write the output bundle");
    add_common(run, run_args);

    auto *plot = app.add_subcommand("plot", "render SVG charts from a run bundle");
    plot->add_option("--bundle", plot_bundle, "bundle directory written by run")->required();
    plot->add_option("--out", plot_out, "chart output directory (default: the bundle)");

    auto *census = app.add_subcommand("census", "run through tier resolution and print the tier census");
    add_common(census, census_args);

    auto *fair = app.add_subcommand("fair-share", "state fair-share indices at one supply level");
    add_common(fair, fair_args);
    fair->add_option("--supply", fair_supply, "supply in person-units (0 = first configured level)");

    CLI11_PARSE(app, argc, argv);

    if (generate->parsed()) {
        vaxsim::cmd_generate(make_config(gen_args), gen_args.out_dir);
        std::cout << "wrote population files to " << gen_args.out_dir << "\n";
    } else if (run->parsed()) {
        vaxsim::cmd_run(make_config(run_args), run_args.out_dir);
        std::cout << "wrote bundle to " << run_args.out_dir << "\n";
    } else if (plot->parsed()) {
        vaxsim::cmd_plot(plot_bundle, plot_out.empty() ? plot_bundle : plot_out);
        std::cout << "wrote charts to " << (plot_out.empty() ? plot_bundle : plot_out) << "\n";
    } else if (census->parsed()) {
        auto config = make_config(census_args);
        auto pipe = vaxsim::run_pipeline(config);
        std::filesystem::create_directories(census_args.out_dir);
        vaxsim::write_tier_census(pipe.census, std::filesystem::path(census_args.out_dir) / "tier_census.csv");
        std::printf("%-6s %-8s %16s %10s %10s %8s %8s\n", "tier", "subtier", "mass", "B+I", "high-ADI", "age",
                    "female");
        for (const auto &row : pipe.census) {
            std::printf("%-6d %-8s %16.1f %10.4f %10.4f %8.2f %8.4f\n", row.rank.tier,
                        row.rank.subtier > 0 ? std::to_string(row.rank.subtier).c_str() : "-", row.weighted_mass,
                        row.share_black_indigenous, row.share_high_adi, row.mean_age, row.share_female);
        }
        for (const auto &d : pipe.state.diagnostics) {
            if (d.take_all)
                std::printf("note: group %s takes its whole superset (%.0f <= %.0f)\n", d.group_id.c_str(),
                            d.superset_mass, d.external_size);
            if (d.empty_superset)
                std::printf("note: group %s has an empty superset\n", d.group_id.c_str());
        }
    } else if (fair->parsed()) {
        auto config = make_config(fair_args);
        auto pipe = vaxsim::run_pipeline(config);
        double scale = pipe.augmented_total / pipe.schedule.reference_population;
        double supply = fair_supply > 0.0 ? fair_supply
                                          : std::min(config.fair_share_supplies.front() * scale,
                                                     pipe.augmented_total);
        if (!config.state_outcomes_path)
            throw vaxsim::ValidationError("fair-share needs state_outcomes in the config");
        auto outcomes = vaxsim::load_state_outcomes(*config.state_outcomes_path);
        auto policies = vaxsim::canonicalize_policies(config.policies);
        for (const auto &policy : policies) {
            auto allocation = vaxsim::allocate_with_reserve(pipe.strata, supply, policy);
            std::printf("policy %s, supply %.0f\n", policy.label().c_str(), supply);
            for (auto benchmark : {vaxsim::FairShareBenchmark::population, vaxsim::FairShareBenchmark::cases,
                                   vaxsim::FairShareBenchmark::deaths}) {
                auto entries = vaxsim::state_fair_share_index(pipe.strata, allocation, outcomes, benchmark);
                for (const auto &e : entries)
                    std::printf("  %s %-10s %s\n", e.state.c_str(), std::string(to_string(benchmark)).c_str(),
                                e.infinite ? "inf" : std::to_string(e.index).c_str());
            }
        }
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    try {
        return dispatch(argc, argv);
    } catch (const vaxsim::ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const vaxsim::IoError &e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const vaxsim::InternalError &e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
