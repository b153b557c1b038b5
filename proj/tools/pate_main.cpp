#include "cli/commands.hpp"

#include "pate/error.hpp"
#include "pate/version.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Flags {
    std::string experiment, population, config, out, format = "json", weights, learner, export_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> splits;
    bool literal_direction = false;
    int workers = 1;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--experiment", f.experiment, "Experimental data CSV");
    sub->add_option("--population", f.population, "Population data CSV");
    sub->add_option("--config", f.config, "JSON configuration file");
    sub->add_option("--seed", f.seed, "Random seed");
    sub->add_option("--out", f.out, "Output path (default: standard output)");
    sub->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--weights", f.weights, "Weighting method")->check(CLI::IsMember({"logistic", "ebal"}));
    sub->add_option("--learner", f.learner, "Residualizer learner")
        ->check(CLI::IsMember({"ols-int", "ridge", "lasso", "stack", "zero", "mean"}));
    sub->add_option("--splits", f.splits, "Random splits for the cross-fitted diagnostic")->check(CLI::PositiveNumber);
    sub->add_flag("--literal-direction", f.literal_direction,
                  "Cross-fit scale from regressing the prediction on the outcome");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Population average treatment effects with post-residualized weighting"};
    app.set_version_flag("--version", std::string(pate::kVersion));
    app.require_subcommand(1);
    Flags f;
    for (const char* name : {"estimate", "diagnose", "weights", "benchmark-loo", "simulate"}) {
        CLI::App* sub = app.add_subcommand(name);
        add_common(sub, f);
        if (std::string(name) == "simulate") {
            sub->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
            sub->add_option("--export-one", f.export_dir, "Write one replication's CSVs to this directory");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return pate::cli::kExitValidation;
    }

    pate::cli::Invocation inv;
    inv.command = app.get_subcommands().front()->get_name();
    try {
        pate::cli::RunConfig& c = inv.config;
        c = pate::cli::load_config(f.config);
        if (!f.experiment.empty()) c.experiment = f.experiment;
        if (!f.population.empty()) c.population = f.population;
        if (f.seed) c.seed = *f.seed;
        if (!f.weights.empty()) c.weights = *pate::cli::parse_weight_method(f.weights);
        if (!f.learner.empty()) c.learner = *pate::parse_learner(f.learner);
        if (f.splits) c.splits = *f.splits;
        if (f.literal_direction) c.literal_direction = true;
    } catch (const pate::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pate::cli::exit_code(e.kind());
    }
    inv.out = f.out;
    inv.format = f.format == "csv" ? pate::cli::Format::Csv : pate::cli::Format::Json;
    inv.workers = f.workers;
    inv.export_dir = f.export_dir;
    return pate::cli::run(inv, std::cerr);
}
