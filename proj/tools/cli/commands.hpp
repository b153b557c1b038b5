#pragma once

#include "config.hpp"

#include "pate/error.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace pate::cli {

enum class Format { Json, Csv };

/// One CLI call after flag parsing. `config` already carries flag overrides.
struct Invocation {
    std::string command;
    RunConfig config;
    std::string out;  // empty: standard output
    Format format = Format::Json;
    int workers = 1;
    std::string export_dir;  // simulate --export-one
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Exit code for an error kind.
int exit_code(ErrorKind kind);

/// {library_version, seed, config_hash, config, command}
Json report_header(const std::string& command, const RunConfig& c);

/// Experiment and population as the role map reads them.
struct LoadedData {
    Table exp_table;
    ExperimentalSample exp;
    PopulationSample pop;
};

LoadedData load_data(const RunConfig& c);

Json estimate_report(const RunConfig& c);
Json diagnose_report(const RunConfig& c);
Json weights_report(const RunConfig& c);
Json benchmark_loo_report(const RunConfig& c);
std::vector<SimulationSummary> run_cells(const RunConfig& c, int workers);
Json simulate_report(const RunConfig& c, const std::vector<SimulationSummary>& cells);

/// Writes experiment_seed<seed>.csv, population_seed<seed>.csv and
/// config_seed<seed>.json for replication 0 of the first simulation cell.
/// Returns the written paths.
std::vector<std::string> export_one(const RunConfig& c, const std::string& dir);

/// Runs the command, writes its output and returns the exit code. Errors are
/// reported on `err`.
int run(const Invocation& inv, std::ostream& err);

}  // namespace pate::cli
