#include "commands.hpp"

#include "pate/error.hpp"
#include "pate/version.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace pate::cli {

namespace {

Table take_table_rows(const Table& t, const std::vector<Index>& rows) {
    Table out;
    out.columns = t.columns;
    for (const auto& col : t.values) out.values.push_back(linalg::take(col, rows));
    return out;
}

std::string text_or_na(double v) { return std::isfinite(v) ? format_double(v) : std::string("NA"); }

std::string estimates_csv(const Json& report) {
    std::ostringstream out;
    out << "method,tau_hat,se,ci_lo,ci_hi,n,recommend,seed,config_hash\n";
    const std::string seed = std::to_string(report.at("seed").get<std::uint64_t>());
    const std::string hash = report.at("config_hash").get<std::string>();
    for (const auto& e : report.at("estimates")) {
        auto num = [](const Json& v) { return v.is_null() ? std::string("NA") : format_double(v.get<double>()); };
        std::string rec;
        if (e.contains("recommend")) rec = e.at("recommend").is_null() ? "NA" : (e.at("recommend").get<bool>() ? "true" : "false");
        out << e.at("method").get<std::string>() << ',' << num(e.at("tau_hat")) << ',' << num(e.at("se")) << ','
            << num(e.at("ci")[0]) << ',' << num(e.at("ci")[1]) << ',' << e.at("n").get<Index>() << ',' << rec << ','
            << seed << ',' << hash << '\n';
    }
    return out.str();
}

std::string diagnostics_csv(const Json& report) {
    std::ostringstream out;
    out << "variant,r2_0,recommend,splits_used,seed,config_hash\n";
    for (const auto& d : report.at("diagnostics")) {
        out << d.at("variant").get<std::string>() << ','
            << (d.at("r2_0").is_null() ? std::string("NA") : format_double(d.at("r2_0").get<double>())) << ','
            << (d.at("recommend").is_null() ? "NA" : (d.at("recommend").get<bool>() ? "true" : "false")) << ','
            << d.at("splits_used").get<int>() << ',' << report.at("seed").get<std::uint64_t>() << ','
            << report.at("config_hash").get<std::string>() << '\n';
    }
    return out.str();
}

std::string weights_csv(const Vector& w) {
    std::ostringstream out;
    out << "row_index,weight\n";
    for (Index i = 0; i < w.size(); ++i) out << i << ',' << format_double(w(i)) << '\n';
    return out.str();
}

std::string benchmark_csv(const Json& report) {
    std::ostringstream out;
    out << "site,status,benchmark,estimator,tau_hat,se,abs_error,recommend\n";
    for (const auto& s : report.at("sites")) {
        const std::string site = format_double(s.at("site").get<double>());
        if (s.at("status") != "ok") {
            out << site << ",skipped,NA,NA,NA,NA,NA,NA\n";
            continue;
        }
        const double bench = s.at("benchmark").get<double>();
        for (const auto& e : s.at("estimates")) {
            const double tau = e.at("tau_hat").is_null() ? NAN : e.at("tau_hat").get<double>();
            const double se = e.at("se").is_null() ? NAN : e.at("se").get<double>();
            std::string rec;
            if (e.contains("recommend")) rec = e.at("recommend").is_null() ? "NA" : (e.at("recommend").get<bool>() ? "true" : "false");
            out << site << ",ok," << format_double(bench) << ',' << e.at("method").get<std::string>() << ','
                << text_or_na(tau) << ',' << text_or_na(se) << ',' << text_or_na(std::abs(tau - bench)) << ',' << rec
                << '\n';
        }
    }
    return out.str();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidInput, "write_report", "cannot open '" + path + "' for writing");
    out << text;
}

std::string sibling(const std::string& path, const std::string& suffix) {
    const std::filesystem::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

}  // namespace

int exit_code(ErrorKind kind) { return is_validation_error(kind) ? kExitValidation : kExitNumerical; }

Json report_header(const std::string& command, const RunConfig& c) {
    Json j;
    j["library_version"] = std::string(kVersion);
    j["command"] = command;
    j["seed"] = c.seed;
    j["config_hash"] = config_hash(c);
    j["config"] = config_to_json(c);
    return j;
}

LoadedData load_data(const RunConfig& c) {
    if (c.experiment.empty()) throw Error(ErrorKind::InvalidInput, "load_data", "no experimental data file given");
    if (c.population.empty()) throw Error(ErrorKind::InvalidInput, "load_data", "no population data file given");
    LoadedData d;
    d.exp_table = read_csv(c.experiment);
    d.exp = experimental_from_table(d.exp_table, c.roles);
    d.pop = population_from_table(read_csv(c.population), c.roles, d.exp.covariate_names);
    return d;
}

Json estimate_report(const RunConfig& c) {
    const LoadedData d = load_data(c);
    const AnalysisResult r = run_analysis(d.exp, d.pop, analysis_spec(c));
    Json j = report_header("estimate", c);
    j.update(analysis_json(r));
    return j;
}

Json diagnose_report(const RunConfig& c) {
    const LoadedData d = load_data(c);
    AnalysisSpec spec = analysis_spec(c);
    spec.run_oracles = false;
    const AnalysisResult r = run_analysis(d.exp, d.pop, spec);
    Json j = report_header("diagnose", c);
    Json diags = Json::array();
    for (const auto& x : *r.diagnostics) diags.push_back(to_json(x));
    j["diagnostics"] = diags;
    j["residualizer"] = to_json(r.model);
    j["cv_mse"] = std::isfinite(r.model.cv_mse) ? Json(r.model.cv_mse) : Json(nullptr);
    const Triage t = triage(r.model.cv_mse, d.pop.outcome, (*r.diagnostics)[0].r2_0, c.cv_r2_threshold);
    j["triage"] = to_json(t);
    if (const auto proxy = experimental_proxy(d.exp_table, c.roles)) {
        j["proxy_decomposition"] = to_json(proxy_error_decomposition(d.exp, *proxy, r.predicted));
    }
    return j;
}

Json weights_report(const RunConfig& c) {
    const LoadedData d = load_data(c);
    const ValidationReport v = validate_pair(d.exp, d.pop);
    if (!v.ok()) {
        std::string msg;
        for (const auto& s : v.violations) msg += (msg.empty() ? "" : "; ") + s;
        throw Error(ErrorKind::InvalidInput, "validate_pair", msg);
    }
    const WeightFit fit = fit_weights(d.exp, d.pop, c.weights, c.weight_cap);
    const PopulationSample aligned = align_population(d.pop, d.exp.covariate_names);
    Json j = report_header("weights", c);
    j["summary"] = weights_summary(fit.weights, moment_gaps(fit.weights.weights, d.exp.covariates, population_means(aligned)));
    Json w = Json::array();
    for (Index i = 0; i < fit.weights.weights.size(); ++i) w.push_back(fit.weights.weights(i));
    j["weights"] = w;
    return j;
}

Json benchmark_loo_report(const RunConfig& c) {
    if (c.experiment.empty()) throw Error(ErrorKind::InvalidInput, "benchmark_loo", "no multisite data file given");
    const auto site_col = c.roles.single(Role::Site);
    if (!site_col) throw Error(ErrorKind::InvalidInput, "benchmark_loo", "no column has role site");
    const Table table = read_csv(c.experiment);
    if (!table.has(*site_col)) {
        throw Error(ErrorKind::InvalidInput, "benchmark_loo", "site column '" + *site_col + "' not found");
    }
    const Vector& site = table.column(*site_col);
    std::map<double, std::vector<Index>> members;
    for (Index i = 0; i < site.size(); ++i) {
        if (!std::isfinite(site(i))) throw Error(ErrorKind::InvalidInput, "benchmark_loo", "missing site label");
        members[site(i)].push_back(i);
    }
    if (members.size() < 2) throw Error(ErrorKind::InvalidInput, "benchmark_loo", "need at least two sites");

    const AnalysisSpec spec = analysis_spec(c);
    Json sites = Json::array();
    std::map<std::string, std::pair<double, int>> abs_err;
    int skipped = 0;
    for (const auto& [label, rows] : members) {
        std::vector<Index> others;
        for (Index i = 0; i < site.size(); ++i) {
            if (site(i) != label) others.push_back(i);
        }
        Json s;
        s["site"] = label;
        s["n"] = rows.size();
        try {
            const Table exp_t = take_table_rows(table, rows);
            const Table pop_t = take_table_rows(table, others);
            const ExperimentalSample exp = experimental_from_table(exp_t, c.roles);
            const PopulationSample pop = population_from_table(pop_t, c.roles, exp.covariate_names);
            const ExperimentalSample pooled = experimental_from_table(pop_t, c.roles);
            const EstimateResult bench = difference_in_means(pooled, spec.estimator);
            const AnalysisResult r = run_analysis(exp, pop, spec);
            Json body = analysis_json(r);
            s["status"] = "ok";
            s["benchmark"] = bench.tau_hat;
            s["estimates"] = body["estimates"];
            s["diagnostics"] = body["diagnostics"];
            s["weights"] = body["weights"];
            for (const auto& e : r.estimates) {
                auto& [sum, count] = abs_err[to_string(e.method)];
                if (std::isfinite(e.tau_hat)) {
                    sum += std::abs(e.tau_hat - bench.tau_hat);
                    ++count;
                }
            }
        } catch (const Error& e) {
            s["status"] = "skipped";
            s["reason"] = e.what();
            ++skipped;
        }
        sites.push_back(s);
    }
    Json j = report_header("benchmark-loo", c);
    j["sites"] = sites;
    j["sites_skipped"] = skipped;
    Json mae = Json::object();
    for (const Method m : kAllMethods) {
        const auto it = abs_err.find(to_string(m));
        mae[to_string(m)] = (it != abs_err.end() && it->second.second > 0)
                                ? Json(it->second.first / it->second.second)
                                : Json(nullptr);
    }
    j["mean_absolute_error"] = mae;
    return j;
}

std::vector<SimulationSummary> run_cells(const RunConfig& c, int workers) {
    std::vector<SimulationSummary> out;
    for (ScenarioConfig cell : scenario_cells(c)) {
        cell.workers = workers;
        out.push_back(run_scenario(cell));
    }
    return out;
}

Json simulate_report(const RunConfig& c, const std::vector<SimulationSummary>& cells) {
    Json j = report_header("simulate", c);
    Json a = Json::array();
    for (const auto& s : cells) a.push_back(to_json(s));
    j["cells"] = a;
    return j;
}

std::vector<std::string> export_one(const RunConfig& c, const std::string& dir) {
    const auto cells = scenario_cells(c);
    if (cells.empty()) throw Error(ErrorKind::InvalidInput, "export_one", "no simulation cell configured");
    const ScenarioConfig& cell = cells.front();
    const SimulatedData d = simulate_data(cell, 0);
    std::filesystem::create_directories(dir);

    Table exp_t;
    for (Index k = 0; k < d.exp.covariates.cols(); ++k) {
        exp_t.columns.push_back(d.exp.covariate_names[static_cast<std::size_t>(k)]);
        exp_t.values.push_back(d.exp.covariates.col(k));
    }
    Table pop_t = exp_t;
    pop_t.values.clear();
    for (Index k = 0; k < d.pop.covariates.cols(); ++k) pop_t.values.push_back(d.pop.covariates.col(k));
    exp_t.columns.insert(exp_t.columns.end(), {"T", "Y", "w_true"});
    exp_t.values.insert(exp_t.values.end(), {d.exp.treatment, d.exp.outcome, d.true_weights});
    pop_t.columns.push_back("Y");
    pop_t.values.push_back(d.pop.outcome);

    const std::string tag = "_seed" + std::to_string(c.seed);
    const std::filesystem::path base(dir);
    const std::string exp_path = (base / ("experiment" + tag + ".csv")).string();
    const std::string pop_path = (base / ("population" + tag + ".csv")).string();
    const std::string cfg_path = (base / ("config" + tag + ".json")).string();
    write_csv_file(exp_path, exp_t);
    write_csv_file(pop_path, pop_t);

    // Analysis settings matching replication 0 of the in-process run.
    RunConfig rc = c;
    rc.experiment = exp_path;
    rc.population = pop_path;
    rc.roles = RoleMap{};
    for (const auto& name : kSimCovariates) rc.roles.roles.emplace_back(name, Role::Covariate);
    rc.roles.roles.emplace_back("T", Role::Treatment);
    rc.roles.roles.emplace_back("Y", Role::Outcome);
    rc.roles.roles.emplace_back("w_true", Role::Ignore);
    rc.roles.adjust_columns = kSimAdjust;
    rc.weights = cell.weights == SimWeights::Logistic ? WeightMethod::Logistic : WeightMethod::EntropyBalance;
    rc.features = kSimAdjust;
    rc.fit_subset = FitSubset::AllPopulation;
    rc.level = cell.level;
    Json cfg = config_to_json(rc);
    cfg.erase("simulate");
    write_text(cfg_path, cfg.dump(2) + "\n");
    return {exp_path, pop_path, cfg_path};
}

int run(const Invocation& inv, std::ostream& err) {
    try {
        const RunConfig& c = inv.config;
        const bool csv = inv.format == Format::Csv;
        if (inv.command == "estimate") {
            const Json r = estimate_report(c);
            write_text(inv.out, csv ? estimates_csv(r) : r.dump(2) + "\n");
        } else if (inv.command == "diagnose") {
            const Json r = diagnose_report(c);
            write_text(inv.out, csv ? diagnostics_csv(r) : r.dump(2) + "\n");
        } else if (inv.command == "weights") {
            const Json r = weights_report(c);
            if (csv) {
                Vector w(static_cast<Index>(r.at("weights").size()));
                for (Index i = 0; i < w.size(); ++i) w(i) = r.at("weights")[static_cast<std::size_t>(i)].get<double>();
                write_text(inv.out, weights_csv(w));
                if (!inv.out.empty()) {
                    Json summary = r;
                    summary.erase("weights");
                    write_text(sibling(inv.out, "_summary.json"), summary.dump(2) + "\n");
                }
            } else {
                write_text(inv.out, r.dump(2) + "\n");
            }
        } else if (inv.command == "benchmark-loo") {
            const Json r = benchmark_loo_report(c);
            write_text(inv.out, csv ? benchmark_csv(r) : r.dump(2) + "\n");
        } else if (inv.command == "simulate") {
            if (!inv.export_dir.empty()) {
                for (const auto& p : export_one(c, inv.export_dir)) err << "wrote " << p << '\n';
                return kExitOk;
            }
            const std::vector<SimulationSummary> cells = run_cells(c, inv.workers);
            const Json r = simulate_report(c, cells);
            if (csv) {
                std::string table = simulation_csv_header();
                std::string confusion = confusion_csv_header();
                for (const auto& s : cells) {
                    table += simulation_csv_rows(s);
                    confusion += confusion_csv_rows(s);
                }
                write_text(inv.out, table);
                if (!inv.out.empty()) {
                    write_text(sibling(inv.out, "_diagnostics.csv"), confusion);
                    write_text(sibling(inv.out, "_report.json"), r.dump(2) + "\n");
                } else {
                    std::cout << '\n' << confusion;
                }
            } else {
                write_text(inv.out, r.dump(2) + "\n");
            }
        } else {
            err << "error: unknown command '" << inv.command << "'\n";
            return kExitValidation;
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        if (is_validation_error(e.kind())) {
            // One violation per line.
            const std::string detail = e.what();
            if (e.op() == "validate_pair") {
                std::string::size_type start = detail.find(": ") + 2;
                while (start < detail.size()) {
                    const auto end = detail.find("; ", start);
                    err << "  violation: " << detail.substr(start, end - start) << '\n';
                    if (end == std::string::npos) break;
                    start = end + 2;
                }
            }
        }
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace pate::cli
