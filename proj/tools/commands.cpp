#include "commands.hpp"

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbrdr/bias_surface.hpp"
#include "pbrdr/csv.hpp"
#include "pbrdr/error.hpp"
#include "pbrdr/estimators.hpp"
#include "pbrdr/simulation.hpp"

namespace pbrdr::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

int exit_code(ErrorKind kind) { return is_input_error(kind) ? kExitInput : kExitNumerical; }

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// The manifest names itself and every file the command wrote, and is written
// whether or not the command succeeded.
void write_manifest(const fs::path& dir, json manifest, std::vector<std::string> files,
                    const Timer& timer) {
    files.push_back("manifest.json");
    manifest["version"] = kVersion;
    manifest["wall_time_seconds"] = timer.seconds();
    manifest["files"] = files;
    write_text_file(dir / "manifest.json", manifest.dump(2) + '\n');
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        fail(ErrorKind::IoError, "cannot create output directory '" + dir.string() + "'");
    }
}

std::string valid_tags() {
    std::string out;
    for (EstimatorTag tag : all_tags()) {
        if (!out.empty()) out += ", ";
        out += tag_name(tag);
    }
    return out;
}

std::string active_size(const EstimateResult& r, bool beta) {
    if (r.estimator != EstimatorTag::Pbr && r.estimator != EstimatorTag::DsPbr) return "NA";
    return std::to_string(beta ? r.active_beta.size() : r.active_gamma.size());
}

std::string estimate_row(const std::string& target, const EstimateResult& r) {
    return target + ',' + std::string(tag_name(r.estimator)) + ',' + format_double(r.mu_hat) +
           ',' + format_double(r.se) + ',' + format_double(r.ci.first) + ',' +
           format_double(r.ci.second) + ',' + active_size(r, false) + ',' +
           active_size(r, true) + ',' + (r.naive_se ? "true" : "false") + '\n';
}

constexpr const char* kEstimateHeader =
    "target,estimator,estimate,se,ci_lower,ci_upper,active_gamma,active_beta,naive_se\n";

}  // namespace

int resolve_threads(int flag_value) {
    if (const char* env = std::getenv("PBRDR_THREADS"); env && *env) {
        char* end = nullptr;
        errno = 0;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || errno == ERANGE || v < 1 || v > 4096) {
            fail(ErrorKind::ConfigError,
                 "PBRDR_THREADS must be a positive integer, got '" + std::string(env) + "'");
        }
        return static_cast<int>(v);
    }
    if (flag_value < 1) fail(ErrorKind::ConfigError, "--threads must be positive");
    return flag_value;
}

int cmd_estimate(const EstimateArgs& args, std::ostream& out, std::ostream& err) {
    const Timer timer;
    json manifest;
    manifest["command"] = "estimate";
    manifest["config"] = {{"csv", args.csv.string()},
                          {"outcome", args.outcome},
                          {"treatment", args.treatment},
                          {"covariates", args.covariates},
                          {"estimator", args.estimator},
                          {"target", args.target},
                          {"na", args.na}};
    manifest["seed"] = args.seed;
    std::vector<std::string> files;
    bool have_dir = false;
    try {
        ensure_dir(args.out);
        have_dir = true;
        const auto tag = parse_tag(args.estimator);
        if (!tag) {
            fail(ErrorKind::ConfigError,
                 "unknown estimator '" + args.estimator + "'; valid tags: " + valid_tags());
        }
        if (args.target != "mu1" && args.target != "mu0" && args.target != "ate") {
            fail(ErrorKind::ConfigError, "--target must be mu1, mu0 or ate");
        }
        if (args.na != "drop" && args.na != "error") {
            fail(ErrorKind::ConfigError, "--na must be drop or error");
        }
        CsvSchema schema;
        schema.outcome_col = args.outcome;
        schema.treatment_col = args.treatment;
        schema.covariate_cols = args.covariates;
        schema.na_policy = args.na == "drop" ? NaPolicy::DropRows : NaPolicy::Error;
        const LoadedData loaded = dataset_from_csv(read_csv(args.csv), schema);
        manifest["n"] = loaded.data.n();
        manifest["p"] = loaded.data.p();
        manifest["dropped_rows"] = loaded.dropped_rows;

        std::string report = kEstimateHeader;
        if (args.target == "ate") {
            const AteResult r = ate_estimate(loaded.data, *tag);
            EstimateResult summary = r.arm1;
            summary.mu_hat = r.ate;
            summary.se = r.se;
            summary.ci = r.ci;
            report += estimate_row("ate", summary);
            report += estimate_row("mu1", r.arm1);
            report += estimate_row("mu0", r.arm0);
        } else if (args.target == "mu1") {
            report += estimate_row("mu1", estimate(loaded.data, *tag));
        } else {
            report += estimate_row("mu0", estimate(loaded.data.with_treatment_flipped(), *tag));
        }
        write_text_file(args.out / "estimate.csv", report);
        files.push_back("estimate.csv");
        manifest["status"] = {{std::string(tag_name(*tag)), "ok"}};
        write_manifest(args.out, manifest, files, timer);
        out << report;
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        manifest["status"] = {{args.estimator, std::string(e.name())}};
        manifest["error"] = e.what();
        if (have_dir) {
            try {
                write_manifest(args.out, manifest, files, timer);
            } catch (const Error&) {
            }
        }
        return exit_code(e.kind());
    }
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    const Timer timer;
    json manifest;
    manifest["command"] = "simulate";
    std::vector<std::string> files;
    bool have_dir = false;
    try {
        ensure_dir(args.out);
        have_dir = true;
        const SimulationConfig cfg = SimulationConfig::parse(read_text_file(args.config));
        manifest["config"] = cfg.serialize();
        manifest["seed"] = cfg.seed;
        MonteCarloOptions opts;
        opts.threads = resolve_threads(args.threads);

        json status = json::object();
        for (const ScenarioSpec& cell : cfg.cells()) {
            const MetricsTable table = run_monte_carlo(cell, cfg.estimators, opts);
            const std::string name = cell.cell_name() + ".csv";
            write_text_file(args.out / name, table.to_csv());
            files.push_back(name);
            json cell_status = json::object();
            for (const MetricsRow& row : table.rows) {
                cell_status[std::string(tag_name(row.estimator))] = {
                    {"failed_replications", row.n_failed}};
            }
            status[cell.cell_name()] = cell_status;
            out << name << '\n';
        }
        manifest["status"] = status;
        write_manifest(args.out, manifest, files, timer);
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        manifest["error"] = e.what();
        if (have_dir) {
            try {
                write_manifest(args.out, manifest, files, timer);
            } catch (const Error&) {
            }
        }
        return exit_code(e.kind());
    }
}

int cmd_bias_surface(const BiasSurfaceArgs& args, std::ostream& out, std::ostream& err) {
    const Timer timer;
    json manifest;
    manifest["command"] = "bias-surface";
    manifest["seed"] = args.seed;
    std::vector<std::string> files;
    bool have_dir = false;
    try {
        ensure_dir(args.out);
        have_dir = true;
        SurfaceDgp dgp;
        if (args.variant == "fig1") {
            dgp.variant = SurfaceVariant::Fig1;
        } else if (args.variant == "fig2") {
            dgp.variant = SurfaceVariant::Fig2;
        } else {
            fail(ErrorKind::ConfigError, "--variant must be fig1 or fig2");
        }
        dgp.n_large = args.n_large;
        dgp.seed = args.seed;
        const std::string gr = args.gamma_range.value_or(default_gamma_range(dgp.variant));
        const std::string br = args.beta_range.value_or(default_beta_range(dgp.variant));
        manifest["config"] = {{"variant", args.variant},
                              {"gamma_range", gr},
                              {"beta_range", br},
                              {"n_large", args.n_large}};
        const std::vector<double> gamma_grid = parse_grid(gr);
        const std::vector<double> beta_grid = parse_grid(br);
        const SurfaceGrid grid =
            evaluate_surface(dgp, gamma_grid, beta_grid, resolve_threads(args.threads));
        files = export_surface(grid, args.out);
        manifest["status"] = "ok";
        write_manifest(args.out, manifest, files, timer);
        out << "br_point," << format_double(grid.br_point.first) << ','
            << format_double(grid.br_point.second) << '\n';
        for (const ReferenceBias& rb : grid.reference_biases) {
            out << rb.tag << ',' << format_double(rb.bias) << '\n';
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        manifest["status"] = std::string(e.name());
        manifest["error"] = e.what();
        if (have_dir) {
            try {
                write_manifest(args.out, manifest, files, timer);
            } catch (const Error&) {
            }
        }
        return exit_code(e.kind());
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Penalised bias-reduced double-robust estimation", "pbrdr"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    EstimateArgs est;
    std::string est_covariates;
    auto* estimate = app.add_subcommand("estimate", "Estimate E{Y(1)}, E{Y(0)} or the ATE");
    estimate->add_option("--csv", est.csv, "Input CSV")->required();
    estimate->add_option("--outcome", est.outcome, "Outcome column")->required();
    estimate->add_option("--treatment", est.treatment, "Binary treatment column")->required();
    estimate->add_option("--covariates", est_covariates,
                         "Comma-separated covariate columns (default: all others)");
    estimate->add_option("--estimator", est.estimator, "Estimator tag")->capture_default_str();
    estimate->add_option("--target", est.target, "mu1, mu0 or ate")->capture_default_str();
    estimate->add_option("--na", est.na, "Rows with missing values: drop or error")
        ->capture_default_str();
    estimate->add_option("--seed", est.seed, "Recorded in the manifest")->capture_default_str();
    estimate->add_option("--out", est.out, "Output directory")->capture_default_str();

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run Monte Carlo scenario cells");
    simulate->add_option("--config", sim.config, "key=value config file")->required();
    simulate->add_option("--out", sim.out, "Output directory")->required();
    simulate->add_option("--threads", sim.threads, "Worker threads")->capture_default_str();

    BiasSurfaceArgs surf;
    std::string gamma_range, beta_range;
    auto* surface = app.add_subcommand("bias-surface", "Evaluate the DR bias surface");
    surface->add_option("--variant", surf.variant, "fig1 or fig2")->capture_default_str();
    surface->add_option("--gamma-range", gamma_range, "A:B:STEP");
    surface->add_option("--beta-range", beta_range, "A:B:STEP");
    surface->add_option("--n-large", surf.n_large, "Sample size")->capture_default_str();
    surface->add_option("--seed", surf.seed, "Sample seed")->capture_default_str();
    surface->add_option("--out", surf.out, "Output directory")->required();
    surface->add_option("--threads", surf.threads, "Worker threads")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    if (estimate->parsed()) {
        std::stringstream ss(est_covariates);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) est.covariates.push_back(item);
        }
        return cmd_estimate(est, out, err);
    }
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    if (!gamma_range.empty()) surf.gamma_range = gamma_range;
    if (!beta_range.empty()) surf.beta_range = beta_range;
    return cmd_bias_surface(surf, out, err);
}

}  // namespace pbrdr::cli
