// factorbreak: break-date estimation in high-dimensional factor models.
//
// Subcommands: simulate, estimate, ic, experiment, limit-dist.
// Exit codes: 0 success, 2 parameter/validation error, 3 I/O error,
// 4 numerical error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "factorbreak/break_estimators.hpp"
#include "factorbreak/dgp.hpp"
#include "factorbreak/errors.hpp"
#include "factorbreak/factor_count.hpp"
#include "factorbreak/io.hpp"
#include "factorbreak/montecarlo.hpp"

namespace {

using namespace factorbreak;

constexpr int kExitOk = 0;
constexpr int kExitParameter = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

// --seed wins over FACTORBREAK_SEED, which wins over the built-in default.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           std::uint64_t fallback) {
    if (flag_seed) return *flag_seed;
    if (const char* env = std::getenv("FACTORBREAK_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ParameterError("FACTORBREAK_SEED='" + std::string(env) +
                                 "' is not an unsigned integer");
        }
    }
    return fallback;
}

// <stem>_<suffix><ext> next to the base path.
std::string derived_path(const std::string& base, const std::string& suffix) {
    const std::filesystem::path p(base);
    const std::filesystem::path dir = p.parent_path();
    return (dir / (p.stem().string() + suffix + p.extension().string())).string();
}

struct SimulateArgs {
    DgpConfig cfg;
    std::optional<std::uint64_t> seed_flag;
    std::string out = "panel.csv";
    std::string sidecar;
    bool k0_given = false;
};

int cmd_simulate(SimulateArgs& args) {
    args.cfg.seed = resolve_seed(args.seed_flag, 0);
    if (!args.k0_given) args.cfg.k0 = args.cfg.t_len / 2;
    const SimulatedPanel sim = gen_panel(args.cfg);
    write_panel_csv(args.out, sim.panel);
    const std::string sidecar =
        args.sidecar.empty() ? args.out + ".meta.json" : args.sidecar;
    write_sidecar(sidecar, sim);
    std::cout << "panel " << sim.panel.t_len() << "x" << sim.panel.n_len() << " scenario "
              << to_string(args.cfg.scenario) << " k0=" << sim.k0
              << " r_pseudo=" << sim.r_pseudo << " -> " << args.out << " (" << sidecar
              << ")\n";
    return kExitOk;
}

struct EstimateArgs {
    std::string input;
    std::vector<int> r_values;
    bool auto_r = false;
    int r_max = 0;
    int ic_variant = 1;
    double tau1 = 0.15;
    double tau2 = 0.85;
    double floor = kDefaultEigenFloor;
    std::string method = "qml";
    bool transpose = false;
    bool do_standardize = false;
    std::string out;
};

int cmd_estimate(EstimateArgs& args) {
    PanelData panel = read_panel_csv(args.input, args.transpose);
    if (args.do_standardize) panel = standardize(panel);

    std::vector<int> r_values = args.r_values;
    if (args.auto_r) {
        const int r_max = args.r_max > 0 ? args.r_max : default_r_max(panel);
        const IcResult ic = select_r(panel, r_max,
                                     args.ic_variant == 2 ? IcVariant::Ic2 : IcVariant::Ic1);
        r_values.push_back(ic.r_hat);
    }
    if (r_values.empty())
        throw ParameterError("supply --r (repeatable) or --auto-r");

    std::vector<BreakMethod> methods;
    if (args.method == "both") {
        methods = {BreakMethod::Qml, BreakMethod::Ls};
    } else {
        methods = {method_from_string(args.method)};
    }

    const SearchWindow window{args.tau1, args.tau2};
    const bool single = methods.size() == 1 && r_values.size() == 1;
    for (const int r : r_values) {
        const PcaFit fit = estimate_pca(panel, r);
        for (const BreakMethod method : methods) {
            const BreakEstimate est =
                (method == BreakMethod::Qml)
                    ? estimate_break_qml(fit.g_hat, window, args.floor)
                    : estimate_break_ls(fit.g_hat, window);
            std::cout << "method=" << method_name(method) << " r=" << r
                      << " k_hat=" << est.k_hat;
            if (est.floor_activations > 0)
                std::cout << " floor_activations=" << est.floor_activations;
            if (fit.rotation_warning) std::cout << " rotation_warning=1";
            std::cout << "\n";
            if (!args.out.empty()) {
                const std::string path =
                    single ? args.out
                           : derived_path(args.out, "_" + method_name(method) + "_r" +
                                                        std::to_string(r));
                write_objective_csv(path, est);
            }
        }
    }
    return kExitOk;
}

struct IcArgs {
    std::string input;
    int r_max = 0;
    int ic_variant = 1;
    bool transpose = false;
    bool do_standardize = false;
};

int cmd_ic(IcArgs& args) {
    PanelData panel = read_panel_csv(args.input, args.transpose);
    if (args.do_standardize) panel = standardize(panel);
    const int r_max = args.r_max > 0 ? args.r_max : default_r_max(panel);
    const IcResult ic =
        select_r(panel, r_max, args.ic_variant == 2 ? IcVariant::Ic2 : IcVariant::Ic1);
    std::cout << "r_hat=" << ic.r_hat << "\n";
    for (size_t i = 0; i < ic.criterion_values.size(); ++i)
        std::cout << "r=" << (i + 1) << " ic=" << format_double(ic.criterion_values[i])
                  << "\n";
    return kExitOk;
}

struct ExperimentArgs {
    std::string spec_path;
    std::string out = "report.json";
    std::optional<std::uint64_t> seed_flag;
    int threads = 0;
};

int cmd_experiment(ExperimentArgs& args) {
    ExperimentSpec spec = read_experiment_spec(args.spec_path);
    if (args.seed_flag || std::getenv("FACTORBREAK_SEED"))
        spec.base_seed = resolve_seed(args.seed_flag, spec.base_seed);
    const int threads = args.threads > 0
                            ? args.threads
                            : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const ExperimentReport report = run_experiment(spec, threads);
    write_report(args.out, report);
    for (const auto& result : report.results) {
        const DgpConfig& cfg = spec.cells[result.cell_index];
        std::cout << "cell=" << result.cell_index << " scenario=" << to_string(cfg.scenario)
                  << " n=" << cfg.n_len << " t=" << cfg.t_len
                  << " estimator=" << method_name(result.method)
                  << " mae=" << format_double(result.stats.mae)
                  << " rmse=" << format_double(result.stats.rmse)
                  << " p_correct=" << format_double(result.stats.p_correct)
                  << " used=" << result.stats.replications_used
                  << " failures=" << result.failures << "\n";
    }
    std::cout << "report -> " << args.out << "\n";
    return kExitOk;
}

struct LimitDistArgs {
    std::string sigma1_text;
    std::string sigma2_text;
    std::string spec_file;
    int ell_max = 30;
    int draws = 1000;
    std::optional<std::uint64_t> seed_flag;
    std::string out = "limit_hist.csv";
};

int cmd_limit_dist(LimitDistArgs& args) {
    LimitSpec spec;
    if (!args.spec_file.empty()) {
        std::ifstream in(args.spec_file);
        if (!in) throw IoError("cannot open '" + args.spec_file + "' for reading");
        std::stringstream buf;
        buf << in.rdbuf();
        const auto j = nlohmann::json::parse(buf.str(), nullptr, false);
        if (j.is_discarded() || !j.contains("sigma1") || !j.contains("sigma2"))
            throw ParameterError(args.spec_file +
                                 ": expected JSON with 'sigma1' and 'sigma2' matrices");
        spec.sigma1 = parse_matrix_json(j["sigma1"].dump());
        spec.sigma2 = parse_matrix_json(j["sigma2"].dump());
    } else {
        if (args.sigma1_text.empty() || args.sigma2_text.empty())
            throw ParameterError("supply --sigma1/--sigma2 or --spec-file");
        spec.sigma1 = parse_matrix_json(args.sigma1_text);
        spec.sigma2 = parse_matrix_json(args.sigma2_text);
    }
    spec.r = static_cast<int>(spec.sigma1.rows());
    if (spec.sigma2.rows() != spec.r)
        throw ParameterError("sigma1 and sigma2 must have the same dimension");

    const std::uint64_t seed = resolve_seed(args.seed_flag, 0);
    const auto histogram = simulate_limit_distribution(
        spec, make_gaussian_xi_sampler(spec), args.ell_max, args.draws, seed);
    write_histogram_csv(args.out, histogram);
    int at_zero = 0;
    if (auto it = histogram.find(0); it != histogram.end()) at_zero = it->second;
    std::cout << "draws=" << args.draws << " ell_max=" << args.ell_max
              << " mass_at_zero=" << format_double(static_cast<double>(at_zero) / args.draws)
              << " -> " << args.out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Break-date estimation for high-dimensional factor models"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a panel CSV plus ground-truth sidecar");
    simulate->add_option("--n", sim.cfg.n_len, "Cross-section size N")->required();
    simulate->add_option("--t", sim.cfg.t_len, "Time length T")->required();
    std::string scenario_name = "1a";
    simulate->add_option("--scenario", scenario_name, "Break scenario: 1a|1b|1c|1d");
    simulate->add_option("--m", sim.cfg.m, "Scenario 1c break-size parameter in [0,1]");
    simulate->add_option("--r0", sim.cfg.r0, "Original factor count (default 3)");
    auto* k0_opt = simulate->add_option("--k0", sim.cfg.k0, "True break date (default T/2)");
    simulate->add_option("--rho", sim.cfg.rho, "Factor AR(1) coefficient");
    simulate->add_option("--alpha", sim.cfg.alpha, "Error AR(1) coefficient");
    simulate->add_option("--beta", sim.cfg.beta, "Cross-sectional correlation decay");
    simulate->add_flag("--zero-error", sim.cfg.zero_error, "Omit idiosyncratic errors");
    simulate->add_option("--seed", sim.seed_flag, "RNG seed (env FACTORBREAK_SEED as fallback)");
    simulate->add_option("--out", sim.out, "Output CSV path");
    simulate->add_option("--sidecar", sim.sidecar, "Sidecar path (default <out>.meta.json)");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Estimate the break date of a CSV panel");
    estimate->add_option("--input", est.input, "Panel CSV")->required();
    estimate->add_option("--r", est.r_values, "Factor count (repeatable for a sweep)");
    estimate->add_flag("--auto-r", est.auto_r, "Select r by information criterion");
    estimate->add_option("--rmax", est.r_max, "Search cap for --auto-r");
    estimate->add_option("--ic", est.ic_variant, "Criterion variant: 1|2")
        ->check(CLI::IsMember({1, 2}));
    estimate->add_option("--tau1", est.tau1, "Lower trimming fraction");
    estimate->add_option("--tau2", est.tau2, "Upper trimming fraction");
    estimate->add_option("--floor", est.floor, "Eigenvalue floor for the log-det");
    estimate->add_option("--method", est.method, "qml|ls|both")
        ->check(CLI::IsMember({"qml", "ls", "both"}));
    estimate->add_flag("--transpose", est.transpose, "Input file is series-major");
    estimate->add_flag("--standardize", est.do_standardize, "Standardize each series first");
    estimate->add_option("--out", est.out, "Objective-curve CSV path");

    IcArgs ic;
    auto* ic_cmd = app.add_subcommand("ic", "Select the number of factors for a CSV panel");
    ic_cmd->add_option("--input", ic.input, "Panel CSV")->required();
    ic_cmd->add_option("--rmax", ic.r_max, "Largest r to consider");
    ic_cmd->add_option("--ic", ic.ic_variant, "Criterion variant: 1|2")
        ->check(CLI::IsMember({1, 2}));
    ic_cmd->add_flag("--transpose", ic.transpose, "Input file is series-major");
    ic_cmd->add_flag("--standardize", ic.do_standardize, "Standardize each series first");

    ExperimentArgs exp;
    auto* experiment = app.add_subcommand("experiment", "Run a replication grid from a JSON spec");
    experiment->add_option("--spec", exp.spec_path, "Experiment spec JSON")->required();
    experiment->add_option("--out", exp.out, "Report JSON path");
    experiment->add_option("--seed", exp.seed_flag, "Override the spec's base seed");
    experiment->add_option("--threads", exp.threads, "Worker threads (default: all cores)");

    LimitDistArgs lim;
    auto* limit = app.add_subcommand("limit-dist",
                                     "Simulate the limit distribution of k_hat - k0");
    limit->add_option("--sigma1", lim.sigma1_text, "Pre-break second moments, e.g. [[2,0],[0,1]]");
    limit->add_option("--sigma2", lim.sigma2_text, "Post-break second moments");
    limit->add_option("--spec-file", lim.spec_file, "JSON file with sigma1/sigma2");
    limit->add_option("--ell-max", lim.ell_max, "Half-width of the ell grid");
    limit->add_option("--draws", lim.draws, "Number of Monte Carlo draws");
    limit->add_option("--seed", lim.seed_flag, "RNG seed (env FACTORBREAK_SEED as fallback)");
    limit->add_option("--out", lim.out, "Histogram CSV path");

    try {
        app.parse(argc, argv);
        if (simulate->parsed()) {
            sim.cfg.scenario = scenario_from_string(scenario_name);
            sim.k0_given = k0_opt->count() > 0;
            return cmd_simulate(sim);
        }
        if (estimate->parsed()) return cmd_estimate(est);
        if (ic_cmd->parsed()) return cmd_ic(ic);
        if (experiment->parsed()) return cmd_experiment(exp);
        if (limit->parsed()) return cmd_limit_dist(lim);
        return kExitParameter;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParameter;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParameter;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}
