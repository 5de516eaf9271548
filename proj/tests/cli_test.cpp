// End-to-end checks of the command-line interface: each case invokes the
// built binary in a scratch directory and inspects exit codes and outputs.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "factorbreak/dgp.hpp"
#include "factorbreak/io.hpp"

namespace fs = std::filesystem;
using namespace factorbreak;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << "\n";
    if (!ok) ++g_failures;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run(const fs::path& dir, const std::string& args, const std::string& env = "") {
    const fs::path out_file = dir / "stdout.txt";
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + FACTORBREAK_CLI_PATH + " " + args +
                            " > " + out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

std::string slurp_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    const fs::path dir = fs::temp_directory_path() / ("factorbreak_cli_" + std::to_string(getpid()));
    fs::create_directories(dir);
    const std::string panel = (dir / "panel.csv").string();

    {
        const RunResult r =
            run(dir, "simulate --n 3 --t 4 --scenario 1b --seed 5 --out " + panel);
        check(r.exit_code == 0, "simulate succeeds on a tiny panel");
        std::ifstream in(panel);
        int lines = 0;
        std::string line;
        while (std::getline(in, line)) ++lines;
        check(lines == 5, "tiny panel csv has header plus T rows");
        check(fs::exists(panel + ".meta.json"), "sidecar written next to the panel");
    }

    {
        // Same seed twice: byte-identical output.
        const std::string again = (dir / "panel2.csv").string();
        run(dir, "simulate --n 3 --t 4 --scenario 1b --seed 5 --out " + again);
        check(slurp_file(panel) == slurp_file(again), "same seed gives byte-identical files");

        // Round trip: the file parses back to the generator's exact matrix.
        DgpConfig cfg;
        cfg.n_len = 3;
        cfg.t_len = 4;
        cfg.k0 = 2;
        cfg.scenario = Scenario::OneB;
        cfg.seed = 5;
        const SimulatedPanel sim = gen_panel(cfg);
        const PanelData back = read_panel_csv(panel);
        check(back.values() == sim.panel.values(), "csv round-trip is exact");
    }

    {
        // Env seed is the fallback and the flag wins over it.
        const std::string env_panel = (dir / "panel_env.csv").string();
        run(dir, "simulate --n 3 --t 4 --scenario 1b --out " + env_panel,
            "FACTORBREAK_SEED=5");
        check(slurp_file(panel) == slurp_file(env_panel), "env seed matches explicit seed");
        const std::string flag_panel = (dir / "panel_flag.csv").string();
        run(dir, "simulate --n 3 --t 4 --scenario 1b --seed 5 --out " + flag_panel,
            "FACTORBREAK_SEED=99");
        check(slurp_file(panel) == slurp_file(flag_panel), "flag seed wins over env seed");
    }

    const std::string big_panel = (dir / "big.csv").string();
    {
        const RunResult r = run(
            dir, "simulate --n 300 --t 300 --scenario 1a --seed 31 --out " + big_panel);
        check(r.exit_code == 0, "simulate succeeds at 300x300");
        const RunResult est = run(dir, "estimate --input " + big_panel +
                                           " --r 3 --out " + (dir / "curve.csv").string());
        check(est.exit_code == 0, "estimate succeeds with explicit r");
        int k_hat = -1;
        std::sscanf(est.out.c_str(), "method=qml r=3 k_hat=%d", &k_hat);
        check(std::abs(k_hat - 150) <= 3, "estimated break is within 3 of the sidecar k0");
        std::ifstream curve(dir / "curve.csv");
        std::string header;
        std::getline(curve, header);
        check(header == "k,objective", "objective curve has the documented header");
        int rows = 0;
        std::string line;
        while (std::getline(curve, line)) ++rows;
        check(rows == 255 - 45 + 1, "objective curve covers the whole window");
    }

    {
        const RunResult r = run(dir, "estimate --input " + big_panel + " --method both --r 3");
        check(r.exit_code == 0, "estimate --method both succeeds");
        check(r.out.find("method=qml") != std::string::npos &&
                  r.out.find("method=ls") != std::string::npos,
              "both methods print labeled rows");
    }

    {
        const RunResult r = run(dir, "estimate --input " + big_panel + " --r 2 --r 3 --r 4");
        check(r.exit_code == 0, "estimate with a factor sweep succeeds");
        check(r.out.find("r=2") != std::string::npos &&
                  r.out.find("r=3") != std::string::npos &&
                  r.out.find("r=4") != std::string::npos,
              "repeated --r flags print one row per factor count");
    }

    {
        // A series-major copy of the panel estimates identically via --transpose.
        const PanelData original = read_panel_csv(big_panel);
        const std::string wide = (dir / "wide.csv").string();
        {
            std::ofstream out(wide);
            for (Eigen::Index t = 0; t < original.t_len(); ++t)
                out << (t ? "," : "") << "t" << t;
            out << "\n";
            for (Eigen::Index j = 0; j < original.n_len(); ++j) {
                for (Eigen::Index t = 0; t < original.t_len(); ++t)
                    out << (t ? "," : "") << format_double(original.values()(t, j));
                out << "\n";
            }
        }
        const RunResult direct = run(dir, "estimate --input " + big_panel + " --r 3");
        const RunResult flipped = run(dir, "estimate --input " + wide + " --r 3 --transpose");
        check(flipped.exit_code == 0 && flipped.out == direct.out,
              "--transpose reproduces the time-major estimate");
    }

    {
        const RunResult r = run(dir, "estimate --input " + big_panel + " --r 999");
        check(r.exit_code == 2, "oversized r exits with the parameter code");
        check(r.err.find("out of range") != std::string::npos, "error names the constraint");
    }

    {
        const RunResult r = run(dir, "estimate --input " + big_panel + " --auto-r --rmax 6");
        check(r.exit_code == 0, "estimate --auto-r succeeds");
        check(r.out.find("r=3") != std::string::npos, "auto-r picks three factors on 1A data");
    }

    {
        const std::string bad = (dir / "bad.csv").string();
        std::ofstream out(bad);
        out << "a,b\n1,2\n3,zap\n";
        out.close();
        const RunResult r = run(dir, std::string("estimate --input ") + bad + " --r 1");
        check(r.exit_code == 2, "malformed csv exits with the parameter code");
        check(r.err.find(":3") != std::string::npos, "parse error carries the line number");
    }

    {
        const RunResult r = run(dir, "simulate --n 3 --t 4 --out /no_such_dir/x.csv");
        check(r.exit_code == 3, "unwritable output path exits with the io code");
        check(r.err.find("/no_such_dir/x.csv") != std::string::npos,
              "io error message names the path");
    }

    {
        const RunResult r = run(dir, "ic --input " + big_panel + " --rmax 6");
        check(r.exit_code == 0, "ic command succeeds");
        check(r.out.find("r_hat=3") != std::string::npos, "ic prints the selected r");
        check(r.out.find("r=6") != std::string::npos, "ic prints the whole criterion curve");
    }

    {
        // A noiseless rank-3 panel keeps r_hat = 3 even with a generous cap.
        const std::string clean = (dir / "clean.csv").string();
        run(dir, "simulate --n 40 --t 50 --scenario 1b --zero-error --seed 2 --out " + clean);
        const RunResult r = run(dir, "ic --input " + clean + " --rmax 8 --ic 2");
        check(r.exit_code == 0 && r.out.find("r_hat=3") != std::string::npos,
              "ic finds the exact rank of a noiseless panel");
    }

    {
        const std::string spec = (dir / "spec.json").string();
        std::ofstream out(spec);
        out << R"({"cells":[{"n":30,"t":40,"scenario":"1a"}],"replications":2,)"
            << R"("estimators":["qml","ls"],"base_seed":5})";
        out.close();
        const std::string report = (dir / "report.json").string();
        const RunResult r =
            run(dir, "experiment --spec " + spec + " --out " + report + " --threads 2");
        check(r.exit_code == 0, "experiment command succeeds");
        const auto doc = nlohmann::json::parse(slurp_file(report));
        check(doc["results"].size() == 2, "report has one entry per estimator");
        int total = 0;
        for (const auto& [key, value] : doc["results"][0]["histogram"].items())
            total += value.get<int>();
        check(doc["results"][0]["replications_used"] == 2, "replications_used recorded");
        check(total == 2, "histogram counts sum to the replications");
        check(fs::exists(dir / "report_cell0_qml.csv") && fs::exists(dir / "report_cell0_ls.csv"),
              "per-cell histogram csvs written");
    }

    {
        const RunResult r =
            run(dir, "estimate --input " + big_panel + " --r 3 --standardize");
        check(r.exit_code == 0, "estimate --standardize succeeds");
        int k_hat = -1;
        std::sscanf(r.out.c_str(), "method=qml r=3 k_hat=%d", &k_hat);
        check(std::abs(k_hat - 150) <= 3, "standardized estimate still lands near k0");
    }

    {
        // --seed overrides the spec file's base_seed.
        const std::string spec = (dir / "seed_spec.json").string();
        std::ofstream out(spec);
        out << R"({"cells":[{"n":30,"t":40,"scenario":"1a"}],"replications":4,)"
            << R"("base_seed":1})";
        out.close();
        const std::string rep_a = (dir / "rep_a.json").string();
        const std::string rep_b = (dir / "rep_b.json").string();
        const std::string rep_c = (dir / "rep_c.json").string();
        run(dir, "experiment --spec " + spec + " --out " + rep_a + " --threads 1");
        run(dir, "experiment --spec " + spec + " --seed 2 --out " + rep_b + " --threads 1");
        run(dir, "experiment --spec " + spec + " --seed 1 --out " + rep_c + " --threads 1");
        const auto doc_a = nlohmann::json::parse(slurp_file(rep_a));
        const auto doc_b = nlohmann::json::parse(slurp_file(rep_b));
        const auto doc_c = nlohmann::json::parse(slurp_file(rep_c));
        check(doc_b["spec"]["base_seed"] == 2 && doc_a["spec"]["base_seed"] == 1,
              "experiment --seed overrides the spec's base_seed");
        check(doc_a["results"] == doc_c["results"] && doc_a["results"] != doc_b["results"] ,
              "changing the seed changes the draws, repeating it does not");
    }

    {
        const std::string hist = (dir / "wl.csv").string();
        const RunResult r = run(dir, "limit-dist --sigma1 [[2,0],[0,1]] --sigma2 [[1,0],[0,1]] "
                                     "--ell-max 10 --draws 200 --seed 3 --out " + hist);
        check(r.exit_code == 0, "limit-dist command succeeds");
        std::ifstream in(hist);
        std::string header;
        std::getline(in, header);
        check(header == "deviation,count", "limit histogram has the documented header");
        int total = 0;
        std::string line;
        while (std::getline(in, line)) total += std::stoi(line.substr(line.find(',') + 1));
        check(total == 200, "limit histogram counts sum to the draw count");
        const RunResult degenerate =
            run(dir, "limit-dist --sigma1 [[1,0],[0,1]] --sigma2 [[1,0],[0,1]] --draws 10");
        check(degenerate.exit_code == 2, "equal sigmas exit with the parameter code");

        // File-based sigma input reproduces the inline run exactly.
        const std::string spec = (dir / "wl_spec.json").string();
        std::ofstream out(spec);
        out << R"({"sigma1": [[2,0],[0,1]], "sigma2": [[1,0],[0,1]]})";
        out.close();
        const std::string hist2 = (dir / "wl2.csv").string();
        const RunResult from_file = run(dir, "limit-dist --spec-file " + spec +
                                            " --ell-max 10 --draws 200 --seed 3 --out " + hist2);
        check(from_file.exit_code == 0 && slurp_file(hist2) == slurp_file(hist),
              "limit-dist --spec-file matches the inline matrices");
    }

    fs::remove_all(dir);
    if (g_failures == 0) {
        std::cout << "all cli checks passed\n";
        return 0;
    }
    std::cout << g_failures << " cli check(s) failed\n";
    return 1;
}
