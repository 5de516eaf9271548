#include "factorbreak/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>

#include "factorbreak/errors.hpp"

namespace factorbreak {

void ExperimentSpec::validate() const {
    std::string problems;
    auto add = [&](const std::string& p) {
        if (!problems.empty()) problems += "; ";
        problems += p;
    };
    if (cells.empty()) add("cells must be nonempty");
    if (replications < 1) add("replications must be >= 1");
    if (estimators.empty()) add("estimators must be nonempty");
    if (!(window.tau1 > 0.0 && window.tau1 < window.tau2 && window.tau2 < 1.0))
        add("window requires 0 < tau1 < tau2 < 1");
    if (!(eigen_floor > 0.0)) add("eigen_floor must be positive");
    if (r_policy.kind == RPolicy::Kind::Fixed && r_policy.fixed_r < 1)
        add("fixed r policy requires r >= 1");
    if (r_policy.kind == RPolicy::Kind::EstimateByIc && r_policy.r_max < 1)
        add("IC r policy requires r_max >= 1");
    for (size_t i = 0; i < cells.size(); ++i) {
        try {
            cells[i].validate();
        } catch (const ParameterError& e) {
            add("cell " + std::to_string(i) + ": " + e.what());
        }
    }
    if (!problems.empty()) throw ParameterError("invalid experiment spec: " + problems);
}

CellStats summarize(const std::vector<int>& deviations) {
    if (deviations.empty()) throw ParameterError("summarize requires a nonempty deviation list");
    CellStats stats;
    stats.replications_used = static_cast<int>(deviations.size());
    long long abs_sum = 0;
    long long sq_sum = 0;
    for (int d : deviations) {
        abs_sum += std::llabs(d);
        sq_sum += static_cast<long long>(d) * d;
        ++stats.histogram[d];
    }
    const double n = static_cast<double>(stats.replications_used);
    stats.mae = static_cast<double>(abs_sum) / n;
    stats.rmse = std::sqrt(static_cast<double>(sq_sum) / n);
    auto hit = stats.histogram.find(0);
    stats.p_correct = (hit == stats.histogram.end()) ? 0.0 : hit->second / n;
    return stats;
}

namespace {

// Deviations of every requested estimator for one replication, in the
// order of spec.estimators.
std::vector<int> run_replication(const ExperimentSpec& spec, const DgpConfig& cell,
                                 std::uint64_t rep_seed) {
    DgpConfig cfg = cell;
    cfg.seed = rep_seed;
    const SimulatedPanel sim = gen_panel(cfg);

    int r = sim.r_pseudo;
    switch (spec.r_policy.kind) {
        case RPolicy::Kind::GroundTruth:
            break;
        case RPolicy::Kind::Fixed:
            r = spec.r_policy.fixed_r;
            break;
        case RPolicy::Kind::EstimateByIc: {
            const int cap = static_cast<int>(
                std::min(sim.panel.t_len(), sim.panel.n_len())) - 1;
            r = select_r(sim.panel, std::min(spec.r_policy.r_max, cap), spec.r_policy.variant)
                    .r_hat;
            break;
        }
    }

    const PcaFit fit = estimate_pca(sim.panel, r);
    std::vector<int> deviations;
    deviations.reserve(spec.estimators.size());
    for (BreakMethod method : spec.estimators) {
        const BreakEstimate est =
            (method == BreakMethod::Qml)
                ? estimate_break_qml(fit.g_hat, spec.window, spec.eigen_floor)
                : estimate_break_ls(fit.g_hat, spec.window);
        deviations.push_back(est.k_hat - sim.k0);
    }
    return deviations;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, int n_threads) {
    spec.validate();
    if (n_threads < 1) n_threads = 1;

    ExperimentReport report;
    report.spec = spec;

    for (size_t cell_idx = 0; cell_idx < spec.cells.size(); ++cell_idx) {
        const DgpConfig& cell = spec.cells[cell_idx];
        std::vector<std::optional<std::vector<int>>> slots(spec.replications);

        auto worker = [&](std::atomic<int>& counter) {
            for (;;) {
                const int rep = counter.fetch_add(1);
                if (rep >= spec.replications) break;
                const std::uint64_t rep_seed =
                    derive_seed(spec.base_seed, "replication", cell_idx,
                                static_cast<std::uint64_t>(rep));
                try {
                    slots[static_cast<size_t>(rep)] = run_replication(spec, cell, rep_seed);
                } catch (...) {
                    slots[static_cast<size_t>(rep)] = std::nullopt;
                }
            }
        };

        std::atomic<int> counter{0};
        if (n_threads == 1) {
            worker(counter);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(n_threads);
            for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker, std::ref(counter));
            for (auto& th : pool) th.join();
        }

        int failures = 0;
        std::vector<std::vector<int>> per_estimator(spec.estimators.size());
        for (const auto& slot : slots) {
            if (!slot) {
                ++failures;
                continue;
            }
            for (size_t e = 0; e < spec.estimators.size(); ++e)
                per_estimator[e].push_back((*slot)[e]);
        }
        if (failures * 10 > spec.replications)
            throw ExperimentError("cell " + std::to_string(cell_idx) + ": " +
                                  std::to_string(failures) + " of " +
                                  std::to_string(spec.replications) +
                                  " replications failed (more than 10%)");

        for (size_t e = 0; e < spec.estimators.size(); ++e) {
            CellResult result;
            result.cell_index = static_cast<int>(cell_idx);
            result.method = spec.estimators[e];
            result.stats = summarize(per_estimator[e]);
            result.failures = failures;
            report.results.push_back(std::move(result));
        }
    }
    return report;
}

}  // namespace factorbreak
