#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "factorbreak/break_estimators.hpp"
#include "factorbreak/dgp.hpp"
#include "factorbreak/factor_count.hpp"

namespace factorbreak {

// How each replication picks the number of factors fed to the estimators.
struct RPolicy {
    enum class Kind {
        GroundTruth,   // the simulated panel's true pseudo-factor count
        Fixed,         // a caller-supplied r
        EstimateByIc,  // select_r on the replication's panel
    };
    Kind kind = Kind::GroundTruth;
    int fixed_r = 0;
    IcVariant variant = IcVariant::Ic1;
    int r_max = 8;
};

// A full experiment: one cell per DgpConfig, each replicated and summarized
// per estimator.
struct ExperimentSpec {
    std::vector<DgpConfig> cells;
    int replications = 1;
    std::vector<BreakMethod> estimators = {BreakMethod::Qml};
    RPolicy r_policy;
    SearchWindow window;
    std::uint64_t base_seed = 0;
    double eigen_floor = kDefaultEigenFloor;

    void validate() const;  // throws ParameterError listing every violation
};

// Error summary over one cell's deviations k_hat - k0.
struct CellStats {
    double mae = 0.0;
    double rmse = 0.0;
    double p_correct = 0.0;
    std::map<int, int> histogram;  // deviation -> count
    int replications_used = 0;
};

struct CellResult {
    int cell_index = 0;
    BreakMethod method = BreakMethod::Qml;
    CellStats stats;
    int failures = 0;
};

struct ExperimentReport {
    ExperimentSpec spec;
    std::vector<CellResult> results;  // ordered by (cell_index, estimator)
};

// MAE, RMSE, exact-hit probability, and the deviation histogram of a
// replication run.  Throws ParameterError on an empty list.
CellStats summarize(const std::vector<int>& deviations);

// Runs every (cell, replication), derives each replication's seed as
// hash(base_seed, cell, replication), and aggregates per estimator.
//
// Replications execute on n_threads workers; results land in
// per-replication slots and are aggregated in index order, so the report is
// bit-identical for any thread count.  A replication that throws is
// excluded and counted; more than 10% failures in a cell raise
// ExperimentError.
ExperimentReport run_experiment(const ExperimentSpec& spec, int n_threads = 1);

}  // namespace factorbreak
