#pragma once

#include <string>

#include "factorbreak/dgp.hpp"
#include "factorbreak/montecarlo.hpp"
#include "factorbreak/panel.hpp"

namespace factorbreak {

// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);

// Panel CSV: UTF-8, comma-delimited, header row series_1..series_N, one row
// per time period, full round-trip precision, no missing values.
void write_panel_csv(const std::string& path, const PanelData& panel);

// Reads a panel CSV; transpose treats the file as series-major (series in
// rows) and flips it into the time-major layout.  Malformed content raises
// ParameterError with the offending line number; unreadable files raise
// IoError.
PanelData read_panel_csv(const std::string& path, bool transpose = false);

// Per-series standardization: subtract the column mean, divide by the
// sample standard deviation (constant columns raise ParameterError).
PanelData standardize(const PanelData& panel);

// Ground-truth sidecar written next to simulated panels.
void write_sidecar(const std::string& path, const SimulatedPanel& sim);

std::string method_name(BreakMethod method);
BreakMethod method_from_string(const std::string& name);

// Experiment spec JSON <-> ExperimentSpec.  See README for the schema.
ExperimentSpec read_experiment_spec(const std::string& path);
std::string experiment_spec_to_json(const ExperimentSpec& spec);

// Report JSON plus one (deviation, count) histogram CSV per cell/estimator,
// named <report stem>_cell<i>_<estimator>.csv next to the report.
std::string report_to_json(const ExperimentReport& report);
void write_report(const std::string& path, const ExperimentReport& report);

// Objective-curve CSV with header "k,objective".
void write_objective_csv(const std::string& path, const BreakEstimate& estimate);

// Histogram CSV with header "deviation,count", rows ordered by deviation.
void write_histogram_csv(const std::string& path, const std::map<int, int>& histogram);

// Square matrix from an inline JSON array-of-arrays like [[2,0],[0,1]].
Eigen::MatrixXd parse_matrix_json(const std::string& text);

}  // namespace factorbreak
