#include "factorbreak/io.hpp"

#include <charconv>
#include <cmath>
#include <string_view>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "factorbreak/errors.hpp"

namespace factorbreak {

using nlohmann::json;

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view text, const std::string& path, int line_no) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end)
        throw ParameterError(path + ":" + std::to_string(line_no) + ": cannot parse '" +
                             std::string(text) + "' as a number");
    return value;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

}  // namespace

void write_panel_csv(const std::string& path, const PanelData& panel) {
    std::ofstream out = open_output(path);
    for (Eigen::Index j = 0; j < panel.n_len(); ++j) {
        if (j > 0) out << ',';
        out << "series_" << (j + 1);
    }
    out << '\n';
    for (Eigen::Index t = 0; t < panel.t_len(); ++t) {
        for (Eigen::Index j = 0; j < panel.n_len(); ++j) {
            if (j > 0) out << ',';
            out << format_double(panel.values()(t, j));
        }
        out << '\n';
    }
    finish_output(out, path);
}

PanelData read_panel_csv(const std::string& path, bool transpose) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw ParameterError(path + ":1: empty file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t n_cols = split_csv_line(line).size();
    if (n_cols < 1) throw ParameterError(path + ":1: header row has no columns");

    std::vector<double> data;
    size_t n_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != n_cols)
            throw ParameterError(path + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(n_cols) + " fields, found " +
                                 std::to_string(fields.size()));
        for (const auto f : fields) {
            if (f.empty())
                throw ParameterError(path + ":" + std::to_string(line_no) +
                                     ": missing value (empty field)");
            data.push_back(parse_double(f, path, line_no));
        }
        ++n_rows;
    }
    if (n_rows == 0) throw ParameterError(path + ": no data rows after the header");

    Eigen::MatrixXd values(n_rows, n_cols);
    for (size_t i = 0; i < n_rows; ++i)
        for (size_t j = 0; j < n_cols; ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                data[i * n_cols + j];
    if (transpose) values = values.transpose().eval();
    try {
        return PanelData(std::move(values));
    } catch (const ParameterError& e) {
        throw ParameterError(path + ": " + e.what());
    }
}

PanelData standardize(const PanelData& panel) {
    Eigen::MatrixXd values = panel.values();
    const double t_len = static_cast<double>(values.rows());
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        const double mean = values.col(j).mean();
        values.col(j).array() -= mean;
        const double sd = std::sqrt(values.col(j).squaredNorm() / (t_len - 1.0));
        if (!(sd > 0.0))
            throw ParameterError("series " + std::to_string(j + 1) +
                                 " is constant; cannot standardize");
        values.col(j) /= sd;
    }
    return PanelData(std::move(values));
}

namespace {

json config_to_json(const DgpConfig& cfg) {
    json j{{"n", cfg.n_len},       {"t", cfg.t_len},     {"r0", cfg.r0},
           {"k0", cfg.k0},         {"rho", cfg.rho},     {"alpha", cfg.alpha},
           {"beta", cfg.beta},     {"scenario", to_string(cfg.scenario)},
           {"seed", cfg.seed},     {"zero_error", cfg.zero_error}};
    if (cfg.scenario == Scenario::OneC) j["m"] = cfg.m;
    return j;
}

DgpConfig config_from_json(const json& j, const std::string& where) {
    DgpConfig cfg;
    try {
        cfg.n_len = j.at("n").get<int>();
        cfg.t_len = j.at("t").get<int>();
        cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
        cfg.r0 = j.value("r0", 3);
        cfg.k0 = j.value("k0", cfg.t_len / 2);
        cfg.rho = j.value("rho", 0.0);
        cfg.alpha = j.value("alpha", 0.0);
        cfg.beta = j.value("beta", 0.0);
        cfg.m = j.value("m", 1.0);
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.zero_error = j.value("zero_error", false);
    } catch (const json::exception& e) {
        throw ParameterError(where + ": " + e.what());
    }
    return cfg;
}

}  // namespace

void write_sidecar(const std::string& path, const SimulatedPanel& sim) {
    json j = config_to_json(sim.config);
    j["k0"] = sim.k0;
    j["r_pseudo"] = sim.r_pseudo;
    j["r1"] = sim.r1;
    j["r2"] = sim.r2;
    std::ofstream out = open_output(path);
    out << j.dump(2) << '\n';
    finish_output(out, path);
}

std::string method_name(BreakMethod method) {
    return method == BreakMethod::Qml ? "qml" : "ls";
}

BreakMethod method_from_string(const std::string& name) {
    if (name == "qml") return BreakMethod::Qml;
    if (name == "ls") return BreakMethod::Ls;
    throw ParameterError("unknown estimator '" + name + "' (expected qml or ls)");
}

ExperimentSpec read_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParameterError(path + ": invalid JSON: " + e.what());
    }

    ExperimentSpec spec;
    try {
        if (!j.contains("cells") || !j["cells"].is_array() || j["cells"].empty())
            throw ParameterError(path + ": 'cells' must be a nonempty array");
        for (size_t i = 0; i < j["cells"].size(); ++i)
            spec.cells.push_back(
                config_from_json(j["cells"][i], path + ": cell " + std::to_string(i)));
        spec.replications = j.value("replications", 1);
        spec.base_seed = j.value("base_seed", std::uint64_t{0});
        spec.eigen_floor = j.value("eigen_floor", kDefaultEigenFloor);
        if (j.contains("estimators")) {
            spec.estimators.clear();
            for (const auto& e : j["estimators"])
                spec.estimators.push_back(method_from_string(e.get<std::string>()));
        }
        if (j.contains("window")) {
            spec.window.tau1 = j["window"].value("tau1", 0.15);
            spec.window.tau2 = j["window"].value("tau2", 0.85);
        }
        if (j.contains("r_policy")) {
            const auto& p = j["r_policy"];
            const std::string kind = p.value("policy", "truth");
            if (kind == "truth") {
                spec.r_policy.kind = RPolicy::Kind::GroundTruth;
            } else if (kind == "fixed") {
                spec.r_policy.kind = RPolicy::Kind::Fixed;
                spec.r_policy.fixed_r = p.value("r", 0);
            } else if (kind == "ic") {
                spec.r_policy.kind = RPolicy::Kind::EstimateByIc;
                spec.r_policy.variant = p.value("variant", 1) == 2 ? IcVariant::Ic2
                                                                   : IcVariant::Ic1;
                spec.r_policy.r_max = p.value("rmax", 8);
            } else {
                throw ParameterError(path + ": unknown r_policy '" + kind + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ParameterError(path + ": " + e.what());
    }
    spec.validate();
    return spec;
}

namespace {

json spec_to_json_impl(const ExperimentSpec& spec) {
    json cells = json::array();
    for (const auto& c : spec.cells) cells.push_back(config_to_json(c));
    json estimators = json::array();
    for (const auto e : spec.estimators) estimators.push_back(method_name(e));
    json policy;
    switch (spec.r_policy.kind) {
        case RPolicy::Kind::GroundTruth:
            policy = {{"policy", "truth"}};
            break;
        case RPolicy::Kind::Fixed:
            policy = {{"policy", "fixed"}, {"r", spec.r_policy.fixed_r}};
            break;
        case RPolicy::Kind::EstimateByIc:
            policy = {{"policy", "ic"},
                      {"variant", spec.r_policy.variant == IcVariant::Ic2 ? 2 : 1},
                      {"rmax", spec.r_policy.r_max}};
            break;
    }
    return json{{"cells", cells},
                {"replications", spec.replications},
                {"estimators", estimators},
                {"r_policy", policy},
                {"window", {{"tau1", spec.window.tau1}, {"tau2", spec.window.tau2}}},
                {"base_seed", spec.base_seed},
                {"eigen_floor", spec.eigen_floor}};
}

}  // namespace

std::string experiment_spec_to_json(const ExperimentSpec& spec) {
    return spec_to_json_impl(spec).dump(2);
}

std::string report_to_json(const ExperimentReport& report) {
    json cells = json::array();
    for (const auto& result : report.results) {
        json histogram = json::object();
        for (const auto& [dev, count] : result.stats.histogram)
            histogram[std::to_string(dev)] = count;
        cells.push_back({{"cell_index", result.cell_index},
                         {"config", config_to_json(report.spec.cells[result.cell_index])},
                         {"estimator", method_name(result.method)},
                         {"mae", result.stats.mae},
                         {"rmse", result.stats.rmse},
                         {"p_correct", result.stats.p_correct},
                         {"replications_used", result.stats.replications_used},
                         {"failures", result.failures},
                         {"histogram", histogram}});
    }
    return json{{"spec", spec_to_json_impl(report.spec)}, {"results", cells}}.dump(2);
}

void write_report(const std::string& path, const ExperimentReport& report) {
    {
        std::ofstream out = open_output(path);
        out << report_to_json(report) << '\n';
        finish_output(out, path);
    }
    const std::filesystem::path base(path);
    const std::filesystem::path dir = base.parent_path();
    const std::string stem = base.stem().string();
    for (const auto& result : report.results) {
        const std::string name = stem + "_cell" + std::to_string(result.cell_index) + "_" +
                                 method_name(result.method) + ".csv";
        write_histogram_csv((dir / name).string(), result.stats.histogram);
    }
}

void write_objective_csv(const std::string& path, const BreakEstimate& estimate) {
    std::ofstream out = open_output(path);
    out << "k,objective\n";
    for (const auto& point : estimate.objective)
        out << point.k << ',' << format_double(point.value) << '\n';
    finish_output(out, path);
}

void write_histogram_csv(const std::string& path, const std::map<int, int>& histogram) {
    std::ofstream out = open_output(path);
    out << "deviation,count\n";
    for (const auto& [dev, count] : histogram) out << dev << ',' << count << '\n';
    finish_output(out, path);
}

Eigen::MatrixXd parse_matrix_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParameterError("invalid matrix JSON: " + std::string(e.what()));
    }
    if (!j.is_array() || j.empty()) throw ParameterError("matrix JSON must be a nonempty array");
    const size_t rows = j.size();
    Eigen::MatrixXd m(rows, rows);
    for (size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != rows)
            throw ParameterError("matrix JSON must be square (row " + std::to_string(i) +
                                 " has " + std::to_string(j[i].size()) + " entries, expected " +
                                 std::to_string(rows) + ")");
        for (size_t k = 0; k < rows; ++k) {
            if (!j[i][k].is_number())
                throw ParameterError("matrix JSON entries must be numbers");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                j[i][k].get<double>();
        }
    }
    return m;
}

}  // namespace factorbreak
