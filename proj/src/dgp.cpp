#include "factorbreak/dgp.hpp"

#include <cctype>
#include <cmath>

#include <Eigen/Cholesky>

#include "factorbreak/errors.hpp"

namespace factorbreak {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::OneA: return "1A";
        case Scenario::OneB: return "1B";
        case Scenario::OneC: return "1C";
        case Scenario::OneD: return "1D";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& name) {
    std::string u;
    for (char c : name) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (u == "1A" || u == "A") return Scenario::OneA;
    if (u == "1B" || u == "B") return Scenario::OneB;
    if (u == "1C" || u == "C") return Scenario::OneC;
    if (u == "1D" || u == "D") return Scenario::OneD;
    throw ParameterError("unknown scenario '" + name + "' (expected 1a, 1b, 1c, or 1d)");
}

void DgpConfig::validate() const {
    std::string problems;
    auto add = [&](const std::string& p) {
        if (!problems.empty()) problems += "; ";
        problems += p;
    };
    if (n_len < 2) add("n_len must be >= 2");
    if (t_len < 4) add("t_len must be >= 4");
    if (r0 < 1) add("r0 must be >= 1");
    if (!(k0 >= 1 && k0 < t_len)) add("k0 must satisfy 1 <= k0 < t_len");
    if (!(rho >= 0.0 && rho < 1.0)) add("rho must be in [0, 1)");
    if (!(alpha >= 0.0 && alpha < 1.0)) add("alpha must be in [0, 1)");
    if (!(beta >= 0.0 && beta < 1.0)) add("beta must be in [0, 1)");
    if (scenario == Scenario::OneC && !(m >= 0.0 && m <= 1.0))
        add("scenario 1C requires m in [0, 1]");
    if (!problems.empty()) throw ParameterError("invalid DGP config: " + problems);
}

Eigen::MatrixXd gen_factors(const DgpConfig& cfg, RngStream& rng) {
    cfg.validate();
    const int t_len = cfg.t_len;
    const int r0 = cfg.r0;
    const double rho = cfg.rho;
    Eigen::MatrixXd f(t_len, r0);
    const double init_sd = 1.0 / std::sqrt(1.0 - rho * rho);
    for (int p = 0; p < r0; ++p) f(0, p) = init_sd * rng.normal();
    for (int t = 1; t < t_len; ++t)
        for (int p = 0; p < r0; ++p) f(t, p) = rho * f(t - 1, p) + rng.normal();
    return f;
}

Eigen::MatrixXd toeplitz_omega(double beta, int n_len) {
    if (!(beta >= 0.0 && beta < 1.0)) throw ParameterError("beta must be in [0, 1)");
    if (n_len < 1) throw ParameterError("n_len must be >= 1");
    Eigen::MatrixXd omega(n_len, n_len);
    for (int i = 0; i < n_len; ++i)
        for (int j = 0; j < n_len; ++j) omega(i, j) = std::pow(beta, std::abs(i - j));
    return omega;
}

Eigen::MatrixXd gen_errors(const DgpConfig& cfg, RngStream& rng) {
    cfg.validate();
    const int t_len = cfg.t_len;
    const int n_len = cfg.n_len;
    const double alpha = cfg.alpha;
    const double beta = cfg.beta;

    // Lower Cholesky factor of the Toeplitz Omega; identity when beta = 0.
    Eigen::MatrixXd chol;
    const bool correlated = beta != 0.0;
    if (correlated) {
        Eigen::LLT<Eigen::MatrixXd> llt(toeplitz_omega(beta, n_len));
        if (llt.info() != Eigen::Success)
            throw NumericalError("Cholesky factorization of Omega failed (beta = " +
                                 std::to_string(beta) + ")");
        chol = llt.matrixL();
    }

    Eigen::MatrixXd e(t_len, n_len);
    Eigen::VectorXd z(n_len);
    auto draw_row = [&](Eigen::VectorXd& out) {
        for (int i = 0; i < n_len; ++i) z(i) = rng.normal();
        if (correlated)
            out.noalias() = chol * z;
        else
            out = z;
    };

    Eigen::VectorXd v(n_len);
    draw_row(v);
    e.row(0) = v.transpose() / std::sqrt(1.0 - alpha * alpha);
    for (int t = 1; t < t_len; ++t) {
        draw_row(v);
        e.row(t) = alpha * e.row(t - 1) + v.transpose();
    }
    return e;
}

LoadingSet gen_loadings(Scenario scenario, int r0, int n_len, RngStream& rng, double m) {
    if (n_len < 2) throw ParameterError("gen_loadings: n_len must be >= 2");
    if (scenario != Scenario::OneD && r0 != 3)
        throw ParameterError("scenario " + to_string(scenario) + " requires r0 = 3, got " +
                             std::to_string(r0));
    if (scenario == Scenario::OneD && r0 < 2)
        throw ParameterError("scenario 1D requires r0 >= 2, got " + std::to_string(r0));

    LoadingSet out;
    switch (scenario) {
        case Scenario::OneA: {
            // Lambda1 iid N(0, 1/r0^2); C kills the third factor.
            out.lambda1 = rng.normal_matrix(n_len, r0) / static_cast<double>(r0);
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
            c(0, 0) = 1.0;
            c(1, 1) = 1.0;
            out.lambda2 = out.lambda1 * c;
            out.c_matrix = c;
            out.r = 3;
            out.r1 = 3;
            out.r2 = 2;
            break;
        }
        case Scenario::OneB: {
            out.lambda1 = rng.normal_matrix(n_len, r0) / static_cast<double>(r0);
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
            c(0, 0) = 0.5;
            c(1, 1) = 1.5;
            c(2, 2) = 2.5;
            c(1, 0) = rng.normal();
            c(2, 0) = rng.normal();
            c(2, 1) = rng.normal();
            out.lambda2 = out.lambda1 * c;
            out.c_matrix = c;
            out.r = 3;
            out.r1 = 3;
            out.r2 = 3;
            break;
        }
        case Scenario::OneC: {
            if (!(m >= 0.0 && m <= 1.0))
                throw ParameterError("scenario 1C requires m in [0, 1], got " + std::to_string(m));
            out.lambda1 = rng.normal_matrix(n_len, r0) / static_cast<double>(r0);
            Eigen::MatrixXd c(3, 3);
            c << 1, 0, 0,
                 2, 1, 0,
                 3, 2, m;
            out.lambda2 = out.lambda1 * c;
            out.c_matrix = c;
            out.r = 3;
            out.r1 = 3;
            out.r2 = (m != 0.0) ? 3 : 2;
            break;
        }
        case Scenario::OneD: {
            // Independent regimes: r1 = r0-1 factors load before the break,
            // all r0 after it, with loading variances 1/r1 and 1/r2.
            const int r1 = r0 - 1;
            const int r2 = r0;
            const int r = r1 + r2;
            Eigen::MatrixXd theta1 =
                rng.normal_matrix(n_len, r1) / std::sqrt(static_cast<double>(r1));
            Eigen::MatrixXd theta2 =
                rng.normal_matrix(n_len, r2) / std::sqrt(static_cast<double>(r2));
            out.lambda1 = Eigen::MatrixXd::Zero(n_len, r);
            out.lambda1.leftCols(r1) = theta1;
            out.lambda2 = Eigen::MatrixXd::Zero(n_len, r);
            out.lambda2.rightCols(r2) = theta2;
            out.r = r;
            out.r1 = r1;
            out.r2 = r2;
            break;
        }
    }
    return out;
}

SimulatedPanel gen_panel(const DgpConfig& cfg) {
    cfg.validate();

    RngStream loadings_rng(derive_seed(cfg.seed, "loadings"));
    RngStream factors_rng(derive_seed(cfg.seed, "factors"));
    RngStream errors_rng(derive_seed(cfg.seed, "errors"));

    LoadingSet loadings = gen_loadings(cfg.scenario, cfg.r0, cfg.n_len, loadings_rng, cfg.m);
    Eigen::MatrixXd f = gen_factors(cfg, factors_rng);

    const int t_len = cfg.t_len;
    const int k0 = cfg.k0;

    Eigen::MatrixXd factor_panel;
    if (cfg.scenario == Scenario::OneD) {
        // Pseudo layout: real streams sit in columns 1..r1 before the break
        // and columns r1+1..r after it; the unused slots are filled with
        // independent AR(1) streams of the same law so every row of the
        // factor matrix has the same stationary variance.
        RngStream pads_rng(derive_seed(cfg.seed, "factor-pads"));
        DgpConfig pad_cfg = cfg;
        pad_cfg.r0 = loadings.r;
        Eigen::MatrixXd pads = gen_factors(pad_cfg, pads_rng);
        factor_panel = pads;
        factor_panel.topLeftCorner(k0, loadings.r1) = f.topLeftCorner(k0, loadings.r1);
        factor_panel.bottomRightCorner(t_len - k0, loadings.r2) =
            f.bottomRightCorner(t_len - k0, loadings.r2);
    } else {
        factor_panel = f;
    }

    Eigen::MatrixXd x(t_len, cfg.n_len);
    x.topRows(k0) = factor_panel.topRows(k0) * loadings.lambda1.transpose();
    x.bottomRows(t_len - k0) = factor_panel.bottomRows(t_len - k0) * loadings.lambda2.transpose();
    if (!cfg.zero_error) x += gen_errors(cfg, errors_rng);

    return SimulatedPanel{PanelData(std::move(x)),
                          std::move(factor_panel),
                          std::move(loadings.lambda1),
                          std::move(loadings.lambda2),
                          loadings.r,
                          loadings.r1,
                          loadings.r2,
                          k0,
                          cfg};
}

}  // namespace factorbreak
