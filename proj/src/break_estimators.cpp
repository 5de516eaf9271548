#include "factorbreak/break_estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "factorbreak/errors.hpp"

namespace factorbreak {

namespace {

void check_symmetric(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols())
        throw ParameterError(std::string(what) + " must be square, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw ParameterError(std::string(what) + " is asymmetric beyond tolerance");
}

// ln det for a symmetric positive definite matrix; ParameterError otherwise.
double log_det_pd(const Eigen::MatrixXd& m, const char* what) {
    check_symmetric(m, what);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw ParameterError(std::string(what) + " must be positive definite");
    double ld = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        ld += 2.0 * std::log(llt.matrixL()(i, i));
    return ld;
}

void validate_limit_spec(const LimitSpec& spec) {
    if (spec.r < 1 || spec.sigma1.rows() != spec.r || spec.sigma2.rows() != spec.r)
        throw ParameterError("limit spec dimensions do not match r");
    log_det_pd(spec.sigma1, "sigma1");
    log_det_pd(spec.sigma2, "sigma2");
}

struct ObjectiveTerm {
    double value = 0.0;
    int floored = 0;
};

ObjectiveTerm qml_objective_counted(const PrefixMoments& pm, int k, double floor) {
    auto [sigma1, sigma2] = split_covariances(pm, k);
    const LogDetResult a = log_det_psd(sigma1, floor);
    const LogDetResult b = log_det_psd(sigma2, floor);
    return {static_cast<double>(k) * a.value + static_cast<double>(pm.t_len - k) * b.value,
            (a.floored ? 1 : 0) + (b.floored ? 1 : 0)};
}

// Half-vectorization of the symmetric g g' without forming the outer product.
void vech_outer(const Eigen::VectorXd& g, Eigen::VectorXd& out) {
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        for (Eigen::Index j = i; j < g.size(); ++j) out(idx++) = g(i) * g(j);
}

}  // namespace

std::pair<int, int> SearchWindow::k_range(int t_len) const {
    if (!(tau1 > 0.0 && tau1 < tau2 && tau2 < 1.0))
        throw ParameterError("search window requires 0 < tau1 < tau2 < 1, got tau1 = " +
                             std::to_string(tau1) + ", tau2 = " + std::to_string(tau2));
    const int k_lo = static_cast<int>(std::floor(tau1 * t_len));
    const int k_hi = static_cast<int>(std::floor(tau2 * t_len));
    if (k_lo < 1 || k_hi > t_len - 1 || k_lo > k_hi)
        throw ParameterError("search window [" + std::to_string(k_lo) + ", " +
                             std::to_string(k_hi) + "] is infeasible for T = " +
                             std::to_string(t_len));
    return {k_lo, k_hi};
}

PrefixMoments prefix_moments(const Eigen::MatrixXd& g_hat) {
    if (!g_hat.allFinite()) throw ParameterError("factor matrix contains NaN or Inf");
    const int t_len = static_cast<int>(g_hat.rows());
    const int r = static_cast<int>(g_hat.cols());
    if (t_len < 1 || r < 1) throw ParameterError("factor matrix is empty");

    PrefixMoments pm;
    pm.r = r;
    pm.t_len = t_len;
    pm.cumulative.reserve(t_len + 1);
    pm.cumulative.emplace_back(Eigen::MatrixXd::Zero(r, r));
    Eigen::MatrixXd running = Eigen::MatrixXd::Zero(r, r);
    for (int t = 0; t < t_len; ++t) {
        running.selfadjointView<Eigen::Lower>().rankUpdate(g_hat.row(t).transpose());
        Eigen::MatrixXd sym = running.selfadjointView<Eigen::Lower>();
        pm.cumulative.push_back(std::move(sym));
    }
    return pm;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split_covariances(const PrefixMoments& pm, int k) {
    if (k < 1 || k > pm.t_len - 1)
        throw ParameterError("split index k = " + std::to_string(k) +
                             " out of range [1, " + std::to_string(pm.t_len - 1) + "]");
    const Eigen::MatrixXd& s_k = pm.cumulative[static_cast<size_t>(k)];
    const Eigen::MatrixXd& s_t = pm.cumulative.back();
    return {s_k / static_cast<double>(k), (s_t - s_k) / static_cast<double>(pm.t_len - k)};
}

LogDetResult log_det_psd(const Eigen::MatrixXd& m, double floor) {
    if (!(floor > 0.0)) throw ParameterError("eigenvalue floor must be positive");
    check_symmetric(m, "log_det_psd input");
    // A symmetric eigensolve rather than Cholesky: near-singular split
    // covariances are expected under singular breaks, and the individual
    // eigenvalues are what the floor applies to.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed in log_det_psd");
    LogDetResult out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double ev = solver.eigenvalues()(i);
        if (ev < floor) {
            ev = floor;
            out.floored = true;
        }
        out.value += std::log(ev);
    }
    return out;
}

double qml_objective(const PrefixMoments& pm, int k, double floor) {
    return qml_objective_counted(pm, k, floor).value;
}

BreakEstimate estimate_break_qml(const Eigen::MatrixXd& g_hat, const SearchWindow& window,
                                 double floor) {
    const PrefixMoments pm = prefix_moments(g_hat);
    const auto [k_lo, k_hi] = window.k_range(pm.t_len);

    BreakEstimate est;
    est.method = BreakMethod::Qml;
    est.window = window;
    est.objective.reserve(k_hi - k_lo + 1);

    double best = std::numeric_limits<double>::infinity();
    for (int k = k_lo; k <= k_hi; ++k) {
        const ObjectiveTerm term = qml_objective_counted(pm, k, floor);
        est.floor_activations += term.floored;
        est.objective.push_back({k, term.value});
        if (term.value < best) {
            best = term.value;
            est.k_hat = k;
        }
    }
    return est;
}

BreakEstimate estimate_break_ls(const Eigen::MatrixXd& g_hat, const SearchWindow& window) {
    if (!g_hat.allFinite()) throw ParameterError("factor matrix contains NaN or Inf");
    const int t_len = static_cast<int>(g_hat.rows());
    const int r = static_cast<int>(g_hat.cols());
    if (t_len < 2 || r < 1) throw ParameterError("factor matrix is empty");
    const auto [k_lo, k_hi] = window.k_range(t_len);

    // Prefix sums of y_t = vech(g_t g_t') turn the split-mean residual into
    //   SSR(k) = sum_t ||y_t||^2 - ||S_k||^2/k - ||S_T - S_k||^2/(T-k).
    const int d = r * (r + 1) / 2;
    std::vector<Eigen::VectorXd> prefix(static_cast<size_t>(t_len) + 1,
                                        Eigen::VectorXd::Zero(d));
    double total_sq = 0.0;
    Eigen::VectorXd y(d);
    for (int t = 0; t < t_len; ++t) {
        vech_outer(g_hat.row(t).transpose(), y);
        prefix[static_cast<size_t>(t) + 1] = prefix[static_cast<size_t>(t)] + y;
        total_sq += y.squaredNorm();
    }
    const Eigen::VectorXd& s_total = prefix.back();

    BreakEstimate est;
    est.method = BreakMethod::Ls;
    est.window = window;
    est.objective.reserve(k_hi - k_lo + 1);

    double best = std::numeric_limits<double>::infinity();
    for (int k = k_lo; k <= k_hi; ++k) {
        const Eigen::VectorXd& s_k = prefix[static_cast<size_t>(k)];
        const double ssr = total_sq - s_k.squaredNorm() / k -
                           (s_total - s_k).squaredNorm() / (t_len - k);
        est.objective.push_back({k, ssr});
        if (ssr < best) {
            best = ssr;
            est.k_hat = k;
        }
    }
    return est;
}

double limit_w(int ell, const LimitSpec& spec, const std::vector<Eigen::MatrixXd>& xi) {
    validate_limit_spec(spec);
    if (ell == 0) return 0.0;
    const int steps = std::abs(ell);
    if (static_cast<int>(xi.size()) < steps)
        throw ParameterError("limit_w needs at least |ell| = " + std::to_string(steps) +
                             " xi draws, got " + std::to_string(xi.size()));

    const Eigen::MatrixXd inv1 = spec.sigma1.llt().solve(Eigen::MatrixXd::Identity(spec.r, spec.r));
    const Eigen::MatrixXd inv2 = spec.sigma2.llt().solve(Eigen::MatrixXd::Identity(spec.r, spec.r));
    const double log_det_ratio =
        log_det_pd(spec.sigma2, "sigma2") - log_det_pd(spec.sigma1, "sigma1");

    Eigen::MatrixXd trace_coeff;
    double drift = 0.0;
    if (ell > 0) {
        trace_coeff = inv1 - inv2;
        drift = (inv1 * spec.sigma2).trace() - spec.r - log_det_ratio;
    } else {
        trace_coeff = inv2 - inv1;
        drift = (inv2 * spec.sigma1).trace() - spec.r + log_det_ratio;
    }

    double w = static_cast<double>(steps) * drift;
    for (int i = 0; i < steps; ++i) {
        const Eigen::MatrixXd& x = xi[static_cast<size_t>(i)];
        if (x.rows() != spec.r || x.cols() != spec.r)
            throw ParameterError("xi draw has wrong dimensions");
        w += (trace_coeff * x).trace();
    }
    return w;
}

XiSampler make_gaussian_xi_sampler(const LimitSpec& spec) {
    validate_limit_spec(spec);
    const Eigen::MatrixXd chol1 = Eigen::LLT<Eigen::MatrixXd>(spec.sigma1).matrixL();
    const Eigen::MatrixXd chol2 = Eigen::LLT<Eigen::MatrixXd>(spec.sigma2).matrixL();
    const int r = spec.r;
    return [chol1, chol2, sigma1 = spec.sigma1, sigma2 = spec.sigma2, r](
               RngStream& rng, int ell_max) {
        XiPath path;
        path.pre.reserve(ell_max);
        path.post.reserve(ell_max);
        Eigen::VectorXd z(r);
        for (int i = 0; i < ell_max; ++i) {
            for (int j = 0; j < r; ++j) z(j) = rng.normal();
            const Eigen::VectorXd g = chol1 * z;
            path.pre.emplace_back(g * g.transpose() - sigma1);
        }
        for (int i = 0; i < ell_max; ++i) {
            for (int j = 0; j < r; ++j) z(j) = rng.normal();
            const Eigen::VectorXd g = chol2 * z;
            path.post.emplace_back(g * g.transpose() - sigma2);
        }
        return path;
    };
}

std::map<int, int> simulate_limit_distribution(const LimitSpec& spec, const XiSampler& sampler,
                                               int ell_max, int n_draws, std::uint64_t seed) {
    validate_limit_spec(spec);
    if (ell_max < 1) throw ParameterError("ell_max must be >= 1");
    if (n_draws < 1) throw ParameterError("n_draws must be >= 1");
    const double diff = (spec.sigma1 - spec.sigma2).norm();
    if (diff <= 1e-12 * std::max(1.0, spec.sigma1.norm()))
        throw ParameterError("sigma1 = sigma2: the break is unidentified and argmin W degenerates");

    const Eigen::MatrixXd inv1 = spec.sigma1.llt().solve(Eigen::MatrixXd::Identity(spec.r, spec.r));
    const Eigen::MatrixXd inv2 = spec.sigma2.llt().solve(Eigen::MatrixXd::Identity(spec.r, spec.r));
    const double log_det_ratio =
        log_det_pd(spec.sigma2, "sigma2") - log_det_pd(spec.sigma1, "sigma1");
    const double drift_pos = (inv1 * spec.sigma2).trace() - spec.r - log_det_ratio;
    const double drift_neg = (inv2 * spec.sigma1).trace() - spec.r + log_det_ratio;
    const Eigen::MatrixXd coeff_pos = inv1 - inv2;

    std::map<int, int> histogram;
    for (int d = 0; d < n_draws; ++d) {
        RngStream rng(derive_seed(seed, "limit-draw", static_cast<std::uint64_t>(d)));
        const XiPath path = sampler(rng, ell_max);
        if (static_cast<int>(path.pre.size()) < ell_max ||
            static_cast<int>(path.post.size()) < ell_max)
            throw ParameterError("xi sampler returned fewer than ell_max draws");

        // Running sums give the whole W path in O(ell_max) per side.
        int best_ell = 0;
        double best_w = 0.0;  // W(0) = 0
        double acc = 0.0;
        for (int ell = -1; ell >= -ell_max; --ell) {
            acc += (-coeff_pos * path.pre[static_cast<size_t>(-ell - 1)]).trace();
            const double w = acc + static_cast<double>(-ell) * drift_neg;
            if (w < best_w || (w == best_w && ell < best_ell)) {
                best_w = w;
                best_ell = ell;
            }
        }
        acc = 0.0;
        for (int ell = 1; ell <= ell_max; ++ell) {
            acc += (coeff_pos * path.post[static_cast<size_t>(ell - 1)]).trace();
            const double w = acc + static_cast<double>(ell) * drift_pos;
            if (w < best_w || (w == best_w && ell < best_ell)) {
                best_w = w;
                best_ell = ell;
            }
        }
        ++histogram[best_ell];
    }
    return histogram;
}

}  // namespace factorbreak
