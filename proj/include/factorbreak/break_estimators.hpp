#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "factorbreak/rng.hpp"

namespace factorbreak {

// Trimming fractions restricting the break search to [floor(tau1*T),
// floor(tau2*T)].  The 15%/85% defaults are the conventional change-point
// trimming choice.
struct SearchWindow {
    double tau1 = 0.15;
    double tau2 = 0.85;

    // Inclusive candidate range {k_lo, k_hi} for a sample of length t_len.
    // Throws ParameterError when the fractions are invalid or the resulting
    // range is empty or touches the sample edges.
    std::pair<int, int> k_range(int t_len) const;
};

// Cumulative second-moment sums S_k = sum_{t<=k} g_t g_t', k = 0..T.
// Precomputing these makes every split covariance an O(r^2) lookup, so the
// full objective sweep costs O(T r^2) rather than O(T^2 r^2).
struct PrefixMoments {
    std::vector<Eigen::MatrixXd> cumulative;  // size T+1, each r x r
    int r = 0;
    int t_len = 0;
};

enum class BreakMethod { Qml, Ls };

struct ObjectivePoint {
    int k = 0;
    double value = 0.0;
};

// Result of a break-date search: the argmin and the whole objective curve
// over the window.  Ties resolve to the smallest k.  floor_activations
// counts how many log-det evaluations hit the eigenvalue floor (always 0
// for the LS method).
struct BreakEstimate {
    int k_hat = 0;
    std::vector<ObjectivePoint> objective;
    BreakMethod method = BreakMethod::Qml;
    SearchWindow window;
    int floor_activations = 0;
};

// Population second moments of the rotated factors on both sides of the
// break, for sampling the limit distribution of k_hat - k0 under a
// rotational change.
struct LimitSpec {
    Eigen::MatrixXd sigma1;
    Eigen::MatrixXd sigma2;
    int r = 0;
};

// log det of a symmetric PSD matrix with per-eigenvalue flooring.
struct LogDetResult {
    double value = 0.0;
    bool floored = false;
};

// Default absolute eigenvalue floor for the QML objective.  Estimated split
// covariances have eigenvalues of order 1/N even on the singular side of a
// break, so the floor only engages on pathological (e.g. noiseless) inputs;
// activations are counted and surfaced on the estimate.
inline constexpr double kDefaultEigenFloor = 1e-12;

PrefixMoments prefix_moments(const Eigen::MatrixXd& g_hat);

// (Sigma1, Sigma2) = (S_k / k, (S_T - S_k) / (T - k)) for 1 <= k <= T-1.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> split_covariances(const PrefixMoments& pm, int k);

// value = sum_j ln(max(eig_j, floor)); floored reports whether any
// eigenvalue was clipped.  Throws ParameterError when m is asymmetric
// beyond 1e-8.
LogDetResult log_det_psd(const Eigen::MatrixXd& m, double floor);

// U(k) = k ln det(Sigma1_hat) + (T-k) ln det(Sigma2_hat).
double qml_objective(const PrefixMoments& pm, int k, double floor = kDefaultEigenFloor);

// QML break-date estimate: argmin of U(k) over the window.
BreakEstimate estimate_break_qml(const Eigen::MatrixXd& g_hat, const SearchWindow& window = {},
                                 double floor = kDefaultEigenFloor);

// Least-squares baseline on the vectorized second moments: splits the
// sequence vech(g_t g_t') at k and minimizes the total squared deviation
// from the per-segment means.
BreakEstimate estimate_break_ls(const Eigen::MatrixXd& g_hat, const SearchWindow& window = {});

// The two-sided limit process W evaluated at a single offset ell.
//
//   W(0) = 0
//   W(ell) = sum_{t=1..ell} tr((Sigma1^-1 - Sigma2^-1) xi_t)
//            + ell * (tr(Sigma1^-1 Sigma2) - r - ln det(Sigma1^-1 Sigma2))     ell >= 1
//   W(ell) = sum_{t=1..|ell|} tr((Sigma2^-1 - Sigma1^-1) xi_t)
//            + |ell| * (tr(Sigma1 Sigma2^-1) - r - ln det(Sigma1 Sigma2^-1))   ell <= -1
//
// xi supplies the centered second-moment innovations for the relevant side
// (post-break draws for positive ell, pre-break draws for negative ell) and
// must hold at least |ell| matrices.
double limit_w(int ell, const LimitSpec& spec, const std::vector<Eigen::MatrixXd>& xi);

// One sampled path of xi innovations, pre- and post-break sides.
struct XiPath {
    std::vector<Eigen::MatrixXd> pre;
    std::vector<Eigen::MatrixXd> post;
};

using XiSampler = std::function<XiPath(RngStream&, int ell_max)>;

// xi_t = z z' - Sigma_side with z ~ N(0, Sigma_side) iid: the innovation
// process of Gaussian factors with the spec's second moments.
XiSampler make_gaussian_xi_sampler(const LimitSpec& spec);

// Empirical distribution of argmin_ell W(ell) over ell in [-ell_max,
// ell_max]: the simulated limit law of k_hat - k0.  Ties pick the smallest
// ell.  Rejects Sigma1 = Sigma2 (no identified break).
std::map<int, int> simulate_limit_distribution(const LimitSpec& spec, const XiSampler& sampler,
                                               int ell_max, int n_draws, std::uint64_t seed);

}  // namespace factorbreak
