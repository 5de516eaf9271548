#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "factorbreak/panel.hpp"
#include "factorbreak/rng.hpp"

namespace factorbreak {

// The four loading-break constructions used by the simulation designs.
//
//   OneA  post-break loadings Lambda1 * C with singular C (a factor
//         disappears); pseudo-factor count r = 3.
//   OneB  C of full rank, lower triangular with diagonal (0.5, 1.5, 2.5)
//         and random strict-lower entries (a rotational change); r = 3.
//   OneC  C = [1,0,0; 2,1,0; 3,2,m]; m sweeps the break from rotational
//         (m = 1) to singular (m = 0); r = 3.
//   OneD  independent pre/post loadings with r1 = 2 and r2 = 3 original
//         factors, giving r = 5 pseudo-factors and singular covariances on
//         both sides.
enum class Scenario { OneA, OneB, OneC, OneD };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

// Complete parameterization of one simulated panel.
struct DgpConfig {
    int n_len = 100;       // cross-section size N
    int t_len = 100;       // time length T
    int r0 = 3;            // original factor count
    int k0 = 50;           // true break date (last period of regime 1)
    double rho = 0.0;      // factor AR(1) coefficient
    double alpha = 0.0;    // error AR(1) coefficient
    double beta = 0.0;     // cross-sectional error correlation decay
    Scenario scenario = Scenario::OneA;
    double m = 1.0;        // OneC only: the (3,3) entry of C
    std::uint64_t seed = 0;
    bool zero_error = false;  // test hook: skip the idiosyncratic errors

    void validate() const;  // throws ParameterError listing every violation
};

// Loadings for one scenario, in the pseudo-factor layout.
//
// lambda1/lambda2 are N x r; for OneD that means [Theta1, 0] and
// [0, Theta2] with r = 5.  c_matrix holds the explicit C when the scenario
// defines one (OneA/OneB/OneC).
struct LoadingSet {
    Eigen::MatrixXd lambda1;
    Eigen::MatrixXd lambda2;
    int r = 0;   // pseudo-factor count
    int r1 = 0;  // pre-break original factor count, rank(B)
    int r2 = 0;  // post-break original factor count, rank(C)
    std::optional<Eigen::MatrixXd> c_matrix;
};

// One simulated panel plus the ground truth that produced it.
//
// factors is T x r_pseudo in the same layout as the loadings, so
//   panel = [factors(1:k0) * lambda1'; factors(k0+1:T) * lambda2'] + E
// holds exactly.  For OneA-OneC this is just the original T x 3 factor
// matrix; for OneD the real factor streams occupy columns 1-2 before the
// break and columns 3-5 after it, and the remaining slots are padded with
// independent AR(1) streams of the same law (they multiply zero loading
// blocks, so the panel never sees them).
struct SimulatedPanel {
    PanelData panel;
    Eigen::MatrixXd factors;
    Eigen::MatrixXd lambda1;
    Eigen::MatrixXd lambda2;
    int r_pseudo = 0;
    int r1 = 0;
    int r2 = 0;
    int k0 = 0;
    DgpConfig config;
};

// T x r0 factor matrix: row 1 from the stationary N(0, I/(1-rho^2)), rows
// 2..T via f_t = rho f_{t-1} + u_t with standard normal innovations.
Eigen::MatrixXd gen_factors(const DgpConfig& cfg, RngStream& rng);

// The Kac-Murdock-Szego correlation matrix Omega_ij = beta^|i-j|; positive
// definite for every beta in [0, 1).
Eigen::MatrixXd toeplitz_omega(double beta, int n_len);

// T x N idiosyncratic errors: v_t iid N(0, Omega) with Omega_ij =
// beta^|i-j| drawn through the lower Cholesky factor of Omega; e_1 from the
// stationary N(0, Omega/(1-alpha^2)); rows 2..T via the AR(1) recursion.
Eigen::MatrixXd gen_errors(const DgpConfig& cfg, RngStream& rng);

// Scenario loading construction; see LoadingSet.  OneA-OneC require r0 = 3.
// OneD accepts any r0 >= 2, generalized as r1 = r0-1 pre-break factors with
// loading variance 1/r1 and r2 = r0 post-break factors with variance 1/r2
// (the r0 = 3 case matches the variances 1/2 and 1/3 exactly).
LoadingSet gen_loadings(Scenario scenario, int r0, int n_len, RngStream& rng,
                        double m = 1.0);

// Assembles a full panel.  Factors, errors, loadings, and OneD pad streams
// are drawn from disjoint sub-streams of cfg.seed, so e.g. changing alpha
// or beta leaves the factor draws untouched.
SimulatedPanel gen_panel(const DgpConfig& cfg);

}  // namespace factorbreak
