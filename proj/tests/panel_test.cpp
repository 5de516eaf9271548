#include <doctest.h>

#include <cmath>

#include "factorbreak/errors.hpp"
#include "factorbreak/panel.hpp"
#include "test_util.hpp"

using namespace factorbreak;
using test_util::random_matrix;

TEST_CASE("panel constructor rejects undersized and non-finite input") {
    CHECK_THROWS_AS((PanelData(Eigen::MatrixXd::Zero(3, 5))), ParameterError);
    CHECK_THROWS_AS((PanelData(Eigen::MatrixXd::Zero(5, 1))), ParameterError);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(5, 3);
    bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((PanelData(bad)), ParameterError);
    bad(2, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS((PanelData(bad)), ParameterError);
}

TEST_CASE("gram matrix of the zero panel is zero") {
    const PanelData panel(Eigen::MatrixXd::Zero(6, 4));
    CHECK(gram_matrix(panel).isZero(0.0));
}

TEST_CASE("gram matrix of the identity panel is a scaled identity") {
    const int n = 4;
    const PanelData panel(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd expected =
        Eigen::MatrixXd::Identity(n, n) / static_cast<double>(n * n);
    CHECK((gram_matrix(panel) - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("gram matrix matches a scalar-loop recomputation") {
    const PanelData panel(random_matrix(5, 3, 101));
    const Eigen::MatrixXd g = gram_matrix(panel);
    const auto& x = panel.values();
    for (int s = 0; s < 5; ++s) {
        for (int t = 0; t < 5; ++t) {
            double acc = 0.0;
            for (int i = 0; i < 3; ++i) acc += x(s, i) * x(t, i);
            acc /= 5.0 * 3.0;
            CHECK(g(s, t) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("noiseless rank-1 panel identifies the factor up to sign and scale") {
    RngStream rng(7);
    const Eigen::VectorXd f = rng.normal_matrix(50, 1);
    const Eigen::VectorXd lambda = rng.normal_matrix(20, 1);
    const PanelData panel(f * lambda.transpose());
    const PcaFit fit = estimate_pca(panel, 1);
    CHECK(std::abs(test_util::pearson(fit.g_hat.col(0), f)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("estimated factors are orthonormal after scaling by 1/T") {
    const PanelData panel(random_matrix(30, 12, 55));
    const PcaFit fit = estimate_pca(panel, 2);
    const Eigen::MatrixXd gtg = fit.g_hat.transpose() * fit.g_hat / 30.0;
    CHECK((gtg - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("small panel matches a direct eigendecomposition of the explicit gram matrix") {
    // T = 6 > N = 4 sends the implementation down the loadings-side route;
    // the oracle decomposes the 6x6 time-side matrix directly.
    const PanelData panel(random_matrix(6, 4, 202));
    const PcaFit fit = estimate_pca(panel, 2);

    Eigen::MatrixXd gram(6, 6);
    const auto& x = panel.values();
    for (int s = 0; s < 6; ++s)
        for (int t = 0; t < 6; ++t) {
            double acc = 0.0;
            for (int i = 0; i < 4; ++i) acc += x(s, i) * x(t, i);
            gram(s, t) = acc / (6.0 * 4.0);
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    for (int j = 0; j < 2; ++j) {
        const Eigen::VectorXd expected = std::sqrt(6.0) * solver.eigenvectors().col(5 - j);
        const double same = (fit.g_hat.col(j) - expected).norm();
        const double flipped = (fit.g_hat.col(j) + expected).norm();
        CHECK(std::min(same, flipped) <= 1e-8);
        CHECK(fit.v_nt(j) == doctest::Approx(solver.eigenvalues()(5 - j)).epsilon(1e-10));
    }
}

TEST_CASE("fixed point identity holds on both gram routes") {
    for (auto [t_len, n_len] : {std::pair{8, 3}, std::pair{5, 9}, std::pair{20, 20}}) {
        const PanelData panel(random_matrix(t_len, n_len, 17 + t_len));
        const int r = 2;
        const PcaFit fit = estimate_pca(panel, r);
        const Eigen::MatrixXd lhs = gram_matrix(panel) * fit.g_hat;
        const Eigen::MatrixXd rhs = fit.g_hat * fit.v_nt.asDiagonal();
        CHECK((lhs - rhs).norm() / rhs.norm() <= 1e-6);
        CHECK(fit.v_nt(0) > fit.v_nt(1));
        CHECK(fit.v_nt(r - 1) > 0.0);
        const Eigen::MatrixXd lam = panel.values().transpose() * fit.g_hat / t_len;
        CHECK((lam - fit.lambda_hat).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("scaling the panel rescales eigenvalues and keeps factors fixed") {
    const Eigen::MatrixXd base = random_matrix(14, 9, 31);
    const PcaFit fit1 = estimate_pca(PanelData(base), 3);
    const PcaFit fit2 = estimate_pca(PanelData(2.5 * base), 3);
    CHECK((fit1.g_hat - fit2.g_hat).cwiseAbs().maxCoeff() <= 1e-8);
    for (int j = 0; j < 3; ++j)
        CHECK(fit2.v_nt(j) == doctest::Approx(6.25 * fit1.v_nt(j)).epsilon(1e-10));
}

TEST_CASE("sign convention puts the largest-magnitude entry positive") {
    const PanelData panel(random_matrix(12, 7, 77));
    const PcaFit fit = estimate_pca(panel, 3);
    for (int j = 0; j < 3; ++j) {
        Eigen::Index arg = 0;
        fit.g_hat.col(j).cwiseAbs().maxCoeff(&arg);
        CHECK(fit.g_hat(arg, j) > 0.0);
    }
}

TEST_CASE("r out of range is a parameter error") {
    const PanelData panel(random_matrix(6, 4, 5));
    CHECK_THROWS_AS(estimate_pca(panel, 0), ParameterError);
    CHECK_THROWS_AS(estimate_pca(panel, 5), ParameterError);
}

TEST_CASE("numerically dead eigenvalues in the top-r set are rejected") {
    RngStream rng(13);
    const Eigen::VectorXd f = rng.normal_matrix(30, 1);
    const Eigen::VectorXd lambda = rng.normal_matrix(10, 1);
    const PanelData panel(f * lambda.transpose());  // exact rank 1
    CHECK_THROWS_AS(estimate_pca(panel, 2), NumericalError);
}

TEST_CASE("near-multiplicity at the r-th eigenvalue sets the rotation warning") {
    // Two equal-strength orthogonal square waves tie the top eigenvalues.
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(8, 4);
    for (int t = 0; t < 8; ++t) {
        x(t, 0) = (t % 2 == 0) ? 1.0 : -1.0;
        x(t, 1) = (t % 4 < 2) ? 1.0 : -1.0;
    }
    const PcaFit fit = estimate_pca(PanelData(x), 1);
    CHECK(fit.rotation_warning);
    const PcaFit generic = estimate_pca(PanelData(random_matrix(12, 8, 91)), 2);
    CHECK_FALSE(generic.rotation_warning);
}
