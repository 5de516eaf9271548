#include "factorbreak/panel.hpp"

#include <cmath>
#include <string>

#include "factorbreak/errors.hpp"

namespace factorbreak {

namespace {

constexpr double kEigenvalueFloorRel = 1e-12;  // relative to the top eigenvalue
constexpr double kDegenerateGapRel = 1e-10;    // spectral-gap warning threshold

// Flip each column so its largest-magnitude entry is positive; the earliest
// such entry decides when magnitudes tie.
void fix_column_signs(Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double a = std::abs(m(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (m(arg, j) < 0.0) m.col(j) = -m.col(j);
    }
}

}  // namespace

PanelData::PanelData(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() < 4 || values_.cols() < 2)
        throw ParameterError("panel must have T >= 4 rows and N >= 2 columns, got " +
                             std::to_string(values_.rows()) + "x" +
                             std::to_string(values_.cols()));
    if (!values_.allFinite())
        throw ParameterError("panel contains NaN or Inf entries");
}

Eigen::MatrixXd gram_matrix(const PanelData& panel) {
    const double scale = 1.0 / (static_cast<double>(panel.n_len()) *
                                static_cast<double>(panel.t_len()));
    Eigen::MatrixXd g = panel.values() * panel.values().transpose() * scale;
    // Symmetrize away the last-ulp asymmetry of the matrix product.
    return 0.5 * (g + g.transpose());
}

PcaFit estimate_pca(const PanelData& panel, int r) {
    const Eigen::Index t_len = panel.t_len();
    const Eigen::Index n_len = panel.n_len();
    const Eigen::Index max_r = std::min(t_len, n_len);
    if (r < 1 || r > max_r)
        throw ParameterError("factor count r = " + std::to_string(r) +
                             " out of range [1, " + std::to_string(max_r) + "]");

    const Eigen::MatrixXd& x = panel.values();
    const double scale = 1.0 / (static_cast<double>(n_len) * static_cast<double>(t_len));

    // Eigendecompose whichever Gram matrix is smaller; both share the
    // nonzero spectrum of X X'/(NT).
    const bool time_side = t_len <= n_len;
    Eigen::MatrixXd gram = time_side ? Eigen::MatrixXd(x * x.transpose() * scale)
                                     : Eigen::MatrixXd(x.transpose() * x * scale);
    gram = 0.5 * (gram + gram.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigendecomposition of the Gram matrix did not converge");

    const Eigen::Index dim = gram.rows();
    // Eigen returns eigenvalues in ascending order; we want the top r.
    Eigen::VectorXd v_nt(r);
    Eigen::MatrixXd vecs(dim, r);
    for (int j = 0; j < r; ++j) {
        v_nt(j) = solver.eigenvalues()(dim - 1 - j);
        vecs.col(j) = solver.eigenvectors().col(dim - 1 - j);
    }

    const double top = v_nt(0);
    for (int j = 0; j < r; ++j) {
        if (!(v_nt(j) > kEigenvalueFloorRel * top))
            throw NumericalError(
                "eigenvalue " + std::to_string(j + 1) + " of the Gram matrix is below " +
                "1e-12 of the largest; the requested r = " + std::to_string(r) +
                " factors are numerically unidentified");
    }

    PcaFit fit;
    fit.r = r;
    fit.v_nt = v_nt;

    if (time_side) {
        fit.g_hat = std::sqrt(static_cast<double>(t_len)) * vecs;
    } else {
        // Loadings-side eigenvectors w_j map to factor-side ones via
        // u_j = X w_j / sqrt(NT v_j); then G = sqrt(T) U.
        fit.g_hat.resize(t_len, r);
        const double nt = static_cast<double>(n_len) * static_cast<double>(t_len);
        for (int j = 0; j < r; ++j)
            fit.g_hat.col(j) = (x * vecs.col(j)) *
                               (std::sqrt(static_cast<double>(t_len)) / std::sqrt(nt * v_nt(j)));
    }
    fix_column_signs(fit.g_hat);
    fit.lambda_hat = x.transpose() * fit.g_hat / static_cast<double>(t_len);

    // Spectral-gap check at the r-th position needs the (r+1)-th eigenvalue.
    if (r < dim) {
        const double next = solver.eigenvalues()(dim - 1 - r);
        if (v_nt(r - 1) - next <= kDegenerateGapRel * top) fit.rotation_warning = true;
    }
    for (int j = 0; j + 1 < r; ++j)
        if (v_nt(j) - v_nt(j + 1) <= kDegenerateGapRel * top) fit.rotation_warning = true;

    return fit;
}

}  // namespace factorbreak
