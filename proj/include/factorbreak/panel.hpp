#pragma once

#include <Eigen/Dense>

namespace factorbreak {

// An observed panel: T time periods (rows) by N cross-section units (columns).
// Immutable after construction; the constructor enforces T >= 4, N >= 2 and
// that every entry is finite.
class PanelData {
public:
    explicit PanelData(Eigen::MatrixXd values);

    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::Index t_len() const { return values_.rows(); }
    Eigen::Index n_len() const { return values_.cols(); }

private:
    Eigen::MatrixXd values_;
};

// Full-sample principal-components fit.
//
// g_hat (T x r) holds the estimated factors: its columns are sqrt(T) times
// the top-r orthonormal eigenvectors of X X' / (N T), so (1/T) G'G = I_r.
// lambda_hat (N x r) = X'G / T.  v_nt holds the corresponding eigenvalues in
// descending order, and the fixed-point identity
//   (1/NT) X X' G = G diag(v_nt)
// holds to numerical accuracy.
struct PcaFit {
    Eigen::MatrixXd g_hat;
    Eigen::MatrixXd lambda_hat;
    Eigen::VectorXd v_nt;
    int r = 0;
    // Set when the spectral gap at the r-th eigenvalue is within tolerance
    // of zero: the fitted factor space is fine but individual columns are
    // rotationally indeterminate.
    bool rotation_warning = false;
};

// X X' / (N T), materialized.  Symmetric positive semidefinite by
// construction.
Eigen::MatrixXd gram_matrix(const PanelData& panel);

// Principal-components estimation of r factors.
//
// The eigendecomposition runs on the smaller Gram matrix (X X'/(NT) when
// T <= N, else X'X/(NT) with factors recovered from the loadings-side
// eigenvectors); both routes produce the same fit.  Column signs are fixed
// deterministically: each factor column is flipped so that its entry of
// largest absolute value is positive, earliest index winning ties.
//
// Throws ParameterError when r is out of [1, min(T, N)], NumericalError when
// the eigensolver fails or any selected eigenvalue falls below
// 1e-12 * (largest eigenvalue).
PcaFit estimate_pca(const PanelData& panel, int r);

}  // namespace factorbreak
