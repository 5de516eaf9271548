#include "factorbreak/factor_count.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "factorbreak/errors.hpp"

namespace factorbreak {

namespace {
constexpr double kResidualFloor = 1e-300;
}

int argmin_index(const std::vector<double>& values) {
    if (values.empty()) throw ParameterError("argmin of an empty sequence");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

int default_r_max(const PanelData& panel) {
    const int cap = static_cast<int>(std::min(panel.n_len(), panel.t_len()) / 4);
    return std::max(1, std::min(8, cap));
}

IcResult select_r(const PanelData& panel, int r_max, IcVariant variant) {
    const auto t_len = static_cast<double>(panel.t_len());
    const auto n_len = static_cast<double>(panel.n_len());
    const int cap = static_cast<int>(std::min(panel.t_len(), panel.n_len())) - 1;
    if (r_max < 1 || r_max > cap)
        throw ParameterError("r_max = " + std::to_string(r_max) + " out of range [1, " +
                             std::to_string(cap) + "]");

    // One eigendecomposition of the smaller Gram matrix, then the residual
    // for each r by deflating one principal component at a time.  Deflation
    // measures the residual directly, so V(r) keeps full relative accuracy
    // even when it is orders of magnitude below ||X||^2 (a noiseless
    // low-rank panel); the algebraically equivalent ||X||^2 minus the top-r
    // eigenvalues would drown those digits in cancellation.
    const Eigen::MatrixXd& x = panel.values();
    const double scale = 1.0 / (n_len * t_len);
    const bool time_side = panel.t_len() <= panel.n_len();
    Eigen::MatrixXd gram = time_side ? Eigen::MatrixXd(x * x.transpose() * scale)
                                     : Eigen::MatrixXd(x.transpose() * x * scale);
    gram = 0.5 * (gram + gram.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed in select_r");

    const double nt = n_len * t_len;
    const double penalty_unit = (variant == IcVariant::Ic1)
                                    ? ((n_len + t_len) / nt) * std::log(nt / (n_len + t_len))
                                    : ((n_len + t_len) / nt) * std::log(std::min(n_len, t_len));

    IcResult result;
    result.variant = variant;
    result.criterion_values.resize(r_max);
    const Eigen::Index dim = gram.rows();
    Eigen::MatrixXd residual = x;
    for (int r = 1; r <= r_max; ++r) {
        const Eigen::VectorXd basis = solver.eigenvectors().col(dim - r);
        if (time_side)
            residual.noalias() -= basis * (basis.transpose() * x);
        else
            residual.noalias() -= (x * basis) * basis.transpose();
        const double v_r = std::max(residual.squaredNorm() * scale, kResidualFloor);
        result.criterion_values[r - 1] = std::log(v_r) + r * penalty_unit;
    }
    result.r_hat = argmin_index(result.criterion_values) + 1;
    return result;
}

}  // namespace factorbreak
