#pragma once

#include <vector>

#include "factorbreak/panel.hpp"

namespace factorbreak {

enum class IcVariant { Ic1, Ic2 };

// Information-criterion selection of the factor count.
struct IcResult {
    int r_hat = 0;
    std::vector<double> criterion_values;  // index j is the value at r = j+1
    IcVariant variant = IcVariant::Ic1;
};

// Index of the smallest element; the first one wins ties.
int argmin_index(const std::vector<double>& values);

// Default search cap: min(8, min(N, T) / 4), at least 1.
int default_r_max(const PanelData& panel);

// Selects r over 1..r_max by minimizing
//   IC1(r) = ln V(r) + r * ((N+T)/(NT)) * ln(NT/(N+T))
//   IC2(r) = ln V(r) + r * ((N+T)/(NT)) * ln(min(N,T))
// where V(r) = (1/NT) sum_t ||x_t - Lambda g_t||^2 is the residual variance
// of the r-factor fit.  V(r) is floored at 1e-300 before the log so that
// noiseless low-rank panels remain selectable.
IcResult select_r(const PanelData& panel, int r_max, IcVariant variant = IcVariant::Ic1);

}  // namespace factorbreak
