#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rough/nn/tensor.hpp"

namespace rough::nn {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Central finite differences over every parameter scalar, compared against
// the analytic gradients already sitting in the grad buffers. `loss` must be
// a pure forward evaluation of the same sample(s) the analytic pass used.
// Always run this with T = double: float step noise swamps the comparison.
//
// The relative-error denominator is floored so that dead units (both sides
// ~0) do not blow up the ratio; 1e-6 is far above the double-precision
// difference noise and far below any real gradient in these models.
template <class T, class LossFn>
GradCheckResult grad_check(const std::vector<Param<T>*>& params, LossFn loss, double eps = 1e-5) {
    GradCheckResult res;
    for (auto* p : params) {
        for (std::size_t j = 0; j < p->w.size(); ++j) {
            const T old = p->w.data[j];
            p->w.data[j] = old + static_cast<T>(eps);
            const double lp = static_cast<double>(loss());
            p->w.data[j] = old - static_cast<T>(eps);
            const double lm = static_cast<double>(loss());
            p->w.data[j] = old;
            const double numeric = (lp - lm) / (2.0 * eps);
            const double analytic = static_cast<double>(p->g.data[j]);
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            const double rel = std::abs(numeric - analytic) / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = p->name;
                res.worst_index = j;
                res.analytic = analytic;
                res.numeric = numeric;
            }
        }
    }
    return res;
}

}  // namespace rough::nn
