#pragma once
// Central finite-difference gradient checking.
//
// `loss` must be a pure function of the parameter list. Every analytic
// gradient entry is compared against (loss(p+h) - loss(p-h)) / 2h with
// relative error |a - f| / max(1, |a|, |f|). The losses under test are
// piecewise linear or smooth, so 1e-5 steps leave only roundoff.

#include <functional>
#include <vector>

#include "kgalign/common.hpp"

namespace kgalign::testing {

struct GradCheckReport {
    double max_rel_err = 0.0;
    int checked = 0;
};

inline GradCheckReport check_gradients(
    const std::function<double(const std::vector<Mat>&)>& loss, std::vector<Mat> params,
    const std::vector<Mat>& analytic, double step = 1e-5) {
    GradCheckReport report;
    for (size_t p = 0; p < params.size(); ++p) {
        for (Eigen::Index i = 0; i < params[p].rows(); ++i) {
            for (Eigen::Index j = 0; j < params[p].cols(); ++j) {
                double saved = params[p](i, j);
                params[p](i, j) = saved + step;
                double up = loss(params);
                params[p](i, j) = saved - step;
                double down = loss(params);
                params[p](i, j) = saved;
                double fd = (up - down) / (2.0 * step);
                double a = analytic[p](i, j);
                double rel = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
                report.max_rel_err = std::max(report.max_rel_err, rel);
                ++report.checked;
            }
        }
    }
    return report;
}

}  // namespace kgalign::testing
