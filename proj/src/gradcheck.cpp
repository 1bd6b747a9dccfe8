#include "dropfilter/gradcheck.hpp"

#include <cmath>
#include <string>

#include "dropfilter/errors.hpp"

namespace dropfilter {

double finite_diff_check(const std::function<double(const std::vector<double>&)>& loss,
                         const std::vector<double>& params,
                         const std::vector<double>& analytic_grad, double eps) {
    if (eps <= 0.0) throw ValueError("finite_diff_check eps must be positive");
    if (params.size() != analytic_grad.size()) {
        throw ShapeError("finite_diff_check: params and analytic_grad sizes differ (" +
                         std::to_string(params.size()) + " vs " +
                         std::to_string(analytic_grad.size()) + ")");
    }
    std::vector<double> p = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + eps;
        const double up = loss(p);
        p[i] = saved - eps;
        const double down = loss(p);
        p[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = analytic_grad[i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
    return worst;
}

} // namespace dropfilter
