#pragma once

#include <functional>
#include <vector>

namespace dropfilter {

// Central-difference gradient verification: perturbs each parameter by +/-eps,
// compares (f(x+eps)-f(x-eps))/(2 eps) against analytic_grad and returns the
// max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
double finite_diff_check(const std::function<double(const std::vector<double>&)>& loss,
                         const std::vector<double>& params,
                         const std::vector<double>& analytic_grad, double eps = 1e-5);

} // namespace dropfilter
