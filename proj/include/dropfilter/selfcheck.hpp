#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dropfilter {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Statistical and behavioural invariants: RNG determinism, mask statistics,
// the CLT consistency of the normal gradient masks, the per-position oracle
// expectation, degenerate drop rates, and the FC/DropConnect degeneracy.
std::vector<CheckResult> run_property_checks();

// Finite-difference verification of every backward pass plus the DropFilter
// masked sub-network, over randomized small instances.
std::vector<CheckResult> run_gradient_checks();

// prints one PASS/FAIL line per result; returns 0 iff all passed
int report_checks(const std::vector<CheckResult>& results, std::ostream& out);

} // namespace dropfilter
