#pragma once

#include <functional>
#include <vector>

namespace clever {

struct SimplexOptions {
    int max_iterations = 2000;
    double diameter_tolerance = 1e-9;
    double initial_step = 0.5;
};

struct SimplexResult {
    std::vector<double> point;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Derivative-free Nelder-Mead minimization with the standard
// reflection/expansion/contraction/shrink coefficients. Stops when the
// simplex diameter falls below the tolerance or the iteration budget runs
// out.
SimplexResult nelder_mead_minimize(const std::function<double(const std::vector<double>&)>& fn,
                                   std::vector<double> start,
                                   const SimplexOptions& options = {});

}  // namespace clever
