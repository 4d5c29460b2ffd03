#pragma once

#include <functional>
#include <vector>

namespace mftune {

struct NelderMeadOptions {
    int max_iterations = 2000;
    double relative_tolerance = 1e-8;
    double initial_step = 0.5;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Downhill simplex with the standard reflection/expansion/contraction/shrink
// coefficients. The objective must be finite (use penalties, not infinities).
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             const std::vector<double>& start, const NelderMeadOptions& options = {});

// Runs nelder_mead from several starts and keeps the best end point.
NelderMeadResult nelder_mead_multistart(const std::function<double(const std::vector<double>&)>& objective,
                                        const std::vector<std::vector<double>>& starts,
                                        const NelderMeadOptions& options = {});

} // namespace mftune
