#include "mftune/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mftune {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             const std::vector<double>& start, const NelderMeadOptions& options) {
    const int n = static_cast<int>(start.size());
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<std::vector<double>> x(n + 1, start);
    for (int i = 0; i < n; ++i) x[i + 1][i] += options.initial_step * (start[i] != 0.0 ? std::fabs(start[i]) : 1.0) * 0.25 + options.initial_step;
    std::vector<double> fx(n + 1);
    for (int j = 0; j <= n; ++j) fx[j] = objective(x[j]);

    NelderMeadResult result;
    std::vector<int> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        {
            std::vector<std::vector<double>> x2(n + 1);
            std::vector<double> f2(n + 1);
            for (int k = 0; k <= n; ++k) {
                x2[k] = x[order[k]];
                f2[k] = fx[order[k]];
            }
            x.swap(x2);
            fx.swap(f2);
        }
        double spread = std::fabs(fx[n] - fx[0]);
        double scale = std::fabs(fx[0]) + std::fabs(fx[n]) + 1e-300;
        if (spread <= options.relative_tolerance * scale) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) centroid[i] += x[j][i] / n;

        for (int i = 0; i < n; ++i) xr[i] = centroid[i] + alpha * (centroid[i] - x[n][i]);
        double fr = objective(xr);

        if (fr < fx[0]) {
            for (int i = 0; i < n; ++i) xe[i] = centroid[i] + gamma * (xr[i] - centroid[i]);
            double fe = objective(xe);
            if (fe < fr) {
                x[n] = xe;
                fx[n] = fe;
            } else {
                x[n] = xr;
                fx[n] = fr;
            }
        } else if (fr < fx[n - 1]) {
            x[n] = xr;
            fx[n] = fr;
        } else {
            bool outside = fr < fx[n];
            const std::vector<double>& base = outside ? xr : x[n];
            for (int i = 0; i < n; ++i) xc[i] = centroid[i] + rho * (base[i] - centroid[i]);
            double fc = objective(xc);
            if (fc < (outside ? fr : fx[n])) {
                x[n] = xc;
                fx[n] = fc;
            } else {
                for (int j = 1; j <= n; ++j) {
                    for (int i = 0; i < n; ++i) x[j][i] = x[0][i] + sigma * (x[j][i] - x[0][i]);
                    fx[j] = objective(x[j]);
                }
            }
        }
    }

    int best = 0;
    for (int j = 1; j <= n; ++j)
        if (fx[j] < fx[best]) best = j;
    result.x = x[best];
    result.value = fx[best];
    result.iterations = iter;
    return result;
}

NelderMeadResult nelder_mead_multistart(const std::function<double(const std::vector<double>&)>& objective,
                                        const std::vector<std::vector<double>>& starts,
                                        const NelderMeadOptions& options) {
    NelderMeadResult best;
    bool have = false;
    for (const auto& s : starts) {
        auto r = nelder_mead(objective, s, options);
        if (!have || r.value < best.value) {
            best = r;
            have = true;
        }
    }
    return best;
}

} // namespace mftune
