#include "clever/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clever {

namespace {

double simplex_diameter(const std::vector<std::vector<double>>& pts) {
    double diam = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < pts[0].size(); ++k) {
            d = std::max(d, std::fabs(pts[i][k] - pts[0][k]));
        }
        diam = std::max(diam, d);
    }
    return diam;
}

}  // namespace

SimplexResult nelder_mead_minimize(const std::function<double(const std::vector<double>&)>& fn,
                                   std::vector<double> start, const SimplexOptions& options) {
    const std::size_t n = start.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");

    const double alpha = 1.0;  // reflection
    const double gamma = 2.0;  // expansion
    const double rho = 0.5;    // contraction
    const double sigma = 0.5;  // shrink

    std::vector<std::vector<double>> x(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) x[i + 1][i] += options.initial_step;
    std::vector<double> fx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fx[i] = fn(x[i]);

    auto order = [&]() {
        std::vector<std::size_t> idx(n + 1);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        std::vector<std::vector<double>> x2(n + 1);
        std::vector<double> f2(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            x2[k] = x[idx[k]];
            f2[k] = fx[idx[k]];
        }
        x.swap(x2);
        fx.swap(f2);
    };

    SimplexResult result;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        order();
        if (simplex_diameter(x) < options.diameter_tolerance) {
            result.converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) centroid[k] += x[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](const std::vector<double>& from, double coef) {
            std::vector<double> p(n);
            for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + coef * (centroid[k] - from[k]);
            return p;
        };

        std::vector<double> xr = blend(x[n], alpha);
        double fr = fn(xr);

        if (fr < fx[0]) {
            std::vector<double> xe = blend(x[n], alpha * gamma);
            double fe = fn(xe);
            if (fe < fr) {
                x[n] = std::move(xe);
                fx[n] = fe;
            } else {
                x[n] = std::move(xr);
                fx[n] = fr;
            }
        } else if (fr < fx[n - 1]) {
            x[n] = std::move(xr);
            fx[n] = fr;
        } else {
            bool outside = fr < fx[n];
            std::vector<double> xc(n);
            const std::vector<double>& base = outside ? xr : x[n];
            for (std::size_t k = 0; k < n; ++k) {
                xc[k] = centroid[k] + rho * (base[k] - centroid[k]);
            }
            double fc = fn(xc);
            if (fc < (outside ? fr : fx[n])) {
                x[n] = std::move(xc);
                fx[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t k = 0; k < n; ++k) {
                        x[i][k] = x[0][k] + sigma * (x[i][k] - x[0][k]);
                    }
                    fx[i] = fn(x[i]);
                }
            }
        }
    }

    order();
    result.point = x[0];
    result.value = fx[0];
    result.iterations = iter;
    return result;
}

}  // namespace clever
