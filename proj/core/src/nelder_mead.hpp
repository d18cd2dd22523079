#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace qpon::detail {

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Standard Nelder-Mead with adaptive-free coefficients (1, 2, 0.5, 0.5).
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x0, const std::vector<double>& step, double ftol,
                                 int max_iter) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> val(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
    for (std::size_t i = 0; i <= n; ++i) val[i] = f(pts[i]);

    SimplexResult r;
    std::vector<std::size_t> idx(n + 1);
    for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
        const std::size_t best = idx.front(), worst = idx.back(), second = idx[n - 1];
        if (std::abs(val[worst] - val[best]) <= ftol * (std::abs(val[best]) + 1e-300) + 1e-300) {
            r.converged = true;
            break;
        }
        std::vector<double> c(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t j = 0; j < n; ++j) c[j] += pts[i][j] / n;
        auto along = [&](double t) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = c[j] + t * (pts[worst][j] - c[j]);
            return p;
        };
        auto xr = along(-1.0);
        const double fr = f(xr);
        if (fr < val[best]) {
            auto xe = along(-2.0);
            const double fe = f(xe);
            if (fe < fr) { pts[worst] = xe; val[worst] = fe; }
            else { pts[worst] = xr; val[worst] = fr; }
            continue;
        }
        if (fr < val[second]) { pts[worst] = xr; val[worst] = fr; continue; }
        auto xc = fr < val[worst] ? along(-0.5) : along(0.5);
        const double fc = f(xc);
        if (fc < std::min(fr, val[worst])) { pts[worst] = xc; val[worst] = fc; continue; }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
            val[i] = f(pts[i]);
        }
    }
    const auto it = std::min_element(val.begin(), val.end());
    r.x = pts[static_cast<std::size_t>(it - val.begin())];
    r.value = *it;
    return r;
}

}  // namespace qpon::detail
