#pragma once

#include <cmath>
#include <functional>

#include "fisherkin/density.hpp"
#include "fisherkin/grid.hpp"

namespace fktest {

inline fisherkin::GridSpec grid1d(int n_particles, int m, double period = 16.0) {
    return fisherkin::GridSpec{1, n_particles, m, period};
}

inline bool close_abs(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1e-300, std::abs(a), std::abs(b)});
}

// Composite Simpson rule on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / (2 * panels);
    double acc = f(a) + f(b);
    for (int i = 1; i < 2 * panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

} // namespace fktest
