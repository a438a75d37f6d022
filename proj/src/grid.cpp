#include "fisherkin/grid.hpp"

#include <cmath>
#include <limits>

#include "fisherkin/budget.hpp"

namespace fisherkin {

std::size_t checked_pow(std::size_t m, int k) {
    std::size_t r = 1;
    for (int i = 0; i < k; ++i) {
        if (m != 0 && r > std::numeric_limits<std::size_t>::max() / m) {
            throw budget_error("grid size m^" + std::to_string(k) + " overflows");
        }
        r *= m;
    }
    return r;
}

double GridSpec::cell_volume() const {
    return std::pow(cell_width(), axes());
}

std::size_t GridSpec::block_size() const {
    return checked_pow(static_cast<std::size_t>(m), dim);
}

std::size_t GridSpec::size() const {
    return checked_pow(static_cast<std::size_t>(m), axes());
}

GridSpec GridSpec::with_particles(int n) const {
    GridSpec g = *this;
    g.n_particles = n;
    g.validate();
    return g;
}

void GridSpec::validate() const {
    if (dim < 1 || n_particles < 1) {
        throw config_error("grid needs dim >= 1 and n_particles >= 1");
    }
    if (m < 2) {
        throw config_error("grid needs at least 2 nodes per axis");
    }
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw config_error("grid period must be positive and finite");
    }
    (void)size(); // overflow check
}

std::size_t axis_stride(const GridSpec& g, int axis) {
    return checked_pow(static_cast<std::size_t>(g.m), g.axes() - 1 - axis);
}

std::size_t swap_blocks_index(const GridSpec& g, std::size_t flat, int b1, int b2) {
    // Particle blocks are contiguous base-m digit groups; treating each
    // group as one base-B digit (B = m^d), the layout is a base-B number
    // with n_particles digits, particle 1 most significant.
    const std::size_t B = g.block_size();
    const int N = g.n_particles;
    std::size_t digits[64];
    for (int p = N - 1; p >= 0; --p) {
        digits[p] = flat % B;
        flat /= B;
    }
    std::swap(digits[b1], digits[b2]);
    std::size_t out = 0;
    for (int p = 0; p < N; ++p) out = out * B + digits[p];
    return out;
}

double torus_dist_sq(const GridSpec& g, const std::vector<int>& delta) {
    const double h = g.cell_width();
    double acc = 0.0;
    for (int da : delta) {
        const int wrapped = da <= g.m - da ? da : g.m - da;
        const double dx = wrapped * h;
        acc += dx * dx;
    }
    return acc;
}

} // namespace fisherkin
