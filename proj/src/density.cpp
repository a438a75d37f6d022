#include "fisherkin/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fisherkin/budget.hpp"
#include "fisherkin/fft.hpp"
#include "fisherkin/numeric.hpp"

namespace fisherkin {

namespace {

constexpr double kMassTol = 1e-12;
constexpr double kSymTol = 1e-12;

std::vector<std::size_t> decode_blocks(std::size_t flat, std::size_t B, int N) {
    std::vector<std::size_t> digits(N);
    for (int p = N - 1; p >= 0; --p) {
        digits[p] = flat % B;
        flat /= B;
    }
    return digits;
}

std::size_t encode_blocks(const std::vector<std::size_t>& digits, std::size_t B) {
    std::size_t out = 0;
    for (std::size_t d : digits) out = out * B + d;
    return out;
}

} // namespace

Density::Density(GridSpec grid, std::vector<double> values, Symmetry sym)
    : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    if (values_.size() != grid_.size()) {
        throw config_error("density payload size does not match grid");
    }
    double vmax = 0.0;
    for (double v : values_) {
        if (!(v >= 0.0)) throw config_error("density has negative or NaN entries");
        vmax = std::max(vmax, v);
    }
    const double mass_defect = std::abs(mass() - 1.0);
    if (mass_defect > kMassTol) {
        throw config_error("density mass deviates from 1 by " + format_double(mass_defect));
    }
    if (sym == Symmetry::check && grid_.n_particles > 1) {
        const double dev = max_swap_deviation();
        if (dev > kSymTol * std::max(1.0, vmax)) {
            throw config_error("density is not permutation symmetric (deviation " +
                               format_double(dev) + ")");
        }
    }
}

double Density::mass() const {
    KahanSum acc;
    for (double v : values_) acc.add(v);
    return acc.value() * grid_.cell_volume();
}

double Density::max_value() const {
    double vmax = 0.0;
    for (double v : values_) vmax = std::max(vmax, v);
    return vmax;
}

double Density::min_value() const {
    double vmin = values_.empty() ? 0.0 : values_[0];
    for (double v : values_) vmin = std::min(vmin, v);
    return vmin;
}

double Density::max_swap_deviation() const {
    // Adjacent transpositions generate the full permutation group.
    const int N = grid_.n_particles;
    double dev = 0.0;
    for (int b = 0; b + 1 < N; ++b) {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const std::size_t j = swap_blocks_index(grid_, i, b, b + 1);
            dev = std::max(dev, std::abs(values_[i] - values_[j]));
        }
    }
    return dev;
}

std::uint64_t Density::digest() const {
    std::uint64_t h = fnv1a(&grid_.dim, sizeof(grid_.dim));
    h = fnv1a(&grid_.n_particles, sizeof(grid_.n_particles), h);
    h = fnv1a(&grid_.m, sizeof(grid_.m), h);
    h = fnv1a(&grid_.period, sizeof(grid_.period), h);
    return fnv1a(values_.data(), values_.size() * sizeof(double), h);
}

const GridSpec& MixingMeasure::grid() const {
    if (atoms.empty()) throw config_error("mixing measure has no atoms");
    return atoms.front().rho.grid();
}

void MixingMeasure::validate() const {
    if (atoms.empty()) throw config_error("mixing measure has no atoms");
    const GridSpec& g = atoms.front().rho.grid();
    if (g.n_particles != 1) throw config_error("mixing-measure atoms must be single-particle");
    KahanSum wsum;
    for (const Atom& a : atoms) {
        if (!(a.weight > 0.0)) throw config_error("mixing weights must be positive");
        if (!(a.rho.grid() == g)) throw config_error("mixing-measure atoms must share one grid");
        wsum.add(a.weight);
    }
    if (std::abs(wsum.value() - 1.0) > kMassTol) {
        throw config_error("mixing weights must sum to 1");
    }
}

Density uniform_density(const GridSpec& grid) {
    grid.validate();
    require_within_cap(grid.size() * sizeof(double), "uniform density");
    const double v = 1.0 / std::pow(grid.period, grid.axes());
    return Density(grid, std::vector<double>(grid.size(), v), Density::Symmetry::trusted);
}

Density gaussian_density(const GridSpec& grid_1p, const std::vector<double>& mean, double sigma2) {
    grid_1p.validate();
    if (grid_1p.n_particles != 1) {
        throw config_error("gaussian_density needs a single-particle grid");
    }
    if (mean.size() != static_cast<std::size_t>(grid_1p.dim)) {
        throw config_error("gaussian mean must have d components");
    }
    const double L = grid_1p.period;
    if (!(sigma2 > 0.0)) throw config_error("gaussian sigma2 must be positive");
    if (sigma2 > (L / 8.0) * (L / 8.0)) {
        throw config_error("gaussian sigma2 too large for the period: truncation error "
                           "would dominate (need sigma2 <= (L/8)^2)");
    }
    require_within_cap(grid_1p.size() * sizeof(double), "gaussian density");

    // The wrapped Gaussian factorizes over axes; sum images per axis.
    const int d = grid_1p.dim;
    const int m = grid_1p.m;
    const double h = grid_1p.cell_width();
    std::vector<std::vector<double>> axis(d, std::vector<double>(m));
    for (int a = 0; a < d; ++a) {
        for (int i = 0; i < m; ++i) {
            const double x = i * h - mean[a];
            KahanSum s;
            for (int w = -4; w <= 4; ++w) {
                const double dx = x + w * L;
                s.add(std::exp(-dx * dx / (2.0 * sigma2)));
            }
            axis[a][i] = s.value();
        }
    }
    std::vector<double> vals(grid_1p.size());
    for (std::size_t flat = 0; flat < vals.size(); ++flat) {
        std::size_t rem = flat;
        double v = 1.0;
        for (int a = d - 1; a >= 0; --a) {
            v *= axis[a][rem % m];
            rem /= m;
        }
        vals[flat] = v;
    }
    KahanSum total;
    for (double v : vals) total.add(v);
    const double scale = 1.0 / (total.value() * grid_1p.cell_volume());
    for (double& v : vals) v *= scale;
    return Density(grid_1p, std::move(vals), Density::Symmetry::trusted);
}

Density product_density(const Density& rho, int n) {
    if (rho.grid().n_particles != 1) {
        throw config_error("product_density needs a single-particle factor");
    }
    if (n < 1) throw config_error("product_density needs n >= 1");
    const GridSpec out_grid = rho.grid().with_particles(n);
    require_within_cap(out_grid.size() * sizeof(double), "product density");

    std::vector<double> vals = rho.values();
    const std::size_t B = rho.size();
    for (int k = 2; k <= n; ++k) {
        std::vector<double> next(vals.size() * B);
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const double vj = vals[j];
            double* row = next.data() + j * B;
            const double* r = rho.values().data();
            for (std::size_t b = 0; b < B; ++b) row[b] = vj * r[b];
        }
        vals = std::move(next);
    }
    return Density(out_grid, std::move(vals), Density::Symmetry::trusted);
}

Density mixture_product_density(const MixingMeasure& P, int n) {
    P.validate();
    if (n < 1) throw config_error("mixture_product_density needs n >= 1");
    const GridSpec out_grid = P.grid().with_particles(n);
    require_within_cap(out_grid.size() * sizeof(double) * 2, "mixture product density");

    std::vector<double> vals(out_grid.size(), 0.0);
    for (const MixingMeasure::Atom& a : P.atoms) {
        const Density prod = product_density(a.rho, n);
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] += a.weight * prod[i];
    }
    return Density(out_grid, std::move(vals), Density::Symmetry::trusted);
}

Density marginal(const Density& mu, int n) {
    const GridSpec& g = mu.grid();
    if (n < 1 || n >= g.n_particles) {
        throw config_error("marginal order must satisfy 1 <= n < N");
    }
    const GridSpec out_grid = g.with_particles(n);
    const std::size_t out_size = out_grid.size();
    const std::size_t tail = g.size() / out_size;
    const double w = std::pow(g.cell_width(), g.dim * (g.n_particles - n));

    std::vector<double> vals(out_size);
    const double* src = mu.values().data();
    for (std::size_t i = 0; i < out_size; ++i) {
        KahanSum acc;
        const double* p = src + i * tail;
        for (std::size_t t = 0; t < tail; ++t) acc.add(p[t]);
        vals[i] = acc.value() * w;
    }
    return Density(out_grid, std::move(vals), Density::Symmetry::trusted);
}

Density symmetrize(const std::vector<double>& values, const GridSpec& grid) {
    grid.validate();
    if (values.size() != grid.size()) {
        throw config_error("symmetrize input size does not match grid");
    }
    if (grid.n_particles > 6) {
        throw config_error("symmetrize supports at most 6 particles");
    }
    for (double v : values) {
        if (!(v >= 0.0)) throw config_error("symmetrize input has negative entries");
    }
    require_within_cap(values.size() * sizeof(double), "symmetrize");

    const int N = grid.n_particles;
    std::vector<double> out(values.size());
    if (N == 1) {
        out = values;
    } else {
        const std::size_t B = grid.block_size();
        std::vector<double> orbit_vals;
        orbit_vals.reserve(720);
        for (std::size_t flat = 0; flat < values.size(); ++flat) {
            std::vector<std::size_t> digits = decode_blocks(flat, B, N);
            if (!std::is_sorted(digits.begin(), digits.end())) continue;
            // Canonical orbit representative: gather every distinct
            // arrangement once, average in sorted order so all members
            // receive the bit-identical mean.
            orbit_vals.clear();
            std::vector<std::size_t> arr = digits;
            do {
                orbit_vals.push_back(values[encode_blocks(arr, B)]);
            } while (std::next_permutation(arr.begin(), arr.end()));
            std::sort(orbit_vals.begin(), orbit_vals.end());
            KahanSum s;
            for (double v : orbit_vals) s.add(v);
            const double mean = s.value() / static_cast<double>(orbit_vals.size());
            arr = digits;
            do {
                out[encode_blocks(arr, B)] = mean;
            } while (std::next_permutation(arr.begin(), arr.end()));
        }
    }
    KahanSum total;
    for (double v : out) total.add(v);
    const double mass = total.value() * grid.cell_volume();
    if (!(mass > 0.0)) throw config_error("symmetrize input has zero total mass");
    const double scale = 1.0 / mass;
    for (double& v : out) v *= scale;
    return Density(grid, std::move(out), Density::Symmetry::trusted);
}

Density random_density(const GridSpec& grid, std::uint64_t seed, double smoothness) {
    grid.validate();
    if (!(smoothness > 0.0)) throw config_error("smoothness must be positive");
    require_within_cap(grid.size() * (sizeof(cplx) + sizeof(double)), "random density");

    const int m = grid.m;
    const int axes = grid.axes();
    const int band = std::max(1, m / 8);
    const std::size_t size = grid.size();

    // Hermitian-paired spectral coefficients with amplitude e^{-smoothness*|q|},
    // drawn in ascending flat-index order for reproducibility.
    Rng rng(mix_seed(seed, 0x5eedf1e1dULL));
    std::vector<cplx> modes(size, cplx{0.0, 0.0});
    std::vector<int> q(axes);
    KahanSum var;
    for (std::size_t flat = 0; flat < size; ++flat) {
        std::size_t rem = flat;
        bool in_band = true;
        double q2 = 0.0;
        for (int a = axes - 1; a >= 0; --a) {
            q[a] = static_cast<int>(rem % m);
            rem /= m;
            const long sq = signed_mode(q[a], m);
            if (std::labs(sq) > band) in_band = false;
            q2 += static_cast<double>(sq) * static_cast<double>(sq);
        }
        if (!in_band || q2 == 0.0) continue;
        std::size_t neg = 0;
        for (int a = 0; a < axes; ++a) {
            const int nq = q[a] == 0 ? 0 : m - q[a];
            neg = neg * m + static_cast<std::size_t>(nq);
        }
        if (flat > neg) continue; // the conjugate partner fills this slot
        const double amp = std::exp(-smoothness * std::sqrt(q2));
        const cplx c{rng.normal() * amp, rng.normal() * amp};
        modes[flat] = c;
        modes[neg] = std::conj(c);
        var.add(2.0 * amp * amp * (flat == neg ? 0.5 : 1.0));
    }
    // Unit pointwise variance for the synthesized field.
    const double scale = var.value() > 0.0 ? 1.0 / std::sqrt(2.0 * var.value()) : 1.0;
    for (cplx& c : modes) c *= scale;

    fft_axes(modes.data(), grid, 0, axes, /*inverse=*/true);

    std::vector<double> field(size);
    double fmax = -1.0;
    for (std::size_t i = 0; i < size; ++i) {
        field[i] = std::exp(modes[i].real());
        fmax = std::max(fmax, field[i]);
    }
    const double floor = 1e-12 * fmax;
    for (double& v : field) v = std::max(v, floor);
    return symmetrize(field, grid);
}

} // namespace fisherkin
