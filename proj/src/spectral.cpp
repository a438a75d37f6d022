#include "fisherkin/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "fisherkin/budget.hpp"
#include "fisherkin/numeric.hpp"

namespace fisherkin {

double offset_value(ExponentOffset off, double s) {
    return off == ExponentOffset::two_s ? 2.0 * s : s;
}

const char* offset_name(ExponentOffset off) {
    return off == ExponentOffset::two_s ? "2s" : "s";
}

void KineticSpec::validate() const {
    if (!(s > 0.0) || s > 1.0) throw config_error("order s must lie in (0, 1]");
    if (method == Method::gradient && s != 1.0) {
        throw config_error("the gradient form is defined for s = 1 only");
    }
    if (method == Method::singular && s >= 1.0) {
        throw config_error("the singular form is defined for s < 1 only");
    }
    if (gamma && *gamma > 0.0) throw config_error("cutoff exponent gamma must be <= 0");
}

WaveFunction::WaveFunction(GridSpec grid, std::vector<cplx> values, bool check_norm)
    : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    if (values_.size() != grid_.size()) {
        throw config_error("wavefunction payload size does not match grid");
    }
    if (check_norm) {
        const double defect = std::abs(norm2() - 1.0);
        if (defect > 1e-12) {
            throw config_error("wavefunction L2 norm deviates from 1 by " + format_double(defect));
        }
    }
}

double WaveFunction::norm2() const {
    KahanSum acc;
    for (const cplx& v : values_) acc.add(std::norm(v));
    return acc.value() * grid_.cell_volume();
}

WaveFunction sqrt_density(const Density& mu) {
    std::vector<cplx> vals(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) vals[i] = std::sqrt(mu[i]);
    return WaveFunction(mu.grid(), std::move(vals));
}

std::vector<double> fractional_multiplier(const GridSpec& grid, double s) {
    if (!(s > 0.0) || s > 1.0) throw config_error("order s must lie in (0, 1]");
    const int d = grid.dim;
    const int m = grid.m;
    const double base = 2.0 * M_PI / grid.period;
    std::vector<double> ksq(m);
    for (int q = 0; q < m; ++q) {
        const double k = base * static_cast<double>(signed_mode(q, m));
        ksq[q] = k * k;
    }
    std::vector<double> mult(grid.block_size());
    for (std::size_t t = 0; t < mult.size(); ++t) {
        std::size_t rem = t;
        double k2 = 0.0;
        for (int a = 0; a < d; ++a) {
            k2 += ksq[rem % m];
            rem /= m;
        }
        mult[t] = k2 == 0.0 ? 0.0 : (s == 1.0 ? k2 : std::pow(k2, s));
    }
    return mult;
}

namespace {

// |F psi|^2 summed over everything but block b's mode index: the block's
// power spectrum. Input `work` is a scratch copy of psi that gets
// transformed along block b's axes.
std::vector<double> block_mode_power(std::vector<cplx>& work, const GridSpec& g, int b) {
    const int d = g.dim;
    fft_axes(work.data(), g, b * d, (b + 1) * d, /*inverse=*/false);
    const std::size_t Bd = g.block_size();
    const std::size_t inner = checked_pow(static_cast<std::size_t>(g.m), g.axes() - (b + 1) * d);
    const std::size_t outer = g.size() / (Bd * inner);
    std::vector<KahanSum> acc(Bd);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t t = 0; t < Bd; ++t) {
            const cplx* p = work.data() + (o * Bd + t) * inner;
            double chunk = 0.0;
            for (std::size_t i = 0; i < inner; ++i) chunk += std::norm(p[i]);
            acc[t].add(chunk);
        }
    }
    std::vector<double> power(Bd);
    for (std::size_t t = 0; t < Bd; ++t) power[t] = acc[t].value();
    return power;
}

// Plancherel weight for one block transform: h^(dN) / m^d.
double block_scale(const GridSpec& g) {
    return g.cell_volume() / static_cast<double>(g.block_size());
}

double reduce_power(const std::vector<double>& power, const std::vector<double>& mult,
                    double scale) {
    KahanSum acc;
    for (std::size_t t = 0; t < power.size(); ++t) acc.add(mult[t] * power[t]);
    return acc.value() * scale;
}

// Sum of block power spectra; enough for any multiplier evaluation since
// every block shares the same mode table.
std::vector<double> combined_mode_power(const WaveFunction& psi, bool symmetric_fast_path) {
    const GridSpec& g = psi.grid();
    require_within_cap(g.size() * sizeof(cplx), "kinetic form scratch");
    std::vector<double> total(g.block_size(), 0.0);
    std::vector<cplx> work;
    const int blocks = symmetric_fast_path ? 1 : g.n_particles;
    for (int b = 0; b < blocks; ++b) {
        work = psi.values();
        const std::vector<double> power = block_mode_power(work, g, b);
        for (std::size_t t = 0; t < total.size(); ++t) total[t] += power[t];
    }
    if (symmetric_fast_path && g.n_particles > 1) {
        for (double& v : total) v *= static_cast<double>(g.n_particles);
    }
    return total;
}

void check_normalized(const WaveFunction& psi) {
    const double defect = std::abs(psi.norm2() - 1.0);
    if (defect > 1e-9) {
        throw config_error("kinetic form needs a normalized wavefunction (defect " +
                           format_double(defect) + ")");
    }
}

} // namespace

double kinetic_form(const WaveFunction& psi, const KineticSpec& spec, bool symmetric_fast_path) {
    spec.validate();
    if (spec.method != Method::spectral) {
        throw config_error("kinetic_form evaluates the spectral method only");
    }
    check_normalized(psi);
    const std::vector<double> mult = fractional_multiplier(psi.grid(), spec.s);
    const std::vector<double> power = combined_mode_power(psi, symmetric_fast_path);
    return reduce_power(power, mult, block_scale(psi.grid()));
}

std::vector<double> kinetic_form_per_block(const WaveFunction& psi, const KineticSpec& spec) {
    spec.validate();
    if (spec.method != Method::spectral) {
        throw config_error("kinetic_form evaluates the spectral method only");
    }
    check_normalized(psi);
    const GridSpec& g = psi.grid();
    require_within_cap(g.size() * sizeof(cplx), "kinetic form scratch");
    const std::vector<double> mult = fractional_multiplier(g, spec.s);
    const double scale = block_scale(g);
    std::vector<double> out(g.n_particles);
    std::vector<cplx> work;
    for (int b = 0; b < g.n_particles; ++b) {
        work = psi.values();
        out[b] = reduce_power(block_mode_power(work, g, b), mult, scale);
    }
    return out;
}

std::vector<double> kinetic_form_multi(const WaveFunction& psi, std::span<const double> s_values,
                                       bool symmetric_fast_path) {
    check_normalized(psi);
    const GridSpec& g = psi.grid();
    const std::vector<double> power = combined_mode_power(psi, symmetric_fast_path);
    const double scale = block_scale(g);
    std::vector<double> out;
    out.reserve(s_values.size());
    for (double s : s_values) {
        out.push_back(reduce_power(power, fractional_multiplier(g, s), scale));
    }
    return out;
}

namespace {

std::vector<double> gradient_form_per_axis(const Density& mu) {
    const GridSpec& g = mu.grid();
    const int m = g.m;
    const double h = g.cell_width();
    const double floor = mu.positivity_floor();
    const double w = g.cell_volume() / (4.0 * (2.0 * h) * (2.0 * h));
    const double* v = mu.values().data();
    std::vector<double> per_axis(g.axes());
    for (int a = 0; a < g.axes(); ++a) {
        const std::size_t stride = axis_stride(g, a);
        const std::size_t chunk = stride * static_cast<std::size_t>(m);
        KahanSum acc;
        for (std::size_t base = 0; base < g.size(); base += chunk) {
            for (int j = 0; j < m; ++j) {
                const std::size_t up = base + static_cast<std::size_t>((j + 1) % m) * stride;
                const std::size_t dn = base + static_cast<std::size_t>((j + m - 1) % m) * stride;
                const std::size_t at = base + static_cast<std::size_t>(j) * stride;
                double chunk_sum = 0.0;
                for (std::size_t i = 0; i < stride; ++i) {
                    const double c = v[at + i];
                    if (c < floor) continue; // vanishing-density nodes contribute 0
                    const double diff = v[up + i] - v[dn + i];
                    chunk_sum += diff * diff / c;
                }
                acc.add(chunk_sum);
            }
        }
        per_axis[a] = acc.value() * w;
    }
    return per_axis;
}

// Kernel weights over one block's difference indices; the zero difference
// (diagonal) maps to 0.
//
// For d = 1 the weight is the cell average of the fully periodized kernel
// sum_w |z + wL|^{-(1+off)}, integrated in closed form per cell with the
// image tail added analytically. Evaluating the kernel this way (instead
// of point values at the minimum-image distance) is what makes the
// calibrated form track the spectral one across densities: the point
// kernel under-resolves the near-diagonal cells and drops the image
// tails, and neither error is absorbed by a density-independent constant.
// For d > 1 (outside the supported default range) the plain minimum-image
// point kernel is used.
std::vector<double> singular_kernel(const GridSpec& g, double exponent) {
    const int d = g.dim;
    const int m = g.m;
    std::vector<double> kernel(g.block_size(), 0.0);
    if (d == 1) {
        const double h = g.cell_width();
        const double L = g.period;
        const double off = exponent - 1.0; // exponent = d + off
        const int images = 2000;
        auto segment = [off](double a, double b) {
            return (std::pow(a, -off) - std::pow(b, -off)) / off;
        };
        for (int j = 1; j < m; ++j) {
            const double z = j * h;
            KahanSum acc;
            for (int w = -images; w <= images; ++w) {
                double lo = z + w * L - 0.5 * h;
                double hi = z + w * L + 0.5 * h;
                if (hi <= 0.0) {
                    const double t = lo;
                    lo = -hi;
                    hi = -t;
                }
                acc.add(segment(lo, hi));
            }
            acc.add(2.0 * std::pow((images + 0.5) * L, -off) / off); // image tail
            kernel[j] = acc.value() / h;
        }
        return kernel;
    }
    std::vector<int> delta(d);
    for (std::size_t t = 0; t < kernel.size(); ++t) {
        std::size_t rem = t;
        for (int a = d - 1; a >= 0; --a) {
            delta[a] = static_cast<int>(rem % m);
            rem /= m;
        }
        const double d2 = torus_dist_sq(g, delta);
        kernel[t] = d2 == 0.0 ? 0.0 : std::pow(d2, -0.5 * exponent);
    }
    return kernel;
}

std::size_t block_pair_delta(const std::vector<int>& xd, const std::vector<int>& yd, int m) {
    std::size_t t = 0;
    for (std::size_t a = 0; a < xd.size(); ++a) {
        t = t * m + static_cast<std::size_t>((xd[a] - yd[a] + m) % m);
    }
    return t;
}

std::vector<std::vector<int>> block_digits(const GridSpec& g) {
    const std::size_t M = g.block_size();
    std::vector<std::vector<int>> digits(M, std::vector<int>(g.dim));
    for (std::size_t t = 0; t < M; ++t) {
        std::size_t rem = t;
        for (int a = g.dim - 1; a >= 0; --a) {
            digits[t][a] = static_cast<int>(rem % g.m);
            rem /= g.m;
        }
    }
    return digits;
}

// Shared pairwise loop of the singular and Salem forms. `pair_term` maps
// the two first-block values (with the trailing configuration fixed) to
// the kernel numerator. The diagonal is excluded from the pair sum; the
// sub-cell region |z| < h/2 it stands for is restored by a local core
// term, core_factor * (grad mu)^2 / mu per node (core_factor 1/4 gives
// |grad sqrt(mu)|^2, the small-difference limit of the singular
// numerator; the Salem numerator approaches exactly 4 times that).
template <typename PairTerm>
double pairwise_block_form(const Density& mu, double exponent, double core_factor,
                           PairTerm pair_term) {
    const GridSpec& g = mu.grid();
    const std::size_t M = g.block_size();
    const std::size_t R = g.size() / M;
    if (static_cast<double>(M) * static_cast<double>(M) * static_cast<double>(R) > 4e9) {
        throw budget_error("pairwise singular form too large for this grid "
                           "(use d = 1, N <= 3, m <= 64)");
    }
    const std::vector<double> kernel = singular_kernel(g, exponent);
    const std::vector<std::vector<int>> digits = block_digits(g);
    const double* v = mu.values().data();
    KahanSum acc;
    for (std::size_t x = 0; x < M; ++x) {
        for (std::size_t y = x + 1; y < M; ++y) {
            const double k = kernel[block_pair_delta(digits[x], digits[y], g.m)];
            const double* px = v + x * R;
            const double* py = v + y * R;
            double inner = 0.0;
            for (std::size_t r = 0; r < R; ++r) inner += pair_term(px[r], py[r]);
            acc.add(2.0 * k * inner); // kernel is symmetric in (x, y)
        }
    }

    // Core: int_{|z|<h/2} |z|^2 K(z) dz over the ball, gradient by centered
    // differences along the first block's axes, floor rule as in the
    // gradient form.
    const int d = g.dim;
    const int m = g.m;
    const double h = g.cell_width();
    const double off = exponent - d;
    const double sphere = 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
    const double cell_int = (sphere / d) * std::pow(0.5 * h, 2.0 - off) / (2.0 - off);
    const double floor = mu.positivity_floor();
    KahanSum core;
    for (int a = 0; a < d; ++a) {
        const std::size_t stride = checked_pow(static_cast<std::size_t>(m), g.axes() - 1 - a);
        const std::size_t chunk = stride * static_cast<std::size_t>(m);
        for (std::size_t base = 0; base < g.size(); base += chunk) {
            for (int j = 0; j < m; ++j) {
                const std::size_t up = base + static_cast<std::size_t>((j + 1) % m) * stride;
                const std::size_t dn = base + static_cast<std::size_t>((j + m - 1) % m) * stride;
                const std::size_t at = base + static_cast<std::size_t>(j) * stride;
                double chunk_sum = 0.0;
                for (std::size_t i = 0; i < stride; ++i) {
                    const double c = v[at + i];
                    if (c < floor) continue;
                    const double diff = (v[up + i] - v[dn + i]) / (2.0 * h);
                    chunk_sum += diff * diff / c;
                }
                core.add(chunk_sum);
            }
        }
    }
    const double pair_weight = std::pow(h, g.dim * (g.n_particles + 1));
    const double core_weight = std::pow(h, g.dim * g.n_particles) * cell_int * core_factor;
    return static_cast<double>(g.n_particles) *
           (pair_weight * acc.value() + core_weight * core.value());
}

} // namespace

double singular_form(const Density& mu, double s, ExponentOffset off) {
    if (!(s > 0.0) || s >= 1.0) throw config_error("singular form needs 0 < s < 1");
    const double exponent = mu.grid().dim + offset_value(off, s);
    return pairwise_block_form(mu, exponent, 0.25, [](double a, double b) {
        const double d = std::sqrt(a) - std::sqrt(b);
        return d * d;
    });
}

double salem_phi(double a, double b) {
    if (a == b) return 0.0;
    return (a - b) * (std::log(a) - std::log(b));
}

double salem_variant_info(const Density& mu, double s, ExponentOffset off) {
    if (!(s > 0.0) || s >= 1.0) throw config_error("salem variant needs 0 < s < 1");
    if (mu.min_value() < 0.99e-12 * mu.max_value()) {
        throw config_error("salem variant needs a strictly positive density "
                           "(values below the positivity floor present)");
    }
    const double exponent = mu.grid().dim + offset_value(off, s);
    return pairwise_block_form(mu, exponent, 1.0,
                               [](double a, double b) { return salem_phi(a, b); });
}

double calibrate_singular_constant(const GridSpec& grid_1p, double s, ExponentOffset off) {
    grid_1p.validate();
    if (grid_1p.n_particles != 1) {
        throw config_error("calibration runs on a single-particle grid");
    }
    if (!(s > 0.0) || s >= 1.0) throw config_error("calibration needs 0 < s < 1");

    using Key = std::tuple<int, int, double, double, int>;
    static std::map<Key, double> cache;
    static std::mutex mutex;
    const Key key{grid_1p.dim, grid_1p.m, grid_1p.period, s, off == ExponentOffset::two_s};
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    const double L = grid_1p.period;
    const double sigma = L / 16.0;
    const std::vector<double> center(grid_1p.dim, L / 2.0);
    const Density ref = gaussian_density(grid_1p, center, sigma * sigma);
    KineticSpec spec;
    spec.s = s;
    const double spectral = kinetic_form(sqrt_density(ref), spec);
    const double singular = singular_form(ref, s, off);
    if (!(singular > 0.0)) {
        throw config_error("degenerate calibration reference: singular form vanished");
    }
    const double c = spectral / singular;
    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key, c);
    return c;
}

FisherResult fisher_info(const Density& mu, const KineticSpec& spec) {
    spec.validate();
    const GridSpec& g = mu.grid();
    FisherResult out;
    out.s = spec.s;
    out.method = spec.method;
    out.grid = g;
    switch (spec.method) {
    case Method::spectral: {
        out.per_particle = kinetic_form_per_block(sqrt_density(mu), spec);
        break;
    }
    case Method::gradient: {
        const std::vector<double> per_axis = gradient_form_per_axis(mu);
        out.per_particle.assign(g.n_particles, 0.0);
        for (int a = 0; a < g.axes(); ++a) out.per_particle[a / g.dim] += per_axis[a];
        break;
    }
    case Method::singular: {
        const double c = calibrate_singular_constant(g.with_particles(1), spec.s,
                                                     spec.exponent_offset);
        const double value = c * singular_form(mu, spec.s, spec.exponent_offset);
        out.per_particle.assign(g.n_particles, value / g.n_particles);
        break;
    }
    }
    KahanSum total;
    for (double v : out.per_particle) total.add(v);
    out.value = total.value();
    return out;
}

double cutoff_fisher_info(const Density& mu, double s, double gamma,
                          const std::vector<double>& center) {
    if (!(s > 0.0) || s > 1.0) throw config_error("order s must lie in (0, 1]");
    if (gamma > 0.0) throw config_error("cutoff exponent gamma must be <= 0 "
                                        "(gamma = 0 is the chi == 1 test reduction)");
    const GridSpec& g = mu.grid();
    if (center.size() != static_cast<std::size_t>(g.dim)) {
        throw config_error("cutoff center must have d components");
    }
    require_within_cap(g.size() * sizeof(cplx), "cutoff kinetic scratch");

    // chi over one block's nodes; identical for every block.
    const int d = g.dim;
    const int m = g.m;
    const double h = g.cell_width();
    const double L = g.period;
    std::vector<std::vector<double>> axis_dist2(d, std::vector<double>(m));
    for (int a = 0; a < d; ++a) {
        for (int i = 0; i < m; ++i) {
            double dx = std::abs(i * h - center[a]);
            dx = std::fmod(dx, L);
            dx = std::min(dx, L - dx);
            axis_dist2[a][i] = dx * dx;
        }
    }
    std::vector<double> chi(g.block_size());
    for (std::size_t t = 0; t < chi.size(); ++t) {
        std::size_t rem = t;
        double r2 = 0.0;
        for (int a = d - 1; a >= 0; --a) {
            r2 += axis_dist2[a][rem % m];
            rem /= m;
        }
        chi[t] = std::pow(1.0 + r2, 2.0 * gamma);
    }

    const WaveFunction psi = sqrt_density(mu);
    const std::vector<double> mult = fractional_multiplier(g, s);
    const double scale = block_scale(g);
    const std::size_t Bd = g.block_size();
    KahanSum total;
    std::vector<cplx> work;
    for (int b = 0; b < g.n_particles; ++b) {
        work = psi.values();
        const std::size_t inner = checked_pow(static_cast<std::size_t>(m), g.axes() - (b + 1) * d);
        const std::size_t outer = g.size() / (Bd * inner);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t t = 0; t < Bd; ++t) {
                cplx* p = work.data() + (o * Bd + t) * inner;
                for (std::size_t i = 0; i < inner; ++i) p[i] *= chi[t];
            }
        }
        total.add(reduce_power(block_mode_power(work, g, b), mult, scale));
    }
    return total.value();
}

double spectral_gradient_form(const WaveFunction& psi) {
    check_normalized(psi);
    const GridSpec& g = psi.grid();
    require_within_cap(g.size() * sizeof(cplx), "spectral gradient scratch");
    const int m = g.m;
    const double base = 2.0 * M_PI / g.period;
    const Fft plan(m);
    const double w = g.cell_volume() / static_cast<double>(m); // forward+inverse rescale
    KahanSum total;
    std::vector<cplx> work;
    for (int a = 0; a < g.axes(); ++a) {
        work = psi.values();
        const std::size_t stride = axis_stride(g, a);
        fft_axis(work.data(), g.size(), stride, plan, false);
        // Multiply by ik mode-wise, then return to real space and integrate.
        const std::size_t chunk = stride * static_cast<std::size_t>(m);
        for (std::size_t b0 = 0; b0 < g.size(); b0 += chunk) {
            for (int j = 0; j < m; ++j) {
                const cplx ik{0.0, base * static_cast<double>(signed_mode(j, m))};
                cplx* p = work.data() + b0 + static_cast<std::size_t>(j) * stride;
                for (std::size_t i = 0; i < stride; ++i) p[i] *= ik;
            }
        }
        fft_axis(work.data(), g.size(), stride, plan, true);
        KahanSum axis_acc;
        for (std::size_t i = 0; i < work.size(); i += 4096) {
            double c = 0.0;
            const std::size_t end = std::min(work.size(), i + 4096);
            for (std::size_t j = i; j < end; ++j) c += std::norm(work[j]);
            axis_acc.add(c);
        }
        total.add(axis_acc.value() * w / static_cast<double>(m));
    }
    return total.value();
}

BbmTable bbm_scan(const Density& mu, std::span<const double> s_values) {
    for (std::size_t i = 0; i < s_values.size(); ++i) {
        if (!(s_values[i] > 0.0) || s_values[i] >= 1.0) {
            throw config_error("bbm scan needs s values in (0, 1)");
        }
        if (i > 0 && !(s_values[i] > s_values[i - 1])) {
            throw config_error("bbm scan needs strictly ascending s values");
        }
    }
    const WaveFunction psi = sqrt_density(mu);
    const std::vector<double> power = combined_mode_power(psi, false);
    const double scale = block_scale(mu.grid());
    BbmTable table;
    table.i1_spectral = reduce_power(power, fractional_multiplier(mu.grid(), 1.0), scale);
    for (double s : s_values) {
        BbmRow row;
        row.s = s;
        row.spectral = reduce_power(power, fractional_multiplier(mu.grid(), s), scale);
        row.scaled_singular = (1.0 - s) * singular_form(mu, s, ExponentOffset::two_s);
        table.rows.push_back(row);
    }
    return table;
}

} // namespace fisherkin
