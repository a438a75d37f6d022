#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fisherkin/density.hpp"
#include "fisherkin/fft.hpp"
#include "fisherkin/grid.hpp"

namespace fisherkin {

// Fourier convention, fixed once and used everywhere: forward transform
// kernel e^{-i k.x} with modes k = 2*pi*q/L, q in {-m/2,..,m/2-1} per axis.
// The discrete Plancherel identity holds with cell-volume weights; the
// quadratic-form weight per mode worked out below is h^(dN)/m^d for a
// transform over one particle block (h = L/m).

enum class Method { spectral, gradient, singular };

// Kernel exponent of the singular (difference-quotient) forms: d + 2s is
// the Gagliardo convention matching the |k|^{2s} multiplier; d + s appears
// in parts of the literature. Both are computable; the method-agreement
// suite records which one is proportional to the spectral form.
enum class ExponentOffset { two_s, s };

double offset_value(ExponentOffset off, double s);
const char* offset_name(ExponentOffset off);

struct KineticSpec {
    double s = 1.0;                 // order, 0 < s <= 1
    Method method = Method::spectral;
    std::optional<double> gamma;    // cutoff exponent, <= 0 (0 = test mode)
    ExponentOffset exponent_offset = ExponentOffset::two_s;

    void validate() const;
};

// Complex grid function with unit weighted L2 norm.
class WaveFunction {
public:
    WaveFunction(GridSpec grid, std::vector<cplx> values, bool check_norm = true);

    const GridSpec& grid() const { return grid_; }
    const std::vector<cplx>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    double norm2() const; // sum |psi|^2 * cell volume

private:
    GridSpec grid_;
    std::vector<cplx> values_;
};

// Pointwise nonnegative square root of a density; unit L2 norm follows
// from the unit mass of mu.
WaveFunction sqrt_density(const Density& mu);

// |2*pi*q/L|^{2s} over one particle block's modes (m^d entries, row-major
// over the block's axes); the zero mode maps to 0 for every s.
std::vector<double> fractional_multiplier(const GridSpec& grid, double s);

// sum_j <psi, (-Delta_{x_j})^s psi> by per-block Fourier transforms.
// With symmetric_fast_path, block 0 is evaluated once and multiplied by N
// (valid for permutation-symmetric psi; both paths agree to 1e-12).
double kinetic_form(const WaveFunction& psi, const KineticSpec& spec,
                    bool symmetric_fast_path = false);

// Per-particle-block contributions (length N, sums to kinetic_form).
std::vector<double> kinetic_form_per_block(const WaveFunction& psi, const KineticSpec& spec);

// One transform pass per block, evaluated for several orders at once.
std::vector<double> kinetic_form_multi(const WaveFunction& psi, std::span<const double> s_values,
                                       bool symmetric_fast_path = false);

struct FisherResult {
    double value = 0.0;
    double s = 1.0;
    Method method = Method::spectral;
    GridSpec grid;
    std::vector<double> per_particle; // length N, sums to value
};

// Fisher information of a symmetric density, by the requested method:
//   spectral  - kinetic_form(sqrt_density(mu))
//   gradient  - (1/4) sum |grad_h mu|^2 / mu (centered differences, s = 1)
//   singular  - calibrated difference-quotient form
FisherResult fisher_info(const Density& mu, const KineticSpec& spec);

// Difference-quotient form without the constant C_{d,s}: N times the double
// sum over first-block node pairs (torus kernel, diagonal excluded) of
// |sqrt(mu)(x,..) - sqrt(mu)(y,..)|^2 / dist^(d+offset). Kernel weights are
// cell averages of the periodized kernel (d = 1), and the sub-cell region
// the excluded diagonal stands for enters through a local gradient core
// term; see singular_kernel in the implementation.
double singular_form(const Density& mu, double s, ExponentOffset off);

// spectral fisher_info / singular_form on the reference wrapped Gaussian
// (sigma = L/16, centered); cached per (d, s, m, L, offset).
double calibrate_singular_constant(const GridSpec& grid_1p, double s, ExponentOffset off);

// I_{s,gamma}: per block, <chi psi, (-Delta)^s chi psi> with
// chi(x) = (1 + |x - center|^2)^{2*gamma}, |.| the torus distance.
// gamma < 0; gamma = 0 is the documented chi == 1 test reduction.
double cutoff_fisher_info(const Density& mu, double s, double gamma,
                          const std::vector<double>& center);

// Scalar kernel of the Salem variant: (a-b)(log a - log b), a,b > 0.
double salem_phi(double a, double b);

// Salem's variant information: N times the double sum of
// phi(mu(x,..), mu(y,..)) / dist^(d+offset) over the first block.
// Requires mu strictly positive (random_density floor).
double salem_variant_info(const Density& mu, double s,
                          ExponentOffset off = ExponentOffset::two_s);

// Independent s = 1 route for the Plancherel check: differentiate by the
// ik multiplier, inverse transform, integrate |grad psi|^2 in real space.
double spectral_gradient_form(const WaveFunction& psi);

struct BbmRow {
    double s;
    double spectral;         // I_s, spectral method
    double scaled_singular;  // (1-s) * singular_form(mu, s, 2s)
};
struct BbmTable {
    std::vector<BbmRow> rows;
    double i1_spectral; // I_1 for the limit comparison
};

// Scan over ascending s values in (0,1).
BbmTable bbm_scan(const Density& mu, std::span<const double> s_values);

} // namespace fisherkin
