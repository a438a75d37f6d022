#pragma once

#include <cstdint>
#include <vector>

#include "fisherkin/grid.hpp"

namespace fisherkin {

// Nonnegative grid function with unit discrete mass and permutation symmetry
// across particle blocks. Values are immutable after construction.
class Density {
public:
    enum class Symmetry { check, trusted };

    // Validates nonnegativity and unit mass always; block-permutation
    // symmetry is verified over the adjacent-transposition generators
    // unless the construction already guarantees it (Symmetry::trusted).
    Density(GridSpec grid, std::vector<double> values, Symmetry sym = Symmetry::check);

    const GridSpec& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    double mass() const;      // sum * cell volume, compensated
    double max_value() const;
    double min_value() const;

    // Nodes below this threshold are treated as vanishing by the gradient
    // form; matches the random_density clamp (1e-12 * max).
    double positivity_floor() const { return 1e-12 * max_value(); }

    // Largest |f(x) - f(swap x)| over adjacent particle-block transpositions.
    double max_swap_deviation() const;

    std::uint64_t digest() const; // FNV-1a over grid + payload bytes

private:
    GridSpec grid_;
    std::vector<double> values_;
};

// Finitely supported mixing measure: weighted single-particle densities.
struct MixingMeasure {
    struct Atom {
        double weight;
        Density rho;
    };
    std::vector<Atom> atoms;

    const GridSpec& grid() const;
    void validate() const; // weights positive and sum to 1, shared 1-particle grid
};

// Constant density 1/L^(d*N).
Density uniform_density(const GridSpec& grid);

// Wrapped (periodized) Gaussian, renormalized to unit discrete mass.
// Requires a single-particle grid and sigma2 <= (period/8)^2.
Density gaussian_density(const GridSpec& grid_1p, const std::vector<double>& mean, double sigma2);

// n-fold product rho(x_1)...rho(x_n) of a single-particle density.
Density product_density(const Density& rho, int n);

// sum_i w_i rho_i^{(x)n} for a finite mixing measure.
Density mixture_product_density(const MixingMeasure& P, int n);

// Integrates out the trailing N-n particle blocks; 1 <= n < N.
Density marginal(const Density& mu, int n);

// Average over all N! particle-block permutations, then renormalize.
// Exact symmetry: each orbit is accumulated once in sorted order and the
// result written to every member. N <= 6.
Density symmetrize(const std::vector<double>& values, const GridSpec& grid);

// Deterministic smooth random density: band-limited Gaussian noise with
// spectral amplitude e^{-smoothness*|q|}, exponentiated, clamped below at
// 1e-12 * max, symmetrized and normalized.
Density random_density(const GridSpec& grid, std::uint64_t seed, double smoothness);

} // namespace fisherkin
