#pragma once

#include <vector>

#include "fisherkin/density.hpp"
#include "fisherkin/spectral.hpp"

namespace fisherkin {

// Hermitian PSD operator with unit weighted trace on the n-particle grid
// space, stored densely in the node basis. The kernel carries continuum
// normalization: trace = sum_X K(X;X) * h^(dn), action
// (G u)(X) = sum_Y K(X;Y) u(Y) * h^(dn).
class DensityMatrix {
public:
    DensityMatrix(GridSpec grid, std::vector<cplx> kernel);

    const GridSpec& grid() const { return grid_; }     // n-particle grid
    std::size_t dim() const { return dim_; }           // m^(dn)
    const std::vector<cplx>& kernel() const { return kernel_; }
    cplx at(std::size_t row, std::size_t col) const { return kernel_[row * dim_ + col]; }

    double trace() const;                 // weighted, compensated
    double max_hermiticity_defect() const;
    double max_bosonic_defect() const;    // simultaneous row/col block swaps
    std::vector<double> diagonal() const; // K(X;X), real parts

private:
    GridSpec grid_;
    std::size_t dim_;
    std::vector<cplx> kernel_;
};

// Partial trace of |psi><psi| over the trailing N-n particle blocks:
// K(X_n;Y_n) = sum_Z psi(X_n,Z) conj(psi(Y_n,Z)) * h^(d(N-n)).
DensityMatrix reduced_density_matrix(const WaveFunction& psi, int n);

// Partial trace of an n-particle matrix down to j < n particles.
DensityMatrix partial_trace(const DensityMatrix& gamma, int j);

struct SpectralDecomposition {
    GridSpec grid;
    std::vector<double> eigenvalues;             // nonincreasing, clamped at 0
    std::vector<std::vector<cplx>> eigenvectors; // orthonormal in the weighted inner product
    double min_raw_eigenvalue = 0.0;             // before clamping, PSD diagnostic
};

// Dense Hermitian eigendecomposition (cyclic Jacobi) in the cell-volume
// weighted inner product. Eigenvalues below -1e-10 are rejected.
SpectralDecomposition eigendecompose(const DensityMatrix& gamma);

// rho_n = sum_j lambda_j |u_j|^2.
Density hoffmann_ostenhof_density(const SpectralDecomposition& decomp);

// tr(H_n Gamma) with H_n = sum_j (-Delta_{x_j})^s, evaluated directly by
// sandwiching the kernel between block transforms (spectral method only).
double kinetic_trace(const DensityMatrix& gamma, const KineticSpec& spec);

struct SplitIdentity {
    double lhs; // I_s[mu]
    double rhs; // tr(H_n Gamma^(n)) + tr(H_{N-n} Gamma^(N-n))
};

// Both sides of I_s[mu_N] = tr(H_n Gamma^(n)) + tr(H_{N-n} Gamma^(N-n)),
// computed through independent code paths.
SplitIdentity split_identity_check(const Density& mu, int n, const KineticSpec& spec);

// Trace of the multiplication operator phi against Gamma:
// sum_X phi(X) K(X;X) h^(dn). Equals the marginal integral of phi when
// Gamma came from sqrt(mu).
double monomial_trace(const DensityMatrix& gamma, const std::vector<double>& phi);

} // namespace fisherkin
