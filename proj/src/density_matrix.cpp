#include "fisherkin/density_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fisherkin/budget.hpp"
#include "fisherkin/numeric.hpp"

namespace fisherkin {

DensityMatrix::DensityMatrix(GridSpec grid, std::vector<cplx> kernel)
    : grid_(grid), dim_(grid.size()), kernel_(std::move(kernel)) {
    grid_.validate();
    if (kernel_.size() != dim_ * dim_) {
        throw config_error("density-matrix kernel size does not match grid");
    }
    if (dim_ > max_matrix_dim()) {
        throw budget_error("density-matrix dimension " + std::to_string(dim_) +
                           " exceeds the cap of " + std::to_string(max_matrix_dim()));
    }
    double scale = 0.0;
    for (const cplx& v : kernel_) scale = std::max(scale, std::abs(v));
    const double herm = max_hermiticity_defect();
    if (herm > 1e-12 * std::max(1.0, scale)) {
        throw config_error("density-matrix kernel is not Hermitian (defect " +
                           format_double(herm) + ")");
    }
    const double tr_defect = std::abs(trace() - 1.0);
    if (tr_defect > 1e-10) {
        throw config_error("density-matrix trace deviates from 1 by " + format_double(tr_defect));
    }
}

double DensityMatrix::trace() const {
    KahanSum acc;
    for (std::size_t i = 0; i < dim_; ++i) acc.add(kernel_[i * dim_ + i].real());
    return acc.value() * grid_.cell_volume();
}

double DensityMatrix::max_hermiticity_defect() const {
    double defect = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = i; j < dim_; ++j) {
            defect = std::max(defect,
                              std::abs(kernel_[i * dim_ + j] - std::conj(kernel_[j * dim_ + i])));
        }
    }
    return defect;
}

double DensityMatrix::max_bosonic_defect() const {
    const int N = grid_.n_particles;
    double defect = 0.0;
    for (int b = 0; b + 1 < N; ++b) {
        for (std::size_t i = 0; i < dim_; ++i) {
            const std::size_t si = swap_blocks_index(grid_, i, b, b + 1);
            for (std::size_t j = 0; j < dim_; ++j) {
                const std::size_t sj = swap_blocks_index(grid_, j, b, b + 1);
                defect = std::max(defect,
                                  std::abs(kernel_[i * dim_ + j] - kernel_[si * dim_ + sj]));
            }
        }
    }
    return defect;
}

std::vector<double> DensityMatrix::diagonal() const {
    std::vector<double> diag(dim_);
    for (std::size_t i = 0; i < dim_; ++i) diag[i] = kernel_[i * dim_ + i].real();
    return diag;
}

DensityMatrix reduced_density_matrix(const WaveFunction& psi, int n) {
    const GridSpec& g = psi.grid();
    const int N = g.n_particles;
    if (n < 1 || n >= N) throw config_error("reduced density matrix needs 1 <= n < N");
    const GridSpec out_grid = g.with_particles(n);
    const std::size_t M = out_grid.size();
    if (M > max_matrix_dim()) {
        throw budget_error("reduced density matrix dimension " + std::to_string(M) +
                           " exceeds the cap of " + std::to_string(max_matrix_dim()));
    }
    require_within_cap(M * M * sizeof(cplx), "reduced density matrix");

    const std::size_t T = g.size() / M;
    const double w = std::pow(g.cell_width(), g.dim * (N - n));
    const cplx* v = psi.values().data();
    std::vector<cplx> kernel(M * M);
    for (std::size_t x = 0; x < M; ++x) {
        const cplx* px = v + x * T;
        for (std::size_t y = x; y < M; ++y) {
            const cplx* py = v + y * T;
            cplx acc = 0.0;
            for (std::size_t t = 0; t < T; ++t) acc += px[t] * std::conj(py[t]);
            acc *= w;
            kernel[x * M + y] = acc;
            kernel[y * M + x] = std::conj(acc);
        }
    }
    return DensityMatrix(out_grid, std::move(kernel));
}

DensityMatrix partial_trace(const DensityMatrix& gamma, int j) {
    const GridSpec& g = gamma.grid();
    const int k = g.n_particles;
    if (j < 1 || j >= k) throw config_error("partial trace needs 1 <= j < n");
    const GridSpec out_grid = g.with_particles(j);
    const std::size_t Mj = out_grid.size();
    const std::size_t W = g.size() / Mj;
    const std::size_t M = gamma.dim();
    const double weight = std::pow(g.cell_width(), g.dim * (k - j));
    std::vector<cplx> kernel(Mj * Mj);
    for (std::size_t x = 0; x < Mj; ++x) {
        for (std::size_t y = 0; y < Mj; ++y) {
            cplx acc = 0.0;
            for (std::size_t w0 = 0; w0 < W; ++w0) {
                acc += gamma.kernel()[(x * W + w0) * M + (y * W + w0)];
            }
            kernel[x * Mj + y] = acc * weight;
        }
    }
    return DensityMatrix(out_grid, std::move(kernel));
}

namespace {

// Cyclic Jacobi for dense Hermitian matrices. A is overwritten with the
// diagonalized matrix, V accumulates the (standard-orthonormal) eigenbasis.
void hermitian_jacobi(std::vector<cplx>& A, std::vector<cplx>& V, std::size_t n) {
    V.assign(n * n, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) V[i * n + i] = 1.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(A[i * n + i]));
    scale = std::max(scale, 1e-300);

    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(A[p * n + q]));
        }
        if (off <= 1e-15 * scale) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = A[p * n + q];
                const double aabs = std::abs(apq);
                if (aabs <= 1e-18 * scale) continue;
                const cplx phase = apq / aabs;
                const double app = A[p * n + p].real();
                const double aqq = A[q * n + q].real();
                const double dd = (app - aqq) / (2.0 * aabs);
                const double t = (dd >= 0.0 ? 1.0 : -1.0) / (std::abs(dd) + std::sqrt(dd * dd + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const cplx sp = s * phase;
                const cplx spc = s * std::conj(phase);
                // A <- A U with U = [[c, -s*phase], [s*conj(phase), c]] on (p,q)
                for (std::size_t r = 0; r < n; ++r) {
                    const cplx ap = A[r * n + p];
                    const cplx aq = A[r * n + q];
                    A[r * n + p] = c * ap + spc * aq;
                    A[r * n + q] = -sp * ap + c * aq;
                }
                // A <- U^dagger A
                for (std::size_t r = 0; r < n; ++r) {
                    const cplx bp = A[p * n + r];
                    const cplx bq = A[q * n + r];
                    A[p * n + r] = c * bp + sp * bq;
                    A[q * n + r] = -spc * bp + c * bq;
                }
                A[p * n + q] = 0.0;
                A[q * n + p] = 0.0;
                A[p * n + p] = cplx{A[p * n + p].real(), 0.0};
                A[q * n + q] = cplx{A[q * n + q].real(), 0.0};
                for (std::size_t r = 0; r < n; ++r) {
                    const cplx vp = V[r * n + p];
                    const cplx vq = V[r * n + q];
                    V[r * n + p] = c * vp + spc * vq;
                    V[r * n + q] = -sp * vp + c * vq;
                }
            }
        }
    }
}

} // namespace

SpectralDecomposition eigendecompose(const DensityMatrix& gamma) {
    const std::size_t n = gamma.dim();
    require_within_cap(2 * n * n * sizeof(cplx), "eigendecomposition");
    const double w = gamma.grid().cell_volume();

    // Uniform weights make the weighted problem a plain Hermitian one for
    // the scaled matrix B = K * h^(dn).
    std::vector<cplx> A(gamma.kernel());
    for (cplx& v : A) v *= w;
    std::vector<cplx> V;
    hermitian_jacobi(A, V, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = A[i * n + i].real();
    std::sort(order.begin(), order.end(),
              [&raw](std::size_t a, std::size_t b) { return raw[a] > raw[b]; });

    SpectralDecomposition out;
    out.grid = gamma.grid();
    out.min_raw_eigenvalue = *std::min_element(raw.begin(), raw.end());
    if (out.min_raw_eigenvalue < -1e-10) {
        throw config_error("density matrix is not positive semidefinite (min eigenvalue " +
                           format_double(out.min_raw_eigenvalue) + ")");
    }
    const double uscale = 1.0 / std::sqrt(w);
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.eigenvalues[j] = std::max(raw[src], 0.0);
        std::vector<cplx> u(n);
        for (std::size_t r = 0; r < n; ++r) u[r] = V[r * n + src] * uscale;
        out.eigenvectors[j] = std::move(u);
    }
    return out;
}

Density hoffmann_ostenhof_density(const SpectralDecomposition& decomp) {
    const std::size_t n = decomp.eigenvalues.size();
    if (n == 0) throw config_error("empty spectral decomposition");
    const std::size_t dim = decomp.eigenvectors.front().size();
    std::vector<KahanSum> acc(dim);
    for (std::size_t j = 0; j < n; ++j) {
        const double lambda = decomp.eigenvalues[j];
        if (lambda == 0.0) continue;
        const std::vector<cplx>& u = decomp.eigenvectors[j];
        for (std::size_t x = 0; x < dim; ++x) acc[x].add(lambda * std::norm(u[x]));
    }
    std::vector<double> vals(dim);
    for (std::size_t x = 0; x < dim; ++x) vals[x] = std::max(acc[x].value(), 0.0);
    return Density(decomp.grid, std::move(vals), Density::Symmetry::trusted);
}

double kinetic_trace(const DensityMatrix& gamma, const KineticSpec& spec) {
    spec.validate();
    if (spec.method != Method::spectral) {
        throw config_error("kinetic_trace evaluates the spectral method only");
    }
    const GridSpec& g = gamma.grid();
    const std::size_t M = gamma.dim();
    require_within_cap(M * M * sizeof(cplx), "kinetic trace scratch");

    // Row and column indices together form a 2n-particle tensor; the
    // sandwich F_b K F_b^dagger per block is a forward pass over the row
    // block and a conjugate pass over the matching column block.
    const GridSpec doubled = g.with_particles(2 * g.n_particles);
    const std::vector<double> mult = fractional_multiplier(g, spec.s);
    const double scale = std::pow(g.cell_width(), g.axes()) / static_cast<double>(g.block_size());
    const int d = g.dim;
    const std::size_t Bd = g.block_size();

    KahanSum total;
    for (int b = 0; b < g.n_particles; ++b) {
        std::vector<cplx> work(gamma.kernel());
        fft_axes(work.data(), doubled, b * d, (b + 1) * d, /*inverse=*/false);
        fft_axes(work.data(), doubled, g.axes() + b * d, g.axes() + (b + 1) * d, /*inverse=*/true);
        const std::size_t inner = checked_pow(static_cast<std::size_t>(g.m), g.axes() - (b + 1) * d);
        const std::size_t outer = M / (Bd * inner);
        KahanSum block_acc;
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t t = 0; t < Bd; ++t) {
                if (mult[t] == 0.0) continue;
                KahanSum diag;
                for (std::size_t i = 0; i < inner; ++i) {
                    const std::size_t X = (o * Bd + t) * inner + i;
                    diag.add(work[X * M + X].real());
                }
                block_acc.add(mult[t] * diag.value());
            }
        }
        total.add(block_acc.value() * scale);
    }
    return total.value();
}

SplitIdentity split_identity_check(const Density& mu, int n, const KineticSpec& spec) {
    const int N = mu.grid().n_particles;
    if (n < 1 || n >= N) throw config_error("split identity needs 1 <= n < N");
    SplitIdentity out;
    out.lhs = fisher_info(mu, spec).value;
    const WaveFunction psi = sqrt_density(mu);
    const DensityMatrix low = reduced_density_matrix(psi, n);
    const DensityMatrix high = reduced_density_matrix(psi, N - n);
    out.rhs = kinetic_trace(low, spec) + kinetic_trace(high, spec);
    return out;
}

double monomial_trace(const DensityMatrix& gamma, const std::vector<double>& phi) {
    if (phi.size() != gamma.dim()) {
        throw config_error("monomial test function size does not match the matrix grid");
    }
    for (double v : phi) {
        if (!std::isfinite(v)) throw config_error("monomial test function must be bounded");
    }
    KahanSum acc;
    for (std::size_t x = 0; x < gamma.dim(); ++x) {
        acc.add(phi[x] * gamma.kernel()[x * gamma.dim() + x].real());
    }
    return acc.value() * gamma.grid().cell_volume();
}

} // namespace fisherkin
