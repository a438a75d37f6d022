#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fisherkin {

// Uniform periodic tensor grid for N particles in dimension d.
// Nodes per axis sit at x_i = i*L/m, i in {0,..,m-1}; the domain is the
// torus [0,L)^(d*N). Storage is row-major with axis order x_1,..,x_N and
// d contiguous sub-axes per particle (particle 1 slowest).
struct GridSpec {
    int dim = 1;         // d, coordinates per particle
    int n_particles = 1; // N
    int m = 2;           // nodes per axis
    double period = 1.0; // L, box length per axis

    int axes() const { return dim * n_particles; }
    double cell_width() const { return period / m; }
    double cell_volume() const; // (L/m)^(d*N)

    std::size_t block_size() const; // m^d, nodes of one particle block
    std::size_t size() const;       // m^(d*N), total nodes

    // Same single-particle geometry, different particle count.
    GridSpec with_particles(int n) const;

    void validate() const; // throws config_error

    bool operator==(const GridSpec&) const = default;
};

// m^k with overflow detection.
std::size_t checked_pow(std::size_t m, int k);

// Stride of `axis` in the row-major layout (axis 0 slowest).
std::size_t axis_stride(const GridSpec& g, int axis);

// Flat index with particle blocks b1 and b2 exchanged (0-based blocks).
std::size_t swap_blocks_index(const GridSpec& g, std::size_t flat, int b1, int b2);

// Signed mode number for DFT bin q on an m-point axis: {-m/2,..,m/2-1}.
inline long signed_mode(int q, int m) { return q < (m + 1) / 2 ? q : q - m; }

// Squared torus (minimum-image) distance between two single-particle nodes
// given their per-axis index difference delta in [0,m)^d.
double torus_dist_sq(const GridSpec& g, const std::vector<int>& delta);

} // namespace fisherkin
