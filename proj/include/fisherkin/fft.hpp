#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fisherkin/grid.hpp"

namespace fisherkin {

using cplx = std::complex<double>;

// One-axis DFT plan. Radix-2 Cooley-Tukey for power-of-two lengths,
// direct O(m^2) transform otherwise (grid axes are short).
// Unscaled in both directions: inverse(forward(x)) = m * x.
class Fft {
public:
    explicit Fft(int m);

    int length() const { return m_; }
    void forward(cplx* line) const; // kernel e^{-2*pi*i*q*k/m}
    void inverse(cplx* line) const; // kernel e^{+2*pi*i*q*k/m}

private:
    void transform(cplx* line, bool inv) const;

    int m_;
    bool pow2_;
    std::vector<cplx> twiddle_;       // e^{-2*pi*i*j/m}, j < m/2 (radix-2)
    std::vector<std::uint32_t> rev_;  // bit-reversal permutation
    std::vector<cplx> roots_;         // e^{-2*pi*i*j/m}, j < m (direct)
};

// In-place transform along one tensor axis of a row-major array.
// The array is viewed as [outer][m][stride]; every line of extent m and
// step `stride` is transformed.
void fft_axis(cplx* data, std::size_t total, std::size_t stride, const Fft& plan, bool inverse);

// Transform along the half-open axis range [axis_begin, axis_end) of a grid
// array (all axes have extent g.m).
void fft_axes(cplx* data, const GridSpec& g, int axis_begin, int axis_end, bool inverse);

} // namespace fisherkin
