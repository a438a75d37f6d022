#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "fisherkin/budget.hpp"
#include "fisherkin/fft.hpp"
#include "fisherkin/grid.hpp"
#include "fisherkin/numeric.hpp"

using namespace fisherkin;

namespace {

std::vector<cplx> naive_dft(const std::vector<cplx>& in) {
    const int m = static_cast<int>(in.size());
    std::vector<cplx> out(m);
    for (int q = 0; q < m; ++q) {
        cplx acc = 0.0;
        for (int k = 0; k < m; ++k) {
            acc += in[k] * std::polar(1.0, -2.0 * M_PI * q * k / m);
        }
        out[q] = acc;
    }
    return out;
}

} // namespace

TEST_CASE("grid spec basics") {
    GridSpec g{2, 3, 8, 4.0};
    CHECK(g.axes() == 6);
    CHECK(g.size() == 262144);
    CHECK(g.block_size() == 64);
    CHECK(g.cell_width() == doctest::Approx(0.5));
    CHECK(axis_stride(g, 5) == 1);
    CHECK(axis_stride(g, 0) == 32768);

    CHECK_THROWS_AS((GridSpec{0, 1, 8, 1.0}).validate(), config_error);
    CHECK_THROWS_AS((GridSpec{1, 1, 1, 1.0}).validate(), config_error);
    CHECK_THROWS_AS((GridSpec{1, 1, 8, -1.0}).validate(), config_error);
}

TEST_CASE("signed modes and block swaps") {
    CHECK(signed_mode(0, 8) == 0);
    CHECK(signed_mode(3, 8) == 3);
    CHECK(signed_mode(4, 8) == -4);
    CHECK(signed_mode(7, 8) == -1);

    GridSpec g{1, 3, 4, 1.0};
    // flat = ((x1*4) + x2)*4 + x3
    const std::size_t flat = (2 * 4 + 1) * 4 + 3; // (2,1,3)
    CHECK(swap_blocks_index(g, flat, 0, 1) == (1 * 4 + 2) * 4 + 3);
    CHECK(swap_blocks_index(g, flat, 1, 2) == (2 * 4 + 3) * 4 + 1);
    CHECK(swap_blocks_index(g, swap_blocks_index(g, flat, 0, 2), 0, 2) == flat);
}

TEST_CASE("fft matches the naive transform") {
    for (int m : {8, 12}) {
        Rng rng(11 + m);
        std::vector<cplx> line(m);
        for (cplx& v : line) v = cplx{rng.normal(), rng.normal()};
        std::vector<cplx> expect = naive_dft(line);
        std::vector<cplx> got = line;
        Fft plan(m);
        plan.forward(got.data());
        for (int i = 0; i < m; ++i) CHECK(std::abs(got[i] - expect[i]) < 1e-12);

        // unscaled round trip gains a factor m
        plan.inverse(got.data());
        for (int i = 0; i < m; ++i) CHECK(std::abs(got[i] - double(m) * line[i]) < 1e-12);
    }
}

TEST_CASE("fft parseval") {
    const int m = 64;
    Rng rng(3);
    std::vector<cplx> line(m);
    double direct = 0.0;
    for (cplx& v : line) {
        v = cplx{rng.normal(), rng.normal()};
        direct += std::norm(v);
    }
    Fft plan(m);
    plan.forward(line.data());
    double spectral = 0.0;
    for (const cplx& v : line) spectral += std::norm(v);
    CHECK(spectral == doctest::Approx(m * direct).epsilon(1e-13));
}

TEST_CASE("axis transform equals per-line transforms") {
    GridSpec g{1, 2, 8, 1.0};
    Rng rng(5);
    std::vector<cplx> data(g.size());
    for (cplx& v : data) v = cplx{rng.normal(), rng.normal()};

    // axis 1 has stride 1: rows transform independently
    std::vector<cplx> expect = data;
    Fft plan(8);
    for (int row = 0; row < 8; ++row) plan.forward(expect.data() + row * 8);

    std::vector<cplx> got = data;
    fft_axes(got.data(), g, 1, 2, false);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - expect[i]) < 1e-12);

    // axis 0 has stride 8: columns
    expect = data;
    std::vector<cplx> col(8);
    for (int c = 0; c < 8; ++c) {
        for (int r = 0; r < 8; ++r) col[r] = expect[r * 8 + c];
        plan.forward(col.data());
        for (int r = 0; r < 8; ++r) expect[r * 8 + c] = col[r];
    }
    got = data;
    fft_axes(got.data(), g, 0, 1, false);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - expect[i]) < 1e-12);
}

TEST_CASE("kahan summation survives hostile ordering") {
    KahanSum acc;
    acc.add(1.0);
    for (int i = 0; i < 1000000; ++i) acc.add(1e-16);
    CHECK(acc.value() == doctest::Approx(1.0 + 1e-10).epsilon(1e-12));
}

TEST_CASE("rng determinism") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(43);
    CHECK(c.next_u64() != d.next_u64());
}
