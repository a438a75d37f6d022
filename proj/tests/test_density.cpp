#include <doctest.h>

#include <cmath>
#include <vector>

#include "fisherkin/budget.hpp"
#include "fisherkin/density.hpp"
#include "fisherkin/numeric.hpp"

#include "test_util.hpp"

using namespace fisherkin;
using fktest::grid1d;

namespace {

double discrete_variance(const Density& mu, double mean) {
    const GridSpec& g = mu.grid();
    const double h = g.cell_width();
    const double L = g.period;
    KahanSum acc;
    for (int i = 0; i < g.m; ++i) {
        double dx = std::abs(i * h - mean);
        dx = std::min(dx, L - dx);
        acc.add(dx * dx * mu[i]);
    }
    return acc.value() * h;
}

} // namespace

TEST_CASE("gaussian density: mass and variance against quadrature") {
    const GridSpec g = grid1d(1, 64);
    const Density mu = gaussian_density(g, {8.0}, 1.0);
    CHECK(std::abs(mu.mass() - 1.0) < 1e-12);

    // Oracle: fine quadrature of the continuum Gaussian's second moment.
    const double oracle = fktest::simpson(
        [](double x) { return x * x * std::exp(-x * x / 2.0) / std::sqrt(2.0 * M_PI); }, -8.0,
        8.0, 20000);
    CHECK(fktest::close_abs(oracle, 1.0, 1e-9));
    CHECK(fktest::close_rel(discrete_variance(mu, 8.0), oracle, 1e-6));
}

TEST_CASE("gaussian density: peak at the node nearest the mean") {
    const GridSpec g = grid1d(1, 64);
    const Density mu = gaussian_density(g, {5.1}, 0.5);
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] > mu[argmax]) argmax = i;
    }
    CHECK(argmax == 20); // 5.1 / 0.25 = 20.4 -> node 20
}

TEST_CASE("gaussian density: periodic in the mean") {
    const GridSpec g = grid1d(1, 32);
    const Density a = gaussian_density(g, {3.0}, 1.5);
    const Density b = gaussian_density(g, {3.0 + 16.0}, 1.5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(fktest::close_rel(a[i], b[i], 1e-14));
    }
}

TEST_CASE("gaussian density rejects an unconfined variance") {
    const GridSpec g = grid1d(1, 32);
    CHECK_THROWS_AS(gaussian_density(g, {8.0}, 4.1), config_error); // (L/8)^2 = 4
    CHECK_NOTHROW(gaussian_density(g, {8.0}, 4.0));
    CHECK_THROWS_AS(gaussian_density(g, {8.0}, -1.0), config_error);
    CHECK_THROWS_AS(gaussian_density(grid1d(2, 16), {8.0}, 1.0), config_error);
}

TEST_CASE("product density: uniform, mass, factorization") {
    const GridSpec g = grid1d(1, 16);
    const Density uni = uniform_density(g);
    const Density uni3 = product_density(uni, 3);
    const Density expect = uniform_density(grid1d(3, 16));
    for (std::size_t i = 0; i < uni3.size(); ++i) CHECK(uni3[i] == doctest::Approx(expect[i]));

    const Density rho = gaussian_density(g, {8.0}, 2.0);
    const Density rho3 = product_density(rho, 3);
    CHECK(std::abs(rho3.mass() - 1.0) < 1e-12);
    const Density back = marginal(rho3, 1);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        CHECK(fktest::close_rel(back[i], rho[i], 1e-13));
    }
}

TEST_CASE("marginal: brute-force oracle on a random 3-particle density") {
    const GridSpec g = grid1d(3, 8);
    const Density mu = random_density(g, 99, 1.0);
    const Density marg = marginal(mu, 1);

    const int m = 8;
    const double h = g.cell_width();
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < m; ++k) {
                acc += mu[(std::size_t(i) * m + j) * m + k];
            }
        }
        CHECK(fktest::close_rel(marg[i], acc * h * h, 1e-12));
    }
}

TEST_CASE("marginal: iterated equals direct") {
    const Density mu = random_density(grid1d(3, 8), 7, 1.0);
    const Density two_step = marginal(marginal(mu, 2), 1);
    const Density direct = marginal(mu, 1);
    for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(std::abs(two_step[i] - direct[i]) <= 1e-13);
    }
}

TEST_CASE("marginal: linear over mixtures") {
    const GridSpec g1 = grid1d(1, 16);
    MixingMeasure P;
    P.atoms.push_back({0.5, gaussian_density(g1, {4.0}, 1.0)});
    P.atoms.push_back({0.5, gaussian_density(g1, {12.0}, 2.0)});
    const Density mu2 = mixture_product_density(P, 2);
    const Density marg = marginal(mu2, 1);
    for (std::size_t i = 0; i < marg.size(); ++i) {
        const double expect = 0.5 * P.atoms[0].rho[i] + 0.5 * P.atoms[1].rho[i];
        CHECK(fktest::close_rel(marg[i], expect, 1e-12));
    }
    CHECK_THROWS_AS(marginal(marg, 1), config_error);
}

TEST_CASE("mixture consistency under marginalization") {
    const GridSpec g1 = grid1d(1, 8);
    MixingMeasure P;
    P.atoms.push_back({0.3, gaussian_density(g1, {4.0}, 1.0)});
    P.atoms.push_back({0.7, gaussian_density(g1, {10.0}, 2.0)});
    const Density mu3 = mixture_product_density(P, 3);
    const Density mu2 = mixture_product_density(P, 2);
    const Density marg = marginal(mu3, 2);
    for (std::size_t i = 0; i < mu2.size(); ++i) {
        CHECK(fktest::close_rel(marg[i], mu2[i], 1e-12));
    }

    // single atom reduces to the plain product
    MixingMeasure single;
    single.atoms.push_back({1.0, P.atoms[0].rho});
    const Density direct = product_density(P.atoms[0].rho, 2);
    const Density via_mix = mixture_product_density(single, 2);
    for (std::size_t i = 0; i < direct.size(); ++i) {
        CHECK(via_mix[i] == doctest::Approx(direct[i]).epsilon(1e-14));
    }

    // n = 1 is the pointwise average
    const Density avg = mixture_product_density(P, 1);
    for (std::size_t i = 0; i < avg.size(); ++i) {
        const double expect = 0.3 * P.atoms[0].rho[i] + 0.7 * P.atoms[1].rho[i];
        CHECK(fktest::close_rel(avg[i], expect, 1e-13));
    }
}

TEST_CASE("mixing measure validation") {
    const GridSpec g1 = grid1d(1, 8);
    MixingMeasure bad_weight;
    bad_weight.atoms.push_back({0.5, gaussian_density(g1, {4.0}, 1.0)});
    CHECK_THROWS_AS(bad_weight.validate(), config_error);

    MixingMeasure empty;
    CHECK_THROWS_AS(mixture_product_density(empty, 2), config_error);
}

TEST_CASE("symmetrize: idempotence and the two-particle formula") {
    const GridSpec g = grid1d(2, 8);
    const Density sym = random_density(g, 4, 1.0);
    const Density again = symmetrize(sym.values(), g);
    for (std::size_t i = 0; i < sym.size(); ++i) {
        CHECK(std::abs(again[i] - sym[i]) <= 1e-15 * sym.max_value());
    }

    Rng rng(12);
    std::vector<double> raw(g.size());
    for (double& v : raw) v = rng.uniform() + 0.1;
    const Density s1 = symmetrize(raw, g);
    CHECK(s1.max_swap_deviation() == 0.0); // orbit averaging is exact

    // f(x,y) + f(y,x) over 2, then normalized
    double mass = 0.0;
    for (double v : raw) mass += v;
    mass *= g.cell_volume();
    for (int x = 0; x < 8; ++x) {
        for (int y = 0; y < 8; ++y) {
            const double expect = 0.5 * (raw[x * 8 + y] + raw[y * 8 + x]) / mass;
            CHECK(fktest::close_rel(s1[x * 8 + y], expect, 1e-12));
        }
    }

    raw[3] = -1.0;
    CHECK_THROWS_AS(symmetrize(raw, g), config_error);
    std::vector<double> zeros(g.size(), 0.0);
    CHECK_THROWS_AS(symmetrize(zeros, g), config_error);
}

TEST_CASE("random density: determinism and invariants") {
    const GridSpec g = grid1d(3, 8);
    const Density a = random_density(g, 2024, 1.0);
    const Density b = random_density(g, 2024, 1.0);
    CHECK(a.digest() == b.digest());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    CHECK(std::abs(a.mass() - 1.0) < 1e-12);
    CHECK(a.min_value() > 0.0);
    CHECK(a.max_swap_deviation() <= 1e-12 * a.max_value());

    const Density c = random_density(g, 2025, 1.0);
    double l1 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) l1 += std::abs(a[i] - c[i]);
    CHECK(l1 * g.cell_volume() > 1e-3);
}

TEST_CASE("density invariant enforcement") {
    const GridSpec g = grid1d(2, 4);
    std::vector<double> vals(g.size(), 1.0 / (16.0 * 16.0));

    CHECK_NOTHROW(Density(g, vals));

    std::vector<double> negative = vals;
    negative[0] = -negative[0];
    CHECK_THROWS_AS(Density(g, negative), config_error);

    std::vector<double> unnormalized = vals;
    for (double& v : unnormalized) v *= 1.5;
    CHECK_THROWS_AS(Density(g, unnormalized), config_error);

    std::vector<double> asym = vals;
    asym[1] += 0.5 / (16.0 * 16.0); // node (0,1) only
    double mass = 0.0;
    for (double v : asym) mass += v;
    mass *= g.cell_volume();
    for (double& v : asym) v /= mass;
    CHECK_THROWS_AS(Density(g, asym, Density::Symmetry::check), config_error);
}

TEST_CASE("memory budget refusal") {
    const std::size_t old_cap = memory_cap();
    set_memory_cap(1024);
    CHECK_THROWS_AS(uniform_density(grid1d(2, 64)), budget_error);
    set_memory_cap(old_cap);
    CHECK_NOTHROW(uniform_density(grid1d(2, 64)));
}
