#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "fisherkin/budget.hpp"
#include "fisherkin/harness.hpp"
#include "fisherkin/numeric.hpp"

#include "test_util.hpp"

using namespace fisherkin;
using fktest::grid1d;

namespace {

KineticSpec spectral_spec(double s) {
    KineticSpec spec;
    spec.s = s;
    return spec;
}

MixingMeasure separated_mixture(int m, double sigma2) {
    const GridSpec g1 = grid1d(1, m);
    MixingMeasure P;
    P.atoms.push_back({0.5, gaussian_density(g1, {4.0}, sigma2)});
    P.atoms.push_back({0.5, gaussian_density(g1, {12.0}, sigma2)});
    return P;
}

} // namespace

TEST_CASE("superadditivity gap: product states sit on the equality case") {
    const Density rho = gaussian_density(grid1d(1, 32), {8.0}, 2.0);
    const Density prod = product_density(rho, 3);
    for (double s : {0.5, 1.0}) {
        const double info = fisher_info(prod, spectral_spec(s)).value;
        const double gap = superadditivity_gap(prod, 1, spectral_spec(s));
        CHECK(std::abs(gap) <= 1e-10 * (1.0 + info));
    }
}

TEST_CASE("superadditivity gap: symmetric in n <-> N-n and strictly positive on mixtures") {
    const Density mu = mixture_product_density(separated_mixture(32, 4.0), 3);
    for (double s : {0.5, 1.0}) {
        const double g1 = superadditivity_gap(mu, 1, spectral_spec(s));
        const double g2 = superadditivity_gap(mu, 2, spectral_spec(s));
        CHECK(g1 == g2); // same marginals, same expression
        const double info = fisher_info(mu, spectral_spec(s)).value;
        CHECK(g1 > 0.01 * info);
    }
    CHECK_THROWS_AS(superadditivity_gap(mu, 3, spectral_spec(1.0)), config_error);
}

TEST_CASE("normalized monotonicity: products vanish, N=2 halves the gap") {
    const Density rho = gaussian_density(grid1d(1, 32), {8.0}, 2.0);
    const Density prod = product_density(rho, 4);
    const double v = normalized_monotonicity_check(prod, 2, spectral_spec(0.5));
    CHECK(std::abs(v) <= 1e-10 * (1.0 + fisher_info(prod, spectral_spec(0.5)).value));

    const Density mu = random_density(grid1d(2, 16), 5, 1.0);
    const double mono = normalized_monotonicity_check(mu, 1, spectral_spec(1.0));
    const double gap = superadditivity_gap(mu, 1, spectral_spec(1.0));
    CHECK(fktest::close_rel(mono, gap / 2.0, 1e-10));

    const Density mu3 = random_density(grid1d(3, 8), 5, 1.0);
    CHECK_THROWS_AS(normalized_monotonicity_check(mu3, 2, spectral_spec(1.0)), config_error);
}

TEST_CASE("mean information sequence: single atom is constant") {
    MixingMeasure P;
    P.atoms.push_back({1.0, gaussian_density(grid1d(1, 16), {8.0}, 2.0)});
    const double base = fisher_info(P.atoms[0].rho, spectral_spec(0.5)).value;
    const auto rows = mean_info_sequence(P, spectral_spec(0.5), 4);
    CHECK(rows.size() == 4);
    for (const auto& [n, g_n] : rows) {
        CHECK(fktest::close_rel(g_n, base, 1e-11));
    }
}

TEST_CASE("affinity defect: degenerate mixtures vanish, g_1 obeys convexity") {
    const Density rho = gaussian_density(grid1d(1, 16), {8.0}, 2.0);
    MixingMeasure single;
    single.atoms.push_back({1.0, rho});
    MixingMeasure twin;
    twin.atoms.push_back({0.5, rho});
    twin.atoms.push_back({0.5, rho});
    for (double s : {0.5, 1.0}) {
        for (int n : {1, 2, 3}) {
            CHECK(std::abs(affinity_defect(single, spectral_spec(s), n)) < 1e-10);
            CHECK(std::abs(affinity_defect(twin, spectral_spec(s), n)) < 1e-10);
        }
    }

    const MixingMeasure P = separated_mixture(32, 4.0);
    for (double s : {0.5, 1.0}) {
        CHECK(affinity_defect(P, spectral_spec(s), 1) >= -1e-12);
    }
}

TEST_CASE("diamagnetic test: phases that change nothing") {
    const Density rho = random_density(grid1d(1, 32), 10, 1.0);
    const WaveFunction real_u = sqrt_density(rho);
    for (double s : {0.5, 1.0}) {
        CHECK(std::abs(diamagnetic_test(real_u, spectral_spec(s))) < 1e-12);
    }

    std::vector<cplx> rotated(real_u.size());
    const cplx phase = std::polar(1.0, 0.7);
    for (std::size_t i = 0; i < rotated.size(); ++i) rotated[i] = real_u.values()[i] * phase;
    const WaveFunction global(rho.grid(), std::move(rotated));
    const double i1 = kinetic_form(global, spectral_spec(1.0));
    CHECK(std::abs(diamagnetic_test(global, spectral_spec(1.0))) <= 1e-12 * (1.0 + i1));

    // a genuinely varying phase produces a strict gap
    std::vector<cplx> twisted(real_u.size());
    const GridSpec& g = rho.grid();
    for (std::size_t i = 0; i < twisted.size(); ++i) {
        const double x = static_cast<double>(i) * g.cell_width();
        twisted[i] = real_u.values()[i] * std::polar(1.0, std::sin(2.0 * M_PI * x / g.period));
    }
    const WaveFunction wf(g, std::move(twisted));
    CHECK(diamagnetic_test(wf, spectral_spec(1.0)) > 1e-4);
}

TEST_CASE("convexity test: endpoints and coincident inputs are exact zeros") {
    const Density r1 = random_density(grid1d(1, 32), 1, 1.0);
    const Density r2 = random_density(grid1d(1, 32), 2, 1.0);
    for (double s : {0.5, 1.0}) {
        CHECK(std::abs(convexity_test(r1, r2, 0.0, spectral_spec(s))) < 1e-12);
        CHECK(std::abs(convexity_test(r1, r2, 1.0, spectral_spec(s))) < 1e-12);
        CHECK(std::abs(convexity_test(r1, r1, 0.37, spectral_spec(s))) < 1e-11);
        CHECK(convexity_test(r1, r2, 0.5, spectral_spec(s)) > -1e-12);
    }
    CHECK_THROWS_AS(convexity_test(r1, r2, 1.5, spectral_spec(1.0)), config_error);

    // overlapping bumps: the even mixture loses a visible share of information
    const MixingMeasure P = separated_mixture(64, 4.0);
    const double gap = convexity_test(P.atoms[0].rho, P.atoms[1].rho, 0.5, spectral_spec(1.0));
    const double avg = 0.5 * fisher_info(P.atoms[0].rho, spectral_spec(1.0)).value +
                       0.5 * fisher_info(P.atoms[1].rho, spectral_spec(1.0)).value;
    CHECK(gap > 0.01 * avg);
}

TEST_CASE("suite runner: determinism, vacuous configs, unknown names") {
    SuiteConfig cfg;
    cfg.master_seed = 77;
    cfg.trials = 3;
    const SuiteReport a = run_suite("monomial", cfg);
    const SuiteReport b = run_suite("monomial", cfg);
    CHECK(a.digest == b.digest);
    CHECK(a.pass);
    CHECK(a.trials() == b.trials());

    SuiteConfig empty;
    empty.trials = 0;
    for (const std::string& name : suite_names()) {
        const SuiteReport rep = run_suite(name, empty);
        CHECK(rep.pass);
        CHECK(rep.trials() == 0);
    }

    CHECK_THROWS_AS(run_suite("nonsense", cfg), config_error);
    CHECK(suite_names().size() == 10);
}

TEST_CASE("suite report serialization") {
    SuiteConfig cfg;
    cfg.trials = 2;
    const SuiteReport rep = run_suite("split", cfg);
    CHECK(rep.pass);

    const nlohmann::json j = nlohmann::json::parse(rep.to_json());
    CHECK(j.at("suite").get<std::string>() == "split");
    CHECK(j.at("pass").get<bool>());
    CHECK(j.at("records").size() == rep.records.size());

    const std::string csv = rep.to_csv();
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == rep.records.size() + 1);
}

TEST_CASE("small deterministic runs of the quantified suites pass") {
    SuiteConfig cfg;
    cfg.trials = 4;
    for (const std::string name : {"superadd", "monotone", "diamagnetic", "convexity",
                                   "split", "hoffmann", "monomial"}) {
        const SuiteReport rep = run_suite(name, cfg);
        INFO(name, ": min gap ", rep.min_gap, " note ", rep.note);
        CHECK(rep.pass);
    }
}
