#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fisherkin/density.hpp"
#include "fisherkin/spectral.hpp"

namespace fisherkin {

// I_s[mu_N] - I_s[mu^(n)] - I_s[mu^(N-n)]; superadditivity predicts >= 0.
double superadditivity_gap(const Density& mu, int n, const KineticSpec& spec);

// (1/N) I_s[mu_N] - (1/n) I_s[mu^(n)] for n | N; predicted >= 0.
double normalized_monotonicity_check(const Density& mu, int n, const KineticSpec& spec);

// g_n = (1/n) I_s[mu^(n)] with mu^(n) = sum_i w_i rho_i^{(x)n}, n = 1..n_max.
std::vector<std::pair<int, double>> mean_info_sequence(const MixingMeasure& P,
                                                       const KineticSpec& spec, int n_max);

// sum_i w_i I_s[rho_i] - g_n; affinity predicts >= 0, shrinking in n.
double affinity_defect(const MixingMeasure& P, const KineticSpec& spec, int n);

// <u, h u> - <|u|, h |u|>; positivity preservation predicts >= 0.
double diamagnetic_test(const WaveFunction& u, const KineticSpec& spec);

// t I_s[rho1] + (1-t) I_s[rho2] - I_s[t rho1 + (1-t) rho2]; >= 0 by convexity.
double convexity_test(const Density& rho1, const Density& rho2, double t,
                      const KineticSpec& spec);

struct SuiteConfig {
    std::uint64_t master_seed = 1;
    int trials = -1; // -1 = suite default, 0 = empty (vacuously passing) report
    int n_max = 6;   // mean-information depth (affinity suite)
};

// One quantified check. For inequality suites `gap` is the slack (the
// theorem predicts >= 0); for identity suites it is minus the error.
// A trial passes when gap >= threshold.
struct TrialRecord {
    int index = 0;
    std::uint64_t seed = 0;
    std::string label;
    std::uint64_t input_digest = 0;
    double gap = 0.0;
    double threshold = 0.0;
    bool ok = true;
};

struct SuiteReport {
    std::string suite;
    double tolerance = 0.0; // the suite's headline relative tolerance
    std::vector<TrialRecord> records;
    double min_gap = 0.0;
    double max_gap = 0.0;
    double mean_gap = 0.0;
    bool pass = false;
    double runtime_seconds = 0.0;
    std::string note; // e.g. the recorded exponent convention
    std::uint64_t digest = 0; // over record content, runtime excluded

    int trials() const { return static_cast<int>(records.size()); }
    std::string to_json() const;
    std::string to_csv() const;
};

const std::vector<std::string>& suite_names();

// Runs one named suite: {superadd, monotone, affinity, diamagnetic,
// convexity, split, hoffmann, monomial, bbm, method-agreement}.
// Deterministic given the config; individual trial failures are recorded,
// never fatal.
SuiteReport run_suite(const std::string& name, const SuiteConfig& config);

} // namespace fisherkin
