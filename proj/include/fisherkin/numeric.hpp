#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace fisherkin {

// Compensated (Kahan) accumulator. All grid reductions go through this so
// that results are deterministic and accurate to a few ulps regardless of
// the number of terms.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

// Self-contained counter-free PRNG (splitmix64 core). The standard library
// distributions are not bit-reproducible across implementations; this one is.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (pair cached).
    double normal();

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stream derivation: an independent seed for (master, stream index).
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

// FNV-1a over raw bytes, used for input digests and report digests.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL);

// Shortest-round-trip style formatting for reports ("%.17g").
std::string format_double(double x);

} // namespace fisherkin
