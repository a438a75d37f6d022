#include "fisherkin/fft.hpp"

#include <cmath>

#include "fisherkin/budget.hpp"

namespace fisherkin {

namespace {
bool is_pow2(int m) { return m > 0 && (m & (m - 1)) == 0; }
} // namespace

Fft::Fft(int m) : m_(m), pow2_(is_pow2(m)) {
    if (m < 1) throw config_error("fft length must be positive");
    if (pow2_) {
        twiddle_.resize(m_ / 2);
        for (int j = 0; j < m_ / 2; ++j) {
            twiddle_[j] = std::polar(1.0, -2.0 * M_PI * j / m_);
        }
        rev_.resize(m_);
        int bits = 0;
        while ((1 << bits) < m_) ++bits;
        for (int i = 0; i < m_; ++i) {
            std::uint32_t r = 0;
            for (int b = 0; b < bits; ++b) {
                if (i & (1 << b)) r |= 1u << (bits - 1 - b);
            }
            rev_[i] = r;
        }
    } else {
        roots_.resize(m_);
        for (int j = 0; j < m_; ++j) {
            roots_[j] = std::polar(1.0, -2.0 * M_PI * j / m_);
        }
    }
}

void Fft::transform(cplx* line, bool inv) const {
    if (pow2_) {
        for (int i = 0; i < m_; ++i) {
            const int r = static_cast<int>(rev_[i]);
            if (i < r) std::swap(line[i], line[r]);
        }
        for (int len = 2; len <= m_; len <<= 1) {
            const int half = len >> 1;
            const int step = m_ / len;
            for (int base = 0; base < m_; base += len) {
                for (int j = 0; j < half; ++j) {
                    cplx w = twiddle_[static_cast<std::size_t>(j) * step];
                    if (inv) w = std::conj(w);
                    const cplx u = line[base + j];
                    const cplx v = line[base + half + j] * w;
                    line[base + j] = u + v;
                    line[base + half + j] = u - v;
                }
            }
        }
    } else {
        // Direct transform; axes are short so O(m^2) is acceptable.
        cplx out[512];
        if (m_ > 512) throw budget_error("direct dft limited to m <= 512");
        for (int q = 0; q < m_; ++q) {
            cplx acc = 0.0;
            for (int k = 0; k < m_; ++k) {
                cplx r = roots_[(static_cast<std::size_t>(q) * k) % m_];
                if (inv) r = std::conj(r);
                acc += line[k] * r;
            }
            out[q] = acc;
        }
        for (int q = 0; q < m_; ++q) line[q] = out[q];
    }
}

void Fft::forward(cplx* line) const { transform(line, false); }
void Fft::inverse(cplx* line) const { transform(line, true); }

void fft_axis(cplx* data, std::size_t total, std::size_t stride, const Fft& plan, bool inverse) {
    const int m = plan.length();
    const std::size_t chunk = stride * static_cast<std::size_t>(m);
    std::vector<cplx> line(m);
    for (std::size_t base = 0; base < total; base += chunk) {
        for (std::size_t inner = 0; inner < stride; ++inner) {
            cplx* p = data + base + inner;
            if (stride == 1) {
                if (inverse) plan.inverse(p);
                else plan.forward(p);
                continue;
            }
            for (int j = 0; j < m; ++j) line[j] = p[static_cast<std::size_t>(j) * stride];
            if (inverse) plan.inverse(line.data());
            else plan.forward(line.data());
            for (int j = 0; j < m; ++j) p[static_cast<std::size_t>(j) * stride] = line[j];
        }
    }
}

void fft_axes(cplx* data, const GridSpec& g, int axis_begin, int axis_end, bool inverse) {
    const Fft plan(g.m);
    const std::size_t total = g.size();
    for (int a = axis_begin; a < axis_end; ++a) {
        fft_axis(data, total, axis_stride(g, a), plan, inverse);
    }
}

} // namespace fisherkin
