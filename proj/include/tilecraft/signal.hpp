#pragma once

// Periodic sampled signals and their discrete Fourier analysis.
//
// Unit system: a grid (g, b) has n = 2^g samples over a box of physical
// length L = 2*pi*2^b, so the sample spacing is dx = 2*pi*2^(b-g) and the
// spectral bins sit at xi_q = q * 2^-b for q in [-n/2, n/2). Putting the box
// length in "2*pi units" makes every dyadic frequency of scale >= -b land
// exactly on a bin, which is what keeps modulations, packet spectra and
// one-sided cutoffs exact instead of leaky.
//
// Transform normalization: forward multiplies the sample sum by dx, the
// inverse multiplies the bin sum by dxi/(2*pi). Then Parseval reads
// dx*sum f g* = (dxi/2*pi)*sum fhat ghat*, carrying the 1/(2*pi) constant of
// the continuum inversion theorem.

#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace tilecraft {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi_v<double>;

struct Grid {
    int log2n = 10; // samples = 2^log2n
    int box_exp = 4; // box length = 2*pi * 2^box_exp

    Grid() = default;
    Grid(int g, int b) : log2n(g), box_exp(b) {
        if (g < 2 || g > 24) throw std::invalid_argument("Grid: log2n out of [2,24]");
        if (b < -20 || b > 20) throw std::invalid_argument("Grid: box_exp out of range");
    }

    std::size_t n() const { return std::size_t(1) << log2n; }
    double dx() const { return std::ldexp(two_pi, box_exp - log2n); }
    double dxi() const { return std::ldexp(1.0, -box_exp); }
    double box_length() const { return std::ldexp(two_pi, box_exp); }
    // largest representable |xi|
    double coverage() const { return std::ldexp(1.0, log2n - box_exp - 1); }

    std::int64_t min_bin() const { return -(std::int64_t(1) << (log2n - 1)); }
    std::int64_t max_bin() const { return (std::int64_t(1) << (log2n - 1)) - 1; }
    bool bin_in_range(std::int64_t q) const { return q >= min_bin() && q <= max_bin(); }
    double bin_freq(std::int64_t q) const { return std::ldexp(double(q), -box_exp); }
    // storage slot of logical bin q (natural FFT order, negative bins wrap)
    std::size_t bin_slot(std::int64_t q) const { return std::size_t(q) & (n() - 1); }

    // exact bin index of a grid-aligned frequency; throws if xi is not a bin
    std::int64_t freq_to_bin(double xi) const {
        double scaled = std::ldexp(xi, box_exp);
        double r = std::nearbyint(scaled);
        if (scaled != r) throw std::invalid_argument("Grid::freq_to_bin: frequency not grid-aligned");
        if (!bin_in_range(std::int64_t(r))) throw std::invalid_argument("Grid::freq_to_bin: frequency outside coverage");
        return std::int64_t(r);
    }
    bool freq_aligned(double xi) const {
        double scaled = std::ldexp(xi, box_exp);
        return scaled == std::nearbyint(scaled) && bin_in_range(std::int64_t(std::nearbyint(scaled)));
    }

    friend bool operator==(const Grid& a, const Grid& b) { return a.log2n == b.log2n && a.box_exp == b.box_exp; }
    friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }
};

struct SampledSignal {
    Grid grid;
    double origin = 0.0; // x_m = origin + m*dx
    std::vector<cplx> values;

    SampledSignal() = default;
    explicit SampledSignal(Grid g, double x0 = 0.0) : grid(g), origin(x0), values(g.n(), cplx{0.0, 0.0}) {}

    std::size_t n() const { return values.size(); }
    double spacing() const { return grid.dx(); }
    double point(std::size_t m) const { return origin + double(m) * grid.dx(); }
};

// Spectrum bins stored in natural FFT order; use Grid::bin_slot for access.
struct Spectrum {
    Grid grid;
    double origin = 0.0; // origin of the time-domain signal it came from
    std::vector<cplx> bins;

    Spectrum() = default;
    explicit Spectrum(Grid g, double x0 = 0.0) : grid(g), origin(x0), bins(g.n(), cplx{0.0, 0.0}) {}

    cplx& at_bin(std::int64_t q) { return bins[grid.bin_slot(q)]; }
    const cplx& at_bin(std::int64_t q) const { return bins[grid.bin_slot(q)]; }
};

namespace detail {

// Radix-2 tables, built once per size. Hand-rolled on purpose: the toolkit
// needs bitwise-reproducible transforms under any thread count, a custom
// normalization, and no link-time dependencies.
struct FftPlan {
    std::size_t n = 0;
    std::vector<std::size_t> bitrev;
    std::vector<cplx> w; // w[j] = exp(-2*pi*i*j/n), j < n/2

    explicit FftPlan(int log2n) {
        n = std::size_t(1) << log2n;
        bitrev.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0, v = i;
            for (int j = 0; j < log2n; ++j) { r = (r << 1) | (v & 1); v >>= 1; }
            bitrev[i] = r;
        }
        w.resize(n / 2);
        for (std::size_t j = 0; j < n / 2; ++j) {
            double ang = -two_pi * double(j) / double(n);
            w[j] = cplx{std::cos(ang), std::sin(ang)};
        }
    }

    void run(std::vector<cplx>& a, bool inverse) const {
        for (std::size_t i = 0; i < n; ++i)
            if (bitrev[i] > i) std::swap(a[i], a[bitrev[i]]);
        for (std::size_t len = 2; len <= n; len <<= 1) {
            std::size_t step = n / len;
            for (std::size_t blk = 0; blk < n; blk += len)
                for (std::size_t j = 0; j < len / 2; ++j) {
                    cplx tw = w[j * step];
                    if (inverse) tw = std::conj(tw);
                    cplx u = a[blk + j];
                    cplx v = a[blk + j + len / 2] * tw;
                    a[blk + j] = u + v;
                    a[blk + j + len / 2] = u - v;
                }
        }
    }
};

inline const FftPlan& fft_plan(int log2n) {
    static std::mutex mu;
    static std::map<int, FftPlan> plans;
    std::lock_guard<std::mutex> lock(mu);
    return plans.try_emplace(log2n, log2n).first->second;
}

} // namespace detail

// S[q] = dx * sum_m f[m] exp(-i x_m xi_q)
inline Spectrum spectrum(const SampledSignal& f) {
    Spectrum s(f.grid, f.origin);
    s.bins = f.values;
    detail::fft_plan(f.grid.log2n).run(s.bins, false);
    double dx = f.grid.dx();
    if (f.origin == 0.0) {
        for (auto& b : s.bins) b *= dx;
    } else {
        for (std::int64_t q = f.grid.min_bin(); q <= f.grid.max_bin(); ++q) {
            double ang = -f.grid.bin_freq(q) * f.origin;
            s.at_bin(q) *= dx * cplx{std::cos(ang), std::sin(ang)};
        }
    }
    return s;
}

// f[m] = (dxi/2*pi) * sum_q S[q] exp(+i x_m xi_q)
inline SampledSignal synthesize(const Spectrum& s) {
    SampledSignal f(s.grid, s.origin);
    f.values = s.bins;
    if (s.origin != 0.0) {
        for (std::int64_t q = s.grid.min_bin(); q <= s.grid.max_bin(); ++q) {
            double ang = s.grid.bin_freq(q) * s.origin;
            f.values[s.grid.bin_slot(q)] *= cplx{std::cos(ang), std::sin(ang)};
        }
    }
    detail::fft_plan(s.grid.log2n).run(f.values, true);
    double scale = s.grid.dxi() / two_pi;
    for (auto& v : f.values) v *= scale;
    return f;
}

// dx * sum_m f[m] * conj(g[m]), accumulated in index order
inline cplx inner_product(const SampledSignal& f, const SampledSignal& g) {
    if (f.grid != g.grid) throw std::invalid_argument("inner_product: grid mismatch");
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < f.n(); ++m) acc += f.values[m] * std::conj(g.values[m]);
    return acc * f.grid.dx();
}

// (dxi/2*pi) * sum_q S[q] * conj(T[q]); equals the time-domain pairing exactly
// in real arithmetic (discrete Parseval)
inline cplx spectral_inner_product(const Spectrum& s, const Spectrum& t) {
    if (s.grid != t.grid) throw std::invalid_argument("spectral_inner_product: grid mismatch");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < s.bins.size(); ++i) acc += s.bins[i] * std::conj(t.bins[i]);
    return acc * (s.grid.dxi() / two_pi);
}

inline double norm_sq(const SampledSignal& f) {
    double acc = 0.0;
    for (const auto& v : f.values) acc += std::norm(v);
    return acc * f.grid.dx();
}
inline double norm_l2(const SampledSignal& f) { return std::sqrt(norm_sq(f)); }

inline double spectral_norm_sq(const Spectrum& s) {
    double acc = 0.0;
    for (const auto& b : s.bins) acc += std::norm(b);
    return acc * (s.grid.dxi() / two_pi);
}

inline double norm_lp(const SampledSignal& f, double p) {
    if (p <= 0.0) throw std::invalid_argument("norm_lp: p must be positive");
    double acc = 0.0;
    for (const auto& v : f.values) acc += std::pow(std::abs(v), p);
    return std::pow(acc * f.grid.dx(), 1.0 / p);
}

inline double norm_sup(const SampledSignal& f) {
    double m = 0.0;
    for (const auto& v : f.values) m = std::max(m, std::abs(v));
    return m;
}

} // namespace tilecraft
