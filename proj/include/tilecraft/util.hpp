#pragma once

// Deterministic pseudo-randomness and small fitting helpers. The generator is
// a fixed splitmix64 so that seeded experiments reproduce bit-for-bit across
// compilers and standard libraries (std::uniform_real_distribution does not
// promise that).

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tilecraft {

struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // uniform in [0, 1) with 53 random bits
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
    std::int64_t next_below(std::int64_t n) { return std::int64_t(next_u64() % std::uint64_t(n)); }
    // standard normal via Box-Muller on the deterministic uniforms
    double next_gaussian() {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = next_double();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }
    std::complex<double> next_cgaussian() {
        double a = next_gaussian();
        double b = next_gaussian();
        return {a, b};
    }
};

// least-squares fit y ~ a + b*x; returns {a, b, r_squared}
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
    double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i]; sy += y[i];
        sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
    }
    double vx = sxx - sx * sx / n;
    double vy = syy - sy * sy / n;
    double cxy = sxy - sx * sy / n;
    LineFit out;
    if (vx == 0.0) throw std::invalid_argument("fit_line: degenerate x");
    out.slope = cxy / vx;
    out.intercept = (sy - out.slope * sx) / n;
    out.r_squared = (vy == 0.0) ? 1.0 : (cxy * cxy) / (vx * vy);
    return out;
}

// least-squares scale c minimizing sum |y_i - c*m_i|^2 for the model values m
inline double fit_scale(const std::vector<double>& model, const std::vector<double>& y) {
    if (model.size() != y.size() || model.empty()) throw std::invalid_argument("fit_scale: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) { num += model[i] * y[i]; den += model[i] * model[i]; }
    if (den == 0.0) throw std::invalid_argument("fit_scale: zero model");
    return num / den;
}

} // namespace tilecraft
