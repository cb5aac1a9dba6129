#pragma once

// Operators: one-sided Fourier projections, the maximal partial-sum sweep,
// tile-sum operators (frequency-gated and not), the symmetry-averaged tile
// operator, maximal functions, and the batched tile/set pairing engine.

#include "tilecraft/parallel.hpp"
#include "tilecraft/util.hpp"
#include "tilecraft/wavepacket.hpp"

#include <map>

namespace tilecraft {

// pointwise frequency choice x -> N(x)
struct MeasurableChoice {
    std::vector<double> values;

    static MeasurableChoice constant(const Grid& g, double N) {
        MeasurableChoice c;
        c.values.assign(g.n(), N);
        return c;
    }
    double at(std::size_t m) const { return values[m]; }
};

// tile coefficients indexed by the universe's canonical order
struct CoeffMap {
    const TileUniverse* universe = nullptr;
    std::vector<cplx> c;

    CoeffMap() = default;
    explicit CoeffMap(const TileUniverse& u) : universe(&u), c(std::size_t(u.tile_count())) {}

    cplx& at(const Tile& s) { return c[std::size_t(universe->index_of(s))]; }
    const cplx& at(const Tile& s) const { return c[std::size_t(universe->index_of(s))]; }
};

inline CoeffMap analyze(const PacketBank& bank, const Spectrum& fhat) {
    CoeffMap out(bank.universe);
    std::int64_t count = bank.universe.tile_count();
    slot_parallel_for(std::size_t(count), [&](std::size_t i) {
        out.c[i] = bank.coefficient(fhat, bank.universe.tile_at(std::int64_t(i)));
    });
    return out;
}

// ------------------------------------------------------------- projections

// P_- : keep bins with xi_q < 0 (the DC bin is dropped)
inline SampledSignal project_negative(const SampledSignal& f) {
    Spectrum s = spectrum(f);
    for (std::int64_t q = 0; q <= f.grid.max_bin(); ++q) s.at_bin(q) = cplx{0.0, 0.0};
    return synthesize(s);
}

// S_N : keep bins with xi_q < N (strict)
inline SampledSignal one_sided_partial(const SampledSignal& f, double N) {
    Spectrum s = spectrum(f);
    for (std::int64_t q = f.grid.min_bin(); q <= f.grid.max_bin(); ++q)
        if (!(f.grid.bin_freq(q) < N)) s.at_bin(q) = cplx{0.0, 0.0};
    return synthesize(s);
}

// sup_N |S_N f| with the cut position realized halfway between bins.
// Incremental sweep: adding bin q to every sample costs O(n), so the whole
// sweep is O(n^2) complex multiplies.
struct CarlesonResult {
    std::vector<double> magnitude; // per sample
    MeasurableChoice argmax;       // cut achieving the sup
};

inline CarlesonResult carleson_maximal(const SampledSignal& f) {
    const Grid& g = f.grid;
    std::size_t n = g.n();
    Spectrum s = spectrum(f);
    CarlesonResult out;
    out.magnitude.assign(n, 0.0);
    out.argmax.values.assign(n, (double(g.min_bin()) - 0.5) * g.dxi());
    double scale = g.dxi() / two_pi;

    slot_parallel_for(n, [&](std::size_t m) {
        double x = f.point(m);
        double ang0 = x * g.bin_freq(g.min_bin());
        double angs = x * g.dxi();
        cplx ph{std::cos(ang0), std::sin(ang0)};
        cplx step{std::cos(angs), std::sin(angs)};
        cplx acc{0.0, 0.0};
        double best = 0.0;
        double bestN = out.argmax.values[m];
        for (std::int64_t q = g.min_bin(); q <= g.max_bin(); ++q) {
            acc += s.at_bin(q) * ph;
            ph *= step;
            double mag = std::abs(acc);
            if (mag > best) {
                best = mag;
                bestN = (double(q) + 0.5) * g.dxi();
            }
        }
        out.magnitude[m] = best * scale;
        out.argmax.values[m] = bestN;
    });
    return out;
}

// ---------------------------------------------------------- tile operators

// Q_xi f = sum over tiles whose upper half contains xi of <f, phi_s> phi_s.
// Per scale at most one frequency strip is active, so the sum runs over one
// row of tiles per active scale.
inline bool upper_half_contains(const Tile& s, double xi) {
    DyadicInterval up = s.freq_plus();
    return up.lo() <= xi && xi < up.hi();
}

inline SampledSignal q_operator(const PacketBank& bank, const SampledSignal& f, double xi,
                                int scale_lo, int scale_hi) {
    const TileUniverse& u = bank.universe;
    Spectrum fhat = spectrum(f);
    Spectrum acc(bank.grid);
    for (int k = std::max(scale_lo, u.scale_min); k <= std::min(scale_hi, u.scale_max); ++k) {
        double scaled = std::ldexp(xi, k); // xi * 2^k
        double J = std::floor(scaled);
        std::int64_t fp = std::int64_t(J);
        if (double(fp) > scaled) --fp; // exact floor for negatives
        if (!(scaled - double(fp) >= 0.5)) continue; // xi must land in the upper half
        DyadicInterval freq{fp, -k};
        if (interval_relation(freq, u.box_freq) != IntervalRelation::a_inside_b &&
            !(freq == u.box_freq))
            continue;
        std::int64_t slots = u.time_slots(k);
        std::int64_t p0 = u.time_pos0(k);
        for (std::int64_t j = 0; j < slots; ++j) {
            Tile s{DyadicInterval{p0 + j, k}, freq};
            cplx coeff = bank.coefficient(fhat, s);
            bank.add_to_spectrum(bank.packet(s), coeff, acc);
        }
    }
    return synthesize(acc);
}

inline SampledSignal q_operator(const PacketBank& bank, const SampledSignal& f, double xi) {
    return q_operator(bank, f, xi, bank.universe.scale_min, bank.universe.scale_max);
}

// A_j f = sum over all tiles with |I_s| = 2^j of <f, phi_s> phi_s
inline SampledSignal scale_layer_operator(const PacketBank& bank, const SampledSignal& f, int j) {
    const TileUniverse& u = bank.universe;
    if (j < u.scale_min || j > u.scale_max) throw std::invalid_argument("scale_layer_operator: scale outside universe");
    Spectrum fhat = spectrum(f);
    Spectrum acc(bank.grid);
    std::int64_t slots = u.time_slots(j), p0 = u.time_pos0(j);
    std::int64_t fslots = u.freq_slots(j), f0 = u.freq_pos0(j);
    for (std::int64_t ji = 0; ji < slots; ++ji)
        for (std::int64_t fi = 0; fi < fslots; ++fi) {
            Tile s{DyadicInterval{p0 + ji, j}, DyadicInterval{f0 + fi, -j}};
            bank.add_to_spectrum(bank.packet(s), bank.coefficient(fhat, s), acc);
        }
    return synthesize(acc);
}

// ---------------------------------------------------------- model operator

// sum over s in S of c_s phi_s(x) 1_{omega_{s+}}(N(x)). Tiles sharing
// (scale, frequency strip) share the gate, so the fast path does one inverse
// transform per such group.
inline SampledSignal model_operator(const PacketBank& bank, const std::vector<Tile>& tiles,
                                    const CoeffMap& coeffs, const MeasurableChoice& N) {
    const Grid& g = bank.grid;
    if (N.values.size() != g.n()) throw std::invalid_argument("model_operator: choice function size mismatch");
    std::map<std::pair<int, std::int64_t>, Spectrum> groups;
    for (const Tile& s : tiles) {
        cplx c = coeffs.at(s);
        if (c == cplx{0.0, 0.0}) continue;
        auto key = std::make_pair(s.time.scale, s.freq.pos);
        auto it = groups.find(key);
        if (it == groups.end()) it = groups.emplace(key, Spectrum(g)).first;
        bank.add_to_spectrum(bank.packet(s), c, it->second);
    }
    SampledSignal out(g);
    for (auto& [key, spec] : groups) {
        DyadicInterval freq{key.second, -key.first};
        DyadicInterval up = freq.upper_half();
        SampledSignal layer = synthesize(spec);
        for (std::size_t m = 0; m < g.n(); ++m)
            if (up.lo() <= N.at(m) && N.at(m) < up.hi()) out.values[m] += layer.values[m];
    }
    return out;
}

// reference path: one transform per tile, used to pin down the fast path
inline SampledSignal naive_model_operator(const PacketBank& bank, const std::vector<Tile>& tiles,
                                          const CoeffMap& coeffs, const MeasurableChoice& N) {
    const Grid& g = bank.grid;
    SampledSignal out(g);
    for (const Tile& s : tiles) {
        SampledSignal ps = bank.packet_signal(s);
        DyadicInterval up = s.freq_plus();
        cplx c = coeffs.at(s);
        for (std::size_t m = 0; m < g.n(); ++m)
            if (up.lo() <= N.at(m) && N.at(m) < up.hi()) out.values[m] += c * ps.values[m];
    }
    return out;
}

// ---------------------------------------------------------- rough pairings

// <phi_s 1_{omega_{s+}}(N(.)), 1_E> for every universe tile at once: one
// transform of the E-and-gate window per (scale, strip) group, then a sparse
// spectral pairing per tile.
inline std::vector<cplx> rough_pairings(const PacketBank& bank, const std::vector<std::uint8_t>& set_mask,
                                        const MeasurableChoice& N) {
    const Grid& g = bank.grid;
    const TileUniverse& u = bank.universe;
    if (set_mask.size() != g.n() || N.values.size() != g.n())
        throw std::invalid_argument("rough_pairings: mask/choice size mismatch");
    std::vector<cplx> out(std::size_t(u.tile_count()));
    double scale = g.dxi() / two_pi;
    for (int k = u.scale_min; k <= u.scale_max; ++k) {
        std::int64_t fslots = u.freq_slots(k), f0 = u.freq_pos0(k);
        std::int64_t slots = u.time_slots(k), p0 = u.time_pos0(k);
        for (std::int64_t fi = 0; fi < fslots; ++fi) {
            DyadicInterval freq{f0 + fi, -k};
            DyadicInterval up = freq.upper_half();
            SampledSignal w(g);
            bool any = false;
            for (std::size_t m = 0; m < g.n(); ++m) {
                if (set_mask[m] && up.lo() <= N.at(m) && N.at(m) < up.hi()) {
                    w.values[m] = cplx{1.0, 0.0};
                    any = true;
                }
            }
            Spectrum what = any ? spectrum(w) : Spectrum(g);
            for (std::int64_t j = 0; j < slots; ++j) {
                Tile s{DyadicInterval{p0 + j, k}, freq};
                cplx acc{0.0, 0.0};
                if (any) {
                    TilePacket pk = bank.packet(s);
                    for (std::size_t i = 0; i < pk.amp.size(); ++i)
                        acc += pk.amp[i] * std::conj(what.at_bin(pk.q0 + std::int64_t(i)));
                    acc *= scale;
                }
                out[std::size_t(u.index_of(s))] = acc;
            }
        }
    }
    return out;
}

// ------------------------------------------------------- averaged operator

// Monte Carlo average over (lam, y, xi0) in [1,2] x [0,Y] x [0,Y] of
// D^{-1} Q_{xi0} D with D = Mod_{xi0} Trans_y Dil_{2^lam}. The conjugated
// packets have the closed spectral form
//   psihat_s(xi) = 2^(-lam/2) exp(i xi 2^(-lam) y) phihat_s(xi 2^(-lam) + xi0),
// evaluated directly on the bins, so no resampling error enters.
struct AverageQResult {
    SampledSignal average;
    double fitted_scale = 0.0;  // least-squares multiple of P_- f
    double rel_residual = 0.0;  // ||avg - c P_- f|| / ||P_- f||
    std::size_t samples = 0;
};

inline cplx packet_spectrum_at(const PacketBank& bank, const Tile& s, double xi) {
    int k = s.time.scale;
    double mu = s.freq_minus().center();
    double nu = std::ldexp(xi - mu, k);
    double b = BumpProfile::eval(nu);
    if (b == 0.0) return cplx{0.0, 0.0};
    int i = k - bank.universe.scale_min;
    // recover the stored normalization from the sampled profile's center value
    double gamma_amp = bank.profile[std::size_t(i)][std::size_t(bank.half_width[std::size_t(i)] - 1)];
    double ang = -(xi - mu) * s.time.center();
    return gamma_amp * b * cplx{std::cos(ang), std::sin(ang)};
}

inline AverageQResult average_q(const PacketBank& bank, const SampledSignal& f, double Y,
                                std::size_t samples, std::uint64_t seed) {
    const Grid& g = bank.grid;
    const TileUniverse& u = bank.universe;
    Spectrum fhat = spectrum(f);
    Spectrum acc(g);
    Rng rng(seed);
    double pair_scale = g.dxi() / two_pi;

    for (std::size_t it = 0; it < samples; ++it) {
        double lam = rng.uniform(1.0, 2.0);
        double y = rng.uniform(0.0, Y);
        double xi0 = rng.uniform(0.0, Y);
        double stretch = std::exp2(lam);
        double shrink = 1.0 / stretch;
        double amp = std::sqrt(shrink); // 2^(-lam/2)

        for (int k = u.scale_min; k <= u.scale_max; ++k) {
            double scaled = std::ldexp(xi0, k);
            std::int64_t fp = std::int64_t(std::floor(scaled));
            if (!(scaled - double(fp) >= 0.5)) continue;
            DyadicInterval freq{fp, -k};
            if (interval_relation(freq, u.box_freq) != IntervalRelation::a_inside_b && !(freq == u.box_freq))
                continue;
            double mu = freq.lower_half().center();
            double hw = std::ldexp(BumpProfile::support(), -k); // bump half-width in xi
            // psi support: xi in stretch*(mu - xi0 +- hw)
            double lo = stretch * (mu - xi0 - hw), hi = stretch * (mu - xi0 + hw);
            std::int64_t qlo = std::max(g.min_bin(), std::int64_t(std::ceil(lo / g.dxi())));
            std::int64_t qhi = std::min(g.max_bin(), std::int64_t(std::floor(hi / g.dxi())));
            if (qlo > qhi) continue;
            std::size_t nb = std::size_t(qhi - qlo + 1);
            std::vector<cplx> psi(nb);
            std::int64_t slots = u.time_slots(k), p0 = u.time_pos0(k);
            for (std::int64_t j = 0; j < slots; ++j) {
                Tile s{DyadicInterval{p0 + j, k}, freq};
                // sample psihat on the bins and pair with fhat
                cplx coeff{0.0, 0.0};
                for (std::size_t i = 0; i < nb; ++i) {
                    double xi = double(qlo + std::int64_t(i)) * g.dxi();
                    cplx base = packet_spectrum_at(bank, s, xi * shrink + xi0);
                    if (base == cplx{0.0, 0.0}) { psi[i] = base; continue; }
                    double ang = xi * shrink * y;
                    psi[i] = amp * cplx{std::cos(ang), std::sin(ang)} * base;
                    coeff += fhat.at_bin(qlo + std::int64_t(i)) * std::conj(psi[i]);
                }
                coeff *= pair_scale;
                if (coeff == cplx{0.0, 0.0}) continue;
                for (std::size_t i = 0; i < nb; ++i) acc.at_bin(qlo + std::int64_t(i)) += coeff * psi[i];
            }
        }
    }
    double inv = 1.0 / double(samples);
    for (auto& v : acc.bins) v *= inv;

    AverageQResult out;
    out.average = synthesize(acc);
    out.samples = samples;
    SampledSignal ref = project_negative(f);
    double refsq = norm_sq(ref);
    if (refsq > 0.0) {
        cplx ip = inner_product(out.average, ref);
        double c = ip.real() / refsq; // the limit operator is a real multiple
        out.fitted_scale = c;
        SampledSignal diff = out.average;
        for (std::size_t m = 0; m < diff.n(); ++m) diff.values[m] -= c * ref.values[m];
        out.rel_residual = norm_l2(diff) / std::sqrt(refsq);
    }
    return out;
}

// -------------------------------------------------------- maximal functions

// centered dyadic-radius averages of |f|, periodic
inline std::vector<double> hardy_littlewood_max(const SampledSignal& f) {
    std::size_t n = f.n();
    std::vector<double> absf(n), pref(n + 1, 0.0);
    for (std::size_t m = 0; m < n; ++m) absf[m] = std::abs(f.values[m]);
    for (std::size_t m = 0; m < n; ++m) pref[m + 1] = pref[m] + absf[m];
    auto wsum = [&](std::int64_t lo, std::int64_t hi) { // inclusive indices, periodic
        double total = pref[n];
        std::int64_t len = hi - lo + 1;
        if (len >= std::int64_t(n)) return total;
        std::int64_t a = ((lo % std::int64_t(n)) + std::int64_t(n)) % std::int64_t(n);
        std::int64_t b = a + len; // may wrap
        if (b <= std::int64_t(n)) return pref[std::size_t(b)] - pref[std::size_t(a)];
        return (pref[n] - pref[std::size_t(a)]) + pref[std::size_t(b - std::int64_t(n))];
    };
    std::vector<double> out(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        double best = absf[m];
        for (std::int64_t r = 1; r < std::int64_t(n); r <<= 1) {
            double mean = wsum(std::int64_t(m) - r, std::int64_t(m) + r) / double(2 * r + 1);
            best = std::max(best, mean);
        }
        out[m] = best;
    }
    return out;
}

// sup over dyadic intervals containing x of the mean of |f| over the interval
inline std::vector<double> dyadic_mean_max(const SampledSignal& f) {
    const Grid& g = f.grid;
    std::size_t n = g.n();
    std::vector<double> pref(n + 1, 0.0);
    for (std::size_t m = 0; m < n; ++m) pref[m + 1] = pref[m] + std::abs(f.values[m]);
    std::vector<double> out(n, 0.0);
    double dx = g.dx();
    int kmin = int(std::ceil(std::log2(dx)));
    int kmax = g.box_exp + 3; // [0, L) sits inside [0, 2^(b+3))
    for (int k = kmin; k <= kmax; ++k) {
        double len = std::ldexp(1.0, k);
        for (std::int64_t j = 0;; ++j) {
            double lo = double(j) * len;
            if (lo >= g.box_length()) break;
            double hi = lo + len;
            std::size_t a = std::size_t(std::ceil(lo / dx));
            std::size_t b = std::min(n, std::size_t(std::ceil(hi / dx)));
            if (a >= b) continue;
            double mean = (pref[b] - pref[a]) * dx / len;
            for (std::size_t m = a; m < b; ++m) out[m] = std::max(out[m], mean);
        }
    }
    return out;
}

// sup over dyadic intervals containing x of int |f| chi_I (chi truncated at
// radius 8|I|, where chi has decayed below 4e-10 for kappa = 10)
inline std::vector<double> weighted_chi_max(const SampledSignal& f, const WeightProfile& w) {
    const Grid& g = f.grid;
    std::size_t n = g.n();
    std::vector<double> absf(n);
    for (std::size_t m = 0; m < n; ++m) absf[m] = std::abs(f.values[m]);
    std::vector<double> out(n, 0.0);
    double dx = g.dx();
    int kmin = int(std::ceil(std::log2(dx)));
    int kmax = g.box_exp + 3;
    for (int k = kmin; k <= kmax; ++k) {
        double len = std::ldexp(1.0, k);
        for (std::int64_t j = 0;; ++j) {
            double lo = double(j) * len;
            if (lo >= g.box_length()) break;
            double c = lo + 0.5 * len;
            std::size_t wa = std::size_t(std::max(0.0, std::ceil((c - 8.0 * len) / dx)));
            std::size_t wb = std::min(n, std::size_t(std::max(0.0, std::ceil((c + 8.0 * len) / dx))));
            double acc = 0.0;
            for (std::size_t m = wa; m < wb; ++m)
                acc += absf[m] * w.chi((double(m) * dx - c) / len);
            acc *= dx / len;
            std::size_t a = std::size_t(std::ceil(lo / dx));
            std::size_t b = std::min(n, std::size_t(std::ceil((lo + len) / dx)));
            for (std::size_t m = a; m < b; ++m) out[m] = std::max(out[m], acc);
        }
    }
    return out;
}

// (sup over dyadic I containing x of the mean of |f|^delta)^(1/delta)
inline std::vector<double> m_delta_max(const SampledSignal& f, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("m_delta_max: delta must be positive");
    SampledSignal p(f.grid, f.origin);
    for (std::size_t m = 0; m < f.n(); ++m)
        p.values[m] = cplx{std::pow(std::abs(f.values[m]), delta), 0.0};
    std::vector<double> md = dyadic_mean_max(p);
    for (auto& v : md) v = std::pow(v, 1.0 / delta);
    return md;
}

} // namespace tilecraft
