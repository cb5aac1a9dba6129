#pragma once

// Wave packets adapted to tiles, the three symmetry operators, the weight
// profile chi, and the packet cache file format.
//
// Packets are built in the frequency domain from the closed-form bump
//   phihat_s(xi) = exp(-i(xi - mu) c_s) * 2^(k/2) * B(2^k (xi - mu)),
// mu = center of omega_{s-}, c_s = center of I_s, |I_s| = 2^k. Because the
// bump B vanishes outside (-1/8, 1/8) and mu is a grid bin whenever
// k <= box_exp - 2, every packet's spectral support sits exactly inside
// omega_{s-}: localization is exact, not approximate. Each scale's sampled
// profile is renormalized to the scale-0 L2 norm, so all packets share one
// norm exactly (raw Riemann sums would drift across scales).

#include "tilecraft/dyadic.hpp"
#include "tilecraft/signal.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace tilecraft {

// ---------------------------------------------------------------- symmetry

// Trans_y f(x) = f(x - y), realized spectrally: multiply bin q by
// exp(-i xi_q y). For y an exact multiple of dx this is the periodic index
// rotation (done directly); for every y it is an exact L2 isometry that
// preserves spectral support, which is what the covariance identities need.
inline SampledSignal translate(const SampledSignal& f, double y) {
    double steps = y / f.grid.dx();
    if (steps == std::nearbyint(steps) && std::abs(steps) < double(f.n())) {
        SampledSignal out(f.grid, f.origin);
        std::int64_t sh = std::int64_t(steps);
        std::size_t n = f.n();
        for (std::size_t m = 0; m < n; ++m)
            out.values[(m + std::size_t(sh + std::int64_t(n))) % n] = f.values[m];
        return out;
    }
    Spectrum s = spectrum(f);
    for (std::int64_t q = f.grid.min_bin(); q <= f.grid.max_bin(); ++q) {
        double ang = -f.grid.bin_freq(q) * y;
        s.at_bin(q) *= cplx{std::cos(ang), std::sin(ang)};
    }
    return synthesize(s);
}

// Mod_xi f(x) = exp(i xi x) f(x). Pointwise and exact for every xi; when xi
// is a bin multiple the spectrum shifts by whole bins (no leakage).
inline SampledSignal modulate(const SampledSignal& f, double xi) {
    SampledSignal out(f.grid, f.origin);
    for (std::size_t m = 0; m < f.n(); ++m) {
        double ang = xi * f.point(m);
        out.values[m] = f.values[m] * cplx{std::cos(ang), std::sin(ang)};
    }
    return out;
}

// Dil^p_lambda f(x) = lambda^(-1/p) f(x/lambda) on the periodic box.
// Power-of-two lambda acts exactly on the spectral lattice: bin q carries to
// bin q/lambda (time-stretch moves mass toward DC, time-compression spreads
// it out). Components with no representable image (odd bins under an upward
// step) are annihilated and components leaving coverage are an error, so
// callers keep inputs band-limited to the matching sublattice. Other lambda
// fall back to band-limited resampling, an O(n^2) trigonometric evaluation.
inline SampledSignal dilate(const SampledSignal& f, double lambda, double p = 2.0) {
    if (!(lambda > 0.0)) throw std::invalid_argument("dilate: scale must be positive");
    if (f.origin != 0.0) throw std::invalid_argument("dilate: nonzero origin unsupported");
    double l2 = std::log2(lambda);
    double factor = std::pow(lambda, 1.0 - 1.0 / p);
    if (l2 == std::nearbyint(l2) && std::abs(l2) <= 20.0) {
        int j = int(l2);
        Spectrum in = spectrum(f);
        Spectrum out(f.grid, 0.0);
        if (j >= 0) {
            // target q' reads source q' * 2^j
            std::int64_t hi = f.grid.max_bin() >> j;
            std::int64_t lo = -((std::int64_t(1) << f.grid.log2n) >> std::min(j + 1, 62));
            for (std::int64_t q = lo; q <= hi; ++q)
                out.at_bin(q) = factor * in.at_bin(q << j);
        } else {
            int up = -j;
            for (std::int64_t q = f.grid.min_bin(); q <= f.grid.max_bin(); ++q) {
                cplx v = in.at_bin(q);
                if (v == cplx{0.0, 0.0}) continue;
                std::int64_t target = q << up;
                if (!f.grid.bin_in_range(target))
                    throw std::invalid_argument("dilate: spectrum leaves coverage (input not band-limited)");
                out.at_bin(target) = factor * v;
            }
        }
        return synthesize(out);
    }
    // band-limited resample: evaluate the trigonometric interpolant at x/lambda
    Spectrum in = spectrum(f);
    SampledSignal out(f.grid, 0.0);
    double inv = 1.0 / lambda;
    double norm = f.grid.dxi() / two_pi;
    for (std::size_t m = 0; m < f.n(); ++m) {
        double x = f.point(m) * inv;
        cplx acc{0.0, 0.0};
        for (std::int64_t q = f.grid.min_bin(); q <= f.grid.max_bin(); ++q) {
            double ang = f.grid.bin_freq(q) * x;
            acc += in.at_bin(q) * cplx{std::cos(ang), std::sin(ang)};
        }
        out.values[m] = factor * (1.0 / lambda) * norm * acc;
    }
    return out;
}

// ---------------------------------------------------------------- the bump

// Smooth even bump B with B = 1 on [-1/9, 1/9], B = 0 outside (-1/8, 1/8),
// strictly between elsewhere (the usual exp(-1/t) glue).
struct BumpProfile {
    static constexpr std::int64_t plateau_num = 1, plateau_den = 9;
    static constexpr std::int64_t support_num = 1, support_den = 8;

    static double plateau() { return 1.0 / 9.0; }
    static double support() { return 1.0 / 8.0; }

    static double smooth_step(double u) { // 0 at u<=0, 1 at u>=1
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        double a = std::exp(-1.0 / u);
        double b = std::exp(-1.0 / (1.0 - u));
        return a / (a + b);
    }
    static double eval(double nu) {
        double a = std::abs(nu);
        if (a <= plateau()) return 1.0;
        if (a >= support()) return 0.0;
        return smooth_step((support() - a) / (support() - plateau()));
    }
};

// ---------------------------------------------------------------- mother

// The unit-scale packet: spectrum B sampled on the bins, signal by inverse
// transform. The sampled spectrum satisfies the indicator sandwich
// 1_[-1/9,1/9] <= phihat <= 1_[-1/8,1/8] pointwise by construction.
struct MotherPacket {
    Grid grid;
    SampledSignal signal;
    Spectrum spec;
    double norm_sq = 0.0; // quadrature ||phi||_2^2

    static constexpr int min_support_bins = 64;
};

inline MotherPacket build_mother_packet(const Grid& grid) {
    // bins strictly inside [-1/8, 1/8]
    std::int64_t half = std::int64_t(1) << (grid.box_exp >= 3 ? grid.box_exp - 3 : 0);
    if (grid.box_exp < 3 || 2 * half - 1 < MotherPacket::min_support_bins)
        throw std::invalid_argument("build_mother_packet: grid resolves [-1/8,1/8] too coarsely (need >= 64 bins)");
    if (!grid.bin_in_range(half)) throw std::invalid_argument("build_mother_packet: coverage too small");
    MotherPacket mp;
    mp.grid = grid;
    mp.spec = Spectrum(grid);
    for (std::int64_t q = -half; q <= half; ++q)
        mp.spec.at_bin(q) = cplx{BumpProfile::eval(grid.bin_freq(q)), 0.0};
    mp.signal = synthesize(mp.spec);
    mp.norm_sq = spectral_norm_sq(mp.spec);
    return mp;
}

// ---------------------------------------------------------------- packets

// Sparse spectral representation of one packet: bins q0 .. q0+amp.size()-1.
struct TilePacket {
    Tile tile;
    std::int64_t q0 = 0;
    std::vector<cplx> amp;
};

// Per-universe packet factory. Holds one sampled profile per time scale,
// renormalized so every packet's L2 norm equals the scale-0 norm exactly.
struct PacketBank {
    Grid grid;
    TileUniverse universe;
    double common_norm_sq = 0.0;             // shared ||phi_s||_2^2
    std::vector<std::vector<double>> profile; // per scale: offsets -h+1..h-1
    std::vector<std::int64_t> half_width;     // per scale: h = 2^(b-k-3)

    PacketBank() = default;
    PacketBank(const Grid& g, const TileUniverse& u) : grid(g), universe(u) {
        if (u.scale_max > g.box_exp - 3)
            throw std::invalid_argument("PacketBank: coarsest tiles leave no interior spectral bins (scale_max > box_exp-3)");
        if (u.box_freq.hi() > g.coverage() || u.box_freq.lo() < -g.coverage())
            throw std::invalid_argument("PacketBank: frequency box outside coverage");
        if (u.box_time.lo() < 0.0 || u.box_time.hi() > g.box_length())
            throw std::invalid_argument("PacketBank: time box outside the periodic box");

        int scales = u.scale_count();
        profile.resize(scales);
        half_width.resize(scales);
        double target = 0.0;
        for (int i = 0; i < scales; ++i) {
            int k = u.scale_min + i;
            std::int64_t h = std::int64_t(1) << (g.box_exp - k - 3);
            half_width[i] = h;
            std::vector<double>& p = profile[i];
            p.resize(std::size_t(2 * h - 1));
            double amp = std::pow(2.0, 0.5 * k);
            double ss = 0.0;
            for (std::int64_t o = -h + 1; o <= h - 1; ++o) {
                double v = amp * BumpProfile::eval(std::ldexp(double(o), k - g.box_exp));
                p[std::size_t(o + h - 1)] = v;
                ss += v * v;
            }
            double nsq = ss * (g.dxi() / two_pi);
            if (k == 0) target = nsq;
            p.push_back(nsq); // stash raw norm; fixed up below
        }
        // renormalize every scale to the scale-0 norm; if the universe has no
        // scale 0, the scale closest to 0 is the reference
        if (target == 0.0) {
            int ref = (0 < u.scale_min) ? 0 : scales - 1;
            target = profile[std::size_t(ref)].back();
        }
        common_norm_sq = target;
        for (int i = 0; i < scales; ++i) {
            double raw = profile[std::size_t(i)].back();
            profile[std::size_t(i)].pop_back();
            double gamma = std::sqrt(target / raw);
            for (auto& v : profile[std::size_t(i)]) v *= gamma;
        }
    }

    double common_norm() const { return std::sqrt(common_norm_sq); }

    // center of omega_{s-} as an exact bin index
    std::int64_t mu_bin(const Tile& s) const {
        int k = s.time.scale;
        // mu = (4J+1) 2^(-k-2); mu/dxi = (4J+1) 2^(b-k-2)
        int e = grid.box_exp - k - 2;
        if (e < 0) throw std::invalid_argument("PacketBank: tile too coarse for bin-aligned modulation");
        return (4 * s.freq.pos + 1) << e;
    }

    TilePacket packet(const Tile& s) const {
        if (!universe.contains(s)) throw std::invalid_argument("PacketBank::packet: tile outside universe");
        int i = s.time.scale - universe.scale_min;
        std::int64_t h = half_width[std::size_t(i)];
        const auto& p = profile[std::size_t(i)];
        TilePacket out;
        out.tile = s;
        std::int64_t mu = mu_bin(s);
        out.q0 = mu - h + 1;
        out.amp.resize(p.size());
        // phase exp(-i (xi - mu) c_s) = exp(-i o dxi c_s) at offset o
        double cs = s.time.center();
        double step = grid.dxi() * cs;
        for (std::int64_t o = -h + 1; o <= h - 1; ++o) {
            double ang = -double(o) * step;
            out.amp[std::size_t(o + h - 1)] = p[std::size_t(o + h - 1)] * cplx{std::cos(ang), std::sin(ang)};
        }
        return out;
    }

    void add_to_spectrum(const TilePacket& pk, const cplx& coeff, Spectrum& acc) const {
        for (std::size_t i = 0; i < pk.amp.size(); ++i)
            acc.at_bin(pk.q0 + std::int64_t(i)) += coeff * pk.amp[i];
    }

    SampledSignal packet_signal(const Tile& s) const {
        Spectrum acc(grid);
        TilePacket pk = packet(s);
        add_to_spectrum(pk, cplx{1.0, 0.0}, acc);
        return synthesize(acc);
    }

    // <f, phi_s> through the spectral pairing (exact Parseval counterpart of
    // the time-domain quadrature)
    cplx coefficient(const Spectrum& fhat, const Tile& s) const {
        TilePacket pk = packet(s);
        cplx acc{0.0, 0.0};
        for (std::size_t i = 0; i < pk.amp.size(); ++i)
            acc += fhat.at_bin(pk.q0 + std::int64_t(i)) * std::conj(pk.amp[i]);
        return acc * (grid.dxi() / two_pi);
    }

    // <phi_s, phi_t>: overlap of the sparse spectra; exactly zero when the
    // supports are disjoint
    cplx packet_inner(const Tile& s, const Tile& t) const {
        TilePacket a = packet(s), b = packet(t);
        std::int64_t lo = std::max(a.q0, b.q0);
        std::int64_t hi = std::min(a.q0 + std::int64_t(a.amp.size()), b.q0 + std::int64_t(b.amp.size()));
        cplx acc{0.0, 0.0};
        for (std::int64_t q = lo; q < hi; ++q)
            acc += a.amp[std::size_t(q - a.q0)] * std::conj(b.amp[std::size_t(q - b.q0)]);
        return acc * (grid.dxi() / two_pi);
    }

    // all <f, phi_s> in canonical order
    std::vector<cplx> all_coefficients(const Spectrum& fhat) const {
        std::vector<cplx> out(std::size_t(universe.tile_count()));
        for (std::int64_t i = 0; i < universe.tile_count(); ++i)
            out[std::size_t(i)] = coefficient(fhat, universe.tile_at(i));
        return out;
    }
};

inline SampledSignal packet_for_tile(const PacketBank& bank, const Tile& s) { return bank.packet_signal(s); }

// ---------------------------------------------------------------- weights

// chi(x) = (1+|x|)^(-kappa); chi_I = the L1-normalized copy adapted to I.
struct WeightProfile {
    double kappa = 10.0;

    explicit WeightProfile(double k = 10.0) : kappa(k) {
        if (!(k > 1.0)) throw std::invalid_argument("WeightProfile: kappa must exceed 1");
    }

    double chi(double x) const {
        double u = 1.0 + std::abs(x);
        double ki = std::nearbyint(kappa);
        if (ki == kappa && ki >= 1.0 && ki <= 64.0) {
            // integer kappa: cheap repeated squaring
            double inv = 1.0 / u, acc = 1.0, base = inv;
            std::uint64_t e = std::uint64_t(ki);
            while (e != 0) {
                if (e & 1) acc *= base;
                base *= base;
                e >>= 1;
            }
            return acc;
        }
        return std::pow(u, -kappa);
    }

    double chi_interval(const DyadicInterval& I, double x) const {
        double len = I.length();
        return chi((x - I.center()) / len) / len;
    }

    double total_mass() const { return 2.0 / (kappa - 1.0); } // int chi dx on the line
};

// dx * sum over masked samples of chi_I(x_m); the mask may be empty
inline double weight_integral(const WeightProfile& w, const DyadicInterval& I, const Grid& grid,
                              const std::vector<std::uint8_t>& mask) {
    if (mask.size() != grid.n()) throw std::invalid_argument("weight_integral: mask size mismatch");
    double dx = grid.dx();
    double acc = 0.0;
    for (std::size_t m = 0; m < mask.size(); ++m)
        if (mask[m]) acc += w.chi_interval(I, double(m) * dx);
    return acc * dx;
}

inline double weight_integral_all(const WeightProfile& w, const DyadicInterval& I, const Grid& grid) {
    double dx = grid.dx();
    double acc = 0.0;
    for (std::size_t m = 0; m < grid.n(); ++m) acc += w.chi_interval(I, double(m) * dx);
    return acc * dx;
}

// ------------------------------------------------------- cross decay check

// Compares |<phi_s, phi_t>| against the reference envelope
// sqrt(|I_t| |I_s|) * chi_{I_s}(c(I_t)); returns measured, reference, ratio.
struct CrossDecayReport {
    double measured = 0.0;
    double reference = 0.0;
    double ratio = 0.0;
};

inline CrossDecayReport packet_cross_decay_check(const PacketBank& bank, const WeightProfile& w,
                                                 const Tile& s, const Tile& t) {
    CrossDecayReport r;
    r.measured = std::abs(bank.packet_inner(s, t));
    double ref = std::sqrt(s.time.length() * t.time.length()) * w.chi_interval(s.time, t.time.center());
    r.reference = ref;
    r.ratio = ref > 0.0 ? r.measured / ref : 0.0;
    return r;
}

// ---------------------------------------------------------------- cache io

namespace detail {
inline void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_i64(std::string& b, std::int64_t v) { put_u64(b, std::uint64_t(v)); }
inline void put_f64(std::string& b, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(b, u);
}
struct ByteReader {
    const unsigned char* p;
    std::size_t left;
    void need(std::size_t k) const {
        if (left < k) throw std::runtime_error("packet cache: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
        p += 4; left -= 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
        p += 8; left -= 8;
        return v;
    }
    std::int64_t i64() { return std::int64_t(u64()); }
    double f64() {
        std::uint64_t u = u64();
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }
};
} // namespace detail

// Little-endian layout: "TCPK", version, log2n, box_exp, n, dx, kappa,
// plateau and support as numerator/denominator pairs, then n (re, im) pairs
// of the mother signal.
inline void write_packet_cache(const std::string& path, const MotherPacket& mp, double kappa) {
    std::string buf;
    buf += "TCPK";
    detail::put_u32(buf, 1u);
    detail::put_u32(buf, std::uint32_t(mp.grid.log2n));
    detail::put_u32(buf, std::uint32_t(std::int32_t(mp.grid.box_exp)));
    detail::put_u64(buf, mp.grid.n());
    detail::put_f64(buf, mp.grid.dx());
    detail::put_f64(buf, kappa);
    detail::put_i64(buf, BumpProfile::plateau_num);
    detail::put_i64(buf, BumpProfile::plateau_den);
    detail::put_i64(buf, BumpProfile::support_num);
    detail::put_i64(buf, BumpProfile::support_den);
    for (const auto& v : mp.signal.values) {
        detail::put_f64(buf, v.real());
        detail::put_f64(buf, v.imag());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_packet_cache: cannot open " + path);
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw std::runtime_error("write_packet_cache: write failed");
}

struct PacketCache {
    MotherPacket mother;
    double kappa = 0.0;
};

inline PacketCache read_packet_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_packet_cache: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    detail::ByteReader r{reinterpret_cast<const unsigned char*>(buf.data()), buf.size()};
    r.need(4);
    if (std::memcmp(r.p, "TCPK", 4) != 0) throw std::runtime_error("read_packet_cache: bad magic");
    r.p += 4; r.left -= 4;
    std::uint32_t version = r.u32();
    if (version != 1u) throw std::runtime_error("read_packet_cache: unsupported version");
    int log2n = int(r.u32());
    int box_exp = int(std::int32_t(r.u32()));
    std::uint64_t n = r.u64();
    double dx = r.f64();
    PacketCache out;
    out.kappa = r.f64();
    std::int64_t pn = r.i64(), pd = r.i64(), sn = r.i64(), sd = r.i64();
    if (pn != BumpProfile::plateau_num || pd != BumpProfile::plateau_den ||
        sn != BumpProfile::support_num || sd != BumpProfile::support_den)
        throw std::runtime_error("read_packet_cache: bump rationals mismatch");
    Grid g(log2n, box_exp);
    if (n != g.n() || dx != g.dx()) throw std::runtime_error("read_packet_cache: inconsistent grid header");
    out.mother.grid = g;
    out.mother.signal = SampledSignal(g);
    for (std::size_t m = 0; m < g.n(); ++m) {
        double re = r.f64();
        double im = r.f64();
        out.mother.signal.values[m] = cplx{re, im};
    }
    out.mother.spec = spectrum(out.mother.signal);
    out.mother.norm_sq = spectral_norm_sq(out.mother.spec);
    return out;
}

} // namespace tilecraft
