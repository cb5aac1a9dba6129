#pragma once

// Tile-selection combinatorics: collection size (best plus-tree energy),
// density maps, the two splitting passes, the master decomposition loop, and
// the estimator diagnostics (tree ratio, TT*, incomparable weak type).
//
// Everything runs on arrays indexed by the universe's canonical tile order.
// The two structural facts that make the passes O(N):
//   * s < t walks one scale at a time through (parent time, half frequency),
//     so "dominated by a member of Q" propagates down scale by scale;
//   * plus-tree membership below a top (I, w) recurses as
//     R(I, w) = sum over halves H of I of
//               [w = upper_half(P(w))] |c_(H,P(w))|^2 + R(H, P(w)),
//     because a deeper tile t sits in the tree topped (I, w) iff it sits in
//     the tree topped by the child crossed on the way down; so every tile's
//     plus-tree energy comes from one bottom-up sweep.

#include "tilecraft/operators.hpp"
#include "tilecraft/tree.hpp"

#include <functional>
#include <map>

namespace tilecraft {

// ----------------------------------------------------------------- tile set

struct TileSet {
    const TileUniverse* universe = nullptr;
    std::vector<std::uint8_t> flags;

    TileSet() = default;
    explicit TileSet(const TileUniverse& u, bool full = false)
        : universe(&u), flags(std::size_t(u.tile_count()), full ? 1 : 0) {}

    bool contains(const Tile& s) const { return flags[std::size_t(universe->index_of(s))] != 0; }
    void insert(const Tile& s) { flags[std::size_t(universe->index_of(s))] = 1; }
    void erase(const Tile& s) { flags[std::size_t(universe->index_of(s))] = 0; }
    std::int64_t count() const {
        std::int64_t c = 0;
        for (auto f : flags) c += f;
        return c;
    }
    std::vector<Tile> to_tiles() const {
        std::vector<Tile> out;
        for (std::int64_t i = 0; i < universe->tile_count(); ++i)
            if (flags[std::size_t(i)]) out.push_back(universe->tile_at(i));
        return out;
    }
};

// exact comparison of A * 2^ea  vs  B * 2^eb (|ea - eb| small)
inline int cmp_shifted(std::int64_t A, int ea, std::int64_t B, int eb) {
    if (ea >= eb)
        A <<= (ea - eb);
    else
        B <<= (eb - ea);
    return A < B ? -1 : (A > B ? 1 : 0);
}

// ------------------------------------------------- order-domination sweep

// flags: out[s] = 1 iff some t in Q has s < t (strict order domination)
inline std::vector<std::uint8_t> strictly_dominated(const TileUniverse& u,
                                                    const std::vector<std::uint8_t>& in_q) {
    std::vector<std::uint8_t> out(std::size_t(u.tile_count()), 0);
    for (int k = u.scale_max - 1; k >= u.scale_min; --k) {
        std::int64_t slots = u.time_slots(k), p0 = u.time_pos0(k);
        std::int64_t fslots = u.freq_slots(k), f0 = u.freq_pos0(k);
        for (std::int64_t j = 0; j < slots; ++j)
            for (std::int64_t fi = 0; fi < fslots; ++fi) {
                Tile s{DyadicInterval{p0 + j, k}, DyadicInterval{f0 + fi, -k}};
                DyadicInterval pt = s.time.parent();
                std::uint8_t dom = 0;
                for (const DyadicInterval& h : {s.freq.lower_half(), s.freq.upper_half()}) {
                    Tile t{pt, h};
                    std::size_t ti = std::size_t(u.index_of(t));
                    if (in_q[ti] || out[ti]) { dom = 1; break; }
                }
                out[std::size_t(u.index_of(s))] = dom;
            }
    }
    return out;
}

// ------------------------------------------------------------ tree energy

// R[s]: energy of tiles strictly below s in the maximal plus-tree with top s;
// E[s]: R[s] plus s's own energy when s belongs to the collection.
struct EnergyMap {
    std::vector<double> R;
    std::vector<double> E;
};

inline EnergyMap tree_energy(const TileUniverse& u, const std::vector<std::uint8_t>& members,
                             const std::vector<double>& abs2) {
    EnergyMap em;
    em.R.assign(std::size_t(u.tile_count()), 0.0);
    em.E.assign(std::size_t(u.tile_count()), 0.0);
    for (int k = u.scale_min; k <= u.scale_max; ++k) {
        std::int64_t slots = u.time_slots(k), p0 = u.time_pos0(k);
        std::int64_t fslots = u.freq_slots(k), f0 = u.freq_pos0(k);
        for (std::int64_t j = 0; j < slots; ++j)
            for (std::int64_t fi = 0; fi < fslots; ++fi) {
                Tile s{DyadicInterval{p0 + j, k}, DyadicInterval{f0 + fi, -k}};
                std::size_t si = std::size_t(u.index_of(s));
                double r = 0.0;
                if (k > u.scale_min) {
                    DyadicInterval pw = s.freq.parent();
                    bool upper = (s.freq == pw.upper_half());
                    for (const DyadicInterval& h : {s.time.lower_half(), s.time.upper_half()}) {
                        Tile c{h, pw};
                        std::size_t ci = std::size_t(u.index_of(c));
                        r += em.R[ci];
                        if (upper && members[ci]) r += abs2[ci];
                    }
                }
                em.R[si] = r;
                em.E[si] = r + (members[si] ? abs2[si] : 0.0);
            }
    }
    return em;
}

struct SizeReport {
    double size = 0.0; // sup over tops of sqrt(E / |I_top|)
    Tile witness;      // first top attaining it (canonical order)
    bool has_witness = false;
};

inline SizeReport collection_size(const TileUniverse& u, const std::vector<std::uint8_t>& members,
                                  const std::vector<double>& abs2) {
    EnergyMap em = tree_energy(u, members, abs2);
    SizeReport rep;
    double best = -1.0;
    for (std::int64_t i = 0; i < u.tile_count(); ++i) {
        Tile t = u.tile_at(i);
        double v = em.E[std::size_t(i)] / t.time.length();
        if (v > best) {
            best = v;
            rep.witness = t;
        }
    }
    rep.size = best > 0.0 ? std::sqrt(best) : 0.0;
    rep.has_witness = best > 0.0;
    return rep;
}

inline SizeReport collection_size(const TileUniverse& u, const TileSet& S, const CoeffMap& c) {
    std::vector<double> abs2(std::size_t(u.tile_count()));
    for (std::size_t i = 0; i < abs2.size(); ++i) abs2[i] = std::norm(c.c[i]);
    return collection_size(u, S.flags, abs2);
}

// all universe tiles s with s <= top
inline std::vector<Tile> enumerate_downset(const TileUniverse& u, const Tile& top) {
    std::vector<Tile> out;
    for (int k = u.scale_min; k <= top.time.scale; ++k) {
        int d = top.time.scale - k;
        DyadicInterval freq = top.freq.ancestor(d); // widen to scale -k
        std::int64_t j0 = top.time.pos << d;
        for (std::int64_t j = 0; j < (std::int64_t(1) << d); ++j)
            out.push_back(Tile{DyadicInterval{j0 + j, k}, freq});
    }
    return out;
}

// ------------------------------------------------------------- size split

struct SizeSplitResult {
    std::vector<Tree> trees;      // full removed down-sets (certificate)
    std::vector<Tree> plus_trees; // plus-tree parts (strong disjointness)
    TileSet remainder;
    double threshold = 0.0;
};

// Peels trees while some top has normalized plus-tree energy above sigma/2:
// pick the order-maximal qualifying top (ties: lowest frequency center, then
// leftmost, then smallest time interval), remove its whole down-set from the
// stock. The remainder has size <= sigma/2.
inline SizeSplitResult size_split(const TileUniverse& u, const TileSet& S, const CoeffMap& coeffs,
                                  double sigma) {
    SizeSplitResult res;
    res.remainder = S;
    res.threshold = sigma;
    std::vector<double> abs2(std::size_t(u.tile_count()));
    for (std::size_t i = 0; i < abs2.size(); ++i) abs2[i] = std::norm(coeffs.c[i]);
    double half_sq = 0.25 * sigma * sigma;

    for (;;) {
        EnergyMap em = tree_energy(u, res.remainder.flags, abs2);
        std::vector<std::uint8_t> qual(std::size_t(u.tile_count()), 0);
        bool any = false;
        for (std::int64_t i = 0; i < u.tile_count(); ++i) {
            Tile t = u.tile_at(i);
            if (em.E[std::size_t(i)] > half_sq * t.time.length()) {
                qual[std::size_t(i)] = 1;
                any = true;
            }
        }
        if (!any) break;
        std::vector<std::uint8_t> dom = strictly_dominated(u, qual);
        bool have = false;
        Tile best;
        for (std::int64_t i = 0; i < u.tile_count(); ++i) {
            if (!qual[std::size_t(i)] || dom[std::size_t(i)]) continue;
            Tile t = u.tile_at(i);
            if (!have) { best = t; have = true; continue; }
            // lowest frequency center
            int c = cmp_shifted(2 * t.freq.pos + 1, t.freq.scale - 1, 2 * best.freq.pos + 1,
                                best.freq.scale - 1);
            if (c < 0) { best = t; continue; }
            if (c > 0) continue;
            // leftmost time interval
            c = cmp_shifted(t.time.pos, t.time.scale, best.time.pos, best.time.scale);
            if (c < 0) { best = t; continue; }
            if (c > 0) continue;
            if (t.time.scale < best.time.scale) best = t;
        }
        Tree full{best, {}, TreeKind::any};
        Tree plus{best, {}, TreeKind::plus};
        for (const Tile& s : enumerate_downset(u, best)) {
            if (!res.remainder.contains(s)) continue;
            full.tiles.push_back(s);
            if (plus_member(s, best)) plus.tiles.push_back(s);
            res.remainder.erase(s);
        }
        res.trees.push_back(std::move(full));
        res.plus_trees.push_back(std::move(plus));
    }
    return res;
}

// ---------------------------------------------------------------- density

// Per-universe-tile weights w(s') = int over E lying under N^{-1}(omega_s')
// of chi_{I_s'}, then dense(s) = max of w over every s' >= s. The weight
// quadrature truncates chi at radius_factor * |I| from the center (the
// neglected tail is below 3e-12 of the weight's mass at kappa = 10).
struct DensityContext {
    Grid grid;
    TileUniverse universe;
    WeightProfile weight;
    std::vector<std::uint8_t> set_mask;
    MeasurableChoice choice;
    double set_measure = 0.0;
    double radius_factor = 24.0;
    std::vector<double> weight_map;
    std::vector<double> dense_map;
};

inline DensityContext make_density_context(const Grid& g, const TileUniverse& u,
                                           const WeightProfile& w,
                                           const std::vector<std::uint8_t>& set_mask,
                                           const MeasurableChoice& N, double radius_factor = 24.0) {
    if (set_mask.size() != g.n() || N.values.size() != g.n())
        throw std::invalid_argument("make_density_context: mask/choice size mismatch");
    DensityContext ctx;
    ctx.grid = g;
    ctx.universe = u;
    ctx.weight = w;
    ctx.set_mask = set_mask;
    ctx.choice = N;
    ctx.radius_factor = radius_factor;
    double dx = g.dx();
    for (auto m : set_mask) ctx.set_measure += m ? dx : 0.0;
    ctx.weight_map.assign(std::size_t(u.tile_count()), 0.0);

    for (int k = u.scale_min; k <= u.scale_max; ++k) {
        std::int64_t slots = u.time_slots(k), p0 = u.time_pos0(k);
        std::int64_t fslots = u.freq_slots(k), f0 = u.freq_pos0(k);
        double len = std::ldexp(1.0, k);
        double radius = radius_factor * len;
        for (std::int64_t fi = 0; fi < fslots; ++fi) {
            DyadicInterval freq{f0 + fi, -k};
            double flo = freq.lo(), fhi = freq.hi();
            std::vector<std::size_t> hits; // gated sample indices, sorted
            for (std::size_t m = 0; m < g.n(); ++m)
                if (set_mask[m] && flo <= N.at(m) && N.at(m) < fhi) hits.push_back(m);
            if (hits.empty()) continue;
            for (std::int64_t j = 0; j < slots; ++j) {
                DyadicInterval I{p0 + j, k};
                double c = I.center();
                std::size_t a = std::size_t(std::lower_bound(hits.begin(), hits.end(),
                                                             std::size_t(std::max(0.0, std::ceil((c - radius) / dx)))) -
                                            hits.begin());
                double acc = 0.0;
                for (std::size_t hi2 = a; hi2 < hits.size(); ++hi2) {
                    double x = double(hits[hi2]) * dx;
                    if (x > c + radius) break;
                    acc += ctx.weight.chi((x - c) / len);
                }
                Tile s{I, freq};
                ctx.weight_map[std::size_t(u.index_of(s))] = acc * dx / len;
            }
        }
    }

    // dense(s) = max over one-step dominators, swept from the top scale down
    ctx.dense_map = ctx.weight_map;
    for (int k = u.scale_max - 1; k >= u.scale_min; --k) {
        std::int64_t slots = u.time_slots(k), p0 = u.time_pos0(k);
        std::int64_t fslots = u.freq_slots(k), f0 = u.freq_pos0(k);
        for (std::int64_t j = 0; j < slots; ++j)
            for (std::int64_t fi = 0; fi < fslots; ++fi) {
                Tile s{DyadicInterval{p0 + j, k}, DyadicInterval{f0 + fi, -k}};
                std::size_t si = std::size_t(u.index_of(s));
                DyadicInterval pt = s.time.parent();
                for (const DyadicInterval& h : {s.freq.lower_half(), s.freq.upper_half()}) {
                    Tile t{pt, h};
                    double v = ctx.dense_map[std::size_t(u.index_of(t))];
                    if (v > ctx.dense_map[si]) ctx.dense_map[si] = v;
                }
            }
    }
    return ctx;
}

inline double tile_density(const DensityContext& ctx, const Tile& s) {
    return ctx.dense_map[std::size_t(ctx.universe.index_of(s))];
}

// full-box weight integrals: the largest over all universe tiles (used as the
// density calibration cap)
inline double density_cap(const Grid& g, const TileUniverse& u, const WeightProfile& w,
                          double radius_factor = 24.0) {
    double dx = g.dx();
    double best = 0.0;
    for (int k = u.scale_min; k <= u.scale_max; ++k) {
        std::int64_t slots = u.time_slots(k), p0 = u.time_pos0(k);
        double len = std::ldexp(1.0, k);
        double radius = radius_factor * len;
        for (std::int64_t j = 0; j < slots; ++j) {
            DyadicInterval I{p0 + j, k};
            double c = I.center();
            std::size_t a = std::size_t(std::max(0.0, std::ceil((c - radius) / dx)));
            std::size_t b = std::min(g.n(), std::size_t(std::max(0.0, std::ceil((c + radius) / dx))));
            double acc = 0.0;
            for (std::size_t m = a; m < b; ++m) acc += w.chi((double(m) * dx - c) / len);
            best = std::max(best, acc * dx / len);
        }
    }
    return best;
}

// ----------------------------------------------------------- density split

struct DensitySplitResult {
    std::vector<Tree> trees;
    TileSet remainder;
    double threshold = 0.0;
};

// Removes every tile lying below an order-maximal tile of density > delta/2.
// Each removed tile joins the tree of the first such top (canonical order)
// above it, so the trees partition the removed set.
inline DensitySplitResult density_split(const DensityContext& ctx, const TileSet& S, double delta) {
    const TileUniverse& u = ctx.universe;
    DensitySplitResult res;
    res.remainder = S;
    res.threshold = delta;
    std::vector<std::uint8_t> heavy(std::size_t(u.tile_count()), 0);
    bool any = false;
    for (std::int64_t i = 0; i < u.tile_count(); ++i)
        if (S.flags[std::size_t(i)] && ctx.dense_map[std::size_t(i)] > 0.5 * delta) {
            heavy[std::size_t(i)] = 1;
            any = true;
        }
    if (!any) return res;
    std::vector<std::uint8_t> dom = strictly_dominated(u, heavy);
    std::vector<Tile> tops;
    for (std::int64_t i = 0; i < u.tile_count(); ++i)
        if (heavy[std::size_t(i)] && !dom[std::size_t(i)]) tops.push_back(u.tile_at(i));
    std::sort(tops.begin(), tops.end(), tile_canonical_before);

    res.trees.reserve(tops.size());
    for (const Tile& t : tops) res.trees.push_back(Tree{t, {}, TreeKind::any});
    for (std::int64_t i = 0; i < u.tile_count(); ++i) {
        if (!S.flags[std::size_t(i)]) continue;
        Tile s = u.tile_at(i);
        for (std::size_t ti = 0; ti < tops.size(); ++ti) {
            if (tile_less(s, tops[ti])) {
                res.trees[ti].tiles.push_back(s);
                res.remainder.flags[std::size_t(i)] = 0;
                break;
            }
        }
    }
    return res;
}

// ----------------------------------------------------- master decomposition

struct DecompositionLayer {
    int level = 0;           // the exponent n of this layer
    double sigma_raw = 0.0;  // size threshold handed to size_split
    double delta_raw = 0.0;  // density threshold handed to density_split
    std::vector<Tree> size_trees;
    std::vector<Tree> plus_trees;
    std::vector<Tree> density_trees;
    double size_count = 0.0;    // sum of |I_top| over size trees
    double density_count = 0.0; // sum of |I_top| over density trees
    double count_cal = 0.0;     // (size_count + density_count) / 2^j_e
    double layer_sum_cal = 0.0; // sum over removed tiles of |c_s pair_s| / 2^j_e
    double size_after_cal = 0.0;
    double dense_after_cal = 0.0;
};

struct MasterDecomposition {
    double f_norm = 0.0;
    double e_measure = 0.0;
    int j_e = 0;        // ceil(log2 e_measure): calibrated measure in (1/2, 1]
    double d0 = 0.0;    // density calibration cap
    int n_hi = 0, n_lo = 0;
    std::vector<DecompositionLayer> layers;
    std::vector<Tile> residual;
    double residual_max_abs = 0.0; // largest |c_s| left in the residual
};

// Calibrates (coefficients by 1/||f||_2, measure to (1/2,1], density by the
// cap d0), then walks n downward peeling a size pass at sigma = 2^n (cal)
// and a density pass at delta = 2^(2n-1) (cal) per level. Which leaves the
// entering stock of level n with size < 2^n and density < 2^(2n) in
// calibrated units -- the layer invariants the certificate records.
inline MasterDecomposition master_decomposition(const PacketBank& bank, const SampledSignal& f,
                                                const std::vector<std::uint8_t>& set_mask,
                                                const MeasurableChoice& N, const WeightProfile& w,
                                                int n_floor = -16) {
    const TileUniverse& u = bank.universe;
    const Grid& g = bank.grid;
    MasterDecomposition md;
    md.f_norm = norm_l2(f);
    if (md.f_norm == 0.0) throw std::invalid_argument("master_decomposition: zero input");
    DensityContext ctx = make_density_context(g, u, w, set_mask, N);
    md.e_measure = ctx.set_measure;
    if (md.e_measure <= 0.0) throw std::invalid_argument("master_decomposition: empty set");
    md.j_e = int(std::ceil(std::log2(md.e_measure)));
    md.d0 = density_cap(g, u, w);
    double cal_measure = std::ldexp(1.0, -md.j_e);  // multiply measures by this
    double cal_size = std::exp2(0.5 * md.j_e);      // multiply raw sizes by this

    Spectrum fhat = spectrum(f);
    CoeffMap coeffs = analyze(bank, fhat);
    for (auto& c : coeffs.c) c /= md.f_norm;
    std::vector<cplx> rough = rough_pairings(bank, set_mask, N);

    TileSet stock(u, true);
    SizeReport sr = collection_size(u, stock, coeffs);
    double size_cal = sr.size * cal_size;
    md.n_hi = size_cal > 0.0 ? int(std::ceil(std::log2(size_cal))) : n_floor;
    int n = std::max(md.n_hi, 1);
    md.n_lo = n;

    while (n >= n_floor && stock.count() > 0) {
        DecompositionLayer layer;
        layer.level = n;
        layer.sigma_raw = std::exp2(double(n)) / cal_size;
        layer.delta_raw = std::exp2(double(2 * n - 1)) * md.d0;

        SizeSplitResult ss = size_split(u, stock, coeffs, layer.sigma_raw);
        stock = ss.remainder;
        layer.size_trees = std::move(ss.trees);
        layer.plus_trees = std::move(ss.plus_trees);
        for (const Tree& t : layer.size_trees) layer.size_count += t.top_length();

        DensitySplitResult ds = density_split(ctx, stock, layer.delta_raw);
        stock = ds.remainder;
        layer.density_trees = std::move(ds.trees);
        for (const Tree& t : layer.density_trees) layer.density_count += t.top_length();

        double lsum = 0.0;
        auto add_tiles = [&](const std::vector<Tree>& trees) {
            for (const Tree& t : trees)
                for (const Tile& s : t.tiles) {
                    std::size_t i = std::size_t(u.index_of(s));
                    lsum += std::abs(coeffs.c[i]) * std::abs(rough[i]);
                }
        };
        add_tiles(layer.size_trees);
        add_tiles(layer.density_trees);
        layer.layer_sum_cal = lsum * cal_measure;
        layer.count_cal = (layer.size_count + layer.density_count) * cal_measure;

        SizeReport after = collection_size(u, stock, coeffs);
        layer.size_after_cal = after.size * cal_size;
        double dmax = 0.0;
        for (std::int64_t i = 0; i < u.tile_count(); ++i)
            if (stock.flags[std::size_t(i)]) dmax = std::max(dmax, ctx.dense_map[std::size_t(i)]);
        layer.dense_after_cal = dmax / md.d0;

        bool removed = !layer.size_trees.empty() || !layer.density_trees.empty();
        md.layers.push_back(std::move(layer));
        md.n_lo = n;
        --n;
        if (!removed && after.size == 0.0 && dmax == 0.0) break;
    }

    md.residual = stock.to_tiles();
    for (const Tile& s : md.residual)
        md.residual_max_abs = std::max(md.residual_max_abs, std::abs(coeffs.at(s)));
    return md;
}

// ------------------------------------------------------------- tree lemma

struct TreeLemmaReport {
    double lhs = 0.0;     // |sum over tree tiles of c_s <phi_s gate, set>|
    double size = 0.0;    // size of the tree as its own collection
    double density = 0.0; // max tile density over the tree
    double top_length = 0.0;
    double rhs = 0.0; // size * density * |I_top|
    double ratio = 0.0;
};

inline TreeLemmaReport tree_lemma_ratio(const DensityContext& ctx, const Tree& tree,
                                        const CoeffMap& coeffs, const std::vector<cplx>& rough) {
    const TileUniverse& u = ctx.universe;
    TreeLemmaReport rep;
    rep.top_length = tree.top_length();
    std::vector<std::uint8_t> flags(std::size_t(u.tile_count()), 0);
    std::vector<double> abs2(std::size_t(u.tile_count()), 0.0);
    cplx acc{0.0, 0.0};
    for (const Tile& s : tree.tiles) {
        std::size_t i = std::size_t(u.index_of(s));
        flags[i] = 1;
        abs2[i] = std::norm(coeffs.c[i]);
        acc += coeffs.c[i] * rough[i];
        rep.density = std::max(rep.density, ctx.dense_map[i]);
    }
    rep.lhs = std::abs(acc);
    rep.size = collection_size(u, flags, abs2).size;
    rep.rhs = rep.size * rep.density * rep.top_length;
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

// -------------------------------------------------------- TT* diagnostics

struct TtStarReport {
    std::size_t tiles = 0;
    double max_row_sum = 0.0;  // Schur bound on the Gram operator norm
    double mean_row_sum = 0.0;
    double bessel_max = 0.0;   // max over trials of sum |<f,phi_s>|^2 / ||f||^2
};

// Gram magnitudes depend only on relative geometry, so same-shape pairs are
// memoized: key (k1, k2, mu-bin difference, center difference in quarter
// steps of the finer scale).
inline TtStarReport tt_star_diagnostics(const PacketBank& bank, const std::vector<Tile>& tiles,
                                        std::size_t trials = 8, std::uint64_t seed = 1) {
    TtStarReport rep;
    rep.tiles = tiles.size();
    if (tiles.empty()) return rep;
    std::map<std::tuple<int, int, std::int64_t, std::int64_t>, double> memo;
    auto pair_mag = [&](const Tile& a, const Tile& b) {
        int kf = std::min(a.time.scale, b.time.scale);
        std::int64_t mud = bank.mu_bin(a) - bank.mu_bin(b);
        // centers are odd multiples of 2^(k-1); difference in units of 2^(kf-1)
        std::int64_t ca = (2 * a.time.pos + 1) << (a.time.scale - kf);
        std::int64_t cb = (2 * b.time.pos + 1) << (b.time.scale - kf);
        auto key = std::make_tuple(a.time.scale, b.time.scale, mud, ca - cb);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        double v = std::abs(bank.packet_inner(a, b));
        memo.emplace(key, v);
        return v;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < tiles.size(); ++j) row += pair_mag(tiles[i], tiles[j]);
        rep.max_row_sum = std::max(rep.max_row_sum, row);
        total += row;
    }
    rep.mean_row_sum = total / double(tiles.size());

    Rng rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        SampledSignal f(bank.grid);
        for (auto& v : f.values) v = rng.next_cgaussian();
        double fsq = norm_sq(f);
        Spectrum fhat = spectrum(f);
        double acc = 0.0;
        for (const Tile& s : tiles) acc += std::norm(bank.coefficient(fhat, s));
        rep.bessel_max = std::max(rep.bessel_max, acc / fsq);
    }
    return rep;
}

// --------------------------------------------- incomparable-set weak type

struct IncomparableReport {
    std::vector<Tile> selected; // greedy maximal pairwise-incomparable family
    double shadow_sum = 0.0;    // sum of |I_s| over the family
    double ratio = 0.0;         // lambda^2 * shadow_sum / ||f||^2
};

// Candidates are the pool tiles with |c_s| > lambda sqrt(|I_s|); the greedy
// pass keeps a tile iff it is incomparable with everything already kept.
inline IncomparableReport incomparable_weak_type(const TileUniverse& u, const CoeffMap& coeffs,
                                                 double lambda, double f_norm_sq,
                                                 const TileSet& pool) {
    IncomparableReport rep;
    for (std::int64_t i = 0; i < u.tile_count(); ++i) {
        if (!pool.flags[std::size_t(i)]) continue;
        Tile s = u.tile_at(i);
        if (!(std::abs(coeffs.c[std::size_t(i)]) > lambda * std::sqrt(s.time.length()))) continue;
        bool ok = true;
        for (const Tile& t : rep.selected)
            if (tiles_comparable(s, t)) { ok = false; break; }
        if (ok) rep.selected.push_back(s);
    }
    for (const Tile& s : rep.selected) rep.shadow_sum += s.time.length();
    rep.ratio = f_norm_sq > 0.0 ? lambda * lambda * rep.shadow_sum / f_norm_sq : 0.0;
    return rep;
}

} // namespace tilecraft
