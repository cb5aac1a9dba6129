#pragma once

// Exact integer arithmetic for the dyadic grid: intervals [j*2^k, (j+1)*2^k),
// area-one time-frequency tiles, and the finite tile universe used everywhere
// else. Nothing here touches floating point except the convenience accessors
// (center/length), so all order and incidence decisions are exact.

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace tilecraft {

inline double ldexp2(double v, int e) { return std::ldexp(v, e); }

// [pos*2^scale, (pos+1)*2^scale)
struct DyadicInterval {
    std::int64_t pos = 0;
    int scale = 0;

    double lo() const { return ldexp2(double(pos), scale); }
    double hi() const { return ldexp2(double(pos) + 1.0, scale); }
    double length() const { return ldexp2(1.0, scale); }
    double center() const { return ldexp2(double(pos) + 0.5, scale); }

    DyadicInterval lower_half() const { return {pos * 2, scale - 1}; }
    DyadicInterval upper_half() const { return {pos * 2 + 1, scale - 1}; }
    DyadicInterval parent() const {
        // arithmetic shift = floor division, also for negative pos
        return {pos >> 1, scale + 1};
    }
    // the scale' >= scale ancestor in the grid
    DyadicInterval ancestor(int scale_up) const {
        if (scale_up < 0 || scale_up > 62) throw std::invalid_argument("ancestor: bad scale delta");
        return {pos >> scale_up, scale + scale_up};
    }
    // x in [lo, hi)?
    bool contains_point(double x) const { return x >= lo() && x < hi(); }

    friend bool operator==(const DyadicInterval& a, const DyadicInterval& b) {
        return a.pos == b.pos && a.scale == b.scale;
    }
    friend bool operator!=(const DyadicInterval& a, const DyadicInterval& b) { return !(a == b); }
};

enum class IntervalRelation { disjoint, equal, a_inside_b, b_inside_a };

// Exact trichotomy of the dyadic grid: two dyadic intervals are equal, nested,
// or disjoint; a_inside_b / b_inside_a denote strict containment.
inline IntervalRelation interval_relation(const DyadicInterval& a, const DyadicInterval& b) {
    if (a.scale == b.scale) return a.pos == b.pos ? IntervalRelation::equal : IntervalRelation::disjoint;
    if (a.scale < b.scale) {
        int d = b.scale - a.scale;
        if (d > 62) throw std::invalid_argument("interval_relation: scale gap too wide");
        return (a.pos >> d) == b.pos ? IntervalRelation::a_inside_b : IntervalRelation::disjoint;
    }
    int d = a.scale - b.scale;
    if (d > 62) throw std::invalid_argument("interval_relation: scale gap too wide");
    return (b.pos >> d) == a.pos ? IntervalRelation::b_inside_a : IntervalRelation::disjoint;
}

inline bool interval_subset(const DyadicInterval& a, const DyadicInterval& b) {
    auto r = interval_relation(a, b);
    return r == IntervalRelation::equal || r == IntervalRelation::a_inside_b;
}
inline bool intervals_disjoint(const DyadicInterval& a, const DyadicInterval& b) {
    return interval_relation(a, b) == IntervalRelation::disjoint;
}

// Area-one rectangle I x omega; time.scale + freq.scale == 0 is the invariant.
struct Tile {
    DyadicInterval time;
    DyadicInterval freq;

    bool area_one() const { return time.scale + freq.scale == 0; }
    DyadicInterval freq_minus() const { return freq.lower_half(); }
    DyadicInterval freq_plus() const { return freq.upper_half(); }

    friend bool operator==(const Tile& a, const Tile& b) { return a.time == b.time && a.freq == b.freq; }
    friend bool operator!=(const Tile& a, const Tile& b) { return !(a == b); }
};

// s <= t  iff  omega_s >= omega_t and I_s <= I_t (non-strict on both sides;
// distinct comparable tiles always differ in scale).
inline bool tile_less(const Tile& s, const Tile& t) {
    return interval_subset(s.time, t.time) && interval_subset(t.freq, s.freq);
}

inline bool tiles_comparable(const Tile& s, const Tile& t) { return tile_less(s, t) || tile_less(t, s); }

inline bool tiles_disjoint(const Tile& s, const Tile& t) {
    return intervals_disjoint(s.time, t.time) || intervals_disjoint(s.freq, t.freq);
}

// The lattice dichotomy: two tiles are incomparable exactly when their
// rectangles are disjoint. Returns whether the biconditional holds.
inline bool tiles_incomparable_iff_disjoint(const Tile& s, const Tile& t) {
    return !tiles_comparable(s, t) == tiles_disjoint(s, t);
}

// Canonical order: time scale asc, then time position, then freq position.
// Universe enumeration, certificates and every reduction follow it.
inline bool tile_canonical_before(const Tile& a, const Tile& b) {
    if (a.time.scale != b.time.scale) return a.time.scale < b.time.scale;
    if (a.time.pos != b.time.pos) return a.time.pos < b.time.pos;
    return a.freq.pos < b.freq.pos;
}

// "k:j@K:J" = time scale:pos @ freq scale:pos
inline std::string tile_token(const Tile& t) {
    return std::to_string(t.time.scale) + ":" + std::to_string(t.time.pos) + "@" +
           std::to_string(t.freq.scale) + ":" + std::to_string(t.freq.pos);
}

inline Tile parse_tile_token(const std::string& tok) {
    auto at = tok.find('@');
    if (at == std::string::npos) throw std::invalid_argument("parse_tile_token: missing '@' in \"" + tok + "\"");
    auto split = [](const std::string& part) -> DyadicInterval {
        auto colon = part.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("parse_tile_token: missing ':'");
        std::size_t used1 = 0, used2 = 0;
        int sc = std::stoi(part.substr(0, colon), &used1);
        std::int64_t p = std::stoll(part.substr(colon + 1), &used2);
        if (used1 != colon || used2 != part.size() - colon - 1)
            throw std::invalid_argument("parse_tile_token: trailing characters");
        return {p, sc};
    };
    Tile t;
    t.time = split(tok.substr(0, at));
    t.freq = split(tok.substr(at + 1));
    if (!t.area_one()) throw std::invalid_argument("parse_tile_token: scales do not sum to zero");
    return t;
}

// All area-one tiles with I_s inside box_time, omega_s inside box_freq and
// time scale in [scale_min, scale_max]. Enumeration is canonical and index
// arithmetic is O(1): every scale contributes the same number of tiles,
// 2^(box_time.scale + box_freq.scale).
struct TileUniverse {
    DyadicInterval box_time;
    DyadicInterval box_freq;
    int scale_min = 0;
    int scale_max = 0;

    TileUniverse() = default;
    TileUniverse(DyadicInterval bt, DyadicInterval bf, int smin, int smax)
        : box_time(bt), box_freq(bf), scale_min(smin), scale_max(smax) {
        if (smin > smax) throw std::invalid_argument("TileUniverse: scale_min > scale_max");
        if (smax > bt.scale) throw std::invalid_argument("TileUniverse: tiles longer than the time box");
        if (-smin > bf.scale) throw std::invalid_argument("TileUniverse: tiles wider than the frequency box");
        if (bt.scale + bf.scale > 40) throw std::invalid_argument("TileUniverse: box product too large");
    }

    int scale_count() const { return scale_max - scale_min + 1; }
    std::int64_t per_scale_count() const { return std::int64_t(1) << (box_time.scale + box_freq.scale); }
    std::int64_t tile_count() const { return per_scale_count() * scale_count(); }

    std::int64_t time_slots(int k) const { return std::int64_t(1) << (box_time.scale - k); }
    std::int64_t freq_slots(int k) const { return std::int64_t(1) << (box_freq.scale + k); }
    std::int64_t time_pos0(int k) const { return box_time.pos << (box_time.scale - k); }
    std::int64_t freq_pos0(int k) const { return box_freq.pos << (box_freq.scale + k); }

    bool contains(const Tile& t) const {
        if (!t.area_one()) return false;
        int k = t.time.scale;
        if (k < scale_min || k > scale_max) return false;
        return interval_subset(t.time, box_time) && interval_subset(t.freq, box_freq);
    }

    std::int64_t index_of(const Tile& t) const {
        if (!contains(t)) throw std::invalid_argument("TileUniverse::index_of: tile outside universe");
        int k = t.time.scale;
        std::int64_t ti = t.time.pos - time_pos0(k);
        std::int64_t fi = t.freq.pos - freq_pos0(k);
        return std::int64_t(k - scale_min) * per_scale_count() + ti * freq_slots(k) + fi;
    }

    Tile tile_at(std::int64_t idx) const {
        if (idx < 0 || idx >= tile_count()) throw std::invalid_argument("TileUniverse::tile_at: index out of range");
        int k = scale_min + int(idx / per_scale_count());
        std::int64_t r = idx % per_scale_count();
        std::int64_t ti = r / freq_slots(k);
        std::int64_t fi = r % freq_slots(k);
        return Tile{{time_pos0(k) + ti, k}, {freq_pos0(k) + fi, -k}};
    }

    std::vector<Tile> enumerate() const {
        std::vector<Tile> out;
        out.reserve(std::size_t(tile_count()));
        for (std::int64_t i = 0; i < tile_count(); ++i) out.push_back(tile_at(i));
        return out;
    }
};

// [lo*2^scale, hi*2^scale), used by shadow() so endpoint arithmetic stays exact
struct ScaledInterval {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    int scale = 0;
    double length() const { return ldexp2(double(hi - lo), scale); }
};

// Union of the time shadows I_s as the minimal family of disjoint half-open
// intervals (dyadic endpoints), all expressed at the finest participating scale.
inline std::vector<ScaledInterval> shadow(const std::vector<Tile>& tiles) {
    if (tiles.empty()) return {};
    int kmin = tiles.front().time.scale;
    for (const auto& t : tiles) kmin = std::min(kmin, t.time.scale);
    std::vector<std::pair<std::int64_t, std::int64_t>> spans;
    spans.reserve(tiles.size());
    for (const auto& t : tiles) {
        int up = t.time.scale - kmin;
        if (up > 62) throw std::invalid_argument("shadow: scale spread too wide");
        std::int64_t lo = t.time.pos << up;
        spans.emplace_back(lo, lo + (std::int64_t(1) << up));
    }
    std::sort(spans.begin(), spans.end());
    std::vector<ScaledInterval> out;
    for (const auto& [lo, hi] : spans) {
        if (!out.empty() && lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, hi);
        else
            out.push_back({lo, hi, kmin});
    }
    return out;
}

inline double shadow_length(const std::vector<Tile>& tiles) {
    double acc = 0.0;
    for (const auto& iv : shadow(tiles)) acc += iv.length();
    return acc;
}

} // namespace tilecraft
