#pragma once

// Trees of tiles (sub-lattices under one top), the plus/minus sign convention,
// forests with counting certificates, and the strong-disjointness check that
// underwrites the almost-orthogonality estimates.

#include "tilecraft/dyadic.hpp"

#include <optional>

namespace tilecraft {

enum class TreeKind { any, plus, minus };

inline const char* tree_kind_name(TreeKind k) {
    switch (k) {
        case TreeKind::plus: return "plus";
        case TreeKind::minus: return "minus";
        default: return "any";
    }
}

// A tree is a set of tiles all <= its top. The top is geometry: it does not
// have to belong to the tile pool the tree was carved from.
struct Tree {
    Tile top;
    std::vector<Tile> tiles;
    TreeKind kind = TreeKind::any;

    double top_length() const { return top.time.length(); }
};

// Does s belong to a +/-tree with this top? Non-top members must keep the
// top's frequency interval inside their upper (resp. lower) half; the top
// itself belongs by plain membership.
inline bool plus_member(const Tile& s, const Tile& top) {
    return s == top || (interval_subset(s.time, top.time) && interval_subset(top.freq, s.freq_plus()));
}
inline bool minus_member(const Tile& s, const Tile& top) {
    return s == top || (interval_subset(s.time, top.time) && interval_subset(top.freq, s.freq_minus()));
}

inline bool tree_valid(const Tree& tree) {
    if (!tree.top.area_one()) return false;
    for (const auto& s : tree.tiles) {
        if (!s.area_one() || !tile_less(s, tree.top)) return false;
        if (tree.kind == TreeKind::plus && !plus_member(s, tree.top)) return false;
        if (tree.kind == TreeKind::minus && !minus_member(s, tree.top)) return false;
    }
    return true;
}

// Largest +tree with the given top inside the pool: every pool tile whose
// upper frequency half swallows omega_top, plus the top if the pool holds it.
// Any +tree of the pool with this top is a subset of the result.
inline Tree maximal_plus_tree(const Tile& top, const std::vector<Tile>& pool) {
    if (!top.area_one()) throw std::invalid_argument("maximal_plus_tree: top is not area-one");
    Tree out;
    out.top = top;
    out.kind = TreeKind::plus;
    for (const auto& s : pool)
        if (plus_member(s, top)) out.tiles.push_back(s);
    return out;
}

// In a +tree the lower halves I_s x omega_{s-} are pairwise disjoint; handy
// both as a sanity check and as the geometric heart of the Bessel bound.
inline bool plus_tree_lower_halves_disjoint(const Tree& tree) {
    for (std::size_t i = 0; i < tree.tiles.size(); ++i)
        for (std::size_t j = i + 1; j < tree.tiles.size(); ++j) {
            const Tile& a = tree.tiles[i];
            const Tile& b = tree.tiles[j];
            if (!intervals_disjoint(a.time, b.time) && !intervals_disjoint(a.freq_minus(), b.freq_minus()))
                return false;
        }
    return true;
}

struct StrongDisjointnessViolation {
    std::size_t tree_a = 0, tile_a = 0;
    std::size_t tree_b = 0, tile_b = 0;
};

// Strong disjointness across a forest of +trees: whenever s in T and s' in T'
// (T != T') have omega_{s-} strictly inside omega_{s'-}, the time interval of
// s' must stay clear of the whole shadow I_T. Returns the first violation in
// scan order, or nothing if the forest is strongly disjoint.
inline std::optional<StrongDisjointnessViolation>
verify_strong_disjointness(const std::vector<Tree>& trees) {
    for (std::size_t a = 0; a < trees.size(); ++a)
        for (std::size_t b = 0; b < trees.size(); ++b) {
            if (a == b) continue;
            for (std::size_t i = 0; i < trees[a].tiles.size(); ++i)
                for (std::size_t j = 0; j < trees[b].tiles.size(); ++j) {
                    const Tile& s = trees[a].tiles[i];
                    const Tile& sp = trees[b].tiles[j];
                    if (interval_relation(s.freq_minus(), sp.freq_minus()) != IntervalRelation::a_inside_b)
                        continue;
                    if (!intervals_disjoint(sp.time, trees[a].top.time))
                        return StrongDisjointnessViolation{a, i, b, j};
                }
        }
    return std::nullopt;
}

// A forest plus the count bound its producer claims; count() is the certified
// quantity sum |I_top|.
struct ForestCertificate {
    std::vector<Tree> trees;       // selection order is meaningful
    double claimed_count_bound = 0.0;

    double count() const {
        double acc = 0.0;
        for (const auto& t : trees) acc += t.top_length();
        return acc;
    }
};

// The forest partitions exactly the given collection: members cover it, no
// tile sits in two trees, and every tree is internally valid.
inline bool forest_partitions(const ForestCertificate& forest, std::vector<Tile> collection) {
    std::vector<Tile> members;
    for (const auto& tree : forest.trees) {
        if (!tree_valid(tree)) return false;
        members.insert(members.end(), tree.tiles.begin(), tree.tiles.end());
    }
    auto canon = [](std::vector<Tile>& v) { std::sort(v.begin(), v.end(), tile_canonical_before); };
    canon(members);
    canon(collection);
    if (members.size() != collection.size()) return false;
    for (std::size_t i = 0; i + 1 < members.size(); ++i)
        if (members[i] == members[i + 1]) return false;
    return members == collection;
}

} // namespace tilecraft
