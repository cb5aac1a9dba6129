#pragma once

// JSON and CSV emission: tree/forest certificates, decomposition dumps, and
// the experiment report envelope. Keys are emitted in insertion order so a
// report is byte-stable across runs and thread counts.

#include "tilecraft/combinatorics.hpp"

#include "json.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace tilecraft {

using ordered_json = nlohmann::ordered_json;

inline ordered_json tree_json(const Tree& t) {
    ordered_json j;
    j["top"] = tile_token(t.top);
    j["kind"] = tree_kind_name(t.kind);
    j["top_length"] = t.top_length();
    ordered_json tiles = ordered_json::array();
    for (const Tile& s : t.tiles) tiles.push_back(tile_token(s));
    j["tiles"] = std::move(tiles);
    return j;
}

inline ordered_json forest_json(const ForestCertificate& fc) {
    ordered_json j;
    j["tree_count"] = fc.trees.size();
    j["count"] = fc.count();
    j["claimed_count_bound"] = fc.claimed_count_bound;
    ordered_json trees = ordered_json::array();
    for (const Tree& t : fc.trees) trees.push_back(tree_json(t));
    j["trees"] = std::move(trees);
    return j;
}

inline ordered_json layer_json(const DecompositionLayer& l) {
    ordered_json j;
    j["level"] = l.level;
    j["sigma_raw"] = l.sigma_raw;
    j["delta_raw"] = l.delta_raw;
    j["size_tree_count"] = l.size_trees.size();
    j["density_tree_count"] = l.density_trees.size();
    j["size_count"] = l.size_count;
    j["density_count"] = l.density_count;
    j["count_cal"] = l.count_cal;
    j["layer_sum_cal"] = l.layer_sum_cal;
    j["size_after_cal"] = l.size_after_cal;
    j["dense_after_cal"] = l.dense_after_cal;
    ordered_json st = ordered_json::array();
    for (const Tree& t : l.size_trees) st.push_back(tree_json(t));
    j["size_trees"] = std::move(st);
    ordered_json pt = ordered_json::array();
    for (const Tree& t : l.plus_trees) pt.push_back(tree_json(t));
    j["plus_trees"] = std::move(pt);
    ordered_json dt = ordered_json::array();
    for (const Tree& t : l.density_trees) dt.push_back(tree_json(t));
    j["density_trees"] = std::move(dt);
    return j;
}

inline ordered_json decomposition_json(const MasterDecomposition& md) {
    ordered_json j;
    j["f_norm"] = md.f_norm;
    j["e_measure"] = md.e_measure;
    j["j_e"] = md.j_e;
    j["d0"] = md.d0;
    j["n_hi"] = md.n_hi;
    j["n_lo"] = md.n_lo;
    j["layer_count"] = md.layers.size();
    j["residual_tiles"] = md.residual.size();
    j["residual_max_abs"] = md.residual_max_abs;
    ordered_json layers = ordered_json::array();
    for (const auto& l : md.layers) layers.push_back(layer_json(l));
    j["layers"] = std::move(layers);
    return j;
}

// ------------------------------------------------------------------ tables

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static std::string num(double v) {
        std::ostringstream os;
        os << std::setprecision(17) << v;
        return os.str();
    }
    void row(std::vector<std::string> r) { rows.push_back(std::move(r)); }
    std::string csv() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
        os << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << "\n";
        }
        return os.str();
    }
    ordered_json json() const {
        ordered_json rows_j = ordered_json::array();
        for (const auto& r : rows) {
            ordered_json row_j = ordered_json::object();
            for (std::size_t i = 0; i < r.size() && i < header.size(); ++i) row_j[header[i]] = r[i];
            rows_j.push_back(std::move(row_j));
        }
        return rows_j;
    }
};

// ------------------------------------------------------------------ report

struct ExperimentReport {
    std::string name;
    ordered_json params = ordered_json::object();
    ordered_json results = ordered_json::object();
    Table table;
    bool passed = true;

    ordered_json json() const {
        ordered_json j;
        j["schema_version"] = 1;
        j["experiment"] = name;
        j["passed"] = passed;
        j["params"] = params;
        j["results"] = results;
        j["table"] = table.json();
        return j;
    }
};

inline void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_text: cannot open " + path);
    out << body;
    if (!out) throw std::runtime_error("write_text: write failed for " + path);
}

} // namespace tilecraft
