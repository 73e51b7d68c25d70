#pragma once

// JSON and CSV emission. Exact quantities (valuations, types, squared
// distances, weights) are serialized as decimal rational strings; only
// genuinely real-valued statistics are written as floating point.

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "a2walk/building.hpp"
#include "a2walk/panel_tree.hpp"
#include "a2walk/walk.hpp"

namespace a2walk {

using json = nlohmann::json;

inline json to_json(const std::array<Int, 3>& v) {
    return json::array({v[0].str(), v[1].str(), v[2].str()});
}

inline json to_json(const TypeVector& t) {
    return json::array({t.coords[0].str(), t.coords[1].str(), t.coords[2].str()});
}

inline json to_json(const Flag& f) {
    return json{{"line", to_json(f.line)}, {"plane", to_json(f.plane)}};
}

inline json to_json(const GermChamber& g) {
    auto arr = [](const std::array<long, 3>& v) {
        return json::array({std::to_string(v[0]), std::to_string(v[1]), std::to_string(v[2])});
    };
    return json{{"line", arr(g.line)}, {"plane", arr(g.plane)}};
}

inline json to_json(const BuildingVertex& v) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i) {
        json row = json::array();
        for (int j = 0; j < 3; ++j) row.push_back(numerator(v.canon.a[i][j]).str());
        rows.push_back(row);
    }
    return json{{"basis", rows}};
}

inline Flag flag_from_json(const json& j) {
    std::array<Rat, 3> line, plane;
    for (int i = 0; i < 3; ++i) {
        line[i] = rat_from_string(j.at("line").at(i).get<std::string>());
        plane[i] = rat_from_string(j.at("plane").at(i).get<std::string>());
    }
    return Flag::make(line, plane);
}

inline BuildingVertex vertex_from_json(const json& j, long p) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c)
            m.a[i][c] = rat_from_string(j.at("basis").at(i).at(c).get<std::string>());
    return BuildingVertex::from_basis(m, p);
}

// One JSONL line of the walk stream.
inline json record_to_json(std::uint64_t traj, const TrajectoryRecord& r) {
    json j{{"traj", traj},
           {"n", r.n},
           {"theta", to_json(r.theta)},
           {"step", std::sqrt(static_cast<double>(r.step_sq))}};
    j["flag"] = r.flag ? to_json(*r.flag) : json(nullptr);
    j["germ"] = r.germ ? to_json(*r.germ) : json(nullptr);
    j["gap_exp"] = r.gap_exp ? json(*r.gap_exp) : json(nullptr);
    return j;
}

inline json to_json(const EstimateReport& rep) {
    return json{{"lambda_hat", to_json(rep.lambda_hat)},
                {"stderr", rep.stderr_mean},
                {"spread", rep.spread},
                {"regular", rep.regular},
                {"regular_margin", rep.regular_margin},
                {"iota_asymmetry", rep.iota_asymmetry},
                {"drift_hat", rep.drift_hat}};
}

inline json to_json(const OppositionReport& rep) {
    return json{{"pairs", rep.pairs},
                {"converged", rep.converged},
                {"skipped", rep.skipped},
                {"opposite", rep.opposite_count},
                {"rate", rep.rate}};
}

// Cell values here are numbers and rational strings; no quoting needed.
inline std::string csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
    return out;
}

}  // namespace a2walk
