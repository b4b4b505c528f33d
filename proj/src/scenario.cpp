#include "spreadrisk/scenario.hpp"

#include "spreadrisk/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace spreadrisk {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Outbreak-rate floor keeping the log resource model defined for cells that
// cannot ignite (water) or nodes the examples describe as zero-rate.
constexpr double kLambdaFloor = 1e-12;

double cell_base_rate(const Cell& c) {
    switch (c.cls) {
        case CellClass::Vegetation: return 2.0 * c.vegetation;
        case CellClass::City: return 0.5;
        case CellClass::Water: return 0.0;
    }
    return 0.0;
}

void set_node_lambda(NodeParam& nd, double lam) {
    nd.lambda_upper = std::max(lam, kLambdaFloor);
    nd.lambda_lower = std::max(0.01 * nd.lambda_upper, kLambdaFloor);
}

}  // namespace

SpreadingNetwork build_grid_network(const GridLandscape& land, double delta,
                                    double diagonal_correction) {
    if (land.width < 2 || land.height < 2) {
        throw ValidationError("build_grid_network: landscape must be at least 2x2");
    }
    if (static_cast<int>(land.cells.size()) != land.size()) {
        throw ValidationError("build_grid_network: cell count does not match width*height");
    }
    const int w = land.width, h = land.height;
    SpreadingNetwork net(land.size());
    net.set_grid({w, h});

    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const int i = row * w + col;
            const Cell& c = land.at(col, row);
            NodeParam& nd = net.node(i);
            nd.cost = c.cls == CellClass::Water ? 0.0 : c.cost;
            nd.delta_lower = delta;
            nd.delta_upper = delta;
            set_node_lambda(nd, c.cls == CellClass::Water ? 0.0 : c.lambda);
            nd.tau_lower = 1.0 / 8.0;
            nd.tau_upper = 1.0;
        }
    }

    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            const int j = row * w + col;
            const Cell& source = land.at(col, row);
            if (cell_base_rate(source) <= 0.0) continue;  // water spreads nothing
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int r2 = row + dr, c2 = col + dc;
                    if (r2 < 0 || r2 >= h || c2 < 0 || c2 >= w) continue;
                    const Cell& target = land.at(c2, r2);
                    const double base = cell_base_rate(target);
                    if (base <= 0.0) continue;  // nothing burns in water
                    const bool diagonal = dr != 0 && dc != 0;
                    EdgeParam e;
                    e.from = j;
                    e.to = r2 * w + c2;
                    e.beta_upper = base * (diagonal ? diagonal_correction : 1.0);
                    e.beta_lower = 0.01 * e.beta_upper;
                    e.weight = 1.0;
                    net.add_edge(e);
                }
            }
        }
    }
    net.set_delta_ceiling(2.0 * delta);
    return net;
}

void apply_wind(SpreadingNetwork& net, const WindSpec& wind, const WindCoefficients& coeffs) {
    if (!net.grid()) {
        throw ValidationError("apply_wind: network has no grid embedding");
    }
    if (wind.speed < 0.0) throw ValidationError("apply_wind: wind speed must be >= 0");
    if (wind.speed == 0.0) return;
    const int w = net.grid()->width;
    const double theta = wind.from_deg * kPi / 180.0;
    // blowing direction, x east / y south: opposite of where it comes from
    const double bx = -std::sin(theta);
    const double by = std::cos(theta);
    for (int idx = 0; idx < net.edge_count(); ++idx) {
        EdgeParam& e = net.edge_mutable(idx);
        const double dx = static_cast<double>(e.to % w - e.from % w);
        const double dy = static_cast<double>(e.to / w - e.from / w);
        const double norm = std::sqrt(dx * dx + dy * dy);
        const double cos_angle = (bx * dx + by * dy) / norm;
        const double mult =
            std::exp(coeffs.c1 * wind.speed) * std::exp(coeffs.c2 * wind.speed * (cos_angle - 1.0));
        // bounds scale together, weights untouched
        e.beta_upper *= mult;
        e.beta_lower *= mult;
    }
}

namespace {

// 16-node topology: classes A {1..4} (ring + three spokes, degree 4),
// B {5..8} (degree 2), C {9..12} (degree 3), D {13..16} (leaves). The 4-fold
// rotation symmetry makes risk constant within a class under uniform
// parameters, so the risk ranking equals the degree ranking exactly.
const std::vector<std::pair<int, int>>& sixteen_node_undirected_edges() {
    static const std::vector<std::pair<int, int>> edges = {
        {0, 1}, {1, 2},  {2, 3},  {3, 0},                    // ring A
        {0, 4}, {1, 5},  {2, 6},  {3, 7},                    // A-B
        {0, 8}, {1, 9},  {2, 10}, {3, 11},                   // A-C
        {4, 8}, {5, 9},  {6, 10}, {7, 11},                   // B-C
        {8, 12}, {9, 13}, {10, 14}, {11, 15},                // C-D
    };
    return edges;
}

bool is_strong_sixteen_edge(int a, int b) {
    // edges funneling into node 15 (1-based): 3-11, 7-11, 11-15 in 0-based ids
    auto key = [](int x, int y) { return std::pair<int, int>(std::min(x, y), std::max(x, y)); };
    const auto k = key(a, b);
    return k == key(2, 10) || k == key(6, 10) || k == key(10, 14);
}

}  // namespace

SpreadingNetwork sixteen_node_example(SixteenNodeVariant variant) {
    SpreadingNetwork net(16);
    const bool mixed_beta = variant == SixteenNodeVariant::MixedSpreading ||
                            variant == SixteenNodeVariant::HeterogeneousOutbreak;
    for (const auto& [a, b] : sixteen_node_undirected_edges()) {
        double beta = 0.5;
        if (mixed_beta) beta = is_strong_sixteen_edge(a, b) ? 0.8 : 0.2;
        for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
            EdgeParam e;
            e.from = from;
            e.to = to;
            e.beta_upper = beta;
            e.beta_lower = 0.01 * beta;
            e.weight = 1.0;
            net.add_edge(e);
        }
    }
    for (int i = 0; i < 16; ++i) {
        NodeParam& nd = net.node(i);
        nd.delta_lower = 1.0;
        nd.delta_upper = 1.0;
        nd.cost = 1.0;
        set_node_lambda(nd, 1.0);
        nd.tau_lower = 1.0 / 8.0;
        nd.tau_upper = 1.0;
    }
    if (variant != SixteenNodeVariant::Uniform) {
        // high-cost nodes 14, 15 in the paper's 1-based ids
        for (int i = 0; i < 16; ++i) net.node(i).cost = (i == 13 || i == 14) ? 1.0 : 0.1;
    }
    if (variant == SixteenNodeVariant::HeterogeneousOutbreak) {
        // outbreak-rate peak at node 3 (1-based)
        for (int i = 0; i < 16; ++i) set_node_lambda(net.node(i), i == 2 ? 1.0 : 0.1);
    }
    net.set_delta_ceiling(2.0);
    return net;
}

SpreadingNetwork seven_node_example() {
    SpreadingNetwork net(7);
    // community cluster 1-5, bridge 1-6, caretaker-patient pair 6-7 (1-based)
    const std::vector<std::pair<int, int>> undirected = {
        {0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {1, 4},  // cluster
        {0, 5},                                          // bridge
        {5, 6},                                          // caretaker -> patient
    };
    for (const auto& [a, b] : undirected) {
        for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
            EdgeParam e;
            e.from = from;
            e.to = to;
            e.beta_upper = 0.5;
            e.beta_lower = 0.05;
            // the expensive direction is into the patient
            e.weight = (from == 5 && to == 6) ? 10.0 : 1.0;
            net.add_edge(e);
        }
    }
    for (int i = 0; i < 7; ++i) {
        NodeParam& nd = net.node(i);
        nd.cost = i == 6 ? 20.0 : 1.0;
        nd.delta_lower = 0.3;
        nd.delta_upper = 0.8;
        set_node_lambda(nd, i == 0 ? 1.0 : (i == 6 ? 0.0 : 0.2));
        nd.tau_lower = 1.0 / 8.0;
        nd.tau_upper = 1.0;
    }
    net.set_delta_ceiling(1.0);
    return net;
}

double seven_node_rate_bound() { return 1.3; }

GridLandscape make_wildfire_landscape(int width, int height) {
    if (width < 4 || height < 4) throw ValidationError("make_wildfire_landscape: need at least 4x4");
    GridLandscape land;
    land.width = width;
    land.height = height;
    land.cells.resize(static_cast<size_t>(width) * height);

    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            const double fx = static_cast<double>(col) / (width - 1);
            const double fy = static_cast<double>(row) / (height - 1);
            Cell& c = land.at(col, row);

            const double lake = std::pow((fx - 0.78) / 0.10, 2) + std::pow((fy - 0.22) / 0.09, 2);
            const bool river =
                std::abs(fy - (0.58 + 0.08 * std::sin(2.0 * kPi * fx))) < 0.025 && fx > 0.45;
            const bool city = fx >= 0.55 && fx <= 0.72 && fy >= 0.70 && fy <= 0.88;

            if (lake <= 1.0 || river) {
                c.cls = CellClass::Water;
                c.vegetation = 0.0;
                c.cost = 0.0;
                c.lambda = 0.0;
            } else if (city) {
                c.cls = CellClass::City;
                c.vegetation = 0.0;
                c.cost = 1.0;
                c.lambda = 0.02;
            } else {
                c.cls = CellClass::Vegetation;
                // dense eucalyptus-style forest on the west side, grassland east
                const double forest = 0.75 + 0.2 * std::sin(3.0 * kPi * fx) * std::sin(2.0 * kPi * fy);
                const double grass = 0.32 + 0.12 * std::sin(5.0 * kPi * (fx + fy));
                c.vegetation = std::clamp(fx < 0.35 ? forest : grass, 0.05, 1.0);
                // cost tapers from the city buffer outwards
                const double cx = std::clamp(fx, 0.55, 0.72), cy = std::clamp(fy, 0.70, 0.88);
                const double dist = std::hypot(fx - cx, fy - cy);
                c.cost = dist < 0.10 ? 0.4 : 0.05 + 0.1 * c.vegetation;
                // ignition-prone southeast corner
                c.lambda = 0.05 + 0.35 * std::exp(-(std::pow(fx - 0.92, 2) + std::pow(fy - 0.92, 2)) / 0.02);
            }
        }
    }
    return land;
}

SpreadingNetwork grid_wildfire_example(int width, int height, const WindSpec& wind) {
    GridLandscape land = make_wildfire_landscape(width, height);
    SpreadingNetwork net = build_grid_network(land, 0.5);
    if (wind.speed > 0.0) apply_wind(net, wind);
    return net;
}

SpreadingNetwork synthetic_air_example(int nodes, int edges_per_node, std::uint64_t seed) {
    if (nodes < 3 || edges_per_node < 1) {
        throw ValidationError("synthetic_air_example: need nodes >= 3, edges_per_node >= 1");
    }
    std::mt19937_64 eng(seed);
    auto uniform = [&eng]() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };

    // preferential attachment on an initial triangle
    std::vector<std::pair<int, int>> undirected = {{0, 1}, {1, 2}, {2, 0}};
    std::vector<int> stubs = {0, 1, 1, 2, 2, 0};
    for (int v = 3; v < nodes; ++v) {
        std::vector<int> chosen;
        int guard = 0;
        while (static_cast<int>(chosen.size()) < std::min(edges_per_node, v) && guard++ < 1000) {
            const int pick = stubs[static_cast<size_t>(uniform() * stubs.size())];
            if (std::find(chosen.begin(), chosen.end(), pick) == chosen.end()) chosen.push_back(pick);
        }
        for (int u : chosen) {
            undirected.emplace_back(v, u);
            stubs.push_back(v);
            stubs.push_back(u);
        }
    }

    SpreadingNetwork net(nodes);
    std::vector<double> traffic(nodes, 0.0);
    for (const auto& [a, b] : undirected) {
        // passenger-volume style weight: heavy tail, symmetric
        const double pax = std::exp(2.5 * uniform() + 1.0);
        traffic[a] += pax;
        traffic[b] += pax;
        for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
            EdgeParam e;
            e.from = from;
            e.to = to;
            e.beta_upper = 0.25;  // per-day spreading rate along a route
            e.beta_lower = 0.0025;
            e.weight = pax;
            net.add_edge(e);
        }
    }
    const double max_traffic = *std::max_element(traffic.begin(), traffic.end());
    for (int i = 0; i < nodes; ++i) {
        NodeParam& nd = net.node(i);
        nd.cost = traffic[i] / max_traffic;
        nd.delta_lower = 0.0631;  // removal = recovery + death
        nd.delta_upper = 0.0631;
        set_node_lambda(nd, 0.01);
        nd.tau_lower = 1.0 / 8.0;
        nd.tau_upper = 1.0;
    }
    net.set_delta_ceiling(2.0 * 0.0631);
    return net;
}

Eigen::VectorXd landscape_lambda(const GridLandscape& land) {
    Eigen::VectorXd v(land.size());
    for (int i = 0; i < land.size(); ++i) {
        const Cell& c = land.cells[i];
        v[i] = c.cls == CellClass::Water ? kLambdaFloor : std::max(c.lambda, kLambdaFloor);
    }
    return v;
}

Eigen::VectorXd landscape_costs(const GridLandscape& land) {
    Eigen::VectorXd v(land.size());
    for (int i = 0; i < land.size(); ++i) {
        const Cell& c = land.cells[i];
        v[i] = c.cls == CellClass::Water ? 0.0 : c.cost;
    }
    return v;
}

namespace {
using nlohmann::json;

const char* class_name(CellClass c) {
    switch (c) {
        case CellClass::Vegetation: return "vegetation";
        case CellClass::City: return "city";
        case CellClass::Water: return "water";
    }
    return "vegetation";
}

CellClass class_from(const std::string& s) {
    if (s == "vegetation") return CellClass::Vegetation;
    if (s == "city") return CellClass::City;
    if (s == "water") return CellClass::Water;
    throw ParseError("landscape: unknown cell class \"" + s + "\"");
}
}  // namespace

std::string landscape_to_json(const GridLandscape& land) {
    json doc;
    doc["width"] = land.width;
    doc["height"] = land.height;
    json cells = json::array();
    for (const Cell& c : land.cells) {
        cells.push_back({{"class", class_name(c.cls)},
                         {"value", c.vegetation},
                         {"cost", c.cost},
                         {"lambda", c.lambda}});
    }
    doc["cells"] = std::move(cells);
    return doc.dump();
}

void save_landscape_json(const GridLandscape& land, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << landscape_to_json(land) << "\n";
}

GridLandscape load_landscape_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    GridLandscape land;
    land.width = doc.value("width", 0);
    land.height = doc.value("height", 0);
    if (land.width < 2 || land.height < 2) throw ParseError(path + ": bad landscape dimensions");
    if (!doc.contains("cells") || !doc["cells"].is_array() ||
        static_cast<int>(doc["cells"].size()) != land.size()) {
        throw ParseError(path + ": \"cells\" must list width*height records");
    }
    for (const auto& jc : doc["cells"]) {
        Cell c;
        c.cls = class_from(jc.value("class", std::string("vegetation")));
        c.vegetation = jc.value("value", 0.0);
        if (c.vegetation < 0.0 || c.vegetation > 1.0) {
            throw ParseError(path + ": vegetation value outside [0,1]");
        }
        c.cost = jc.value("cost", 0.0);
        c.lambda = jc.value("lambda", 0.0);
        land.cells.push_back(c);
    }
    return land;
}

std::string scenario_manifest(const std::string& name) {
    json doc;
    doc["scenario"] = name;
    if (name == "sixteen-node") {
        doc["topology"] = "four 4-node symmetry classes: ring hubs (deg 4), B (deg 2), C (deg 3), leaves (deg 1)";
        doc["delta"] = 1.0;
        doc["uniform"] = {{"cost", 1.0}, {"beta", 0.5}, {"lambda", 1.0}};
        doc["high_cost_nodes_1based"] = {14, 15};
        doc["mixed_beta"] = {{"strong", 0.8}, {"weak", 0.2}, {"strong_edges_1based", {"3-11", "7-11", "11-15"}}};
        doc["outbreak_peak_node_1based"] = 3;
    } else if (name == "seven-node") {
        doc["topology"] = "cluster 1-2-3-4-5 (cycle plus chord 2-5), bridge 1-6, pair 6-7";
        doc["beta"] = {0.05, 0.5};
        doc["delta"] = {0.3, 0.8};
        doc["delta_ceiling"] = 1.0;
        doc["lambda_upper"] = {1.0, 0.2, 0.2, 0.2, 0.2, 0.2, 0.0};
        doc["cost"] = {1, 1, 1, 1, 1, 1, 20};
        doc["edge_weight_into_patient"] = 10.0;
        doc["rate_bound"] = seven_node_rate_bound();
        doc["note"] = "reconstruction; unstated parameters chosen here and used by all checks";
    } else if (name == "grid-wildfire") {
        doc["delta"] = 0.5;
        doc["beta"] = "2*vegetation (vegetation), 0.5 (city), 0 (water)";
        doc["diagonal_correction"] = 0.83;
        doc["wind_coefficients"] = {{"c1", 0.045}, {"c2", 0.131}};
        doc["layout"] = "west forest, east grassland, lake + river, city block with buffer, ignition-prone southeast";
    } else if (name == "synthetic-air") {
        doc["graph"] = "preferential attachment";
        doc["beta"] = 0.25;
        doc["delta"] = 0.0631;
        doc["weights"] = "synthetic passenger volumes, heavy-tailed";
    } else {
        throw ValidationError("unknown scenario \"" + name + "\"");
    }
    return doc.dump(2);
}

}  // namespace spreadrisk
