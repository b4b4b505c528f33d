#pragma once

#include "spreadrisk/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spreadrisk {

enum class CellClass { Vegetation, City, Water };

struct Cell {
    CellClass cls = CellClass::Vegetation;
    double vegetation = 0.0;  // in [0,1], vegetation cells only
    double cost = 0.0;
    double lambda = 0.0;  // outbreaks/day
};

/// Rectangular landscape; cell (col, row) at index row * width + col,
/// row 0 on the north edge.
struct GridLandscape {
    int width = 0;
    int height = 0;
    std::vector<Cell> cells;

    const Cell& at(int col, int row) const { return cells.at(static_cast<size_t>(row) * width + col); }
    Cell& at(int col, int row) { return cells.at(static_cast<size_t>(row) * width + col); }
    int size() const { return width * height; }
};

struct WindSpec {
    double speed = 0.0;     // m/s
    double from_deg = 0.0;  // compass direction the wind comes from (0=N, 90=E)
};

struct WindCoefficients {
    double c1 = 0.045;
    double c2 = 0.131;
};

/// 8-neighbor grid network. Spreading rate into cell i from neighbor j:
/// base(i) * diag(i,j), with base = 2 * vegetation for vegetation cells,
/// 0.5 for city cells and 0 for water; diagonal neighbor pairs are scaled by
/// `diagonal_correction`. Water cells get no edges in either direction, zero
/// cost, and a floor outbreak rate so network invariants hold.
SpreadingNetwork build_grid_network(const GridLandscape& land, double delta,
                                    double diagonal_correction = 0.83);

/// Multiplies each grid edge's spreading-rate bounds by
/// W(theta) = exp(c1 V) * exp(c2 V (cos(theta) - 1)),
/// theta being the angle between the wind-blowing direction and the edge
/// direction: maximal downwind, minimal upwind, identity at V = 0.
/// Requires a grid embedding; throws ValidationError otherwise.
void apply_wind(SpreadingNetwork& net, const WindSpec& wind,
                const WindCoefficients& coeffs = WindCoefficients());

enum class SixteenNodeVariant { Uniform, HighCost, MixedSpreading, HeterogeneousOutbreak };

/// 16-node example graph: four symmetry classes of four nodes each with
/// degrees 4 / 3 / 2 / 1, so that uniform parameters rank risk exactly by
/// degree. Variants add high-cost nodes 14,15 (1-based), strong spreading
/// edges funneling into node 15, and an outbreak-rate peak at node 3.
SpreadingNetwork sixteen_node_example(SixteenNodeVariant variant);

/// 7-node epidemic example: a 5-node community cluster, a high-outbreak
/// node 1 (1-based) bridged to caretaker node 6, which alone reaches the
/// high-cost node 7 over an edge whose into-patient direction carries
/// weight 10.
SpreadingNetwork seven_node_example();

/// Discount-rate upper bound used by the 7-node intervention examples.
double seven_node_rate_bound();

/// Deterministic fictional landscape: a west-side forest, a city block with
/// a buffer ring, a lake and river, and an ignition-prone southeast corner.
GridLandscape make_wildfire_landscape(int width, int height);

/// Convenience: landscape -> network with delta = 0.5 and the given wind.
SpreadingNetwork grid_wildfire_example(int width, int height, const WindSpec& wind = WindSpec());

/// Scale-free (preferential attachment) graph with passenger-volume style
/// edge weights; node costs proportional to attached traffic.
SpreadingNetwork synthetic_air_example(int nodes, int edges_per_node, std::uint64_t seed);

/// Per-cell outbreak rates / costs of a landscape as vectors (node order).
Eigen::VectorXd landscape_lambda(const GridLandscape& land);
Eigen::VectorXd landscape_costs(const GridLandscape& land);

GridLandscape load_landscape_json(const std::string& path);
std::string landscape_to_json(const GridLandscape& land);
void save_landscape_json(const GridLandscape& land, const std::string& path);

/// One-place record of every parameter choice behind a builtin example.
std::string scenario_manifest(const std::string& name);

}  // namespace spreadrisk
