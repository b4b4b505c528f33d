#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace spreadrisk {

/// Directed edge (from -> to): node `from` can infect node `to`, giving the
/// state matrix entry A(to, from) = beta. Loaders that accept undirected
/// input expand each line into both directions before construction.
struct EdgeParam {
    int from = 0;
    int to = 0;
    double beta_lower = 0.0;  // 1/day
    double beta_upper = 0.0;  // 1/day
    double weight = 1.0;      // cost weight of reducing beta
};

struct NodeParam {
    double cost = 1.0;
    double delta_lower = 1.0;  // 1/day
    double delta_upper = 1.0;
    double weight_delta = 1.0;
    double lambda_lower = 0.01;  // outbreaks/day
    double lambda_upper = 1.0;
    double weight_lambda = 1.0;
    double tau_lower = 0.125;  // days
    double tau_upper = 1.0;
    double weight_tau = 1.0;
};

/// Optional geometric embedding for grid-generated networks.
/// Node id = row * width + col; row 0 is the north edge.
struct GridShape {
    int width = 0;
    int height = 0;
};

struct Violation {
    std::string rule;
    int node = -1;  // -1 when not node-specific
    int edge = -1;  // -1 when not edge-specific
    std::string message;
};

/// Network data model: per-edge spreading-rate bounds/weights and per-node
/// recovery/outbreak/revisit bounds, weights, and impact costs.
/// Immutable once handed to the analysis modules; construction rejects
/// self-loops and duplicate edges outright, numeric invariants are checked
/// by validate().
class SpreadingNetwork {
public:
    explicit SpreadingNetwork(int node_count, double delta_ceiling = 0.0);

    int size() const { return static_cast<int>(nodes_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    NodeParam& node(int i) { return nodes_.at(i); }
    const NodeParam& node(int i) const { return nodes_.at(i); }

    const EdgeParam& edge(int e) const { return edges_.at(e); }
    const std::vector<EdgeParam>& edges() const { return edges_; }
    /// Rate-bound adjustment during construction (wind models etc.); networks
    /// are immutable once handed to the analysis modules.
    EdgeParam& edge_mutable(int e) { return edges_.at(e); }

    /// Adds edge from -> to, returning its index. Throws ValidationError on
    /// self-loops, duplicates, or ids out of range.
    int add_edge(const EdgeParam& e);

    /// Edge indices with edge.from == j (the coupling constraint of node j
    /// iterates exactly these).
    const std::vector<int>& edges_from(int j) const { return by_from_.at(j); }

    /// Edge indices with edge.to == i (spread into node i; vaccination of i
    /// ties exactly these).
    const std::vector<int>& edges_into(int i) const { return by_to_.at(i); }

    bool has_edge(int from, int to) const;
    int edge_index(int from, int to) const;  // -1 when absent

    double delta_ceiling() const { return delta_ceiling_; }
    void set_delta_ceiling(double value) { delta_ceiling_ = value; }
    /// Sets the ceiling to 2 * max delta_upper when none was given.
    void apply_default_delta_ceiling();

    const std::optional<GridShape>& grid() const { return grid_; }
    void set_grid(GridShape shape) { grid_ = shape; }

private:
    std::vector<NodeParam> nodes_;
    std::vector<EdgeParam> edges_;
    std::vector<std::vector<int>> by_from_;
    std::vector<std::vector<int>> by_to_;
    std::unordered_set<long long> edge_keys_;
    double delta_ceiling_ = 0.0;
    std::optional<GridShape> grid_;
};

/// Checks every numeric invariant; empty result iff the network is valid.
/// Violations are data, not errors: each names the node/edge and rule.
std::vector<Violation> validate_network(const SpreadingNetwork& net);

/// Throws ValidationError listing the first violations when any exist.
void validate_network_or_throw(const SpreadingNetwork& net);

/// Metzler state matrix of the linearized dynamics:
/// A(i,i) = -delta_i, A(to, from) = beta_edge, zero elsewhere.
struct SystemMatrix {
    Eigen::SparseMatrix<double> A;  // column-major, n x n
    int size() const { return static_cast<int>(A.rows()); }
};

/// Builds A for the given rates. Rates must lie within the network's declared
/// bounds; violations raise BoundsError naming the offending edge or node.
SystemMatrix build_system_matrix(const SpreadingNetwork& net,
                                 const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& delta);

/// Zero-resource rates: beta at its upper bound, delta at its lower bound.
Eigen::VectorXd beta_upper(const SpreadingNetwork& net);
Eigen::VectorXd beta_lower(const SpreadingNetwork& net);
Eigen::VectorXd delta_lower(const SpreadingNetwork& net);
Eigen::VectorXd delta_upper(const SpreadingNetwork& net);
Eigen::VectorXd lambda_upper(const SpreadingNetwork& net);
Eigen::VectorXd tau_upper(const SpreadingNetwork& net);
Eigen::VectorXd node_costs(const SpreadingNetwork& net);

/// Discount rate r >= 0 with derived discount time 1/r; carries the upper
/// bound used when r is a decision variable.
struct DiscountSpec {
    double rate = 0.0;
    double rate_max = 0.0;
    double discount_time() const;
};

}  // namespace spreadrisk
