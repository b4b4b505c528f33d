#include "spreadrisk/network.hpp"

#include "spreadrisk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spreadrisk {

namespace {

long long edge_key(int from, int to) {
    return static_cast<long long>(from) * (1LL << 32) + to;
}

// Small relative slack so inverse-transformed rates sitting exactly on a
// bound are accepted.
constexpr double kBoundSlack = 1e-9;

bool within(double x, double lo, double hi) {
    const double s = kBoundSlack * (1.0 + std::abs(lo) + std::abs(hi));
    return x >= lo - s && x <= hi + s;
}

}  // namespace

SpreadingNetwork::SpreadingNetwork(int node_count, double delta_ceiling)
    : nodes_(node_count), by_from_(node_count), by_to_(node_count), delta_ceiling_(delta_ceiling) {
    if (node_count <= 0) {
        throw ValidationError("network must have at least one node");
    }
}

int SpreadingNetwork::add_edge(const EdgeParam& e) {
    if (e.from < 0 || e.from >= size() || e.to < 0 || e.to >= size()) {
        std::ostringstream os;
        os << "edge (" << e.from << " -> " << e.to << ") references a node outside [0," << size() << ")";
        throw ValidationError(os.str());
    }
    if (e.from == e.to) {
        std::ostringstream os;
        os << "self-loop edge at node " << e.from;
        throw ValidationError(os.str());
    }
    if (!edge_keys_.insert(edge_key(e.from, e.to)).second) {
        std::ostringstream os;
        os << "duplicate edge (" << e.from << " -> " << e.to << ")";
        throw ValidationError(os.str());
    }
    const int idx = static_cast<int>(edges_.size());
    edges_.push_back(e);
    by_from_[e.from].push_back(idx);
    by_to_[e.to].push_back(idx);
    return idx;
}

bool SpreadingNetwork::has_edge(int from, int to) const {
    return edge_keys_.count(edge_key(from, to)) > 0;
}

int SpreadingNetwork::edge_index(int from, int to) const {
    for (int e : by_from_.at(from)) {
        if (edges_[e].to == to) return e;
    }
    return -1;
}

void SpreadingNetwork::apply_default_delta_ceiling() {
    if (delta_ceiling_ > 0.0) return;
    double dmax = 0.0;
    for (const auto& nd : nodes_) dmax = std::max(dmax, nd.delta_upper);
    delta_ceiling_ = 2.0 * dmax;
}

std::vector<Violation> validate_network(const SpreadingNetwork& net) {
    std::vector<Violation> out;
    auto add = [&out](std::string rule, int node, int edge, std::string msg) {
        out.push_back({std::move(rule), node, edge, std::move(msg)});
    };

    if (!(net.delta_ceiling() > 0.0) || !std::isfinite(net.delta_ceiling())) {
        add("delta_ceiling_positive", -1, -1, "delta_ceiling must be positive and finite");
    }

    for (int i = 0; i < net.size(); ++i) {
        const NodeParam& nd = net.node(i);
        std::ostringstream tag;
        tag << "node " << i << ": ";
        if (!(nd.delta_lower > 0.0) || !(nd.delta_lower <= nd.delta_upper)) {
            add("delta_range", i, -1, tag.str() + "requires 0 < delta_lower <= delta_upper");
        }
        if (!(nd.delta_upper < net.delta_ceiling())) {
            add("delta_ceiling", i, -1, tag.str() + "delta_upper must be < delta_ceiling");
        }
        if (!(nd.lambda_lower > 0.0) || !(nd.lambda_lower <= nd.lambda_upper)) {
            add("lambda_range", i, -1,
                tag.str() + "requires 0 < lambda_lower <= lambda_upper (log resource model undefined at 0)");
        }
        if (!(nd.tau_lower > 0.0) || !(nd.tau_lower <= nd.tau_upper)) {
            add("tau_range", i, -1, tag.str() + "requires 0 < tau_lower <= tau_upper");
        }
        if (!(nd.cost >= 0.0) || !std::isfinite(nd.cost)) {
            add("cost_nonnegative", i, -1, tag.str() + "cost must be >= 0 and finite");
        }
        if (!(nd.weight_delta > 0.0) || !(nd.weight_lambda > 0.0) || !(nd.weight_tau > 0.0)) {
            add("weight_positive", i, -1, tag.str() + "node weights must be > 0");
        }
    }

    for (int e = 0; e < net.edge_count(); ++e) {
        const EdgeParam& ed = net.edge(e);
        std::ostringstream tag;
        tag << "edge " << e << " (" << ed.from << " -> " << ed.to << "): ";
        if (!(ed.beta_lower > 0.0) || !(ed.beta_lower <= ed.beta_upper)) {
            add("beta_range", -1, e,
                tag.str() + "requires 0 < beta_lower <= beta_upper (log resource model undefined at 0)");
        }
        if (!(ed.weight > 0.0)) {
            add("weight_positive", -1, e, tag.str() + "edge weight must be > 0");
        }
    }
    return out;
}

void validate_network_or_throw(const SpreadingNetwork& net) {
    const auto violations = validate_network(net);
    if (violations.empty()) return;
    std::ostringstream os;
    os << violations.size() << " network invariant violation(s):";
    const size_t shown = std::min<size_t>(violations.size(), 8);
    for (size_t k = 0; k < shown; ++k) os << "\n  - " << violations[k].message;
    if (violations.size() > shown) os << "\n  ...";
    throw ValidationError(os.str());
}

SystemMatrix build_system_matrix(const SpreadingNetwork& net,
                                 const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& delta) {
    const int n = net.size();
    if (beta.size() != net.edge_count() || delta.size() != n) {
        throw BoundsError("build_system_matrix: rate vector sizes do not match the network");
    }
    for (int e = 0; e < net.edge_count(); ++e) {
        const EdgeParam& ed = net.edge(e);
        if (!within(beta[e], ed.beta_lower, ed.beta_upper)) {
            std::ostringstream os;
            os << "beta out of bounds on edge " << e << " (" << ed.from << " -> " << ed.to << "): " << beta[e]
               << " not in [" << ed.beta_lower << ", " << ed.beta_upper << "]";
            throw BoundsError(os.str());
        }
    }
    for (int i = 0; i < n; ++i) {
        const NodeParam& nd = net.node(i);
        if (!within(delta[i], nd.delta_lower, nd.delta_upper)) {
            std::ostringstream os;
            os << "delta out of bounds at node " << i << ": " << delta[i] << " not in [" << nd.delta_lower
               << ", " << nd.delta_upper << "]";
            throw BoundsError(os.str());
        }
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(n + net.edge_count());
    for (int i = 0; i < n; ++i) trips.emplace_back(i, i, -delta[i]);
    for (int e = 0; e < net.edge_count(); ++e) {
        const EdgeParam& ed = net.edge(e);
        trips.emplace_back(ed.to, ed.from, beta[e]);
    }
    SystemMatrix m;
    m.A.resize(n, n);
    m.A.setFromTriplets(trips.begin(), trips.end());
    m.A.makeCompressed();
    return m;
}

namespace {
template <typename F>
Eigen::VectorXd per_edge(const SpreadingNetwork& net, F f) {
    Eigen::VectorXd v(net.edge_count());
    for (int e = 0; e < net.edge_count(); ++e) v[e] = f(net.edge(e));
    return v;
}
template <typename F>
Eigen::VectorXd per_node(const SpreadingNetwork& net, F f) {
    Eigen::VectorXd v(net.size());
    for (int i = 0; i < net.size(); ++i) v[i] = f(net.node(i));
    return v;
}
}  // namespace

Eigen::VectorXd beta_upper(const SpreadingNetwork& net) {
    return per_edge(net, [](const EdgeParam& e) { return e.beta_upper; });
}
Eigen::VectorXd beta_lower(const SpreadingNetwork& net) {
    return per_edge(net, [](const EdgeParam& e) { return e.beta_lower; });
}
Eigen::VectorXd delta_lower(const SpreadingNetwork& net) {
    return per_node(net, [](const NodeParam& n) { return n.delta_lower; });
}
Eigen::VectorXd delta_upper(const SpreadingNetwork& net) {
    return per_node(net, [](const NodeParam& n) { return n.delta_upper; });
}
Eigen::VectorXd lambda_upper(const SpreadingNetwork& net) {
    return per_node(net, [](const NodeParam& n) { return n.lambda_upper; });
}
Eigen::VectorXd tau_upper(const SpreadingNetwork& net) {
    return per_node(net, [](const NodeParam& n) { return n.tau_upper; });
}
Eigen::VectorXd node_costs(const SpreadingNetwork& net) {
    return per_node(net, [](const NodeParam& n) { return n.cost; });
}

double DiscountSpec::discount_time() const {
    return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

}  // namespace spreadrisk
