#pragma once

#include "spreadrisk/convex_program.hpp"
#include "spreadrisk/network.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace spreadrisk {

/// Natural-unit operating point of the network.
struct NaturalVariables {
    Eigen::VectorXd p;       // per node, > 0 where defined
    Eigen::VectorXd beta;    // per edge
    Eigen::VectorXd delta;   // per node
    Eigen::VectorXd lambda;  // per node
    Eigen::VectorXd tau;     // per node
    double r = 0.0;
};

/// Log-domain variables:
///   y = log p, u = w log(beta_up / beta), v = w log((D - delta_lo)/(D - delta)),
///   z = w log(lambda_up / lambda), sigma = w log(tau_up / tau), rho = log(D + r),
/// with D the recovery-rate ceiling. Every resource variable is 0 at the
/// zero-resource point and grows as its rate is pushed toward the other bound.
struct TransformedVariables {
    Eigen::VectorXd y;
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    Eigen::VectorXd z;
    Eigen::VectorXd sigma;
    double rho = 0.0;
};

/// Upper bounds of the transformed variables (0 <= u <= u_max etc.).
struct TransformedBounds {
    Eigen::VectorXd u_max;      // per edge
    Eigen::VectorXd v_max;      // per node
    Eigen::VectorXd z_max;      // per node
    Eigen::VectorXd sigma_max;  // per node
};

TransformedBounds transformed_bounds(const SpreadingNetwork& net);

/// Forward log transform; every component must be strictly inside its
/// positivity domain (throws BoundsError naming the variable otherwise).
TransformedVariables transform_forward(const SpreadingNetwork& net, const NaturalVariables& values);

/// Inverse transform; exact round trip within 1e-12 relative.
NaturalVariables transform_inverse(const SpreadingNetwork& net, const TransformedVariables& tv);

/// Per-node value of the coupling constraint in log-sum-exp form. q_j <= 0
/// for all j iff p'A - r p' <= -C holds at the inverse-transformed point.
/// Zero-cost nodes simply drop the cost term (exact limit).
Eigen::VectorXd lse_residuals(const SpreadingNetwork& net, const TransformedVariables& tv,
                              const Eigen::VectorXd& costs);

enum class AllocationVariant { MinMaxRisk, MinResourcesRiskCap, MinSpectralBound, KnownOutbreakRisk };

const char* to_string(AllocationVariant v);

struct Budgets {
    double beta = 0.0;
    double delta = 0.0;
    double lambda = 0.0;
    double tau = 0.0;
    bool beta_active = false;
    bool delta_active = false;
    bool lambda_active = false;
    bool tau_active = false;

    /// Channels with a positive budget become active.
    static Budgets from_values(double beta, double delta, double lambda, double tau);
};

struct VaccinationGroup {
    int node = -1;
};

/// Per-quantity objective multipliers for resource-minimizing variants
/// (reweighted iterations set these); empty vectors mean all ones.
struct ResourceObjectiveWeights {
    Eigen::VectorXd u, v, z, sigma;
};

struct AllocationProblem {
    const SpreadingNetwork* network = nullptr;
    Eigen::VectorXd costs;  // C; empty -> network node costs
    AllocationVariant variant = AllocationVariant::MinMaxRisk;
    Budgets budgets;
    double rate_bound = 0.0;  // upper bound on the discount rate r

    /// Risk cap in natural units (MinResourcesRiskCap): size 1 = global,
    /// size n = per node. With a known initial condition the cap applies to
    /// the seeded risk sum instead.
    Eigen::VectorXd risk_cap;

    /// Known initial condition x(0) (KnownOutbreakRisk / seeded caps).
    Eigen::VectorXd known_x0;

    /// Vaccination coupling: vaccinating node i spends one shared variable
    /// s_i raising delta_i and cutting all incoming spreading rates in
    /// proportion; its budget cost aggregates the tied resource weights and
    /// is charged once, on the delta budget row.
    std::vector<VaccinationGroup> vaccination;

    /// Optional tightening of the discount-rate upper bound in rho units
    /// (used by sparsified spectral problems). NaN = unused.
    double rho_upper_override = std::numeric_limits<double>::quiet_NaN();

    ResourceObjectiveWeights resource_weights;
};

/// Maps a model quantity to coeff * x[var] + constant in the decision vector
/// (var = -1 when the quantity is pinned to its constant).
struct QuantityMap {
    int var = -1;
    double coeff = 1.0;
    double constant = 0.0;
    double value(const Eigen::VectorXd& x) const {
        return var >= 0 ? coeff * x[var] + constant : constant;
    }
};

/// Assembled convex program plus the variable layout needed to read the
/// solution back in model terms.
struct AllocationModel {
    ConvexProgram program;
    const SpreadingNetwork* network = nullptr;
    AllocationProblem spec;

    std::vector<int> y_var;    // per node; -1 for inert nodes (p = 0 exactly)
    std::vector<bool> active;  // node can reach positive cost
    int rho_var = -1;
    int epigraph_var = -1;
    std::vector<QuantityMap> u_map;            // per edge
    std::vector<QuantityMap> v_map;            // per node
    std::vector<QuantityMap> z_map;            // per node
    std::vector<QuantityMap> sigma_map;        // per node
    std::vector<int> vaccination_var;          // per group
    std::vector<double> vaccination_cost;      // aggregated budget weight per group

    Eigen::VectorXd x0;  // strictly feasible start (when risk caps allow)

    TransformedVariables extract_transformed(const Eigen::VectorXd& x) const;
    NaturalVariables extract_natural(const Eigen::VectorXd& x) const;
};

/// Builds the convex program for the given problem. Requires baseline
/// feasibility (zero resources at r = rate_bound); throws InfeasibleError
/// reporting the spectral abscissa otherwise.
AllocationModel assemble_problem(const AllocationProblem& spec);

/// Convenience wrapper: validates the groups, installs them on the spec and
/// assembles the coupled program.
AllocationModel apply_vaccination_coupling(AllocationProblem spec,
                                           const std::vector<VaccinationGroup>& groups);

struct AllocationResult {
    SolveStatus status = SolveStatus::NumericalTrouble;
    NaturalVariables optimal;
    TransformedVariables transformed;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double max_coupling_residual = std::numeric_limits<double>::infinity();  // max_j q_j
    double max_bound_violation = std::numeric_limits<double>::infinity();
    double max_budget_violation = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    int newton_iterations = 0;
    bool used_phase1 = false;
    std::string message;
    int nonzero_beta = 0, nonzero_delta = 0, nonzero_lambda = 0, nonzero_tau = 0;
    std::vector<double> vaccination;  // per group shared-variable values
    Eigen::VectorXd raw_x;
};

/// Solves the assembled program with the self-contained barrier backend and
/// re-verifies bounds, budgets and the coupling constraint on the result.
AllocationResult solve_allocation(const AllocationModel& model,
                                  const SolverSettings& settings = SolverSettings::from_env(),
                                  const Eigen::VectorXd* warm_start = nullptr);

/// Result serialization (allocations in both transformed and natural units,
/// objective, residuals, nonzero counts).
std::string allocation_result_to_json(const AllocationModel& model, const AllocationResult& result);

}  // namespace spreadrisk
