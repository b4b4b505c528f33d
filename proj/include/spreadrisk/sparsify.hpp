#pragma once

#include "spreadrisk/allocate.hpp"

#include <string>
#include <vector>

namespace spreadrisk {

enum class NonzeroCapMode { None, JoinBudgets, ReplaceBudgets };

struct SparsifyConfig {
    double epsilon = 0.0;          // 0 -> 1e-4 * mean upper bound of reweighted quantities
    int max_iters = 10;
    double zero_threshold = 1e-6;  // transformed units
    double nonzero_cap = 0.0;      // M; used when cap_mode != None
    NonzeroCapMode cap_mode = NonzeroCapMode::None;
    bool reweight_beta = true;
    bool reweight_delta = true;
    bool reweight_lambda = true;
    bool reweight_tau = true;
};

/// Reweighting multipliers 1 / (u_prev + epsilon).
Eigen::VectorXd reweight_weights(const Eigen::VectorXd& u_prev, double epsilon);

struct SparsifyIterate {
    AllocationResult result;
    double phi = 0.0;   // reweighted resource measure sum(mult * u)
    double risk = 0.0;  // achieved risk objective in the base problem's units
    bool accepted = false;
    int nonzero_total = 0;
};

struct SparsifyOutcome {
    std::vector<SparsifyIterate> iterates;
    AllocationResult final_result;  // last accepted iterate (base when none)
    bool stabilized = false;
    std::string warning;
};

/// Reweighted l1 iterations at pinned risk: every iterate minimizes the
/// reweighted resource sum subject to achieving the base risk (within 1e-6
/// relative), the original budgets, box bounds and the coupling constraint.
/// Each iterate is re-verified against the unweighted original constraints
/// before acceptance; the loop stops when the nonzero set stabilizes or
/// max_iters is reached. Infeasible iterates end the loop with a warning and
/// the last accepted iterate is returned.
SparsifyOutcome sparsify_allocation(const AllocationProblem& spec, const AllocationResult& base,
                                    const SparsifyConfig& cfg = SparsifyConfig());

}  // namespace spreadrisk
