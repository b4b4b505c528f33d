#pragma once

#include "spreadrisk/network.hpp"

#include <Eigen/Core>

namespace spreadrisk {

/// Cost-to-go vector p >= 0 for discount rate r. p_i is the discounted
/// expected impact of an outbreak seeded at node i under the linear dynamics,
/// p' = C (rI - A)^{-1}. residual = max_j (p'A - r p' + C)_j, which is ~0 at
/// the direct solution and <= 0 for any feasible point of the LP form.
struct CostToGo {
    Eigen::VectorXd p;
    double r = 0.0;
    double residual = 0.0;
};

/// Maximum real part of the eigenvalues of A. For a Metzler matrix this is
/// the (real) Perron root. Dense solver up to n = 200; shifted power
/// iteration on A + cI above that, exploiting nonnegativity.
double spectral_abscissa(const SystemMatrix& m);

struct FeasibilityCheck {
    bool feasible = false;
    double abscissa = 0.0;
};

/// Cost-to-go exists iff A - rI is Hurwitz, i.e. spectral abscissa < r
/// (strict, margin 1e-10).
FeasibilityCheck check_feasibility(const SystemMatrix& m, double r);

/// Direct sparse solve of (rI - A)' p = C. Throws InfeasibleError (with the
/// abscissa) when A - rI is not Hurwitz, NumericalError when the solve does
/// not meet the residual tolerance 1e-8 * (1 + ||C||_inf).
CostToGo compute_cost_to_go(const SystemMatrix& m, const Eigen::VectorXd& costs, double r);

/// Equivalent linear program: minimize |p|_1 s.t. p >= 0, p'A - r p' <= -C.
/// Independent route kept as a cross-check of compute_cost_to_go; agrees
/// within 1e-6 relative per component on feasible instances.
CostToGo cost_to_go_lp_check(const SystemMatrix& m, const Eigen::VectorXd& costs, double r);

/// Removed-nodes cost functional: C_i = delta_i componentwise, so that
/// p x(0) is the discounted removal count. Rates must lie within the
/// network's bounds.
Eigen::VectorXd removal_cost_vector(const SpreadingNetwork& net, const Eigen::VectorXd& delta);

}  // namespace spreadrisk
