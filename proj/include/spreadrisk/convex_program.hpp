#pragma once

#include <Eigen/Core>

#include <limits>
#include <string>
#include <vector>

namespace spreadrisk {

/// Sparse affine expression a'x + b.
struct AffineExpr {
    std::vector<std::pair<int, double>> terms;
    double offset = 0.0;

    void add(int var, double coeff) {
        if (coeff != 0.0) terms.emplace_back(var, coeff);
    }
    double eval(const Eigen::VectorXd& x) const {
        double v = offset;
        for (const auto& [i, c] : terms) v += c * x[i];
        return v;
    }
};

/// log(sum_k exp(expr_k(x))) <= 0
struct LseConstraint {
    std::vector<AffineExpr> exponents;
    std::string name;
};

/// expr(x) <= 0   (rhs folded into expr.offset)
struct LinearConstraint {
    AffineExpr expr;
    std::string name;
};

/// Convex program over the intersection of log-sum-exp inequalities, linear
/// inequalities and box bounds, with a linear objective. This is exactly the
/// class produced by the logarithmic change of variables: any exponential-cone
/// capable backend qualifies, and BarrierSolver below is the self-contained
/// reference backend.
struct ConvexProgram {
    int num_vars = 0;
    Eigen::VectorXd objective;  // minimize objective' x
    std::vector<LseConstraint> lse;
    std::vector<LinearConstraint> rows;
    Eigen::VectorXd lower;  // -inf allowed
    Eigen::VectorXd upper;  // +inf allowed
    std::vector<std::string> var_names;

    int add_var(const std::string& name,
                double lo = -std::numeric_limits<double>::infinity(),
                double hi = std::numeric_limits<double>::infinity());
    void finalize_objective();  // resizes objective to num_vars if needed

    /// Number of inequality constraints seen by a barrier (lse + rows +
    /// finite bounds).
    int barrier_constraint_count() const;

    /// max_i f_i(x) over all constraints; <= 0 iff x is feasible.
    double max_violation(const Eigen::VectorXd& x) const;
};

enum class SolveStatus { Optimal, Infeasible, IterationLimit, NumericalTrouble };

const char* to_string(SolveStatus s);

struct SolverSettings {
    double gap_tol = 1e-8;          // duality-gap target per 100 constraints
    double newton_tol = 1e-10;      // Newton decrement^2 / 2 threshold
    double mu = 20.0;               // barrier multiplier growth
    double t_init = 1.0;
    int max_newton_per_stage = 200;
    int max_total_newton = 20000;
    /// Raise the initial barrier parameter to match the start point's
    /// proximity to the boundary. Suits warm starts at a previous optimum;
    /// harmful for fresh interior starts with mixed slack scales.
    bool boost_t_init = false;
    bool verbose = false;

    /// Reads SPREADRISK_SOLVER_TOL from the environment as the default gap
    /// tolerance, when set.
    static SolverSettings from_env();
};

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalTrouble;
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::infinity();          // m / t
    double max_violation = std::numeric_limits<double>::infinity();
    double stationarity = std::numeric_limits<double>::infinity();  // ||grad|| / t at exit
    int newton_iterations = 0;
    int barrier_stages = 0;
    bool used_phase1 = false;
    std::string message;
};

/// Projected-Newton log-barrier interior-point method.
///
/// Feasible start: pass a strictly feasible x0. Otherwise a phase-1 problem
/// (minimize s over relaxed constraints) is solved first; phase-1 starting
/// points must only satisfy the box bounds strictly.
class BarrierSolver {
public:
    explicit BarrierSolver(SolverSettings settings = SolverSettings::from_env())
        : settings_(settings) {}

    SolveResult solve(const ConvexProgram& prog) const;
    SolveResult solve(const ConvexProgram& prog, const Eigen::VectorXd& x0) const;

private:
    SolverSettings settings_;
};

}  // namespace spreadrisk
