#include "spreadrisk/convex_program.hpp"

#include <doctest.h>

#include <cmath>

using namespace spreadrisk;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("barrier: two-variable LP with a shared row") {
    // min x + y  s.t.  x + y >= 1, x, y >= 0  ->  optimum 1
    ConvexProgram p;
    p.add_var("x", 0.0);
    p.add_var("y", 0.0);
    p.objective = Eigen::VectorXd::Ones(2);
    LinearConstraint row;
    row.expr.add(0, -1.0);
    row.expr.add(1, -1.0);
    row.expr.offset = 1.0;
    p.rows.push_back(row);
    SolveResult r = BarrierSolver().solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r.max_violation <= 0.0);
}

TEST_CASE("barrier: box-constrained minimization hits the bound") {
    ConvexProgram p;
    p.add_var("x", 0.0, 2.0);
    p.objective = Eigen::VectorXd::Constant(1, -1.0);
    SolveResult r = BarrierSolver().solve(p, Eigen::VectorXd::Constant(1, 1.0));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("barrier: log-sum-exp epigraph toy problem") {
    // min t  s.t.  log(e^{x-t} + e^{-x-t}) <= 0, x in [-2, 2]
    // optimum at x = 0, t = log 2
    ConvexProgram p;
    const int x = p.add_var("x", -2.0, 2.0);
    const int t = p.add_var("t", -10.0, 10.0);
    p.objective = Eigen::VectorXd::Zero(2);
    p.objective[t] = 1.0;
    LseConstraint c;
    AffineExpr e1, e2;
    e1.add(x, 1.0);
    e1.add(t, -1.0);
    e2.add(x, -1.0);
    e2.add(t, -1.0);
    c.exponents = {e1, e2};
    p.lse.push_back(c);
    SolveResult r = BarrierSolver().solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(0.6931471805599453).epsilon(1e-6));
    CHECK(std::abs(r.x[x]) < 1e-4);
}

TEST_CASE("barrier: dense budget row goes through the low-rank update path") {
    // 100 nonnegative variables, sum >= 1, min sum -> 1
    const int n = 100;
    ConvexProgram p;
    for (int i = 0; i < n; ++i) p.add_var("x", 0.0);
    p.objective = Eigen::VectorXd::Ones(n);
    LinearConstraint row;
    for (int i = 0; i < n; ++i) row.expr.add(i, -1.0);
    row.expr.offset = 1.0;
    p.rows.push_back(row);
    SolveResult r = BarrierSolver().solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("barrier: phase-1 detects infeasibility") {
    // x >= 0 with row x <= -1
    ConvexProgram p;
    p.add_var("x", 0.0);
    p.objective = Eigen::VectorXd::Ones(1);
    LinearConstraint row;
    row.expr.add(0, 1.0);
    row.expr.offset = 1.0;  // x + 1 <= 0
    p.rows.push_back(row);
    SolveResult r = BarrierSolver().solve(p);
    CHECK(r.status == SolveStatus::Infeasible);
    CHECK(r.used_phase1);
}

TEST_CASE("barrier: phase-1 recovers a strictly feasible start") {
    // min x s.t. x >= 1 (row), box [0, 10]; no start supplied
    ConvexProgram p;
    p.add_var("x", 0.0, 10.0);
    p.objective = Eigen::VectorXd::Ones(1);
    LinearConstraint row;
    row.expr.add(0, -1.0);
    row.expr.offset = 1.0;  // 1 - x <= 0
    p.rows.push_back(row);
    SolveResult r = BarrierSolver().solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.used_phase1);
}

TEST_CASE("barrier: reported residuals are small at the optimum") {
    ConvexProgram p;
    p.add_var("x", 0.0, 1.0);
    p.add_var("y", 0.0, 1.0);
    p.objective = Eigen::VectorXd::Constant(2, -1.0);
    LinearConstraint row;
    row.expr.add(0, 1.0);
    row.expr.add(1, 1.0);
    row.expr.offset = -1.2;  // x + y <= 1.2
    p.rows.push_back(row);
    SolveResult r = BarrierSolver().solve(p, Eigen::VectorXd::Constant(2, 0.3));
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.gap <= 1e-7);
    CHECK(r.max_violation <= 0.0);
    CHECK(r.stationarity <= 1e-2);  // scaled KKT gradient at the exit point
    CHECK(r.objective == doctest::Approx(-1.2).epsilon(1e-6));
}
