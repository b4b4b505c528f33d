#include "spreadrisk/costgo.hpp"

#include "spreadrisk/convex_program.hpp"
#include "spreadrisk/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace spreadrisk {

namespace {

double dense_abscissa(const Eigen::SparseMatrix<double>& A) {
    Eigen::MatrixXd dense = Eigen::MatrixXd(A);
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NumericalError("dense eigensolver failed");
    }
    return es.eigenvalues().real().maxCoeff();
}

double power_abscissa(const Eigen::SparseMatrix<double>& A) {
    const int n = static_cast<int>(A.rows());
    double max_delta = 0.0;
    for (int i = 0; i < n; ++i) max_delta = std::max(max_delta, -A.coeff(i, i));
    const double shift = max_delta + 1.0;  // B = A + shift*I is nonnegative with positive diagonal

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double mu = 0.0;
    const int max_iters = 50000;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd y = A * x + shift * x;
        mu = x.dot(y);
        const double resid = (y - mu * x).lpNorm<Eigen::Infinity>();
        const double norm = y.norm();
        if (norm == 0.0) return -shift;  // nilpotent block only; cannot happen with positive diagonal
        x = y / norm;
        if (resid <= 1e-10 * (1.0 + std::abs(mu))) {
            return mu - shift;
        }
    }
    std::ostringstream os;
    os << "power iteration did not converge after " << max_iters << " iterations";
    throw NumericalError(os.str());
}

}  // namespace

double spectral_abscissa(const SystemMatrix& m) {
    if (m.size() == 0) throw NumericalError("empty system matrix");
    if (m.size() <= 200) return dense_abscissa(m.A);
    return power_abscissa(m.A);
}

FeasibilityCheck check_feasibility(const SystemMatrix& m, double r) {
    FeasibilityCheck fc;
    fc.abscissa = spectral_abscissa(m);
    fc.feasible = fc.abscissa < r - 1e-10;
    return fc;
}

namespace {

double coupling_residual(const SystemMatrix& m, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& costs, double r) {
    // (p'A - r p' + C)_j, maximized over j
    Eigen::VectorXd lhs = m.A.transpose() * p - r * p + costs;
    return lhs.maxCoeff();
}

}  // namespace

CostToGo compute_cost_to_go(const SystemMatrix& m, const Eigen::VectorXd& costs, double r) {
    const int n = m.size();
    if (costs.size() != n) throw BoundsError("cost vector size does not match the system matrix");
    const FeasibilityCheck fc = check_feasibility(m, r);
    if (!fc.feasible) {
        std::ostringstream os;
        os << "discount rate r=" << r << " infeasible: spectral abscissa " << fc.abscissa
           << " (need r > abscissa)";
        throw InfeasibleError(os.str(), fc.abscissa);
    }

    Eigen::SparseMatrix<double> M(n, n);
    {
        Eigen::SparseMatrix<double> rI(n, n);
        rI.setIdentity();
        rI *= r;
        M = Eigen::SparseMatrix<double>((rI - m.A).transpose());
    }
    M.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success) {
        throw NumericalError("sparse LU factorization of (rI - A)' failed");
    }
    Eigen::VectorXd p = lu.solve(costs);
    if (lu.info() != Eigen::Success || !p.allFinite()) {
        throw NumericalError("sparse solve for the cost-to-go failed");
    }

    const double tol = 1e-8 * (1.0 + costs.lpNorm<Eigen::Infinity>());
    const double neg = p.minCoeff();
    if (neg < -tol) {
        std::ostringstream os;
        os << "cost-to-go solve produced negative component " << neg;
        throw NumericalError(os.str());
    }
    p = p.cwiseMax(0.0);

    CostToGo out;
    out.p = std::move(p);
    out.r = r;
    out.residual = coupling_residual(m, out.p, costs, r);
    if (out.residual > tol) {
        std::ostringstream os;
        os << "cost-to-go residual " << out.residual << " exceeds tolerance " << tol;
        throw NumericalError(os.str());
    }
    return out;
}

CostToGo cost_to_go_lp_check(const SystemMatrix& m, const Eigen::VectorXd& costs, double r) {
    const int n = m.size();
    if (costs.size() != n) throw BoundsError("cost vector size does not match the system matrix");

    ConvexProgram lp;
    for (int i = 0; i < n; ++i) lp.add_var("p" + std::to_string(i), 0.0);
    lp.objective = Eigen::VectorXd::Ones(n);

    // column j of A gives row j of the coupling constraint
    for (int j = 0; j < n; ++j) {
        LinearConstraint row;
        row.expr.offset = costs[j];
        bool has_diag = false;
        for (Eigen::SparseMatrix<double>::InnerIterator it(m.A, j); it; ++it) {
            double coeff = it.value();
            if (it.row() == j) {
                coeff -= r;
                has_diag = true;
            }
            row.expr.add(static_cast<int>(it.row()), coeff);
        }
        if (!has_diag) row.expr.add(j, -r);
        row.name = "coupling" + std::to_string(j);
        lp.rows.push_back(std::move(row));
    }

    SolverSettings settings = SolverSettings::from_env();
    settings.gap_tol = std::min(settings.gap_tol, 1e-9);
    BarrierSolver solver(settings);
    SolveResult res = solver.solve(lp);
    if (res.status == SolveStatus::Infeasible) {
        double absc = 0.0;
        try {
            absc = spectral_abscissa(m);
        } catch (const NumericalError&) {
        }
        std::ostringstream os;
        os << "cost-to-go LP infeasible at r=" << r << " (spectral abscissa " << absc << ")";
        throw InfeasibleError(os.str(), absc);
    }
    if (res.status != SolveStatus::Optimal) {
        throw NumericalError("cost-to-go LP solve failed: " + res.message);
    }

    CostToGo out;
    out.p = res.x.cwiseMax(0.0);
    out.r = r;
    out.residual = coupling_residual(m, out.p, costs, r);
    return out;
}

Eigen::VectorXd removal_cost_vector(const SpreadingNetwork& net, const Eigen::VectorXd& delta) {
    if (delta.size() != net.size()) throw BoundsError("delta vector size does not match the network");
    for (int i = 0; i < net.size(); ++i) {
        const NodeParam& nd = net.node(i);
        const double slack = 1e-9 * (1.0 + nd.delta_upper);
        if (delta[i] < nd.delta_lower - slack || delta[i] > nd.delta_upper + slack) {
            std::ostringstream os;
            os << "delta out of bounds at node " << i << ": " << delta[i] << " not in ["
               << nd.delta_lower << ", " << nd.delta_upper << "]";
            throw BoundsError(os.str());
        }
    }
    return delta;
}

}  // namespace spreadrisk
