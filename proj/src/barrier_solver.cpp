#include "spreadrisk/convex_program.hpp"

#include "spreadrisk/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <unordered_map>

namespace spreadrisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Linear rows touching at least this many variables get Sherman-Morrison
// treatment instead of being scattered into the sparse Hessian (a budget row
// over every edge would otherwise densify the factorization).
constexpr int kDenseRowThreshold = 64;
}  // namespace

int ConvexProgram::add_var(const std::string& name, double lo, double hi) {
    const int idx = num_vars++;
    var_names.push_back(name);
    lower.conservativeResize(num_vars);
    upper.conservativeResize(num_vars);
    lower[idx] = lo;
    upper[idx] = hi;
    return idx;
}

void ConvexProgram::finalize_objective() {
    if (objective.size() != num_vars) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(num_vars);
        c.head(objective.size()) = objective;
        objective.swap(c);
    }
}

int ConvexProgram::barrier_constraint_count() const {
    int m = static_cast<int>(lse.size() + rows.size());
    for (int i = 0; i < num_vars; ++i) {
        if (std::isfinite(lower[i])) ++m;
        if (std::isfinite(upper[i])) ++m;
    }
    return m;
}

namespace {

double lse_value(const LseConstraint& c, const Eigen::VectorXd& x) {
    double mx = -kInf;
    for (const auto& e : c.exponents) mx = std::max(mx, e.eval(x));
    if (!std::isfinite(mx)) return -kInf;  // empty or all -inf
    double s = 0.0;
    for (const auto& e : c.exponents) s += std::exp(e.eval(x) - mx);
    return mx + std::log(s);
}

}  // namespace

double ConvexProgram::max_violation(const Eigen::VectorXd& x) const {
    double v = -kInf;
    for (const auto& c : lse) v = std::max(v, lse_value(c, x));
    for (const auto& r : rows) v = std::max(v, r.expr.eval(x));
    for (int i = 0; i < num_vars; ++i) {
        if (std::isfinite(lower[i])) v = std::max(v, lower[i] - x[i]);
        if (std::isfinite(upper[i])) v = std::max(v, x[i] - upper[i]);
    }
    return v;
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::IterationLimit: return "iteration_limit";
        case SolveStatus::NumericalTrouble: return "numerical_trouble";
    }
    return "unknown";
}

SolverSettings SolverSettings::from_env() {
    SolverSettings s;
    if (const char* tol = std::getenv("SPREADRISK_SOLVER_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(tol, &end);
        if (end != tol && v > 0.0) s.gap_tol = v;
    }
    return s;
}

namespace {

// Preprocessed constraint data plus scratch for one barrier run.
class BarrierWork {
public:
    BarrierWork(const ConvexProgram& prog, const SolverSettings& settings)
        : prog_(prog), settings_(settings), nv_(prog.num_vars) {
        for (const auto& c : prog_.lse) {
            LsePre pre;
            std::vector<int> support;
            for (const auto& e : c.exponents)
                for (const auto& [var, coeff] : e.terms) support.push_back(var);
            std::sort(support.begin(), support.end());
            support.erase(std::unique(support.begin(), support.end()), support.end());
            pre.support = std::move(support);
            lse_pre_.push_back(std::move(pre));
        }
        for (const auto& r : prog_.rows) {
            if (static_cast<int>(r.expr.terms.size()) >= kDenseRowThreshold) {
                dense_rows_.push_back(&r);
            } else {
                sparse_rows_.push_back(&r);
            }
        }
        m_ = prog.barrier_constraint_count();
    }

    int constraint_count() const { return m_; }
    int dense_row_count() const { return static_cast<int>(dense_rows_.size()); }

    bool strictly_feasible(const Eigen::VectorXd& x, double margin) const {
        for (const auto& c : prog_.lse)
            if (!(lse_value(c, x) <= -margin)) return false;
        for (const auto& r : prog_.rows)
            if (!(r.expr.eval(x) <= -margin)) return false;
        for (int i = 0; i < nv_; ++i) {
            const double w = 1.0 + std::abs(x[i]);
            if (std::isfinite(prog_.lower[i]) && !(x[i] - prog_.lower[i] >= margin * w)) return false;
            if (std::isfinite(prog_.upper[i]) && !(prog_.upper[i] - x[i] >= margin * w)) return false;
        }
        return true;
    }

    // Barrier potential t * c'x + phi(x); +inf outside the domain.
    double potential(const Eigen::VectorXd& x, double t) const {
        double val = t * prog_.objective.dot(x);
        for (const auto& c : prog_.lse) {
            if (c.exponents.empty()) continue;
            const double q = lse_value(c, x);
            if (!(q < 0.0)) return kInf;
            val -= std::log(-q);
        }
        for (const auto& r : prog_.rows) {
            const double s = -r.expr.eval(x);
            if (!(s > 0.0)) return kInf;
            val -= std::log(s);
        }
        for (int i = 0; i < nv_; ++i) {
            if (std::isfinite(prog_.lower[i])) {
                const double s = x[i] - prog_.lower[i];
                if (!(s > 0.0)) return kInf;
                val -= std::log(s);
            }
            if (std::isfinite(prog_.upper[i])) {
                const double s = prog_.upper[i] - x[i];
                if (!(s > 0.0)) return kInf;
                val -= std::log(s);
            }
        }
        return val;
    }

    // Assembles gradient, sparse Hessian triplets and Sherman-Morrison
    // columns of the barrier at x. Returns false when x left the domain.
    bool assemble(const Eigen::VectorXd& x, double t, Eigen::VectorXd& grad,
                  std::vector<Eigen::Triplet<double>>& trips, Eigen::MatrixXd& smw) {
        grad = t * prog_.objective;
        trips.clear();
        // diagonal pattern anchors (also carries the safeguard ridge)
        for (int i = 0; i < nv_; ++i) trips.emplace_back(i, i, ridge_);
        smw.resize(nv_, static_cast<int>(dense_rows_.size()));

        std::vector<double> evals, pis;
        Eigen::VectorXd grad_q(nv_);  // scratch, dense but only support touched
        for (size_t ci = 0; ci < prog_.lse.size(); ++ci) {
            const LseConstraint& c = prog_.lse[ci];
            if (c.exponents.empty()) continue;
            const auto& support = lse_pre_[ci].support;
            const int ns = static_cast<int>(support.size());
            evals.resize(c.exponents.size());
            double mx = -kInf;
            for (size_t k = 0; k < c.exponents.size(); ++k) {
                evals[k] = c.exponents[k].eval(x);
                mx = std::max(mx, evals[k]);
            }
            double ssum = 0.0;
            for (double e : evals) ssum += std::exp(e - mx);
            const double q = mx + std::log(ssum);
            if (!(q < 0.0)) return false;
            pis.resize(evals.size());
            for (size_t k = 0; k < evals.size(); ++k) pis[k] = std::exp(evals[k] - mx) / ssum;

            // local index map
            local_.clear();
            for (int s = 0; s < ns; ++s) local_[support[s]] = s;

            Eigen::VectorXd gq = Eigen::VectorXd::Zero(ns);
            Eigen::MatrixXd hq = Eigen::MatrixXd::Zero(ns, ns);
            Eigen::VectorXd ak = Eigen::VectorXd::Zero(ns);
            for (size_t k = 0; k < c.exponents.size(); ++k) {
                ak.setZero();
                for (const auto& [var, coeff] : c.exponents[k].terms) ak[local_[var]] += coeff;
                gq.noalias() += pis[k] * ak;
                hq.noalias() += pis[k] * (ak * ak.transpose());
            }
            // hess(-log(-q)) = gq gq' / q^2 + (hq - gq gq') / (-q)
            const double inv_negq = 1.0 / (-q);
            Eigen::MatrixXd hblock = inv_negq * inv_negq * (gq * gq.transpose()) +
                                     inv_negq * (hq - gq * gq.transpose());
            for (int a = 0; a < ns; ++a) {
                grad[support[a]] += inv_negq * gq[a];
                for (int b = 0; b < ns; ++b) {
                    trips.emplace_back(support[a], support[b], hblock(a, b));
                }
            }
        }

        for (const LinearConstraint* r : sparse_rows_) {
            const double s = -r->expr.eval(x);
            if (!(s > 0.0)) return false;
            const double inv_s = 1.0 / s;
            for (const auto& [i, ci] : r->expr.terms) {
                grad[i] += ci * inv_s;
                for (const auto& [j, cj] : r->expr.terms) {
                    trips.emplace_back(i, j, ci * cj * inv_s * inv_s);
                }
            }
        }

        for (size_t k = 0; k < dense_rows_.size(); ++k) {
            const LinearConstraint* r = dense_rows_[k];
            const double s = -r->expr.eval(x);
            if (!(s > 0.0)) return false;
            const double inv_s = 1.0 / s;
            smw.col(static_cast<int>(k)).setZero();
            for (const auto& [i, ci] : r->expr.terms) {
                grad[i] += ci * inv_s;
                smw(i, static_cast<int>(k)) = ci * inv_s;
            }
        }

        for (int i = 0; i < nv_; ++i) {
            if (std::isfinite(prog_.lower[i])) {
                const double s = x[i] - prog_.lower[i];
                if (!(s > 0.0)) return false;
                grad[i] -= 1.0 / s;
                trips.emplace_back(i, i, 1.0 / (s * s));
            }
            if (std::isfinite(prog_.upper[i])) {
                const double s = prog_.upper[i] - x[i];
                if (!(s > 0.0)) return false;
                grad[i] += 1.0 / s;
                trips.emplace_back(i, i, 1.0 / (s * s));
            }
        }
        return true;
    }

    // Solves (H_sp + smw smw') d = rhs via the factorization of H_sp.
    Eigen::VectorXd smw_solve(const Eigen::VectorXd& rhs, const Eigen::MatrixXd& smw) const {
        Eigen::VectorXd bg = ldlt_.solve(rhs);
        if (smw.cols() == 0) return bg;
        Eigen::MatrixXd bu = ldlt_.solve(smw);
        Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(smw.cols(), smw.cols());
        cap.noalias() += smw.transpose() * bu;
        Eigen::VectorXd w = cap.ldlt().solve(smw.transpose() * bg);
        return bg - bu * w;
    }

    // Newton direction with one iterative-refinement pass. Returns false on
    // factorization failure even after ridge escalation.
    bool newton_direction(const Eigen::VectorXd& x, double t, Eigen::VectorXd& grad,
                          Eigen::VectorXd& dx) {
        Eigen::MatrixXd smw;
        if (!assemble(x, t, grad, trips_, smw)) return false;
        double extra = 0.0;
        for (int attempt = 0; attempt < 10; ++attempt) {
            if (!pattern_ready_) {
                hess_.resize(nv_, nv_);
                hess_.setFromTriplets(trips_.begin(), trips_.end());
                ldlt_.analyzePattern(hess_);
                build_slot_map();
                pattern_ready_ = true;
            } else if (attempt == 0) {
                // the triplet sequence is identical every iteration; scatter
                // values straight into the compressed storage
                Eigen::Map<Eigen::VectorXd>(hess_.valuePtr(), hess_.nonZeros()).setZero();
                for (size_t k = 0; k < trips_.size(); ++k) {
                    hess_.valuePtr()[slots_[k]] += trips_[k].value();
                }
            } else {
                hess_.setFromTriplets(trips_.begin(), trips_.end());  // ridge retry path
            }
            ldlt_.factorize(hess_);
            if (ldlt_.info() == Eigen::Success) {
                dx = smw_solve(-grad, smw);
                // one pass of iterative refinement on the Newton system
                Eigen::VectorXd r = hess_ * dx;
                if (smw.cols() > 0) r.noalias() += smw * (smw.transpose() * dx);
                r += grad;
                dx += smw_solve(-r, smw);
                if (dx.allFinite()) return true;
            }
            // escalate a diagonal ridge scaled to the matrix and retry
            const double diag_scale = std::max(1.0, hess_.diagonal().cwiseAbs().maxCoeff());
            const double bump = extra == 0.0 ? 1e-14 * diag_scale : extra * 100.0;
            for (int i = 0; i < nv_; ++i) trips_.emplace_back(i, i, bump - extra);
            extra = bump;
        }
        return false;
    }

    const ConvexProgram& prog() const { return prog_; }

private:
    struct LsePre {
        std::vector<int> support;
    };

    // maps each triplet (in assembly order) to its compressed-storage slot
    void build_slot_map() {
        slots_.resize(trips_.size());
        for (size_t k = 0; k < trips_.size(); ++k) {
            const int col = trips_[k].col();
            const int row = trips_[k].row();
            const int* begin = hess_.innerIndexPtr() + hess_.outerIndexPtr()[col];
            const int* end = hess_.innerIndexPtr() + hess_.outerIndexPtr()[col + 1];
            const int* it = std::lower_bound(begin, end, row);
            slots_[k] = static_cast<int>(hess_.outerIndexPtr()[col] + (it - begin));
        }
    }

    const ConvexProgram& prog_;
    const SolverSettings& settings_;
    int nv_;
    int m_ = 0;
    std::vector<LsePre> lse_pre_;
    std::vector<const LinearConstraint*> sparse_rows_;
    std::vector<const LinearConstraint*> dense_rows_;
    std::vector<Eigen::Triplet<double>> trips_;
    std::vector<int> slots_;
    Eigen::SparseMatrix<double> hess_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
    bool pattern_ready_ = false;
    double ridge_ = 0.0;  // base diagonal value anchoring the sparsity pattern
    std::unordered_map<int, int> local_;
};

Eigen::VectorXd box_interior_point(const ConvexProgram& prog, const Eigen::VectorXd* hint) {
    Eigen::VectorXd x(prog.num_vars);
    for (int i = 0; i < prog.num_vars; ++i) {
        const double lo = prog.lower[i];
        const double hi = prog.upper[i];
        double v = hint && hint->size() == prog.num_vars ? (*hint)[i] : 0.0;
        if (std::isfinite(lo) && std::isfinite(hi)) {
            const double pad = 1e-3 * (hi - lo);
            v = std::clamp(v, lo + pad, hi - pad);
            if (!(hi > lo)) v = lo;  // degenerate box; caller should have pinned
        } else if (std::isfinite(lo)) {
            v = std::max(v, lo + std::max(1.0, std::abs(lo)) * 0.5);
        } else if (std::isfinite(hi)) {
            v = std::min(v, hi - std::max(1.0, std::abs(hi)) * 0.5);
        }
        x[i] = v;
    }
    return x;
}

struct CenterOutcome {
    bool ok = false;
    bool early_stop = false;
    double decrement2 = kInf;
    double grad_norm = kInf;
    int steps = 0;
};

}  // namespace

// Main barrier loop on a strictly feasible start.
// early_stop (optional) is checked after every accepted Newton step; used by
// phase-1 to bail out as soon as a strictly feasible point for the original
// program is found.
namespace {

SolveResult barrier_loop(const ConvexProgram& prog, const SolverSettings& settings,
                         Eigen::VectorXd x, const std::function<bool(const Eigen::VectorXd&)>& early_stop) {
    BarrierWork work(prog, settings);
    SolveResult res;
    res.x = x;

    const int m = work.constraint_count();
    if (m == 0) {
        res.status = prog.objective.lpNorm<Eigen::Infinity>() == 0.0 ? SolveStatus::Optimal
                                                                     : SolveStatus::NumericalTrouble;
        res.message = "unconstrained program";
        res.objective = prog.objective.dot(x);
        res.gap = 0.0;
        return res;
    }

    // duality gap target: gap_tol per 100 constraints, so the barrier
    // parameter (and with it the terminal conditioning) does not scale with
    // problem size
    const double t_target = 100.0 / settings.gap_tol;
    double t = settings.t_init;
    if (settings.boost_t_init) {
        // a start at a previous optimum is approximately central for large t,
        // not small t; raise t to the barrier/objective gradient ratio so the
        // first stage centers nearby instead of crawling away
        Eigen::VectorXd g0;
        std::vector<Eigen::Triplet<double>> tt;
        Eigen::MatrixXd smw;
        BarrierWork probe(prog, settings);
        if (probe.assemble(x, 0.0, g0, tt, smw)) {
            const double c_norm = std::max(1.0, prog.objective.lpNorm<Eigen::Infinity>());
            const double ratio = g0.lpNorm<Eigen::Infinity>() / c_norm;
            t = std::clamp(ratio, settings.t_init, t_target / (settings.mu * settings.mu));
        }
    }
    int total_newton = 0;
    Eigen::VectorXd grad, dx;

    for (int stage = 0; stage < 64; ++stage) {
        ++res.barrier_stages;
        CenterOutcome out;
        bool factorization_failed = false;
        double dec2_window = kInf;  // saturation detector over recent steps
        for (int it = 0; it < settings.max_newton_per_stage; ++it) {
            if (total_newton >= settings.max_total_newton) break;
            ++total_newton;
            ++out.steps;
            if (!work.newton_direction(x, t, grad, dx)) {
                factorization_failed = true;
                break;
            }
            const double dec2 = -grad.dot(dx);  // lambda^2
            out.decrement2 = dec2;
            out.grad_norm = grad.lpNorm<Eigen::Infinity>();
            if (!(dec2 > 0.0)) {
                // ascent or zero direction: treat as centered
                out.ok = true;
                break;
            }
            const double phi0 = work.potential(x, t);
            // resolvable-progress threshold: below double precision of the
            // potential no line search can certify further descent
            const double tol_here =
                std::max(settings.newton_tol, 1e-15 * (1.0 + std::abs(phi0)));
            if (dec2 * 0.5 <= tol_here) {
                out.ok = true;
                break;
            }
            // saturation: the decrement stopped shrinking at the numerical
            // noise floor of this stage. The Newton decrement is affine
            // invariant, so a small absolute value certifies an approximate
            // center regardless of problem scaling.
            if (it % 6 == 5) {
                if (dec2 > 0.25 * dec2_window && dec2 <= 0.1) {
                    out.ok = true;
                    break;
                }
                dec2_window = dec2;
            }
            // backtracking line search on the potential
            const double slope = grad.dot(dx);  // negative
            double alpha = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                Eigen::VectorXd xn = x + alpha * dx;
                const double phin = work.potential(xn, t);
                if (phin <= phi0 + 0.25 * alpha * slope) {
                    x.swap(xn);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                // stalled: accept as centered when the remaining decrement is
                // below what the potential can resolve
                out.ok = dec2 * 0.5 <= std::max(1e4 * settings.newton_tol, tol_here);
                break;
            }
            if (early_stop && early_stop(x)) {
                out.early_stop = true;
                out.ok = true;
                break;
            }
        }
        if (settings.verbose) {
            std::cerr << "[barrier] stage " << stage << " t=" << t << " dec2=" << out.decrement2
                      << " obj=" << prog.objective.dot(x) << " steps=" << out.steps << "\n";
        }
        if (out.early_stop) {
            res.status = SolveStatus::Optimal;
            res.message = "early stop";
            break;
        }
        if (factorization_failed) {
            // keep the last interior point; it is optimal-within-tolerance when
            // the barrier parameter already reached the vicinity of the target
            const bool close_enough = t >= 0.01 * t_target;
            res.status = close_enough ? SolveStatus::Optimal : SolveStatus::NumericalTrouble;
            res.message = close_enough ? "stopped on factorization failure near the gap target"
                                       : "hessian factorization failed";
            break;
        }
        if (t >= t_target) {
            res.status = out.ok ? SolveStatus::Optimal : SolveStatus::NumericalTrouble;
            if (!out.ok) res.message = "line search stalled at final stage";
            break;
        }
        if (total_newton >= settings.max_total_newton) {
            res.status = SolveStatus::IterationLimit;
            res.message = "newton iteration limit";
            break;
        }
        if (!out.ok && out.decrement2 > 1.0) {
            // a stage that exhausted its budget while still far from centered
            // must not silently push the barrier parameter further
            res.status = SolveStatus::IterationLimit;
            res.message = "centering did not converge";
            break;
        }
        t = std::min(t * settings.mu, t_target);
        res.gap = static_cast<double>(m) / t;
    }
    if (res.status != SolveStatus::Optimal && res.message.empty()) {
        res.status = SolveStatus::IterationLimit;
        res.message = "barrier stage limit";
    }

    res.x = x;
    res.objective = prog.objective.dot(x);
    res.gap = static_cast<double>(m) / t;
    res.max_violation = prog.max_violation(x);
    res.newton_iterations = total_newton;
    {
        // stationarity of the scaled KKT system at exit
        Eigen::VectorXd g, d;
        BarrierWork w2(prog, settings);
        std::vector<Eigen::Triplet<double>> tt;
        Eigen::MatrixXd smw;
        if (w2.assemble(x, t, g, tt, smw)) res.stationarity = g.lpNorm<Eigen::Infinity>() / t;
    }
    return res;
}

}  // namespace

SolveResult BarrierSolver::solve(const ConvexProgram& prog) const {
    return solve(prog, Eigen::VectorXd());
}

SolveResult BarrierSolver::solve(const ConvexProgram& prog_in, const Eigen::VectorXd& x0) const {
    ConvexProgram prog = prog_in;  // local copy: we may append the phase-1 variable
    prog.finalize_objective();

    BarrierWork probe(prog, settings_);
    const bool have_x0 = x0.size() == prog.num_vars;
    if (have_x0 && probe.strictly_feasible(x0, 1e-10)) {
        return barrier_loop(prog, settings_, x0, nullptr);
    }

    // Phase 1: minimize s subject to every lse/linear constraint relaxed by s.
    const int nv = prog.num_vars;
    ConvexProgram p1 = prog;
    const int s_var = p1.add_var("phase1_slack", -10.0, kInf);
    p1.objective = Eigen::VectorXd::Zero(p1.num_vars);
    p1.objective[s_var] = 1.0;
    for (auto& c : p1.lse)
        for (auto& e : c.exponents) e.add(s_var, -1.0);
    for (auto& r : p1.rows) r.expr.add(s_var, -1.0);

    Eigen::VectorXd xb = box_interior_point(prog, have_x0 ? &x0 : nullptr);
    Eigen::VectorXd x1(p1.num_vars);
    x1.head(nv) = xb;
    const double viol0 = prog.max_violation(xb);
    x1[s_var] = std::max(viol0, 0.0) + 1.0;

    SolverSettings s1 = settings_;
    s1.gap_tol = std::max(settings_.gap_tol, 1e-9);
    // stop once the original constraints hold with a workable interior margin;
    // thin feasible regions simply run phase-1 to its own optimum instead
    auto early = [&prog, nv](const Eigen::VectorXd& xc) {
        return prog.max_violation(xc.head(nv)) <= -1e-3;
    };
    SolveResult r1 = barrier_loop(p1, s1, x1, early);
    const Eigen::VectorXd xs = r1.x.head(nv);
    const double viol = prog.max_violation(xs);
    if (!(viol < -1e-12)) {
        SolveResult res;
        res.status = SolveStatus::Infeasible;
        res.used_phase1 = true;
        res.x = xs;
        res.max_violation = viol;
        std::ostringstream os;
        os << "infeasible: phase-1 minimum infeasibility " << viol;
        res.message = os.str();
        return res;
    }
    SolveResult res = barrier_loop(prog, settings_, xs, nullptr);
    res.used_phase1 = true;
    return res;
}

}  // namespace spreadrisk
