#include "spreadrisk/sparsify.hpp"

#include "spreadrisk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spreadrisk {

Eigen::VectorXd reweight_weights(const Eigen::VectorXd& u_prev, double epsilon) {
    if (!(epsilon > 0.0)) throw ValidationError("reweight_weights: epsilon must be > 0");
    if (u_prev.size() > 0 && u_prev.minCoeff() < 0.0) {
        throw ValidationError("reweight_weights: previous values must be >= 0");
    }
    return (u_prev.array() + epsilon).inverse();
}

namespace {

// Achieved risk of a solution in the base problem's own metric.
double risk_value(const AllocationProblem& spec, const NaturalVariables& nat) {
    const SpreadingNetwork& net = *spec.network;
    if (spec.known_x0.size() == net.size()) {
        double sum = 0.0;
        for (int i = 0; i < net.size(); ++i) {
            if (spec.known_x0[i] > 0.0) sum += spec.known_x0[i] * nat.p[i];
        }
        return sum;
    }
    if (spec.variant == AllocationVariant::MinSpectralBound) return nat.r;
    double worst = 0.0;
    for (int i = 0; i < net.size(); ++i) {
        worst = std::max(worst, nat.p[i] * nat.lambda[i] * nat.tau[i]);
    }
    return worst;
}

std::vector<bool> support_set(const TransformedVariables& tv, double threshold) {
    std::vector<bool> s;
    auto push = [&s, threshold](const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) s.push_back(v[i] > threshold);
    };
    push(tv.u);
    push(tv.v);
    push(tv.z);
    push(tv.sigma);
    return s;
}

int support_count(const std::vector<bool>& s) {
    return static_cast<int>(std::count(s.begin(), s.end(), true));
}

}  // namespace

SparsifyOutcome sparsify_allocation(const AllocationProblem& spec, const AllocationResult& base,
                                    const SparsifyConfig& cfg) {
    if (spec.network == nullptr) throw ValidationError("sparsify: network missing");
    if (base.status != SolveStatus::Optimal) {
        throw ValidationError("sparsify: base allocation must be solved to optimality");
    }
    if (cfg.max_iters < 1) throw ValidationError("sparsify: max_iters must be >= 1");
    if (cfg.cap_mode != NonzeroCapMode::None && !(cfg.nonzero_cap > 0.0)) {
        throw ValidationError("sparsify: nonzero cap mode requires a positive cap");
    }
    const SpreadingNetwork& net = *spec.network;
    const TransformedBounds tb = transformed_bounds(net);

    // pin the achieved risk; iterates then minimize the reweighted resources
    AllocationProblem pinned = spec;
    const double base_risk = risk_value(spec, base.optimal);
    constexpr double kRiskSlack = 5e-7;  // half of the 1e-6 relative guarantee
    switch (spec.variant) {
        case AllocationVariant::MinMaxRisk:
        case AllocationVariant::KnownOutbreakRisk:
            pinned.variant = AllocationVariant::MinResourcesRiskCap;
            pinned.risk_cap = Eigen::VectorXd::Constant(1, base_risk * (1.0 + kRiskSlack));
            break;
        case AllocationVariant::MinResourcesRiskCap:
            break;  // cap already part of the problem
        case AllocationVariant::MinSpectralBound:
            pinned.variant = AllocationVariant::MinResourcesRiskCap;
            pinned.risk_cap = Eigen::VectorXd::Constant(1, 1e300);  // vacuous risk rows
            pinned.rho_upper_override = base.transformed.rho + 1e-9;
            break;
    }

    double epsilon = cfg.epsilon;
    if (!(epsilon > 0.0)) {
        double sum = 0.0;
        int count = 0;
        const Budgets& b = spec.budgets;
        auto tally = [&](const Eigen::VectorXd& v, bool active) {
            if (!active) return;
            sum += v.sum();
            count += static_cast<int>(v.size());
        };
        tally(tb.u_max, b.beta_active && cfg.reweight_beta);
        tally(tb.v_max, b.delta_active && cfg.reweight_delta);
        tally(tb.z_max, b.lambda_active && cfg.reweight_lambda);
        tally(tb.sigma_max, b.tau_active && cfg.reweight_tau);
        epsilon = count > 0 ? 1e-4 * (sum / count) : 1e-4;
        if (!(epsilon > 0.0)) epsilon = 1e-4;
    }

    SparsifyOutcome out;
    out.final_result = base;
    std::vector<bool> prev_support = support_set(base.transformed, cfg.zero_threshold);
    TransformedVariables prev_tv = base.transformed;
    Eigen::VectorXd warm;  // previous accepted iterate; layouts match across iterations

    for (int k = 0; k < cfg.max_iters; ++k) {
        ResourceObjectiveWeights w;
        if (cfg.reweight_beta) w.u = reweight_weights(prev_tv.u, epsilon);
        if (cfg.reweight_delta) w.v = reweight_weights(prev_tv.v, epsilon);
        if (cfg.reweight_lambda) w.z = reweight_weights(prev_tv.z, epsilon);
        if (cfg.reweight_tau) w.sigma = reweight_weights(prev_tv.sigma, epsilon);
        pinned.resource_weights = w;

        AllocationModel model = assemble_problem(pinned);
        if (cfg.cap_mode != NonzeroCapMode::None) {
            // phi = sum mult * u over reweighted quantities, capped at M
            LinearConstraint cap_row;
            auto add_q = [&cap_row](const QuantityMap& m, double mult) {
                if (m.var >= 0) cap_row.expr.add(m.var, mult * m.coeff);
            };
            for (int e = 0; e < net.edge_count(); ++e) {
                if (cfg.reweight_beta) add_q(model.u_map[e], w.u.size() > 0 ? w.u[e] : 1.0);
            }
            for (int i = 0; i < net.size(); ++i) {
                if (cfg.reweight_delta) add_q(model.v_map[i], w.v.size() > 0 ? w.v[i] : 1.0);
                if (cfg.reweight_lambda) add_q(model.z_map[i], w.z.size() > 0 ? w.z[i] : 1.0);
                if (cfg.reweight_tau) add_q(model.sigma_map[i], w.sigma.size() > 0 ? w.sigma[i] : 1.0);
            }
            cap_row.expr.offset = -cfg.nonzero_cap;
            cap_row.name = "nonzero_cap";
            if (cfg.cap_mode == NonzeroCapMode::ReplaceBudgets) {
                auto& rows = model.program.rows;
                rows.erase(std::remove_if(rows.begin(), rows.end(),
                                          [](const LinearConstraint& r) {
                                              return r.name.rfind("budget_", 0) == 0;
                                          }),
                           rows.end());
            }
            model.program.rows.push_back(std::move(cap_row));
        }

        // warm-start from the previous accepted iterate when layouts match;
        // the solver raises its initial barrier parameter to suit such
        // near-boundary points
        SolverSettings settings = SolverSettings::from_env();
        const bool have_warm = warm.size() == model.program.num_vars;
        settings.boost_t_init = have_warm;
        AllocationResult res = solve_allocation(model, settings, have_warm ? &warm : nullptr);

        SparsifyIterate it;
        it.result = res;
        if (res.status != SolveStatus::Optimal) {
            std::ostringstream os;
            os << "iteration " << (k + 1) << " not solved (" << to_string(res.status)
               << "); keeping last accepted iterate";
            out.warning = os.str();
            it.accepted = false;
            out.iterates.push_back(std::move(it));
            break;
        }

        it.risk = risk_value(spec, res.optimal);
        auto mult_phi = [&](const Eigen::VectorXd& mult, const Eigen::VectorXd& val) {
            return mult.size() == val.size() ? mult.dot(val) : val.sum();
        };
        it.phi = 0.0;
        if (cfg.reweight_beta) it.phi += mult_phi(w.u, res.transformed.u);
        if (cfg.reweight_delta) it.phi += mult_phi(w.v, res.transformed.v);
        if (cfg.reweight_lambda) it.phi += mult_phi(w.z, res.transformed.z);
        if (cfg.reweight_tau) it.phi += mult_phi(w.sigma, res.transformed.sigma);

        // unweighted re-verification against the original problem
        const bool risk_ok =
            spec.variant == AllocationVariant::MinSpectralBound
                ? it.risk <= base_risk + 1e-6 * (1.0 + std::abs(base_risk))
                : it.risk <= base_risk * (1.0 + 1e-6) + 1e-12;
        const bool feasible = res.max_coupling_residual <= 1e-8 &&
                              res.max_bound_violation <= 1e-8 && res.max_budget_violation <= 1e-8;
        it.accepted = risk_ok && feasible;

        std::vector<bool> support = support_set(res.transformed, cfg.zero_threshold);
        it.nonzero_total = support_count(support);
        out.iterates.push_back(it);

        if (!it.accepted) {
            std::ostringstream os;
            os << "iteration " << (k + 1) << " rejected by unweighted re-verification"
               << " (risk " << it.risk << " vs base " << base_risk << ")";
            out.warning = os.str();
            break;
        }
        out.final_result = res;
        warm = res.raw_x;
        prev_tv = res.transformed;
        if (support == prev_support) {
            out.stabilized = true;
            break;
        }
        prev_support = std::move(support);
    }
    return out;
}

}  // namespace spreadrisk
