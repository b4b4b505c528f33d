#include "spreadrisk/allocate.hpp"

#include "spreadrisk/costgo.hpp"
#include "spreadrisk/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace spreadrisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPinTol = 1e-12;      // box width below which a variable is pinned at 0
constexpr double kNonzeroTol = 1e-6;   // allocation counted as nonzero (transformed units)
// Safety box half-width on y = log p: regularizes directions the constraints
// leave flat without affecting any realistic optimum.
constexpr double kLogImpactBox = 60.0;
}  // namespace

const char* to_string(AllocationVariant v) {
    switch (v) {
        case AllocationVariant::MinMaxRisk: return "min-max-risk";
        case AllocationVariant::MinResourcesRiskCap: return "min-resources-risk-cap";
        case AllocationVariant::MinSpectralBound: return "min-spectral-bound";
        case AllocationVariant::KnownOutbreakRisk: return "known-outbreak-risk";
    }
    return "unknown";
}

Budgets Budgets::from_values(double beta, double delta, double lambda, double tau) {
    Budgets b;
    b.beta = beta;
    b.delta = delta;
    b.lambda = lambda;
    b.tau = tau;
    b.beta_active = beta > 0.0;
    b.delta_active = delta > 0.0;
    b.lambda_active = lambda > 0.0;
    b.tau_active = tau > 0.0;
    return b;
}

TransformedBounds transformed_bounds(const SpreadingNetwork& net) {
    TransformedBounds tb;
    tb.u_max.resize(net.edge_count());
    for (int e = 0; e < net.edge_count(); ++e) {
        const EdgeParam& ed = net.edge(e);
        tb.u_max[e] = ed.weight * std::log(ed.beta_upper / ed.beta_lower);
    }
    const int n = net.size();
    tb.v_max.resize(n);
    tb.z_max.resize(n);
    tb.sigma_max.resize(n);
    const double ceiling = net.delta_ceiling();
    for (int i = 0; i < n; ++i) {
        const NodeParam& nd = net.node(i);
        tb.v_max[i] = nd.weight_delta *
                      std::log((ceiling - nd.delta_lower) / (ceiling - nd.delta_upper));
        tb.z_max[i] = nd.weight_lambda * std::log(nd.lambda_upper / nd.lambda_lower);
        tb.sigma_max[i] = nd.weight_tau * std::log(nd.tau_upper / nd.tau_lower);
    }
    return tb;
}

namespace {

void require_positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw BoundsError("transform: " + what + " must be positive and finite, got " +
                          std::to_string(v));
    }
}

}  // namespace

TransformedVariables transform_forward(const SpreadingNetwork& net, const NaturalVariables& nat) {
    const int n = net.size();
    if (nat.p.size() != n || nat.beta.size() != net.edge_count() || nat.delta.size() != n ||
        nat.lambda.size() != n || nat.tau.size() != n) {
        throw BoundsError("transform_forward: vector sizes do not match the network");
    }
    const double ceiling = net.delta_ceiling();
    TransformedVariables tv;
    tv.y.resize(n);
    tv.u.resize(net.edge_count());
    tv.v.resize(n);
    tv.z.resize(n);
    tv.sigma.resize(n);
    for (int i = 0; i < n; ++i) {
        require_positive(nat.p[i], "p[" + std::to_string(i) + "]");
        tv.y[i] = std::log(nat.p[i]);
    }
    for (int e = 0; e < net.edge_count(); ++e) {
        require_positive(nat.beta[e], "beta[" + std::to_string(e) + "]");
        tv.u[e] = net.edge(e).weight * std::log(net.edge(e).beta_upper / nat.beta[e]);
    }
    for (int i = 0; i < n; ++i) {
        const NodeParam& nd = net.node(i);
        require_positive(ceiling - nat.delta[i], "delta_ceiling - delta[" + std::to_string(i) + "]");
        require_positive(nat.lambda[i], "lambda[" + std::to_string(i) + "]");
        require_positive(nat.tau[i], "tau[" + std::to_string(i) + "]");
        tv.v[i] = nd.weight_delta * std::log((ceiling - nd.delta_lower) / (ceiling - nat.delta[i]));
        tv.z[i] = nd.weight_lambda * std::log(nd.lambda_upper / nat.lambda[i]);
        tv.sigma[i] = nd.weight_tau * std::log(nd.tau_upper / nat.tau[i]);
    }
    require_positive(ceiling + nat.r, "delta_ceiling + r");
    tv.rho = std::log(ceiling + nat.r);
    return tv;
}

NaturalVariables transform_inverse(const SpreadingNetwork& net, const TransformedVariables& tv) {
    const int n = net.size();
    if (tv.y.size() != n || tv.u.size() != net.edge_count() || tv.v.size() != n ||
        tv.z.size() != n || tv.sigma.size() != n) {
        throw BoundsError("transform_inverse: vector sizes do not match the network");
    }
    const double ceiling = net.delta_ceiling();
    NaturalVariables nat;
    nat.p = tv.y.array().exp();
    nat.beta.resize(net.edge_count());
    for (int e = 0; e < net.edge_count(); ++e) {
        const EdgeParam& ed = net.edge(e);
        nat.beta[e] = ed.beta_upper * std::exp(-tv.u[e] / ed.weight);
    }
    nat.delta.resize(n);
    nat.lambda.resize(n);
    nat.tau.resize(n);
    for (int i = 0; i < n; ++i) {
        const NodeParam& nd = net.node(i);
        nat.delta[i] = ceiling - (ceiling - nd.delta_lower) * std::exp(-tv.v[i] / nd.weight_delta);
        nat.lambda[i] = nd.lambda_upper * std::exp(-tv.z[i] / nd.weight_lambda);
        nat.tau[i] = nd.tau_upper * std::exp(-tv.sigma[i] / nd.weight_tau);
    }
    nat.r = std::exp(tv.rho) - ceiling;
    return nat;
}

Eigen::VectorXd lse_residuals(const SpreadingNetwork& net, const TransformedVariables& tv,
                              const Eigen::VectorXd& costs) {
    const int n = net.size();
    if (costs.size() != n) throw BoundsError("lse_residuals: cost vector size mismatch");
    const double ceiling = net.delta_ceiling();
    Eigen::VectorXd q(n);
    for (int j = 0; j < n; ++j) {
        std::vector<double> exponents;
        for (int e : net.edges_from(j)) {
            const EdgeParam& ed = net.edge(e);
            const double yi = tv.y[ed.to];
            if (std::isinf(yi) && yi < 0.0) continue;  // p_to = 0: term vanishes exactly
            exponents.push_back(yi + std::log(ed.beta_upper) - tv.u[e] / ed.weight - tv.y[j] -
                                tv.rho);
        }
        exponents.push_back(std::log(ceiling - net.node(j).delta_lower) -
                            tv.v[j] / net.node(j).weight_delta - tv.rho);
        if (costs[j] > 0.0) {
            exponents.push_back(std::log(costs[j]) - tv.y[j] - tv.rho);
        }
        const double mx = *std::max_element(exponents.begin(), exponents.end());
        double s = 0.0;
        for (double e : exponents) s += std::exp(e - mx);
        q[j] = mx + std::log(s);
    }
    return q;
}

namespace {

// Node is inert when it cannot reach any positive-cost node along infection
// edges; its cost-to-go is structurally zero and it is dropped from the
// program (this is exactly what happens to water cells on a landscape).
std::vector<bool> reachable_cost_nodes(const SpreadingNetwork& net, const Eigen::VectorXd& costs) {
    const int n = net.size();
    std::vector<bool> active(n, false);
    std::deque<int> queue;
    for (int i = 0; i < n; ++i) {
        if (costs[i] > 0.0) {
            active[i] = true;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        const int i = queue.front();
        queue.pop_front();
        for (int e : net.edges_into(i)) {
            const int j = net.edge(e).from;
            if (!active[j]) {
                active[j] = true;
                queue.push_back(j);
            }
        }
    }
    return active;
}

void add_scaled(AffineExpr& expr, const QuantityMap& map, double scale) {
    if (map.var >= 0) expr.add(map.var, scale * map.coeff);
    expr.offset += scale * map.constant;
}

}  // namespace

AllocationModel assemble_problem(const AllocationProblem& spec_in) {
    if (spec_in.network == nullptr) throw ValidationError("allocation: network missing");
    const SpreadingNetwork& net = *spec_in.network;
    validate_network_or_throw(net);

    AllocationModel model;
    model.network = spec_in.network;
    model.spec = spec_in;
    AllocationProblem& spec = model.spec;
    const int n = net.size();

    if (spec.costs.size() == 0) spec.costs = node_costs(net);
    if (spec.costs.size() != n) throw ValidationError("allocation: cost vector size mismatch");
    if (spec.costs.minCoeff() < 0.0) throw ValidationError("allocation: costs must be >= 0");
    if (spec.costs.maxCoeff() <= 0.0) throw ValidationError("allocation: all costs are zero");
    if (!(spec.rate_bound > 0.0)) throw ValidationError("allocation: rate_bound must be > 0");

    if (spec.variant == AllocationVariant::KnownOutbreakRisk && spec.known_x0.size() != n) {
        throw ValidationError("known-outbreak variant needs the initial condition x(0)");
    }
    if (spec.variant == AllocationVariant::MinResourcesRiskCap && spec.risk_cap.size() == 0) {
        throw ValidationError("risk-cap variant needs a risk cap");
    }

    // the known-outbreak objective and the spectral bound use neither lambda
    // nor tau, so those channels cannot spend usefully
    Budgets budgets = spec.budgets;
    if (spec.variant == AllocationVariant::MinSpectralBound ||
        (spec.variant == AllocationVariant::KnownOutbreakRisk) ||
        (spec.variant == AllocationVariant::MinResourcesRiskCap && spec.known_x0.size() == n)) {
        budgets.lambda_active = false;
        budgets.tau_active = false;
    }

    // baseline feasibility at zero resources, r = rate_bound
    const SystemMatrix baseline = build_system_matrix(net, beta_upper(net), delta_lower(net));
    const FeasibilityCheck base_fc = check_feasibility(baseline, spec.rate_bound);
    if (!base_fc.feasible) {
        std::ostringstream os;
        os << "allocation infeasible: zero-resource spectral abscissa " << base_fc.abscissa
           << " >= rate bound " << spec.rate_bound;
        throw InfeasibleError(os.str(), base_fc.abscissa);
    }

    model.active = reachable_cost_nodes(net, spec.costs);
    const TransformedBounds tb = transformed_bounds(net);
    ConvexProgram& prog = model.program;

    // --- decision variables -------------------------------------------------
    model.y_var.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        if (model.active[i]) model.y_var[i] = prog.add_var("y" + std::to_string(i));
    }

    const double ceiling = net.delta_ceiling();
    double rho_hi = std::log(ceiling + spec.rate_bound);
    if (std::isfinite(spec.rho_upper_override)) rho_hi = std::min(rho_hi, spec.rho_upper_override);
    const double rho_lo = std::log(ceiling);
    if (!(rho_hi > rho_lo)) throw ValidationError("allocation: empty discount-rate interval");
    model.rho_var = prog.add_var("rho", rho_lo, rho_hi);

    // vaccination groups own their node's delta variable and all incoming
    // spreading-rate variables
    std::vector<int> group_of(n, -1);
    model.vaccination_var.assign(spec.vaccination.size(), -1);
    model.vaccination_cost.assign(spec.vaccination.size(), 0.0);
    for (size_t g = 0; g < spec.vaccination.size(); ++g) {
        const int node = spec.vaccination[g].node;
        if (node < 0 || node >= n) {
            throw ValidationError("vaccination group references missing node " + std::to_string(node));
        }
        if (group_of[node] >= 0) {
            throw ValidationError("vaccination group repeats node " + std::to_string(node));
        }
        group_of[node] = static_cast<int>(g);
        if (!budgets.delta_active || !model.active[node]) continue;
        double cap = tb.v_max[node] / net.node(node).weight_delta;
        double cost = net.node(node).weight_delta;
        for (int e : net.edges_into(node)) {
            const EdgeParam& ed = net.edge(e);
            if (!model.active[ed.from]) continue;
            cap = std::min(cap, tb.u_max[e] / ed.weight);
            cost += ed.weight;
        }
        if (cap <= kPinTol) continue;
        model.vaccination_var[g] = prog.add_var("vac" + std::to_string(node), 0.0, cap);
        model.vaccination_cost[g] = cost;
    }

    auto make_channel_map = [&prog](bool active_channel, double hi, const std::string& name) {
        QuantityMap m;
        m.var = -1;
        m.constant = 0.0;
        if (active_channel && hi > kPinTol) {
            m.var = prog.add_var(name, 0.0, hi);
            m.coeff = 1.0;
        }
        return m;
    };

    model.u_map.resize(net.edge_count());
    for (int e = 0; e < net.edge_count(); ++e) {
        const EdgeParam& ed = net.edge(e);
        const int g = group_of[ed.to];
        if (g >= 0) {
            // coupled: u_e = w_e * s_g (zero when the group is pinned)
            QuantityMap m;
            if (model.vaccination_var[g] >= 0 && model.active[ed.from] && model.active[ed.to]) {
                m.var = model.vaccination_var[g];
                m.coeff = ed.weight;
            }
            model.u_map[e] = m;
            continue;
        }
        const bool usable = budgets.beta_active && model.active[ed.from] && model.active[ed.to];
        model.u_map[e] =
            make_channel_map(usable, tb.u_max[e], "u" + std::to_string(ed.from) + "_" + std::to_string(ed.to));
    }
    model.v_map.resize(n);
    model.z_map.resize(n);
    model.sigma_map.resize(n);
    const bool risk_uses_lambda_tau = spec.variant == AllocationVariant::MinMaxRisk ||
                                      (spec.variant == AllocationVariant::MinResourcesRiskCap &&
                                       spec.known_x0.size() != n);
    for (int i = 0; i < n; ++i) {
        if (group_of[i] >= 0) {
            QuantityMap m;
            if (model.vaccination_var[group_of[i]] >= 0) {
                m.var = model.vaccination_var[group_of[i]];
                m.coeff = net.node(i).weight_delta;
            }
            model.v_map[i] = m;
        } else {
            model.v_map[i] =
                make_channel_map(budgets.delta_active && model.active[i], tb.v_max[i], "v" + std::to_string(i));
        }
        model.z_map[i] = make_channel_map(budgets.lambda_active && model.active[i] && risk_uses_lambda_tau,
                                          tb.z_max[i], "z" + std::to_string(i));
        model.sigma_map[i] = make_channel_map(budgets.tau_active && model.active[i] && risk_uses_lambda_tau,
                                              tb.sigma_max[i], "sigma" + std::to_string(i));
    }

    // --- coupling constraints -----------------------------------------------
    for (int j = 0; j < n; ++j) {
        if (!model.active[j]) continue;
        LseConstraint q;
        q.name = "q" + std::to_string(j);
        for (int e : net.edges_from(j)) {
            const EdgeParam& ed = net.edge(e);
            if (!model.active[ed.to]) continue;  // p = 0 exactly: term vanishes
            AffineExpr term;
            term.add(model.y_var[ed.to], 1.0);
            term.add(model.y_var[j], -1.0);
            term.add(model.rho_var, -1.0);
            term.offset = std::log(ed.beta_upper);
            add_scaled(term, model.u_map[e], -1.0 / ed.weight);
            q.exponents.push_back(std::move(term));
        }
        {
            AffineExpr term;
            term.offset = std::log(ceiling - net.node(j).delta_lower);
            add_scaled(term, model.v_map[j], -1.0 / net.node(j).weight_delta);
            term.add(model.rho_var, -1.0);
            q.exponents.push_back(std::move(term));
        }
        if (spec.costs[j] > 0.0) {
            AffineExpr term;
            term.offset = std::log(spec.costs[j]);
            term.add(model.y_var[j], -1.0);
            term.add(model.rho_var, -1.0);
            q.exponents.push_back(std::move(term));
        }
        if (q.exponents.size() == 1) {
            prog.rows.push_back({std::move(q.exponents.front()), q.name});
        } else {
            prog.lse.push_back(std::move(q));
        }
    }

    // --- risk expressions and objective --------------------------------------
    auto risk_expr = [&](int i) {
        const NodeParam& nd = net.node(i);
        AffineExpr expr;
        expr.add(model.y_var[i], 1.0);
        expr.offset = std::log(nd.lambda_upper) + std::log(nd.tau_upper);
        add_scaled(expr, model.z_map[i], -1.0 / nd.weight_lambda);
        add_scaled(expr, model.sigma_map[i], -1.0 / nd.weight_tau);
        return expr;
    };

    Eigen::VectorXd obj;  // filled at the end, once num_vars is final
    std::vector<std::pair<int, double>> obj_terms;

    auto seeded_risk_terms = [&]() {
        std::vector<AffineExpr> terms;
        for (int i = 0; i < n; ++i) {
            if (spec.known_x0[i] <= 0.0) continue;
            if (!model.active[i]) continue;  // zero impact seeds contribute nothing
            AffineExpr t;
            t.add(model.y_var[i], 1.0);
            t.offset = std::log(spec.known_x0[i]);
            terms.push_back(std::move(t));
        }
        if (terms.empty()) {
            throw ValidationError("known outbreak seeds only zero-impact nodes");
        }
        return terms;
    };

    switch (spec.variant) {
        case AllocationVariant::MinMaxRisk: {
            model.epigraph_var = prog.add_var("t_risk");
            for (int i = 0; i < n; ++i) {
                if (!model.active[i]) continue;
                AffineExpr expr = risk_expr(i);
                expr.add(model.epigraph_var, -1.0);
                prog.rows.push_back({std::move(expr), "risk" + std::to_string(i)});
            }
            obj_terms.emplace_back(model.epigraph_var, 1.0);
            break;
        }
        case AllocationVariant::KnownOutbreakRisk: {
            model.epigraph_var = prog.add_var("t_risk");
            std::vector<AffineExpr> terms = seeded_risk_terms();
            for (auto& t : terms) t.add(model.epigraph_var, -1.0);
            if (terms.size() == 1) {
                prog.rows.push_back({std::move(terms.front()), "seed_risk"});
            } else {
                LseConstraint c;
                c.exponents = std::move(terms);
                c.name = "seed_risk";
                prog.lse.push_back(std::move(c));
            }
            obj_terms.emplace_back(model.epigraph_var, 1.0);
            break;
        }
        case AllocationVariant::MinSpectralBound: {
            obj_terms.emplace_back(model.rho_var, 1.0);
            break;
        }
        case AllocationVariant::MinResourcesRiskCap: {
            if (spec.known_x0.size() == n) {
                if (spec.risk_cap.size() != 1 || !(spec.risk_cap[0] > 0.0)) {
                    throw ValidationError("seeded risk cap must be a single positive value");
                }
                std::vector<AffineExpr> terms = seeded_risk_terms();
                const double cap_log = std::log(spec.risk_cap[0]);
                for (auto& t : terms) t.offset -= cap_log;
                if (terms.size() == 1) {
                    prog.rows.push_back({std::move(terms.front()), "seed_risk_cap"});
                } else {
                    LseConstraint c;
                    c.exponents = std::move(terms);
                    c.name = "seed_risk_cap";
                    prog.lse.push_back(std::move(c));
                }
            } else {
                if (!(spec.risk_cap.size() == 1 || spec.risk_cap.size() == n)) {
                    throw ValidationError("risk cap must be global or per node");
                }
                for (int i = 0; i < n; ++i) {
                    if (!model.active[i]) continue;
                    const double cap = spec.risk_cap.size() == 1 ? spec.risk_cap[0] : spec.risk_cap[i];
                    if (!(cap > 0.0)) {
                        throw ValidationError("risk cap must be positive (node " + std::to_string(i) + ")");
                    }
                    AffineExpr expr = risk_expr(i);
                    expr.offset -= std::log(cap);
                    prog.rows.push_back({std::move(expr), "risk_cap" + std::to_string(i)});
                }
            }
            // objective: total resources spent, optionally reweighted
            auto weight_of = [](const Eigen::VectorXd& w, int idx) {
                return w.size() > static_cast<Eigen::Index>(idx) ? w[idx] : 1.0;
            };
            bool any = false;
            for (int e = 0; e < net.edge_count(); ++e) {
                if (model.u_map[e].var >= 0 && group_of[net.edge(e).to] < 0) {
                    obj_terms.emplace_back(model.u_map[e].var,
                                           weight_of(spec.resource_weights.u, e) * model.u_map[e].coeff);
                    any = true;
                }
            }
            for (int i = 0; i < n; ++i) {
                if (model.v_map[i].var >= 0 && group_of[i] < 0) {
                    obj_terms.emplace_back(model.v_map[i].var,
                                           weight_of(spec.resource_weights.v, i) * model.v_map[i].coeff);
                    any = true;
                }
                if (model.z_map[i].var >= 0) {
                    obj_terms.emplace_back(model.z_map[i].var, weight_of(spec.resource_weights.z, i));
                    any = true;
                }
                if (model.sigma_map[i].var >= 0) {
                    obj_terms.emplace_back(model.sigma_map[i].var,
                                           weight_of(spec.resource_weights.sigma, i));
                    any = true;
                }
            }
            for (size_t g = 0; g < model.vaccination_var.size(); ++g) {
                if (model.vaccination_var[g] >= 0) {
                    obj_terms.emplace_back(model.vaccination_var[g], model.vaccination_cost[g]);
                    any = true;
                }
            }
            if (!any) throw ValidationError("resource minimization without any active channel");
            break;
        }
    }

    // --- budget rows ----------------------------------------------------------
    auto add_budget_row = [&prog](std::vector<std::pair<int, double>> terms, double budget,
                                  const std::string& name) {
        if (terms.empty() || !std::isfinite(budget)) return;
        LinearConstraint row;
        for (auto& [var, coeff] : terms) row.expr.add(var, coeff);
        row.expr.offset = -budget;
        row.name = name;
        prog.rows.push_back(std::move(row));
    };
    {
        std::vector<std::pair<int, double>> terms;
        for (int e = 0; e < net.edge_count(); ++e) {
            if (model.u_map[e].var >= 0 && group_of[net.edge(e).to] < 0) {
                terms.emplace_back(model.u_map[e].var, model.u_map[e].coeff);
            }
        }
        if (budgets.beta_active) add_budget_row(std::move(terms), budgets.beta, "budget_beta");
    }
    {
        std::vector<std::pair<int, double>> terms;
        for (int i = 0; i < n; ++i) {
            if (model.v_map[i].var >= 0 && group_of[i] < 0) {
                terms.emplace_back(model.v_map[i].var, model.v_map[i].coeff);
            }
        }
        for (size_t g = 0; g < model.vaccination_var.size(); ++g) {
            if (model.vaccination_var[g] >= 0) {
                terms.emplace_back(model.vaccination_var[g], model.vaccination_cost[g]);
            }
        }
        if (budgets.delta_active) add_budget_row(std::move(terms), budgets.delta, "budget_delta");
    }
    {
        std::vector<std::pair<int, double>> terms;
        for (int i = 0; i < n; ++i)
            if (model.z_map[i].var >= 0) terms.emplace_back(model.z_map[i].var, 1.0);
        if (budgets.lambda_active) add_budget_row(std::move(terms), budgets.lambda, "budget_lambda");
    }
    {
        std::vector<std::pair<int, double>> terms;
        for (int i = 0; i < n; ++i)
            if (model.sigma_map[i].var >= 0) terms.emplace_back(model.sigma_map[i].var, 1.0);
        if (budgets.tau_active) add_budget_row(std::move(terms), budgets.tau, "budget_tau");
    }

    prog.objective = Eigen::VectorXd::Zero(prog.num_vars);
    for (const auto& [var, coeff] : obj_terms) prog.objective[var] += coeff;

    // --- strictly feasible start ------------------------------------------------
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prog.num_vars);
    auto seed_channel = [&x0, &prog](const QuantityMap& m, double budget_share) {
        if (m.var < 0) return;
        const double hi = prog.upper[m.var];
        x0[m.var] = std::min(0.45 * hi, budget_share);
    };
    {
        int m_beta = 0, m_delta = 0, m_lambda = 0, m_tau = 0;
        for (int e = 0; e < net.edge_count(); ++e)
            if (model.u_map[e].var >= 0 && group_of[net.edge(e).to] < 0) ++m_beta;
        for (int i = 0; i < n; ++i) {
            if (model.v_map[i].var >= 0 && group_of[i] < 0) ++m_delta;
            if (model.z_map[i].var >= 0) ++m_lambda;
            if (model.sigma_map[i].var >= 0) ++m_tau;
        }
        int m_vac = 0;
        for (int v : model.vaccination_var)
            if (v >= 0) ++m_vac;

        for (int e = 0; e < net.edge_count(); ++e) {
            if (group_of[net.edge(e).to] >= 0) continue;
            seed_channel(model.u_map[e], budgets.beta / std::max(1, 4 * m_beta));
        }
        for (int i = 0; i < n; ++i) {
            if (group_of[i] < 0) seed_channel(model.v_map[i], budgets.delta / std::max(1, 4 * (m_delta + m_vac)));
            seed_channel(model.z_map[i], budgets.lambda / std::max(1, 4 * m_lambda));
            seed_channel(model.sigma_map[i], budgets.tau / std::max(1, 4 * m_tau));
        }
        for (size_t g = 0; g < model.vaccination_var.size(); ++g) {
            const int var = model.vaccination_var[g];
            if (var < 0) continue;
            x0[var] = std::min(0.45 * prog.upper[var],
                               budgets.delta / (model.vaccination_cost[g] * std::max(1, 4 * (m_delta + m_vac))));
        }
    }

    NaturalVariables start = model.extract_natural(x0);  // p not meaningful yet
    const SystemMatrix A0 = build_system_matrix(net, start.beta, start.delta);
    const double alpha0 = spectral_abscissa(A0);
    const double r_hi = std::exp(rho_hi) - ceiling;
    if (alpha0 < r_hi - 1e-9) {
        const double r0 = 0.5 * (std::max(alpha0, 0.0) + r_hi);
        x0[model.rho_var] = std::log(ceiling + r0);
        const double zeta = 1e-3 * (1.0 + spec.costs.maxCoeff());
        Eigen::VectorXd padded = spec.costs;
        for (int i = 0; i < n; ++i)
            if (model.active[i]) padded[i] += zeta;
        const CostToGo ctg = compute_cost_to_go(A0, padded, r0);
        for (int i = 0; i < n; ++i) {
            if (model.y_var[i] >= 0) x0[model.y_var[i]] = std::log(1.1 * std::max(ctg.p[i], 1e-300));
        }
    } else {
        // the start point's dynamics are infeasible at the capped discount
        // rate (tightened rho interval); leave y at zero, phase-1 will recover
        x0[model.rho_var] = 0.5 * (rho_lo + rho_hi);
    }
    // wide safety box on y around the start
    for (int i = 0; i < n; ++i) {
        if (model.y_var[i] >= 0) {
            prog.lower[model.y_var[i]] = x0[model.y_var[i]] - kLogImpactBox;
            prog.upper[model.y_var[i]] = x0[model.y_var[i]] + kLogImpactBox;
        }
    }
    if (model.epigraph_var >= 0) {
        double worst = -kInf;
        for (const auto& row : prog.rows) {
            // rows mentioning the epigraph variable have coefficient -1 on it
            bool uses_t = false;
            double value = row.expr.offset;
            for (const auto& [var, coeff] : row.expr.terms) {
                if (var == model.epigraph_var) {
                    uses_t = true;
                } else {
                    value += coeff * x0[var];
                }
            }
            if (uses_t) worst = std::max(worst, value);
        }
        for (const auto& c : prog.lse) {
            bool uses_t = false;
            for (const auto& e : c.exponents)
                for (const auto& [var, coeff] : e.terms) uses_t |= var == model.epigraph_var;
            if (!uses_t) continue;
            double mx = -kInf;
            for (const auto& e : c.exponents) {
                double value = e.offset;
                for (const auto& [var, coeff] : e.terms) {
                    if (var != model.epigraph_var) value += coeff * x0[var];
                }
                mx = std::max(mx, value);
            }
            // log sum exp <= #terms * exp(mx); bound t by mx + log(#terms)
            worst = std::max(worst, mx + std::log(static_cast<double>(c.exponents.size())));
        }
        x0[model.epigraph_var] = (std::isfinite(worst) ? worst : 0.0) + 1.0;
        prog.lower[model.epigraph_var] = x0[model.epigraph_var] - 2.0 * kLogImpactBox;
        prog.upper[model.epigraph_var] = x0[model.epigraph_var] + 2.0 * kLogImpactBox;
    }

    model.x0 = std::move(x0);
    return model;
}

AllocationModel apply_vaccination_coupling(AllocationProblem spec,
                                           const std::vector<VaccinationGroup>& groups) {
    spec.vaccination = groups;
    return assemble_problem(spec);
}

TransformedVariables AllocationModel::extract_transformed(const Eigen::VectorXd& x) const {
    const SpreadingNetwork& net = *network;
    const int n = net.size();
    TransformedVariables tv;
    tv.y.resize(n);
    for (int i = 0; i < n; ++i) {
        tv.y[i] = y_var[i] >= 0 ? x[y_var[i]] : -kInf;
    }
    tv.u.resize(net.edge_count());
    for (int e = 0; e < net.edge_count(); ++e) tv.u[e] = u_map[e].value(x);
    tv.v.resize(n);
    tv.z.resize(n);
    tv.sigma.resize(n);
    for (int i = 0; i < n; ++i) {
        tv.v[i] = v_map[i].value(x);
        tv.z[i] = z_map[i].value(x);
        tv.sigma[i] = sigma_map[i].value(x);
    }
    tv.rho = x[rho_var];
    return tv;
}

NaturalVariables AllocationModel::extract_natural(const Eigen::VectorXd& x) const {
    TransformedVariables tv = extract_transformed(x);
    // inverse transform tolerates y = -inf (p = 0 exactly)
    NaturalVariables nat = transform_inverse(*network, tv);
    for (int i = 0; i < network->size(); ++i) {
        if (y_var[i] < 0) nat.p[i] = 0.0;
    }
    return nat;
}

AllocationResult solve_allocation(const AllocationModel& model, const SolverSettings& settings,
                                  const Eigen::VectorXd* warm_start) {
    const SpreadingNetwork& net = *model.network;
    BarrierSolver solver(settings);
    const Eigen::VectorXd& start =
        (warm_start != nullptr && warm_start->size() == model.program.num_vars) ? *warm_start
                                                                                : model.x0;
    SolveResult sr = solver.solve(model.program, start);

    AllocationResult out;
    out.status = sr.status;
    out.gap = sr.gap;
    out.newton_iterations = sr.newton_iterations;
    out.used_phase1 = sr.used_phase1;
    out.message = sr.message;
    if (sr.status == SolveStatus::Infeasible) return out;

    out.raw_x = sr.x;
    out.objective = sr.objective;
    out.transformed = model.extract_transformed(sr.x);
    out.optimal = model.extract_natural(sr.x);

    // re-verify the result in model terms
    const Eigen::VectorXd q = lse_residuals(net, out.transformed, model.spec.costs);
    double qmax = -kInf;
    for (int j = 0; j < net.size(); ++j) {
        if (model.active[j]) qmax = std::max(qmax, q[j]);
    }
    out.max_coupling_residual = qmax;

    const TransformedBounds tb = transformed_bounds(net);
    double bound_violation = 0.0;
    for (int e = 0; e < net.edge_count(); ++e) {
        bound_violation = std::max({bound_violation, -out.transformed.u[e],
                                    out.transformed.u[e] - tb.u_max[e]});
    }
    for (int i = 0; i < net.size(); ++i) {
        bound_violation = std::max({bound_violation, -out.transformed.v[i],
                                    out.transformed.v[i] - tb.v_max[i], -out.transformed.z[i],
                                    out.transformed.z[i] - tb.z_max[i], -out.transformed.sigma[i],
                                    out.transformed.sigma[i] - tb.sigma_max[i]});
    }
    out.max_bound_violation = bound_violation;

    const Budgets& b = model.spec.budgets;
    double budget_violation = -kInf;
    auto track_budget = [&budget_violation](double used, double budget, bool active) {
        if (active && std::isfinite(budget)) budget_violation = std::max(budget_violation, used - budget);
    };
    double used_beta = 0.0, used_delta = 0.0, used_lambda = 0.0, used_tau = 0.0;
    std::vector<int> group_of(net.size(), -1);
    for (size_t g = 0; g < model.spec.vaccination.size(); ++g) group_of[model.spec.vaccination[g].node] = static_cast<int>(g);
    for (int e = 0; e < net.edge_count(); ++e) {
        if (group_of[net.edge(e).to] < 0) used_beta += out.transformed.u[e];
    }
    for (int i = 0; i < net.size(); ++i) {
        if (group_of[i] < 0) used_delta += out.transformed.v[i];
        used_lambda += out.transformed.z[i];
        used_tau += out.transformed.sigma[i];
    }
    out.vaccination.assign(model.vaccination_var.size(), 0.0);
    for (size_t g = 0; g < model.vaccination_var.size(); ++g) {
        if (model.vaccination_var[g] >= 0) {
            out.vaccination[g] = sr.x[model.vaccination_var[g]];
            used_delta += model.vaccination_cost[g] * out.vaccination[g];
        }
    }
    track_budget(used_beta, b.beta, b.beta_active);
    track_budget(used_delta, b.delta, b.delta_active);
    track_budget(used_lambda, b.lambda, b.lambda_active);
    track_budget(used_tau, b.tau, b.tau_active);
    out.max_budget_violation = std::isfinite(budget_violation) ? budget_violation : 0.0;

    auto count_nonzero = [](const Eigen::VectorXd& v) {
        int c = 0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (v[i] > kNonzeroTol) ++c;
        return c;
    };
    out.nonzero_beta = count_nonzero(out.transformed.u);
    out.nonzero_delta = count_nonzero(out.transformed.v);
    out.nonzero_lambda = count_nonzero(out.transformed.z);
    out.nonzero_tau = count_nonzero(out.transformed.sigma);
    return out;
}

std::string allocation_result_to_json(const AllocationModel& model, const AllocationResult& result) {
    using nlohmann::json;
    const SpreadingNetwork& net = *model.network;
    json doc;
    doc["variant"] = to_string(model.spec.variant);
    doc["status"] = to_string(result.status);
    doc["objective"] = result.objective;
    doc["gap"] = result.gap;
    doc["newton_iterations"] = result.newton_iterations;
    doc["used_phase1"] = result.used_phase1;
    doc["residuals"] = {{"coupling_max", result.max_coupling_residual},
                        {"bounds_max", result.max_bound_violation},
                        {"budgets_max", result.max_budget_violation}};
    doc["nonzero"] = {{"beta", result.nonzero_beta},
                      {"delta", result.nonzero_delta},
                      {"lambda", result.nonzero_lambda},
                      {"tau", result.nonzero_tau}};
    if (result.status == SolveStatus::Infeasible) {
        doc["message"] = result.message;
        return doc.dump(2);
    }
    doc["discount_rate"] = result.optimal.r;
    doc["rho"] = result.transformed.rho;

    json nodes = json::array();
    for (int i = 0; i < net.size(); ++i) {
        json nd;
        nd["id"] = i;
        nd["p"] = result.optimal.p[i];
        if (std::isfinite(result.transformed.y[i])) nd["y"] = result.transformed.y[i];
        nd["delta"] = result.optimal.delta[i];
        nd["v"] = result.transformed.v[i];
        nd["lambda"] = result.optimal.lambda[i];
        nd["z"] = result.transformed.z[i];
        nd["tau"] = result.optimal.tau[i];
        nd["sigma"] = result.transformed.sigma[i];
        nodes.push_back(std::move(nd));
    }
    doc["nodes"] = std::move(nodes);
    json edges = json::array();
    for (int e = 0; e < net.edge_count(); ++e) {
        json ed;
        ed["from"] = net.edge(e).from;
        ed["to"] = net.edge(e).to;
        ed["beta"] = result.optimal.beta[e];
        ed["u"] = result.transformed.u[e];
        edges.push_back(std::move(ed));
    }
    doc["edges"] = std::move(edges);
    if (!result.vaccination.empty()) {
        json vac = json::array();
        for (size_t g = 0; g < result.vaccination.size(); ++g) {
            vac.push_back({{"node", model.spec.vaccination[g].node}, {"s", result.vaccination[g]}});
        }
        doc["vaccination"] = std::move(vac);
    }
    return doc.dump(2);
}

}  // namespace spreadrisk
