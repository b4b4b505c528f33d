#include "spreadrisk/allocate.hpp"

#include "spreadrisk/costgo.hpp"
#include "spreadrisk/errors.hpp"
#include "spreadrisk/scenario.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace spreadrisk;

namespace {

SpreadingNetwork two_node_both_ways() {
    SpreadingNetwork net(2, 2.0);
    for (auto [f, t] : {std::pair{0, 1}, std::pair{1, 0}}) {
        EdgeParam e;
        e.from = f;
        e.to = t;
        e.beta_upper = 0.5;
        e.beta_lower = 0.05;
        net.add_edge(e);
    }
    for (int i = 0; i < 2; ++i) {
        net.node(i).delta_lower = net.node(i).delta_upper = 1.0;
        net.node(i).lambda_upper = 1.0;
        net.node(i).lambda_lower = 0.01;
    }
    net.node(0).cost = 1.0;
    net.node(1).cost = 0.4;
    return net;
}

// hand 2x2 solve of (rI - A)' p = C for the two-node network above
Eigen::Vector2d cost_to_go_2x2(double beta01, double beta10, double delta, double r,
                               const Eigen::Vector2d& c) {
    // A = [[-delta, beta10], [beta01, -delta]]; M = (rI - A)' =
    // [[r+delta, -beta01], [-beta10, r+delta]]
    const double a = r + delta;
    const double det = a * a - beta01 * beta10;
    Eigen::Vector2d p;
    p[0] = (a * c[0] + beta01 * c[1]) / det;
    p[1] = (beta10 * c[0] + a * c[1]) / det;
    return p;
}

}  // namespace

TEST_CASE("transformed bounds follow the log formulas") {
    SpreadingNetwork net(1, 2.0);
    NodeParam& nd = net.node(0);
    nd.delta_lower = 0.5;
    nd.delta_upper = 1.0;
    nd.weight_delta = 2.0;
    nd.lambda_lower = 0.1;
    nd.lambda_upper = 1.0;
    nd.weight_lambda = 3.0;
    nd.tau_lower = 0.125;
    nd.tau_upper = 1.0;
    nd.weight_tau = 0.5;
    TransformedBounds tb = transformed_bounds(net);
    CHECK(tb.v_max[0] == doctest::Approx(2.0 * std::log(1.5 / 1.0)));
    CHECK(tb.z_max[0] == doctest::Approx(3.0 * std::log(10.0)));
    CHECK(tb.sigma_max[0] == doctest::Approx(0.5 * std::log(8.0)));
}

TEST_CASE("transform: zero-resource fixed point and frozen log values") {
    SpreadingNetwork net = two_node_both_ways();
    NaturalVariables nat;
    nat.p = Eigen::VectorXd::Constant(2, 0.7);
    nat.beta = beta_upper(net);
    nat.delta = delta_lower(net);
    nat.lambda = lambda_upper(net);
    nat.tau = tau_upper(net);
    nat.r = 0.0;
    TransformedVariables tv = transform_forward(net, nat);
    CHECK(tv.u.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
    CHECK(tv.v.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
    CHECK(tv.z.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
    CHECK(tv.sigma.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
    CHECK(tv.rho == doctest::Approx(0.6931471805599453));  // log(ceiling + 0) = log 2

    nat.beta[0] = 0.25;  // w = 1, upper 0.5: u = log 2
    tv = transform_forward(net, nat);
    CHECK(tv.u[0] == doctest::Approx(0.6931471805599453).epsilon(1e-12));
}

TEST_CASE("transform: round trip is the identity and is monotone") {
    SpreadingNetwork net = testhelp::random_network(6, 3);
    std::mt19937_64 eng(4);
    NaturalVariables nat;
    nat.p.resize(6);
    nat.beta.resize(net.edge_count());
    nat.delta.resize(6);
    nat.lambda.resize(6);
    nat.tau.resize(6);
    for (int i = 0; i < 6; ++i) {
        const NodeParam& nd = net.node(i);
        nat.p[i] = testhelp::uniform(eng, 0.1, 3.0);
        nat.delta[i] = testhelp::uniform(eng, nd.delta_lower, nd.delta_upper);
        nat.lambda[i] = testhelp::uniform(eng, nd.lambda_lower, nd.lambda_upper);
        nat.tau[i] = testhelp::uniform(eng, nd.tau_lower, nd.tau_upper);
    }
    for (int e = 0; e < net.edge_count(); ++e) {
        nat.beta[e] = testhelp::uniform(eng, net.edge(e).beta_lower, net.edge(e).beta_upper);
    }
    nat.r = 0.7;
    TransformedVariables tv = transform_forward(net, nat);
    NaturalVariables back = transform_inverse(net, tv);
    CHECK((back.p - nat.p).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + nat.p.lpNorm<Eigen::Infinity>()));
    CHECK((back.beta - nat.beta).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((back.delta - nat.delta).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((back.lambda - nat.lambda).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((back.tau - nat.tau).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(back.r == doctest::Approx(nat.r).epsilon(1e-12));

    // monotonicity: pushing beta down raises u, delta up raises v, etc.
    NaturalVariables nat2 = nat;
    nat2.beta[0] *= 0.9;
    nat2.delta[0] = std::min(nat.delta[0] + 0.05, net.node(0).delta_upper);
    nat2.lambda[0] *= 0.9;
    nat2.tau[0] *= 0.9;
    TransformedVariables tv2 = transform_forward(net, nat2);
    CHECK(tv2.u[0] > tv.u[0]);
    CHECK(tv2.v[0] >= tv.v[0]);
    CHECK(tv2.z[0] > tv.z[0]);
    CHECK(tv2.sigma[0] > tv.sigma[0]);
}

TEST_CASE("transform: nonpositive inputs name the offending variable") {
    SpreadingNetwork net = two_node_both_ways();
    NaturalVariables nat;
    nat.p = Eigen::VectorXd::Constant(2, 1.0);
    nat.beta = beta_upper(net);
    nat.delta = delta_lower(net);
    nat.lambda = lambda_upper(net);
    nat.tau = tau_upper(net);
    nat.r = 0.0;
    nat.p[1] = 0.0;
    CHECK_THROWS_WITH_AS(transform_forward(net, nat), doctest::Contains("p[1]"), BoundsError);
    nat.p[1] = 1.0;
    nat.beta[0] = -0.1;
    CHECK_THROWS_WITH_AS(transform_forward(net, nat), doctest::Contains("beta[0]"), BoundsError);
}

TEST_CASE("lse residuals: hand oracle at the feasibility boundary") {
    // single node: delta = 1, delta_lo = 0.5, ceiling = 2, r = 1, c = 1.
    // p = 0.5 sits exactly on the boundary: q = log(1/3 + 2/3) = 0
    SpreadingNetwork net(1, 2.0);
    net.node(0).delta_lower = 0.5;
    net.node(0).delta_upper = 1.5;
    NaturalVariables nat;
    nat.p = Eigen::VectorXd::Constant(1, 0.5);
    nat.beta.resize(0);
    nat.delta = Eigen::VectorXd::Constant(1, 1.0);
    nat.lambda = Eigen::VectorXd::Constant(1, 0.5);
    nat.tau = Eigen::VectorXd::Constant(1, 0.5);
    nat.r = 1.0;
    TransformedVariables tv = transform_forward(net, nat);
    Eigen::VectorXd q = lse_residuals(net, tv, Eigen::VectorXd::Ones(1));
    CHECK(q[0] == doctest::Approx(0.0).epsilon(1e-12));

    nat.p[0] = 1.0;  // interior: q = log(1/3 + 1/3)
    q = lse_residuals(net, transform_forward(net, nat), Eigen::VectorXd::Ones(1));
    CHECK(q[0] == doctest::Approx(-0.40546510810816444).epsilon(1e-12));
}

TEST_CASE("lse residuals: sign matches the linear coupling constraint") {
    std::mt19937_64 eng(2718);
    int positives = 0, negatives = 0;
    for (int trial = 0; trial < 100; ++trial) {
        SpreadingNetwork net = testhelp::random_network(8, 1000 + trial);
        SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
        NaturalVariables nat;
        nat.p.resize(8);
        for (int i = 0; i < 8; ++i) nat.p[i] = testhelp::uniform(eng, 0.05, 4.0);
        nat.beta = beta_upper(net);
        nat.delta = delta_lower(net);
        nat.lambda = lambda_upper(net);
        nat.tau = tau_upper(net);
        nat.r = testhelp::uniform(eng, 0.1, 2.0);
        TransformedVariables tv = transform_forward(net, nat);
        Eigen::VectorXd q = lse_residuals(net, tv, node_costs(net));
        Eigen::VectorXd direct = m.A.transpose() * nat.p - nat.r * nat.p + node_costs(net);
        for (int j = 0; j < 8; ++j) {
            if (std::abs(q[j]) < 1e-9) continue;
            CHECK((q[j] > 0) == (direct[j] > 0));
            (q[j] > 0 ? positives : negatives) += 1;
        }
    }
    // the sampling genuinely exercises both sides
    CHECK(positives > 50);
    CHECK(negatives > 50);
}

TEST_CASE("zero budgets reduce the program to the baseline cost-to-go") {
    SpreadingNetwork net = two_node_both_ways();
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = 1.0;
    prob.budgets = Budgets::from_values(0, 0, 0, 0);
    AllocationModel model = assemble_problem(prob);
    AllocationResult res = solve_allocation(model);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.transformed.u.lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(res.nonzero_beta == 0);
    CHECK(res.optimal.beta[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(res.optimal.delta[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.optimal.lambda[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.optimal.tau[0] == doctest::Approx(1.0).epsilon(1e-9));

    SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
    CostToGo ctg = compute_cost_to_go(m, node_costs(net), 1.0);
    const double expect =
        std::log((ctg.p.array() * lambda_upper(net).array() * tau_upper(net).array()).maxCoeff());
    CHECK(res.objective == doctest::Approx(expect).epsilon(2e-6));
}

TEST_CASE("two-variable allocation matches the brute-force grid search") {
    SpreadingNetwork net = two_node_both_ways();
    const double rbar = 1.0;
    const double ubar = std::log(0.5 / 0.05);  // per edge
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = rbar;
    prob.budgets = Budgets::from_values(ubar, 0, 0, 0);  // half of the total bound
    AllocationResult res = solve_allocation(assemble_problem(prob));
    REQUIRE(res.status == SolveStatus::Optimal);

    // oracle: exhaustive search over (u_01, u_10) with the hand 2x2 solve
    Eigen::Vector2d costs(net.node(0).cost, net.node(1).cost);
    const double step = 1e-3 * ubar;
    double best = std::numeric_limits<double>::infinity();
    for (double u0 = 0.0; u0 <= ubar; u0 += step) {
        const double u1max = std::min(ubar, prob.budgets.beta - u0);
        for (double u1 = 0.0; u1 <= u1max; u1 += step) {
            const double beta01 = 0.5 * std::exp(-u0);  // edge 0 -> 1
            const double beta10 = 0.5 * std::exp(-u1);
            Eigen::Vector2d p = cost_to_go_2x2(beta01, beta10, 1.0, rbar, costs);
            best = std::min(best, std::log(std::max(p[0], p[1])));  // lambda = tau = 1
        }
    }
    CHECK(res.objective == doctest::Approx(best).epsilon(1e-3));
    CHECK(res.max_coupling_residual <= 1e-6);
}

TEST_CASE("three-variable allocation matches a finer grid search") {
    // directed 3-cycle with narrow rate ranges so the exhaustive grid stays fine
    SpreadingNetwork net(3, 2.0);
    const double ubar = 0.5;
    for (auto [f, t] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{2, 0}}) {
        EdgeParam e;
        e.from = f;
        e.to = t;
        e.beta_upper = 0.6;
        e.beta_lower = 0.6 * std::exp(-ubar);
        net.add_edge(e);
    }
    Eigen::Vector3d costs(1.0, 0.6, 0.3);
    for (int i = 0; i < 3; ++i) {
        net.node(i).delta_lower = net.node(i).delta_upper = 1.0;
        net.node(i).cost = costs[i];
    }
    const double rbar = 1.0;
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = rbar;
    prob.budgets = Budgets::from_values(1.5 * ubar, 0, 0, 0);
    AllocationResult res = solve_allocation(assemble_problem(prob));
    REQUIRE(res.status == SolveStatus::Optimal);

    // oracle: dense 3x3 solve of (rI - A)' p = C on a 400^3 grid
    const double step = ubar / 400.0;
    double best = std::numeric_limits<double>::infinity();
    Eigen::Matrix3d M;
    for (double u0 = 0.0; u0 <= ubar + 1e-12; u0 += step) {
        for (double u1 = 0.0; u1 <= ubar + 1e-12; u1 += step) {
            const double rest = prob.budgets.beta - u0 - u1;
            if (rest < 0.0) break;
            for (double u2 = 0.0; u2 <= std::min(ubar, rest) + 1e-12; u2 += step) {
                const double b01 = 0.6 * std::exp(-u0);  // 0 -> 1
                const double b12 = 0.6 * std::exp(-u1);  // 1 -> 2
                const double b20 = 0.6 * std::exp(-u2);  // 2 -> 0
                M << rbar + 1.0, -b01, 0.0,
                     0.0, rbar + 1.0, -b12,
                     -b20, 0.0, rbar + 1.0;
                const Eigen::Vector3d p = M.partialPivLu().solve(costs);
                best = std::min(best, std::log(p.maxCoeff()));
            }
        }
    }
    CHECK(res.objective == doctest::Approx(best).epsilon(1e-3));
}

TEST_CASE("budget monotonicity: larger budgets never hurt") {
    for (std::uint64_t seed : {5ULL, 6ULL, 7ULL, 8ULL, 9ULL}) {
        SpreadingNetwork net = testhelp::random_network(8, seed);
        const double rbar = testhelp::stable_rate(net, seed, 0.3, 0.8);
        double prev = std::numeric_limits<double>::infinity();
        for (double gamma : {0.0, 0.5, 1.0, 2.0}) {
            AllocationProblem prob;
            prob.network = &net;
            prob.variant = AllocationVariant::MinMaxRisk;
            prob.rate_bound = rbar;
            prob.budgets = Budgets::from_values(gamma, 0, gamma, 0);
            AllocationResult res = solve_allocation(assemble_problem(prob));
            REQUIRE(res.status == SolveStatus::Optimal);
            CHECK(res.objective <= prev + 1e-6);
            prev = res.objective;
        }
    }
}

TEST_CASE("every solver output satisfies the inverse-transformed coupling constraint") {
    for (std::uint64_t seed : {13ULL, 14ULL}) {
        SpreadingNetwork net = testhelp::random_network(10, seed);
        const double rbar = testhelp::stable_rate(net, seed, 0.3, 0.8);
        AllocationProblem prob;
        prob.network = &net;
        prob.variant = AllocationVariant::MinMaxRisk;
        prob.rate_bound = rbar;
        prob.budgets = Budgets::from_values(1.0, 1.0, 1.0, 1.0);
        AllocationResult res = solve_allocation(assemble_problem(prob));
        REQUIRE(res.status == SolveStatus::Optimal);
        CHECK(res.max_coupling_residual <= 1e-6);
        CHECK(res.max_bound_violation <= 1e-6);
        CHECK(res.max_budget_violation <= 1e-6);
        // natural-units restatement of the same guarantee
        SystemMatrix m = build_system_matrix(net, res.optimal.beta, res.optimal.delta);
        Eigen::VectorXd lhs =
            m.A.transpose() * res.optimal.p - res.optimal.r * res.optimal.p + node_costs(net);
        for (int j = 0; j < net.size(); ++j) {
            const double scale =
                res.optimal.p[j] * (net.delta_ceiling() + res.optimal.r);
            CHECK(lhs[j] <= 1e-6 * (1.0 + scale));
        }
    }
}

TEST_CASE("infeasible baseline raises with the abscissa") {
    SpreadingNetwork net = two_node_both_ways();
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = 1e-4;  // abscissa of the zero-resource matrix is -0.5
    // make it genuinely infeasible: strengthen spreading
    for (int e = 0; e < net.edge_count(); ++e) net.edge_mutable(e).beta_upper = 3.0;
    CHECK_THROWS_AS(assemble_problem(prob), InfeasibleError);
}

TEST_CASE("known-outbreak variant minimizes the seeded impact") {
    SpreadingNetwork net = two_node_both_ways();
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::KnownOutbreakRisk;
    prob.rate_bound = 1.0;
    prob.budgets = Budgets::from_values(2.0, 0, 0, 0);
    prob.known_x0 = Eigen::VectorXd::Zero(2);
    prob.known_x0[0] = 1.0;
    AllocationResult res = solve_allocation(assemble_problem(prob));
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(std::log(res.optimal.p[0])).epsilon(1e-5));

    SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
    const double baseline_p0 = compute_cost_to_go(m, node_costs(net), 1.0).p[0];
    CHECK(res.optimal.p[0] < baseline_p0);
}

TEST_CASE("risk-cap variant meets the cap with minimal spending") {
    // the seed's own cost must not dominate its impact, or no spreading-rate
    // allocation could ever halve it (p_0 >= c_0 / (r + delta) regardless)
    SpreadingNetwork net = two_node_both_ways();
    net.node(0).cost = 0.05;
    SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
    const double baseline_p0 = compute_cost_to_go(m, node_costs(net), 1.0).p[0];

    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinResourcesRiskCap;
    prob.rate_bound = 1.0;
    prob.budgets = Budgets::from_values(std::numeric_limits<double>::infinity(), 0, 0, 0);
    prob.known_x0 = Eigen::VectorXd::Zero(2);
    prob.known_x0[0] = 1.0;
    prob.risk_cap = Eigen::VectorXd::Constant(1, 0.5 * baseline_p0);
    AllocationResult res = solve_allocation(assemble_problem(prob));
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.optimal.p[0] <= 0.5 * baseline_p0 * (1.0 + 1e-6));
    CHECK(res.optimal.p[0] >= 0.5 * baseline_p0 * (1.0 - 1e-3));  // cap binds
    CHECK(res.transformed.u.sum() > 1e-3);                        // something was spent
    CHECK_THROWS_AS(
        [&] {
            AllocationProblem bad = prob;
            bad.risk_cap.resize(0);
            assemble_problem(bad);
        }(),
        ValidationError);
}

TEST_CASE("vaccination coupling: zero budget keeps the baseline") {
    SpreadingNetwork net = seven_node_example();
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = seven_node_rate_bound();
    prob.budgets = Budgets::from_values(0, 0, 0, 0);
    std::vector<VaccinationGroup> groups;
    for (int i = 0; i < 7; ++i) groups.push_back({i});
    AllocationResult res = solve_allocation(apply_vaccination_coupling(prob, groups));
    REQUIRE(res.status == SolveStatus::Optimal);
    for (double s : res.vaccination) CHECK(s == 0.0);  // pinned, never created

    AllocationResult plain = solve_allocation(assemble_problem(prob));
    CHECK(res.objective == doctest::Approx(plain.objective).epsilon(1e-6));
}

TEST_CASE("vaccination coupling: missing node is rejected") {
    SpreadingNetwork net = seven_node_example();
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = seven_node_rate_bound();
    prob.budgets = Budgets::from_values(0, 1.0, 0, 0);
    CHECK_THROWS_AS(apply_vaccination_coupling(prob, {{9}}), ValidationError);
}

TEST_CASE("vaccination on a star graph protects the high-cost center first") {
    // center 0 with cost 30, four leaves with high outbreak rates
    SpreadingNetwork net(5, 1.0);
    for (int leaf = 1; leaf < 5; ++leaf) {
        for (auto [f, t] : {std::pair{0, leaf}, std::pair{leaf, 0}}) {
            EdgeParam e;
            e.from = f;
            e.to = t;
            e.beta_upper = 0.4;
            e.beta_lower = 0.04;
            net.add_edge(e);
        }
    }
    for (int i = 0; i < 5; ++i) {
        NodeParam& nd = net.node(i);
        nd.cost = i == 0 ? 30.0 : 1.0;
        nd.delta_lower = 0.3;
        nd.delta_upper = 0.8;
        nd.lambda_upper = i == 0 ? 0.05 : 1.0;
        nd.lambda_lower = 0.01 * nd.lambda_upper;
    }
    const double rbar = 1.2;
    const double gamma = 2.0;

    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = rbar;
    prob.budgets = Budgets::from_values(0, gamma, 0, 0);
    std::vector<VaccinationGroup> groups;
    for (int i = 0; i < 5; ++i) groups.push_back({i});
    AllocationModel model = apply_vaccination_coupling(prob, groups);
    AllocationResult res = solve_allocation(model);
    REQUIRE(res.status == SolveStatus::Optimal);

    // oracle: enumerate full-budget single-node vaccinations
    const TransformedBounds tb = transformed_bounds(net);
    int oracle_best = -1;
    double oracle_risk = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 5; ++i) {
        double cap = tb.v_max[i] / net.node(i).weight_delta;
        double kappa = net.node(i).weight_delta;
        for (int e : net.edges_into(i)) {
            cap = std::min(cap, tb.u_max[e] / net.edge(e).weight);
            kappa += net.edge(e).weight;
        }
        const double s = std::min(cap, gamma / kappa);
        Eigen::VectorXd beta = beta_upper(net), delta = delta_lower(net);
        for (int e : net.edges_into(i)) beta[e] *= std::exp(-s);
        delta[i] = net.delta_ceiling() -
                   (net.delta_ceiling() - net.node(i).delta_lower) * std::exp(-s);
        SystemMatrix m = build_system_matrix(net, beta, delta);
        Eigen::VectorXd p = compute_cost_to_go(m, node_costs(net), rbar).p;
        const double risk =
            (p.array() * lambda_upper(net).array() * tau_upper(net).array()).maxCoeff();
        if (risk < oracle_risk) {
            oracle_risk = risk;
            oracle_best = i;
        }
    }
    CHECK(oracle_best == 0);  // the center, by construction
    Eigen::Index top = 0;
    double top_val = -1.0;
    for (size_t g = 0; g < res.vaccination.size(); ++g) {
        if (res.vaccination[g] > top_val) {
            top_val = res.vaccination[g];
            top = static_cast<Eigen::Index>(g);
        }
    }
    CHECK(model.spec.vaccination[top].node == oracle_best);
}

TEST_CASE("seven-node: top spreading allocation is the bridge into the caretaker chain") {
    SpreadingNetwork net = seven_node_example();
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = seven_node_rate_bound();
    prob.budgets = Budgets::from_values(1.0, 0, 0, 0);
    AllocationResult res = solve_allocation(assemble_problem(prob));
    REQUIRE(res.status == SolveStatus::Optimal);
    const int bridge = net.edge_index(0, 5);
    CHECK(res.transformed.u[bridge] / res.transformed.u.sum() >= 0.5);

    AllocationProblem sp = prob;
    sp.variant = AllocationVariant::MinSpectralBound;
    AllocationResult spectral = solve_allocation(assemble_problem(sp));
    REQUIRE(spectral.status == SolveStatus::Optimal);
    Eigen::Index top;
    spectral.transformed.u.maxCoeff(&top);
    CHECK(static_cast<int>(top) != bridge);

    // spectral dominance under equal budgets
    SystemMatrix Am = build_system_matrix(net, res.optimal.beta, res.optimal.delta);
    SystemMatrix As = build_system_matrix(net, spectral.optimal.beta, spectral.optimal.delta);
    CHECK(spectral_abscissa(As) <= spectral_abscissa(Am) + 1e-6);
}

TEST_CASE("seven-node vaccination: caretaker and source selected, patient spared") {
    SpreadingNetwork net = seven_node_example();
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = seven_node_rate_bound();
    prob.budgets = Budgets::from_values(0, 2.0, 0, 0);
    std::vector<VaccinationGroup> groups;
    for (int i = 0; i < 7; ++i) groups.push_back({i});
    AllocationModel model = apply_vaccination_coupling(prob, groups);
    AllocationResult res = solve_allocation(model);
    REQUIRE(res.status == SolveStatus::Optimal);
    REQUIRE(res.vaccination.size() == 7);
    std::vector<size_t> order(7);
    for (size_t i = 0; i < 7; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return res.vaccination[a] > res.vaccination[b]; });
    // nodes 1 and 6 in the paper's 1-based ids
    CHECK(((order[0] == 0 && order[1] == 5) || (order[0] == 5 && order[1] == 0)));
    CHECK(res.vaccination[6] <= 1e-6);  // the patient is not vaccinated
}

TEST_CASE("inert nodes are excluded exactly") {
    // node 2 has zero cost and no outgoing edges: p_2 = 0 identically
    SpreadingNetwork net(3, 2.0);
    for (auto [f, t] : {std::pair{0, 1}, std::pair{1, 0}, std::pair{0, 2}}) {
        EdgeParam e;
        e.from = f;
        e.to = t;
        e.beta_upper = 0.4;
        e.beta_lower = 0.04;
        net.add_edge(e);
    }
    net.node(2).cost = 0.0;
    AllocationProblem prob;
    prob.network = &net;
    prob.variant = AllocationVariant::MinMaxRisk;
    prob.rate_bound = 1.0;
    prob.budgets = Budgets::from_values(0.5, 0, 0, 0);
    AllocationModel model = assemble_problem(prob);
    CHECK_FALSE(model.active[2]);
    AllocationResult res = solve_allocation(model);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.optimal.p[2] == 0.0);
    // the edge into the inert node gets no allocation
    CHECK(res.transformed.u[net.edge_index(0, 2)] == 0.0);
}
