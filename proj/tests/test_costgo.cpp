#include "spreadrisk/costgo.hpp"

#include "spreadrisk/errors.hpp"
#include "spreadrisk/scenario.hpp"
#include "spreadrisk/simulate.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace spreadrisk;

namespace {

SpreadingNetwork two_node_chain() {
    SpreadingNetwork net(2, 2.0);
    EdgeParam e;
    e.from = 0;
    e.to = 1;
    e.beta_lower = 0.005;
    e.beta_upper = 0.5;
    net.add_edge(e);
    return net;
}

SpreadingNetwork bidirectional_cycle(int n, double beta) {
    SpreadingNetwork net(n, 2.0);
    for (int i = 0; i < n; ++i) {
        for (int d : {1, n - 1}) {
            EdgeParam e;
            e.from = i;
            e.to = (i + d) % n;
            e.beta_lower = 0.01 * beta;
            e.beta_upper = beta;
            net.add_edge(e);
        }
    }
    return net;
}

}  // namespace

TEST_CASE("cost-to-go: scalar formula c/(r+delta)") {
    SpreadingNetwork net(1, 2.0);
    SystemMatrix m = build_system_matrix(net, Eigen::VectorXd(0), Eigen::VectorXd::Ones(1));
    CostToGo ctg = compute_cost_to_go(m, Eigen::VectorXd::Ones(1), 1.0);
    CHECK(ctg.p[0] == doctest::Approx(0.5).epsilon(1e-12));
    CostToGo lp = cost_to_go_lp_check(m, Eigen::VectorXd::Ones(1), 1.0);
    CHECK(lp.p[0] == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("cost-to-go: frozen 2x2 oracle") {
    // (rI - A)' p = C solved by hand for A = [[-1,0],[0.5,-1]], C = 1, r = 1:
    // p2 = 0.5, p1 = (1 + 0.25) / 2 = 0.625
    SpreadingNetwork net = two_node_chain();
    SystemMatrix m = build_system_matrix(net, beta_upper(net), Eigen::VectorXd::Ones(2));
    CostToGo ctg = compute_cost_to_go(m, Eigen::VectorXd::Ones(2), 1.0);
    CHECK(ctg.p[0] == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(ctg.p[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(ctg.residual) <= 1e-8 * 2.0);
}

TEST_CASE("cost-to-go: zero cost gives zero impact") {
    SpreadingNetwork net = two_node_chain();
    SystemMatrix m = build_system_matrix(net, beta_upper(net), Eigen::VectorXd::Ones(2));
    CostToGo ctg = compute_cost_to_go(m, Eigen::VectorXd::Zero(2), 1.0);
    CHECK(ctg.p.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
}

TEST_CASE("cost-to-go: direct solve and LP agree on random stable instances") {
    for (std::uint64_t seed : {10ULL, 11ULL, 12ULL}) {
        SpreadingNetwork net = testhelp::random_network(20, seed);
        SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
        const double r = testhelp::stable_rate(net, seed);
        CostToGo direct = compute_cost_to_go(m, node_costs(net), r);
        CostToGo lp = cost_to_go_lp_check(m, node_costs(net), r);
        for (int i = 0; i < net.size(); ++i) {
            CHECK(std::abs(lp.p[i] - direct.p[i]) <= 1e-6 * std::max(1.0, direct.p[i]));
        }
    }
}

TEST_CASE("cost-to-go: infeasible below the spectral abscissa") {
    SpreadingNetwork net = bidirectional_cycle(4, 0.5);
    SystemMatrix m = build_system_matrix(net, beta_upper(net), Eigen::VectorXd::Ones(4));
    // circulant oracle: abscissa = 2 * 0.5 - 1 = 0
    CHECK(spectral_abscissa(m) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK_THROWS_AS(compute_cost_to_go(m, Eigen::VectorXd::Ones(4), -0.5), InfeasibleError);
    CHECK_THROWS_AS(cost_to_go_lp_check(m, Eigen::VectorXd::Ones(4), -0.01), InfeasibleError);
    try {
        compute_cost_to_go(m, Eigen::VectorXd::Ones(4), -0.5);
    } catch (const InfeasibleError& e) {
        CHECK(e.spectral_abscissa == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("spectral abscissa: diagonal matrix") {
    SpreadingNetwork net(3, 3.0);
    net.node(0).delta_lower = net.node(0).delta_upper = 0.4;
    net.node(1).delta_lower = net.node(1).delta_upper = 1.0;
    net.node(2).delta_lower = net.node(2).delta_upper = 2.0;
    SystemMatrix m = build_system_matrix(net, Eigen::VectorXd(0), delta_lower(net));
    CHECK(spectral_abscissa(m) == doctest::Approx(-0.4).epsilon(1e-12));
}

TEST_CASE("spectral abscissa: power iteration matches the dense solver above n=200") {
    SpreadingNetwork net = testhelp::random_network(260, 77, 0.02);
    SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
    const double via_power = spectral_abscissa(m);  // n > 200 takes the power path
    Eigen::MatrixXd dense(m.A);
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense, false);
    const double via_dense = es.eigenvalues().real().maxCoeff();
    CHECK(via_power == doctest::Approx(via_dense).epsilon(1e-7));
}

TEST_CASE("check_feasibility boundary") {
    SpreadingNetwork net(1, 2.0);
    SystemMatrix m = build_system_matrix(net, Eigen::VectorXd(0), Eigen::VectorXd::Ones(1));
    auto fc = check_feasibility(m, 0.5);
    CHECK(fc.feasible);
    CHECK(fc.abscissa == doctest::Approx(-1.0));

    SpreadingNetwork cyc = bidirectional_cycle(4, 0.5);
    SystemMatrix mc = build_system_matrix(cyc, beta_upper(cyc), Eigen::VectorXd::Ones(4));
    CHECK_FALSE(check_feasibility(mc, 0.0).feasible);
    // slightly above the abscissa the solve succeeds
    CHECK(check_feasibility(mc, 1e-4).feasible);
    CHECK_NOTHROW(compute_cost_to_go(mc, Eigen::VectorXd::Ones(4), 1e-4));
}

TEST_CASE("removal cost vector equals delta and matches the scalar integral") {
    SpreadingNetwork net(1, 2.5);
    net.node(0).delta_lower = net.node(0).delta_upper = 1.0;
    Eigen::VectorXd delta = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd c = removal_cost_vector(net, delta);
    CHECK(c[0] == 1.0);
    // r = 0: p = delta/(r+delta) = 1, the total removal probability
    SystemMatrix m = build_system_matrix(net, Eigen::VectorXd(0), delta);
    CostToGo ctg = compute_cost_to_go(m, c, 0.0);
    CHECK(ctg.p[0] == doctest::Approx(1.0).epsilon(1e-12));

    SpreadingNetwork het(3, 4.0);
    Eigen::VectorXd dh(3);
    dh << 0.5, 1.0, 1.5;
    for (int i = 0; i < 3; ++i) het.node(i).delta_lower = het.node(i).delta_upper = dh[i];
    Eigen::VectorXd ch = removal_cost_vector(het, dh);
    CHECK((ch - dh).lpNorm<Eigen::Infinity>() == 0.0);

    Eigen::VectorXd bad(3);
    bad << 0.5, 1.0, 3.9;  // above delta_upper
    CHECK_THROWS_AS(removal_cost_vector(het, bad), BoundsError);
}

TEST_CASE("cost-to-go monotonicity in costs and discount rate") {
    SpreadingNetwork net = testhelp::random_network(12, 21);
    SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
    const double r = testhelp::stable_rate(net, 21);
    Eigen::VectorXd c = node_costs(net);
    CostToGo base = compute_cost_to_go(m, c, r);

    Eigen::VectorXd c2 = c;
    c2[3] += 0.5;
    CostToGo up = compute_cost_to_go(m, c2, r);
    for (int i = 0; i < net.size(); ++i) CHECK(up.p[i] >= base.p[i] - 1e-12);

    CostToGo less = compute_cost_to_go(m, c, r + 0.5);
    for (int i = 0; i < net.size(); ++i) CHECK(less.p[i] <= base.p[i] + 1e-12);
}

TEST_CASE("cost-to-go equals the discounted quadrature of the linear model") {
    std::mt19937_64 eng(314);
    for (std::uint64_t seed : {31ULL, 32ULL}) {
        SpreadingNetwork net = testhelp::random_network(8, seed);
        SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
        // decay rate r - abscissa must cover the 20/r horizon
        const double alpha = spectral_abscissa(m);
        const double r = std::max(alpha + 0.5, 2.0 * alpha + 0.5);
        Eigen::VectorXd c = node_costs(net);
        CostToGo ctg = compute_cost_to_go(m, c, r);
        Eigen::VectorXd x0(net.size());
        for (int i = 0; i < net.size(); ++i) x0[i] = testhelp::uniform(eng, 0.0, 1.0);
        const double horizon = 20.0 / r;
        SimulationTrace tr = integrate_linear(m, x0, horizon, horizon / 8000.0);
        const double quad = discounted_cost(tr, c, r).value;
        const double expect = ctg.p.dot(x0);
        CHECK(quad == doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("minimum discount rate is consistent with the abscissa on the 16-node example") {
    // reconstruction self-consistency: the feasibility boundary of the
    // heterogeneous-outbreak variant sits at its own spectral abscissa
    SpreadingNetwork net = sixteen_node_example(SixteenNodeVariant::HeterogeneousOutbreak);
    SystemMatrix m = build_system_matrix(net, beta_upper(net), delta_lower(net));
    const double alpha = spectral_abscissa(m);
    CHECK_NOTHROW(compute_cost_to_go(m, node_costs(net), alpha + 1e-3));
    CHECK_THROWS_AS(compute_cost_to_go(m, node_costs(net), alpha - 1e-3), InfeasibleError);
}
