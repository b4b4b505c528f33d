#include "spreadrisk/surveillance.hpp"

#include "spreadrisk/errors.hpp"

#include <doctest.h>

#include <random>

using namespace spreadrisk;

namespace {
Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return x;
}
}  // namespace

TEST_CASE("risk map is the componentwise product") {
    RiskAssessment r = risk_map(vec({0.5}), vec({1.0}), vec({1.0}));
    CHECK(r.risk[0] == doctest::Approx(0.5));
    CHECK(r.max_risk == doctest::Approx(0.5));
    CHECK(r.argmax == 0);

    RiskAssessment r2 = risk_map(vec({2.0, 3.0}), vec({0.0, 1.0}), vec({5.0, 0.25}));
    CHECK(r2.risk[0] == 0.0);  // lambda = 0 kills the risk
    CHECK(r2.risk[1] == doctest::Approx(0.75));
    CHECK(r2.argmax == 1);

    CHECK_THROWS_AS(risk_map(vec({1.0}), vec({1.0, 2.0}), vec({1.0})), ValidationError);
}

TEST_CASE("maximum revisit intervals follow R_max / (p lambda + eps)") {
    SurveillanceConfig cfg{1.0, 0.0};
    Eigen::VectorXd tau = max_revisit_intervals(vec({2.0}), vec({0.5}), cfg);
    CHECK(tau[0] == doctest::Approx(1.0));

    SurveillanceConfig floor_cfg{1.0, 0.01};
    tau = max_revisit_intervals(vec({1.0}), vec({0.0}), floor_cfg);
    CHECK(tau[0] == doctest::Approx(100.0));

    // two-node instance from the cost-to-go oracle example
    SurveillanceConfig half{0.5, 0.0};
    tau = max_revisit_intervals(vec({0.625, 0.5}), vec({1.0, 1.0}), half);
    CHECK(tau[0] == doctest::Approx(0.8));
    CHECK(tau[1] == doctest::Approx(1.0));

    CHECK_THROWS_AS(max_revisit_intervals(vec({1.0}), vec({0.0}), cfg), ValidationError);
}

TEST_CASE("default surveillance config keeps intervals finite") {
    SurveillanceConfig cfg = make_surveillance_config(2.0);
    CHECK(cfg.epsilon_risk == doctest::Approx(2e-6));
    Eigen::VectorXd tau = max_revisit_intervals(vec({1.0}), vec({0.0}), cfg);
    CHECK(std::isfinite(tau[0]));
}

TEST_CASE("doubling the budget doubles every interval when eps is zero") {
    std::mt19937_64 eng(5);
    Eigen::VectorXd p(6), lam(6);
    for (int i = 0; i < 6; ++i) {
        p[i] = 0.1 + static_cast<double>(eng() % 100) / 50.0;
        lam[i] = 0.1 + static_cast<double>(eng() % 100) / 80.0;
    }
    SurveillanceConfig one{1.0, 0.0}, two{2.0, 0.0};
    Eigen::VectorXd t1 = max_revisit_intervals(p, lam, one);
    Eigen::VectorXd t2 = max_revisit_intervals(p, lam, two);
    for (int i = 0; i < 6; ++i) CHECK(t2[i] == doctest::Approx(2.0 * t1[i]).epsilon(1e-12));
}

TEST_CASE("outbreak probability: exact value and linear bound") {
    auto z = outbreak_probability(0.0, 5.0);
    CHECK(z.exact == 0.0);
    CHECK(z.linear_bound == 0.0);

    auto one = outbreak_probability(1.0, 1.0);
    CHECK(one.exact == doctest::Approx(0.6321205588285577).epsilon(1e-12));
    CHECK(one.linear_bound == doctest::Approx(1.0));
    CHECK(one.exact <= one.linear_bound);

    // small-interval tightness: bound within 1% for lambda t = 0.02
    auto tight = outbreak_probability(2.0, 0.01);
    CHECK((tight.linear_bound - tight.exact) / tight.linear_bound <= 0.01);

    std::mt19937_64 eng(9);
    for (int k = 0; k < 1000; ++k) {
        const double lam = static_cast<double>(eng() % 10000) / 1000.0;
        const double t = static_cast<double>(eng() % 10000) / 1000.0;
        auto pr = outbreak_probability(lam, t);
        CHECK(pr.exact <= pr.linear_bound + 1e-15);
    }
}

TEST_CASE("audit: visits at exact multiples of tau pass") {
    Eigen::VectorXd p = vec({2.0}), lam = vec({0.5});
    SurveillanceConfig cfg{1.0, 0.0};  // tau = 1
    VisitSchedule s = make_periodic_schedule(max_revisit_intervals(p, lam, cfg), 10.0);
    CHECK(audit_schedule(s, p, lam, cfg).empty());
}

TEST_CASE("audit: a single stretched gap is reported once with the node") {
    Eigen::VectorXd p = vec({2.0, 2.0}), lam = vec({0.5, 0.5});
    SurveillanceConfig cfg{1.0, 0.0};  // tau = 1 for both
    VisitSchedule s;
    s.horizon = 4.0;
    s.visits = {{1.0, 2.0, 3.0, 4.0}, {1.0, 2.01, 3.0, 4.0}};  // node 1 has one 1.01 tau gap
    auto v = audit_schedule(s, p, lam, cfg);
    REQUIRE(v.size() == 1);
    CHECK(v[0].node == 1);
    CHECK(v[0].gap == doctest::Approx(1.01));
    CHECK(v[0].tau_allowed == doctest::Approx(1.0));
}

TEST_CASE("audit: an unvisited node fails with the horizon as the gap") {
    Eigen::VectorXd p = vec({2.0}), lam = vec({0.5});
    SurveillanceConfig cfg{1.0, 0.0};
    VisitSchedule s;
    s.horizon = 3.0;
    s.visits = {{}};
    auto v = audit_schedule(s, p, lam, cfg);
    REQUIRE(v.size() == 1);
    CHECK(v[0].gap == doctest::Approx(3.0));
}

TEST_CASE("audit: unsorted visits are an error") {
    Eigen::VectorXd p = vec({2.0}), lam = vec({0.5});
    SurveillanceConfig cfg{1.0, 0.0};
    VisitSchedule s;
    s.horizon = 3.0;
    s.visits = {{2.0, 1.0}};
    CHECK_THROWS_AS(audit_schedule(s, p, lam, cfg), ValidationError);
}

TEST_CASE("proportional schedule meets heterogeneous targets a lawnmower misses") {
    Eigen::VectorXd p = vec({4.0, 0.5, 0.5, 0.5}), lam = vec({1.0 / 2.4, 0.02, 0.02, 0.02});
    SurveillanceConfig cfg{1.0, 0.0};
    Eigen::VectorXd tau = max_revisit_intervals(p, lam, cfg);  // 0.6 vs 100
    const double slot = 0.2;  // lawnmower cycle 0.8 exceeds the tight target
    const double horizon = 50.0;
    VisitSchedule prop = make_proportional_schedule(tau, slot, horizon);
    VisitSchedule lawn = make_lawnmower_schedule(4, slot, horizon);
    CHECK(audit_schedule(prop, p, lam, cfg).empty());
    CHECK_FALSE(audit_schedule(lawn, p, lam, cfg).empty());
}

TEST_CASE("revisit csv carries the expected header and revisit rate") {
    SurveillanceConfig cfg{1.0, 0.0};
    const std::string csv = revisit_csv(vec({2.0}), vec({0.5}), cfg);
    CHECK(csv.rfind("node,p,lambda,tau_max,revisit_rate,risk\n", 0) == 0);
    CHECK(csv.find("0,2,0.5,1,1,1\n") != std::string::npos);
}
