#include "spreadrisk/surveillance.hpp"

#include "spreadrisk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace spreadrisk {

SurveillanceConfig make_surveillance_config(double risk_budget) {
    if (!(risk_budget > 0.0)) throw ValidationError("risk budget R_max must be > 0");
    SurveillanceConfig cfg;
    cfg.risk_budget = risk_budget;
    cfg.epsilon_risk = 1e-6 * risk_budget;
    return cfg;
}

RiskAssessment risk_map(const Eigen::VectorXd& impact, const Eigen::VectorXd& lambda,
                        const Eigen::VectorXd& tau) {
    const auto n = impact.size();
    if (lambda.size() != n || tau.size() != n) {
        throw ValidationError("risk_map: impact, lambda and tau must have the same length");
    }
    if (n == 0) throw ValidationError("risk_map: empty input");
    if (impact.minCoeff() < 0.0 || lambda.minCoeff() < 0.0 || tau.minCoeff() < 0.0) {
        throw ValidationError("risk_map: inputs must be nonnegative");
    }
    RiskAssessment out;
    out.impact = impact;
    out.lambda = lambda;
    out.tau = tau;
    out.risk = impact.cwiseProduct(lambda).cwiseProduct(tau);
    Eigen::Index arg;
    out.max_risk = out.risk.maxCoeff(&arg);
    out.argmax = static_cast<int>(arg);
    return out;
}

Eigen::VectorXd max_revisit_intervals(const Eigen::VectorXd& impact, const Eigen::VectorXd& lambda,
                                      const SurveillanceConfig& cfg) {
    const auto n = impact.size();
    if (lambda.size() != n) throw ValidationError("max_revisit_intervals: length mismatch");
    if (!(cfg.risk_budget > 0.0) || cfg.epsilon_risk < 0.0) {
        throw ValidationError("max_revisit_intervals: need R_max > 0 and eps_R >= 0");
    }
    Eigen::VectorXd tau(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double denom = impact[i] * lambda[i] + cfg.epsilon_risk;
        if (!(denom > 0.0)) {
            std::ostringstream os;
            os << "node " << i << ": p*lambda + eps_R is zero; choose eps_R > 0 to keep the "
               << "revisit interval finite";
            throw ValidationError(os.str());
        }
        tau[i] = cfg.risk_budget / denom;
    }
    return tau;
}

OutbreakProbability outbreak_probability(double lambda, double t) {
    if (lambda < 0.0 || t < 0.0) throw ValidationError("outbreak_probability: lambda, t must be >= 0");
    OutbreakProbability out;
    out.exact = -std::expm1(-lambda * t);
    out.linear_bound = lambda * t;
    return out;
}

std::vector<ScheduleViolation> audit_schedule(const VisitSchedule& schedule,
                                              const Eigen::VectorXd& impact,
                                              const Eigen::VectorXd& lambda,
                                              const SurveillanceConfig& cfg) {
    const auto n = impact.size();
    if (static_cast<Eigen::Index>(schedule.visits.size()) != n) {
        throw ValidationError("audit_schedule: schedule covers a different node count");
    }
    const Eigen::VectorXd tau = max_revisit_intervals(impact, lambda, cfg);

    std::vector<ScheduleViolation> out;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& vis = schedule.visits[i];
        double prev = 0.0;
        for (size_t k = 0; k < vis.size(); ++k) {
            if (k > 0 && vis[k] < vis[k - 1]) {
                std::ostringstream os;
                os << "audit_schedule: node " << i << " visit times are not sorted";
                throw ValidationError(os.str());
            }
            if (vis[k] < 0.0 || vis[k] > schedule.horizon + 1e-12) {
                std::ostringstream os;
                os << "audit_schedule: node " << i << " visit outside [0, horizon]";
                throw ValidationError(os.str());
            }
        }
        auto check_gap = [&](double from, double to) {
            const double gap = to - from;
            if (gap > tau[i] * (1.0 + 1e-9)) {
                out.push_back({static_cast<int>(i), from, to, gap, tau[i]});
            }
        };
        for (double v : vis) {
            check_gap(prev, v);
            prev = v;
        }
        check_gap(prev, schedule.horizon);
    }
    return out;
}

VisitSchedule make_periodic_schedule(const Eigen::VectorXd& tau, double horizon) {
    VisitSchedule s;
    s.horizon = horizon;
    s.visits.resize(tau.size());
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
        for (double t = tau[i]; t <= horizon + 1e-12; t += tau[i]) s.visits[i].push_back(t);
    }
    return s;
}

VisitSchedule make_lawnmower_schedule(int node_count, double slot, double horizon) {
    VisitSchedule s;
    s.horizon = horizon;
    s.visits.resize(node_count);
    int node = 0;
    for (double t = slot; t <= horizon + 1e-12; t += slot) {
        s.visits[node].push_back(t);
        node = (node + 1) % node_count;
    }
    return s;
}

VisitSchedule make_proportional_schedule(const Eigen::VectorXd& tau, double slot, double horizon) {
    VisitSchedule s;
    s.horizon = horizon;
    const int n = static_cast<int>(tau.size());
    s.visits.resize(n);
    // earliest-deadline-first with a one-slot safety margin; initial deadlines
    // staggered across each node's own interval so equal targets do not collide
    std::vector<double> deadline(n);
    for (int i = 0; i < n; ++i) {
        deadline[i] = std::max(slot, tau[i] * (1.0 - 0.5 * (i % n) / std::max(1, n)) - slot);
    }
    for (double t = slot; t <= horizon + 1e-12; t += slot) {
        int pick = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (deadline[i] < best) {
                best = deadline[i];
                pick = i;
            }
        }
        s.visits[pick].push_back(t);
        deadline[pick] = t + tau[pick] - slot;
    }
    return s;
}

std::string revisit_csv(const Eigen::VectorXd& impact, const Eigen::VectorXd& lambda,
                        const SurveillanceConfig& cfg) {
    const Eigen::VectorXd tau = max_revisit_intervals(impact, lambda, cfg);
    std::string out = "node,p,lambda,tau_max,revisit_rate,risk\n";
    char buf[256];
    for (Eigen::Index i = 0; i < impact.size(); ++i) {
        const double risk = impact[i] * lambda[i] * tau[i];
        std::snprintf(buf, sizeof(buf), "%lld,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      static_cast<long long>(i), impact[i], lambda[i], tau[i], 1.0 / tau[i], risk);
        out += buf;
    }
    return out;
}

}  // namespace spreadrisk
