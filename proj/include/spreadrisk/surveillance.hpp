#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace spreadrisk {

/// Per-node risk R_i = p_i * lambda_i * tau_i (impact x outbreak likelihood
/// x undetected-exposure window) plus the global maximum.
struct RiskAssessment {
    Eigen::VectorXd impact;    // p
    Eigen::VectorXd lambda;    // outbreak rates
    Eigen::VectorXd tau;       // revisit intervals
    Eigen::VectorXd risk;      // elementwise product
    int argmax = -1;
    double max_risk = 0.0;
};

struct SurveillanceConfig {
    double risk_budget = 1.0;      // R_max
    double epsilon_risk = 0.0;     // residual risk at visit time
};

/// Default epsilon: 1e-6 * R_max, keeping intervals finite for lambda = 0.
SurveillanceConfig make_surveillance_config(double risk_budget);

RiskAssessment risk_map(const Eigen::VectorXd& impact, const Eigen::VectorXd& lambda,
                        const Eigen::VectorXd& tau);

/// Largest revisit interval per node keeping risk under the budget:
/// tau_i = R_max / (p_i lambda_i + eps_R).
Eigen::VectorXd max_revisit_intervals(const Eigen::VectorXd& impact, const Eigen::VectorXd& lambda,
                                      const SurveillanceConfig& cfg);

struct OutbreakProbability {
    double exact = 0.0;         // 1 - e^{-lambda t}
    double linear_bound = 0.0;  // lambda t, exact <= linear_bound always
};

OutbreakProbability outbreak_probability(double lambda, double t);

/// Per-node sorted visit times over [0, horizon].
struct VisitSchedule {
    std::vector<std::vector<double>> visits;
    double horizon = 0.0;
};

struct ScheduleViolation {
    int node = -1;
    double gap_start = 0.0;
    double gap_end = 0.0;
    double gap = 0.0;
    double tau_allowed = 0.0;
};

/// Flags every inter-visit gap above the maximum revisit interval, including the
/// 0 -> first visit and last visit -> horizon gaps (an unvisited node must
/// fail the audit). Empty result certifies R_i <= R_max throughout.
std::vector<ScheduleViolation> audit_schedule(const VisitSchedule& schedule,
                                              const Eigen::VectorXd& impact,
                                              const Eigen::VectorXd& lambda,
                                              const SurveillanceConfig& cfg);

/// Periodic schedule visiting node i at tau_i, 2 tau_i, ... up to the horizon.
VisitSchedule make_periodic_schedule(const Eigen::VectorXd& tau, double horizon);

/// Round-robin over all nodes with per-visit spacing `slot`: lawnmower
/// comparison arm.
VisitSchedule make_lawnmower_schedule(int node_count, double slot, double horizon);

/// Deficit round-robin targeting per-node intervals tau_i at the same visit
/// capacity (one visit per `slot`): revisit-proportional comparison arm.
VisitSchedule make_proportional_schedule(const Eigen::VectorXd& tau, double slot, double horizon);

/// CSV export: node,p,lambda,tau_max,revisit_rate,risk (12 significant digits).
std::string revisit_csv(const Eigen::VectorXd& impact, const Eigen::VectorXd& lambda,
                        const SurveillanceConfig& cfg);

}  // namespace spreadrisk
