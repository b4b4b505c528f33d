#pragma once

#include "spreadrisk/network.hpp"
#include "spreadrisk/surveillance.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace spreadrisk {

/// Time-stamped states on a fixed grid t_k = k * dt.
/// Stochastic runs store X (infected) and Z (removed) in {0,1}; ODE runs
/// store chi / z in [0,1]. X_i Z_i = 0 and Z is non-decreasing throughout.
struct SimulationTrace {
    bool stochastic = false;
    int n = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<std::uint8_t> X, Z;   // (steps+1) x n row-major, stochastic
    std::vector<double> chi, z;       // (steps+1) x n row-major, ODE
    double max_step_probability = 0.0;

    int steps() const { return static_cast<int>(times.size()) - 1; }
    double infected(int step, int node) const {
        return stochastic ? static_cast<double>(X[static_cast<size_t>(step) * n + node])
                          : chi[static_cast<size_t>(step) * n + node];
    }
    double removed(int step, int node) const {
        return stochastic ? static_cast<double>(Z[static_cast<size_t>(step) * n + node])
                          : z[static_cast<size_t>(step) * n + node];
    }
};

/// Default Euler step: 0.01 / max(max delta, max incoming-rate sum).
double default_step_size(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& delta);

/// Discrete-time sampling of the continuous-time chain: susceptible i becomes
/// infected with probability sum_j beta_ij X_j dt, infected i removes with
/// probability delta_i dt. Per-step probabilities above 1 raise an error;
/// above 0.2 they are recorded in max_step_probability (caller may warn).
SimulationTrace run_stochastic(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& delta, const std::vector<int>& infected0,
                               double horizon, double dt, std::uint64_t seed);

/// RK4 on the coupled mean-field equations
/// chi' = (1 - chi - z) sum_j beta_ij chi_j - delta_i chi_i, z' = delta_i chi_i.
SimulationTrace integrate_meanfield(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                                    const Eigen::VectorXd& delta, const Eigen::VectorXd& chi0,
                                    const Eigen::VectorXd& z0, double horizon, double dt);

/// RK4 on the linear upper bound x' = A x.
SimulationTrace integrate_linear(const SystemMatrix& m, const Eigen::VectorXd& x0, double horizon,
                                 double dt);

struct DiscountedCost {
    double value = 0.0;
    bool tail_warning = false;  // e^{-rT} * integrand at T not yet negligible
};

/// Trapezoid quadrature of int e^{-rt} C . state(t) dt over the trace horizon.
DiscountedCost discounted_cost(const SimulationTrace& trace, const Eigen::VectorXd& costs, double r);

struct MonteCarloStats {
    int runs = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> samples;
};

struct ValidationReport {
    MonteCarloStats stochastic_cost;
    double meanfield_cost = 0.0;
    double linear_cost = 0.0;
    bool stochastic_below_meanfield = false;  // mean <= meanfield + 3 SE
    bool meanfield_below_linear = false;      // meanfield <= linear + 1e-6
};

/// Runs the stochastic model `runs` times (deterministic per-run seeds derived
/// from `seed`), integrates both ODE models from the same initial condition,
/// and checks the cost ordering stochastic <= mean-field <= linear.
ValidationReport monte_carlo_validate(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                                      const Eigen::VectorXd& delta, const std::vector<int>& infected0,
                                      const Eigen::VectorXd& costs, double r, int runs,
                                      std::uint64_t seed, double horizon = 0.0, double dt = 0.0,
                                      int threads = 0);

struct PoissonSample {
    double rate = 0.0;
    double horizon = 0.0;
    std::vector<double> event_times;
    int count_up_to(double t) const;
};

/// Exponential-gap sampling of a Poisson process.
PoissonSample sample_poisson_outbreaks(double lambda, double horizon, std::uint64_t seed);

struct IntervalRiskStats {
    Eigen::VectorXd mean_risk;      // per node: mean over intervals of p_i 1{outbreak}
    Eigen::VectorXd std_error;      // per node
    double max_mean_risk = 0.0;
    long long total_intervals = 0;
};

struct SpreadOutcome {
    double realized_cost = 0.0;   // discounted cost until detection
    double detection_delay = 0.0;
    double warning_time = 0.0;    // detection -> first high-cost node reached
    bool reached_high_cost = false;
    bool detected = false;
};

struct DetectionReport {
    IntervalRiskStats interval_risk;
    // present only when spread simulation was requested
    MonteCarloStats realized_cost;
    std::vector<SpreadOutcome> outcomes;
};

struct SpreadOptions {
    bool simulate_spread = false;
    Eigen::VectorXd beta;          // rates for the spread arm
    Eigen::VectorXd delta;
    Eigen::VectorXd costs;
    double discount_rate = 0.0;
    double dt = 0.0;               // 0 -> default_step_size
    double high_cost_threshold = 0.25;
};

/// Monte Carlo audit of a visit schedule. Outbreaks arrive per node as
/// Poisson processes with the given rates; each inter-visit interval
/// contributes one realized-risk sample p_i 1{>=1 outbreak}. With
/// simulate_spread set, each run additionally seeds the first outbreak,
/// spreads it stochastically until some visit observes a burning/burnt node,
/// and reports discounted cost until detection plus the warning time to the
/// first high-cost node.
DetectionReport detection_experiment(const SpreadingNetwork& net, const Eigen::VectorXd& impact,
                                     const Eigen::VectorXd& lambda, const VisitSchedule& schedule,
                                     int runs, std::uint64_t seed,
                                     const SpreadOptions& opts = SpreadOptions());

}  // namespace spreadrisk
