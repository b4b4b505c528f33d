#include "spreadrisk/simulate.hpp"

#include "spreadrisk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace spreadrisk {

namespace {

// mt19937_64 output mapped to doubles by hand so the stream is fully
// determined by the standard-specified engine, not by library distributions.
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t s) : eng(s) {}
    double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }  // [0,1)
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(seed ^ splitmix64(a ^ splitmix64(b)));
}

int step_count(double horizon, double dt) {
    if (!(dt > 0.0) || !(horizon > 0.0)) throw ValidationError("simulate: need horizon > 0 and dt > 0");
    const double raw = horizon / dt;
    if (raw > 5e7) throw ValidationError("simulate: horizon/dt too large");
    return std::max(1, static_cast<int>(std::ceil(raw - 1e-9)));
}

void check_rates(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                 const Eigen::VectorXd& delta) {
    if (beta.size() != net.edge_count() || delta.size() != net.size()) {
        throw BoundsError("simulate: rate vector sizes do not match the network");
    }
}

}  // namespace

double default_step_size(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                         const Eigen::VectorXd& delta) {
    check_rates(net, beta, delta);
    double max_rate = delta.size() > 0 ? delta.maxCoeff() : 0.0;
    Eigen::VectorXd incoming = Eigen::VectorXd::Zero(net.size());
    for (int e = 0; e < net.edge_count(); ++e) incoming[net.edge(e).to] += beta[e];
    if (net.size() > 0) max_rate = std::max(max_rate, incoming.maxCoeff());
    if (!(max_rate > 0.0)) return 0.01;
    return 0.01 / max_rate;
}

SimulationTrace run_stochastic(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                               const Eigen::VectorXd& delta, const std::vector<int>& infected0,
                               double horizon, double dt, std::uint64_t seed) {
    check_rates(net, beta, delta);
    const int n = net.size();
    const int steps = step_count(horizon, dt);

    SimulationTrace trace;
    trace.stochastic = true;
    trace.n = n;
    trace.dt = dt;
    trace.seed = seed;
    trace.times.resize(steps + 1);
    for (int k = 0; k <= steps; ++k) trace.times[k] = k * dt;
    trace.X.assign(static_cast<size_t>(steps + 1) * n, 0);
    trace.Z.assign(static_cast<size_t>(steps + 1) * n, 0);

    std::vector<std::uint8_t> X(n, 0), Z(n, 0);
    for (int i : infected0) {
        if (i < 0 || i >= n) throw ValidationError("run_stochastic: infected node id out of range");
        X[i] = 1;
    }
    std::copy(X.begin(), X.end(), trace.X.begin());

    Rng rng(seed);
    std::vector<double> pressure(n, 0.0);
    std::vector<int> active;  // nodes with nonzero infection pressure
    active.reserve(n);

    for (int k = 1; k <= steps; ++k) {
        std::fill(pressure.begin(), pressure.end(), 0.0);
        active.clear();
        for (int j = 0; j < n; ++j) {
            if (!X[j]) continue;
            for (int e : net.edges_from(j)) {
                const int i = net.edge(e).to;
                if (X[i] || Z[i]) continue;
                if (pressure[i] == 0.0) active.push_back(i);
                pressure[i] += beta[e];
            }
        }
        std::sort(active.begin(), active.end());

        // infections from the step-start state
        for (int i : active) {
            const double prob = pressure[i] * dt;
            trace.max_step_probability = std::max(trace.max_step_probability, prob);
            if (prob > 1.0) {
                std::ostringstream os;
                os << "run_stochastic: per-step infection probability " << prob
                   << " exceeds 1 at t=" << k * dt << "; reduce dt";
                throw ValidationError(os.str());
            }
            if (rng.uniform() < prob) X[i] = 2;  // mark newly infected; activates next step
        }
        // removals only for nodes infected at step start
        for (int i = 0; i < n; ++i) {
            if (X[i] != 1) continue;
            const double prob = delta[i] * dt;
            trace.max_step_probability = std::max(trace.max_step_probability, prob);
            if (prob > 1.0) {
                throw ValidationError("run_stochastic: per-step removal probability exceeds 1; reduce dt");
            }
            if (rng.uniform() < prob) {
                X[i] = 0;
                Z[i] = 1;
            }
        }
        for (int i = 0; i < n; ++i) {
            if (X[i] == 2) X[i] = 1;
        }
        std::copy(X.begin(), X.end(), trace.X.begin() + static_cast<size_t>(k) * n);
        std::copy(Z.begin(), Z.end(), trace.Z.begin() + static_cast<size_t>(k) * n);
    }
    return trace;
}

namespace {

// chi' and z' of the mean-field model.
void meanfield_rhs(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                   const Eigen::VectorXd& delta, const Eigen::VectorXd& chi,
                   const Eigen::VectorXd& z, Eigen::VectorXd& dchi, Eigen::VectorXd& dz) {
    dchi.setZero();
    for (int e = 0; e < net.edge_count(); ++e) {
        const EdgeParam& ed = net.edge(e);
        dchi[ed.to] += beta[e] * chi[ed.from];
    }
    dchi.array() *= (1.0 - chi.array() - z.array());
    dchi.array() -= delta.array() * chi.array();
    dz = delta.cwiseProduct(chi);
}

}  // namespace

SimulationTrace integrate_meanfield(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                                    const Eigen::VectorXd& delta, const Eigen::VectorXd& chi0,
                                    const Eigen::VectorXd& z0, double horizon, double dt) {
    check_rates(net, beta, delta);
    const int n = net.size();
    if (chi0.size() != n || z0.size() != n) throw ValidationError("integrate_meanfield: bad state size");
    for (int i = 0; i < n; ++i) {
        if (chi0[i] < 0.0 || z0[i] < 0.0 || chi0[i] + z0[i] > 1.0 + 1e-12) {
            throw ValidationError("integrate_meanfield: initial state outside 0 <= chi + z <= 1");
        }
    }
    const int steps = step_count(horizon, dt);

    SimulationTrace trace;
    trace.stochastic = false;
    trace.n = n;
    trace.dt = dt;
    trace.times.resize(steps + 1);
    for (int k = 0; k <= steps; ++k) trace.times[k] = k * dt;
    trace.chi.resize(static_cast<size_t>(steps + 1) * n);
    trace.z.resize(static_cast<size_t>(steps + 1) * n);

    Eigen::VectorXd chi = chi0, z = z0;
    Eigen::VectorXd k1c(n), k1z(n), k2c(n), k2z(n), k3c(n), k3z(n), k4c(n), k4z(n), tc(n), tz(n);
    Eigen::Map<Eigen::VectorXd>(trace.chi.data(), n) = chi;
    Eigen::Map<Eigen::VectorXd>(trace.z.data(), n) = z;

    constexpr double kBoxTol = 1e-6;
    for (int k = 1; k <= steps; ++k) {
        meanfield_rhs(net, beta, delta, chi, z, k1c, k1z);
        tc = chi + 0.5 * dt * k1c;
        tz = z + 0.5 * dt * k1z;
        meanfield_rhs(net, beta, delta, tc, tz, k2c, k2z);
        tc = chi + 0.5 * dt * k2c;
        tz = z + 0.5 * dt * k2z;
        meanfield_rhs(net, beta, delta, tc, tz, k3c, k3z);
        tc = chi + dt * k3c;
        tz = z + dt * k3z;
        meanfield_rhs(net, beta, delta, tc, tz, k4c, k4z);
        chi += (dt / 6.0) * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
        z += (dt / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);

        const double lo = std::min(chi.minCoeff(), z.minCoeff());
        const double hi = (chi + z).maxCoeff();
        if (lo < -kBoxTol || hi > 1.0 + kBoxTol) {
            std::ostringstream os;
            os << "integrate_meanfield: state left [0,1] box at t=" << k * dt << "; reduce dt";
            throw NumericalError(os.str());
        }
        chi = chi.cwiseMax(0.0).cwiseMin(1.0);
        z = z.cwiseMax(0.0).cwiseMin(1.0);
        Eigen::Map<Eigen::VectorXd>(trace.chi.data() + static_cast<size_t>(k) * n, n) = chi;
        Eigen::Map<Eigen::VectorXd>(trace.z.data() + static_cast<size_t>(k) * n, n) = z;
    }
    return trace;
}

SimulationTrace integrate_linear(const SystemMatrix& m, const Eigen::VectorXd& x0, double horizon,
                                 double dt) {
    const int n = m.size();
    if (x0.size() != n) throw ValidationError("integrate_linear: bad state size");
    if (x0.minCoeff() < 0.0) throw ValidationError("integrate_linear: x0 must be nonnegative");
    const int steps = step_count(horizon, dt);

    SimulationTrace trace;
    trace.stochastic = false;
    trace.n = n;
    trace.dt = dt;
    trace.times.resize(steps + 1);
    for (int k = 0; k <= steps; ++k) trace.times[k] = k * dt;
    trace.chi.resize(static_cast<size_t>(steps + 1) * n);
    trace.z.assign(static_cast<size_t>(steps + 1) * n, 0.0);

    Eigen::VectorXd x = x0;
    Eigen::Map<Eigen::VectorXd>(trace.chi.data(), n) = x;
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n);
    constexpr double kTol = 1e-6;
    for (int k = 1; k <= steps; ++k) {
        k1 = m.A * x;
        k2 = m.A * (x + 0.5 * dt * k1);
        k3 = m.A * (x + 0.5 * dt * k2);
        k4 = m.A * (x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (x.minCoeff() < -kTol) {
            std::ostringstream os;
            os << "integrate_linear: positivity lost at t=" << k * dt << "; reduce dt";
            throw NumericalError(os.str());
        }
        x = x.cwiseMax(0.0);
        Eigen::Map<Eigen::VectorXd>(trace.chi.data() + static_cast<size_t>(k) * n, n) = x;
    }
    return trace;
}

DiscountedCost discounted_cost(const SimulationTrace& trace, const Eigen::VectorXd& costs, double r) {
    if (costs.size() != trace.n) throw ValidationError("discounted_cost: cost vector size mismatch");
    if (r < 0.0) throw ValidationError("discounted_cost: discount rate must be >= 0");
    const int steps = trace.steps();
    double value = 0.0;
    double max_integrand = 0.0;
    double last_integrand = 0.0;
    for (int k = 0; k <= steps; ++k) {
        double cx = 0.0;
        for (int i = 0; i < trace.n; ++i) cx += costs[i] * trace.infected(k, i);
        const double f = std::exp(-r * trace.times[k]) * cx;
        max_integrand = std::max(max_integrand, f);
        last_integrand = f;
        const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
        value += w * f * trace.dt;
    }
    DiscountedCost out;
    out.value = value;
    out.tail_warning = max_integrand > 0.0 && last_integrand > 1e-3 * max_integrand;
    return out;
}

ValidationReport monte_carlo_validate(const SpreadingNetwork& net, const Eigen::VectorXd& beta,
                                      const Eigen::VectorXd& delta, const std::vector<int>& infected0,
                                      const Eigen::VectorXd& costs, double r, int runs,
                                      std::uint64_t seed, double horizon, double dt, int threads) {
    if (runs < 100) throw ValidationError("monte_carlo_validate: need at least 100 runs");
    if (horizon <= 0.0) horizon = r > 1e-6 ? 20.0 / r : 50.0;
    if (dt <= 0.0) dt = std::min(default_step_size(net, beta, delta), horizon / 100.0);

    ValidationReport report;
    report.stochastic_cost.runs = runs;
    report.stochastic_cost.samples.assign(runs, 0.0);

    const int nthreads = threads > 0
                             ? threads
                             : std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    auto worker = [&](int first, int last) {
        for (int run = first; run < last; ++run) {
            SimulationTrace t =
                run_stochastic(net, beta, delta, infected0, horizon, dt, mix_seed(seed, run));
            report.stochastic_cost.samples[run] = discounted_cost(t, costs, r).value;
        }
    };
    if (nthreads <= 1 || runs < 32) {
        worker(0, runs);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (runs + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const int first = t * chunk;
            const int last = std::min(runs, first + chunk);
            if (first < last) pool.emplace_back(worker, first, last);
        }
        for (auto& th : pool) th.join();
    }

    double sum = 0.0, sumsq = 0.0;
    for (double s : report.stochastic_cost.samples) {
        sum += s;
        sumsq += s * s;
    }
    report.stochastic_cost.mean = sum / runs;
    const double var = std::max(0.0, sumsq / runs - report.stochastic_cost.mean * report.stochastic_cost.mean);
    report.stochastic_cost.std_error = std::sqrt(var / runs);

    const int n = net.size();
    Eigen::VectorXd chi0 = Eigen::VectorXd::Zero(n), z0 = Eigen::VectorXd::Zero(n);
    for (int i : infected0) chi0[i] = 1.0;
    SimulationTrace mf = integrate_meanfield(net, beta, delta, chi0, z0, horizon, dt);
    report.meanfield_cost = discounted_cost(mf, costs, r).value;
    SystemMatrix A = build_system_matrix(net, beta, delta);
    SimulationTrace lin = integrate_linear(A, chi0, horizon, dt);
    report.linear_cost = discounted_cost(lin, costs, r).value;

    report.stochastic_below_meanfield =
        report.stochastic_cost.mean <=
        report.meanfield_cost + 3.0 * report.stochastic_cost.std_error;
    report.meanfield_below_linear = report.meanfield_cost <= report.linear_cost + 1e-6;
    return report;
}

PoissonSample sample_poisson_outbreaks(double lambda, double horizon, std::uint64_t seed) {
    if (lambda < 0.0 || horizon < 0.0) {
        throw ValidationError("sample_poisson_outbreaks: lambda and horizon must be >= 0");
    }
    PoissonSample out;
    out.rate = lambda;
    out.horizon = horizon;
    if (lambda == 0.0) return out;
    Rng rng(seed);
    double t = rng.exponential(lambda);
    while (t <= horizon) {
        out.event_times.push_back(t);
        t += rng.exponential(lambda);
    }
    return out;
}

int PoissonSample::count_up_to(double t) const {
    return static_cast<int>(std::upper_bound(event_times.begin(), event_times.end(), t) -
                            event_times.begin());
}

DetectionReport detection_experiment(const SpreadingNetwork& net, const Eigen::VectorXd& impact,
                                     const Eigen::VectorXd& lambda, const VisitSchedule& schedule,
                                     int runs, std::uint64_t seed, const SpreadOptions& opts) {
    const int n = net.size();
    if (impact.size() != n || lambda.size() != n) {
        throw ValidationError("detection_experiment: vector sizes do not match the network");
    }
    if (static_cast<int>(schedule.visits.size()) != n) {
        throw ValidationError("detection_experiment: schedule node count mismatch");
    }
    if (runs < 1) throw ValidationError("detection_experiment: need runs >= 1");

    DetectionReport report;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), sumsq = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(n);

    // merged visit list for detection scanning
    std::vector<std::pair<double, int>> all_visits;
    for (int i = 0; i < n; ++i)
        for (double t : schedule.visits[i]) all_visits.emplace_back(t, i);
    std::sort(all_visits.begin(), all_visits.end());

    double cost_sum = 0.0, cost_sumsq = 0.0;
    int cost_runs = 0;

    for (int run = 0; run < runs; ++run) {
        double first_time = std::numeric_limits<double>::infinity();
        int first_node = -1;
        for (int i = 0; i < n; ++i) {
            if (lambda[i] == 0.0 && schedule.visits[i].empty()) continue;
            PoissonSample ps = sample_poisson_outbreaks(lambda[i], schedule.horizon,
                                                        mix_seed(seed, run, i));
            // realized risk per audit interval: p_i * 1{>= 1 outbreak}
            double prev = 0.0;
            size_t ev = 0;
            auto account = [&](double a, double b) {
                while (ev < ps.event_times.size() && ps.event_times[ev] <= a) ++ev;
                const bool hit = ev < ps.event_times.size() && ps.event_times[ev] <= b;
                const double sample = hit ? impact[i] : 0.0;
                sum[i] += sample;
                sumsq[i] += sample * sample;
                count[i] += 1.0;
            };
            for (double v : schedule.visits[i]) {
                account(prev, v);
                prev = v;
            }
            if (prev < schedule.horizon) account(prev, schedule.horizon);

            if (!ps.event_times.empty() && ps.event_times.front() < first_time) {
                first_time = ps.event_times.front();
                first_node = i;
            }
        }

        if (opts.simulate_spread && first_node >= 0 && first_time < schedule.horizon) {
            const double window = schedule.horizon - first_time;
            double dt = opts.dt > 0.0 ? opts.dt : default_step_size(net, opts.beta, opts.delta);
            SimulationTrace tr = run_stochastic(net, opts.beta, opts.delta, {first_node}, window, dt,
                                                mix_seed(seed, run, 0x5eedULL));
            SpreadOutcome oc;
            // detection: first visit after the outbreak observing a burning or burnt node
            double detect_rel = window;
            for (const auto& [tv, node] : all_visits) {
                if (tv <= first_time) continue;
                const int step = std::min(tr.steps(), static_cast<int>((tv - first_time) / dt));
                if (tr.infected(step, node) > 0.0 || tr.removed(step, node) > 0.0) {
                    detect_rel = tv - first_time;
                    oc.detected = true;
                    break;
                }
            }
            oc.detection_delay = detect_rel;
            // discounted cost until detection
            const int kend = std::min(tr.steps(), static_cast<int>(std::ceil(detect_rel / dt)));
            double value = 0.0;
            for (int k = 0; k <= kend; ++k) {
                double cx = 0.0;
                for (int i = 0; i < n; ++i) cx += opts.costs[i] * tr.infected(k, i);
                const double w = (k == 0 || k == kend) ? 0.5 : 1.0;
                value += w * std::exp(-opts.discount_rate * tr.times[k]) * cx * dt;
            }
            oc.realized_cost = value;
            // warning time: detection -> first high-cost node touched by the fire
            double reach = -1.0;
            for (int k = 0; k <= tr.steps() && reach < 0.0; ++k) {
                for (int i = 0; i < n; ++i) {
                    if (opts.costs[i] >= opts.high_cost_threshold &&
                        (tr.infected(k, i) > 0.0 || tr.removed(k, i) > 0.0)) {
                        reach = tr.times[k];
                        break;
                    }
                }
            }
            if (reach >= 0.0) {
                oc.reached_high_cost = true;
                oc.warning_time = reach - detect_rel;
            }
            report.outcomes.push_back(oc);
            cost_sum += oc.realized_cost;
            cost_sumsq += oc.realized_cost * oc.realized_cost;
            ++cost_runs;
        }
    }

    report.interval_risk.mean_risk = Eigen::VectorXd::Zero(n);
    report.interval_risk.std_error = Eigen::VectorXd::Zero(n);
    long long total = 0;
    for (int i = 0; i < n; ++i) {
        total += static_cast<long long>(count[i]);
        if (count[i] > 0) {
            const double mean = sum[i] / count[i];
            report.interval_risk.mean_risk[i] = mean;
            const double var = std::max(0.0, sumsq[i] / count[i] - mean * mean);
            report.interval_risk.std_error[i] = std::sqrt(var / count[i]);
        }
    }
    report.interval_risk.total_intervals = total;
    report.interval_risk.max_mean_risk = n > 0 ? report.interval_risk.mean_risk.maxCoeff() : 0.0;

    if (cost_runs > 0) {
        report.realized_cost.runs = cost_runs;
        report.realized_cost.mean = cost_sum / cost_runs;
        const double var = std::max(0.0, cost_sumsq / cost_runs -
                                             report.realized_cost.mean * report.realized_cost.mean);
        report.realized_cost.std_error = std::sqrt(var / cost_runs);
    }
    return report;
}

}  // namespace spreadrisk
