#include "spreadrisk/cli.hpp"

#include "spreadrisk/allocate.hpp"
#include "spreadrisk/costgo.hpp"
#include "spreadrisk/errors.hpp"
#include "spreadrisk/network_io.hpp"
#include "spreadrisk/scenario.hpp"
#include "spreadrisk/simulate.hpp"
#include "spreadrisk/sparsify.hpp"
#include "spreadrisk/surveillance.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace spreadrisk::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write " + path);
    f << content;
}

struct Manifest {
    json doc;
    std::string path;
    Clock::time_point start = Clock::now();

    Manifest(const std::string& command, const std::vector<std::string>& args) {
        doc["tool"] = "spreadrisk";
        doc["version"] = kToolVersion;
        doc["subcommand"] = command;
        doc["command"] = args;
        doc["parameters"] = json::object();
        doc["outputs"] = json::array();
    }
    void param(const std::string& key, json value) { doc["parameters"][key] = std::move(value); }
    void output(const std::string& file) { doc["outputs"].push_back(file); }
    void write() {
        doc["timings_seconds"]["total"] = seconds_since(start);
        write_text_file(path, doc.dump(2) + "\n");
    }
};

std::string default_manifest_path(const std::string& out) { return out + ".manifest.json"; }

struct BaselineRisk {
    Eigen::VectorXd p;
    Eigen::VectorXd risk;  // p * lambda_up * tau_up
};

BaselineRisk baseline_risk(const SpreadingNetwork& net, const Eigen::VectorXd& costs, double r) {
    const SystemMatrix A = build_system_matrix(net, beta_upper(net), delta_lower(net));
    BaselineRisk out;
    out.p = compute_cost_to_go(A, costs, r).p;
    out.risk = out.p.cwiseProduct(lambda_upper(net)).cwiseProduct(tau_upper(net));
    return out;
}

Eigen::VectorXd resolve_costs(const SpreadingNetwork& net, const std::string& cost_model) {
    if (cost_model == "field") return node_costs(net);
    if (cost_model == "unit") return Eigen::VectorXd::Ones(net.size());
    if (cost_model == "removal") return removal_cost_vector(net, delta_lower(net));
    throw UsageError("unknown cost model \"" + cost_model + "\" (field, unit or removal)");
}

// ----------------------------------------------------------------------------

int cmd_risk(const std::vector<std::string>& args, const std::string& network_path, double r,
             const std::string& cost_model, const std::string& out_path,
             const std::string& heatmap_path, std::string manifest_path, std::ostream& out) {
    Manifest manifest("risk", args);
    manifest.path = manifest_path.empty() ? default_manifest_path(out_path) : manifest_path;

    SpreadingNetwork net = load_network_auto(network_path);
    const Eigen::VectorXd costs = resolve_costs(net, cost_model);
    const BaselineRisk base = baseline_risk(net, costs, r);
    const Eigen::VectorXd lam = lambda_upper(net), tau = tau_upper(net);

    std::string csv = "node,p,lambda,tau,risk\n";
    char buf[256];
    for (int i = 0; i < net.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g\n", i, base.p[i], lam[i],
                      tau[i], base.risk[i]);
        csv += buf;
    }
    write_text_file(out_path, csv);
    manifest.output(out_path);

    if (!heatmap_path.empty()) {
        if (!net.grid()) throw ValidationError("--heatmap requires a grid-embedded network");
        std::vector<double> vals(base.risk.data(), base.risk.data() + base.risk.size());
        render_heatmap_ppm(vals, net.grid()->width, net.grid()->height, heatmap_path);
        manifest.output(heatmap_path);
    }

    manifest.param("network", network_path);
    manifest.param("r", r);
    manifest.param("cost_model", cost_model);
    manifest.write();
    out << "risk map written to " << out_path << " (max risk " << format_g12(base.risk.maxCoeff())
        << ")\n";
    return kOk;
}

int cmd_revisit(const std::vector<std::string>& args, const std::string& network_path, double r,
                double rmax, double rmax_frac, double eps_r, const std::string& cost_model,
                const std::string& out_path, std::string manifest_path, std::ostream& out) {
    Manifest manifest("revisit", args);
    manifest.path = manifest_path.empty() ? default_manifest_path(out_path) : manifest_path;

    SpreadingNetwork net = load_network_auto(network_path);
    const Eigen::VectorXd costs = resolve_costs(net, cost_model);
    const BaselineRisk base = baseline_risk(net, costs, r);
    if (rmax <= 0.0) {
        if (!(rmax_frac > 0.0)) throw UsageError("revisit needs --rmax or --rmax-frac");
        rmax = rmax_frac * base.risk.maxCoeff();
    }
    SurveillanceConfig cfg = make_surveillance_config(rmax);
    if (eps_r >= 0.0) cfg.epsilon_risk = eps_r;

    write_text_file(out_path, revisit_csv(base.p, lambda_upper(net), cfg));
    manifest.output(out_path);
    manifest.param("network", network_path);
    manifest.param("r", r);
    manifest.param("rmax", rmax);
    manifest.param("eps_r", cfg.epsilon_risk);
    manifest.write();
    out << "revisit schedule bounds written to " << out_path << " (R_max " << format_g12(rmax)
        << ")\n";
    return kOk;
}

AllocationVariant parse_variant(const std::string& name) {
    if (name == "minmax" || name == "min-max-risk") return AllocationVariant::MinMaxRisk;
    if (name == "min-resources" || name == "min-resources-risk-cap")
        return AllocationVariant::MinResourcesRiskCap;
    if (name == "spectral" || name == "min-spectral-bound") return AllocationVariant::MinSpectralBound;
    if (name == "known-outbreak" || name == "known-outbreak-risk")
        return AllocationVariant::KnownOutbreakRisk;
    throw UsageError("unknown variant \"" + name +
                     "\" (minmax, min-resources, spectral, known-outbreak)");
}

int cmd_allocate(const std::vector<std::string>& args, const std::string& network_path,
                 const std::string& variant_name, double r_max, double b_beta, double b_delta,
                 double b_lambda, double b_tau, double risk_cap, double risk_cap_frac,
                 int seed_node, const std::string& vaccinate, int sparsify_iters,
                 double sparsify_eps, const std::string& out_path, std::string manifest_path,
                 std::ostream& out) {
    Manifest manifest("allocate", args);
    manifest.path = manifest_path.empty() ? default_manifest_path(out_path) : manifest_path;

    SpreadingNetwork net = load_network_auto(network_path);

    AllocationProblem prob;
    prob.network = &net;
    prob.variant = parse_variant(variant_name);
    prob.rate_bound = r_max;
    prob.budgets = Budgets::from_values(b_beta, b_delta, b_lambda, b_tau);

    if (seed_node >= 0) {
        if (seed_node >= net.size()) throw UsageError("--seed-node out of range");
        prob.known_x0 = Eigen::VectorXd::Zero(net.size());
        prob.known_x0[seed_node] = 1.0;
    }
    if (risk_cap > 0.0) {
        prob.risk_cap = Eigen::VectorXd::Constant(1, risk_cap);
    } else if (risk_cap_frac > 0.0) {
        const BaselineRisk base = baseline_risk(net, node_costs(net), r_max);
        const double metric = seed_node >= 0 ? base.p[seed_node] : base.risk.maxCoeff();
        prob.risk_cap = Eigen::VectorXd::Constant(1, risk_cap_frac * metric);
        manifest.param("risk_cap_resolved", prob.risk_cap[0]);
    }
    if (!vaccinate.empty()) {
        std::vector<VaccinationGroup> groups;
        if (vaccinate == "all") {
            for (int i = 0; i < net.size(); ++i) groups.push_back({i});
        } else {
            std::stringstream ss(vaccinate);
            std::string tok;
            while (std::getline(ss, tok, ',')) groups.push_back({std::stoi(tok)});
        }
        prob.vaccination = std::move(groups);
    }

    AllocationModel model = assemble_problem(prob);
    AllocationResult result = solve_allocation(model);
    if (result.status == SolveStatus::Infeasible) {
        write_text_file(out_path, allocation_result_to_json(model, result));
        manifest.output(out_path);
        manifest.write();
        throw InfeasibleError("allocation infeasible: " + result.message);
    }
    if (result.status != SolveStatus::Optimal) {
        throw NumericalError("allocation solve failed: " + result.message);
    }

    json doc = json::parse(allocation_result_to_json(model, result));
    if (sparsify_iters > 0) {
        SparsifyConfig cfg;
        cfg.max_iters = sparsify_iters;
        if (sparsify_eps > 0.0) cfg.epsilon = sparsify_eps;
        SparsifyOutcome sp = sparsify_allocation(prob, result, cfg);
        json iters = json::array();
        int k = 1;
        for (const auto& it : sp.iterates) {
            out << "sparsify iter " << k << ": nonzero beta=" << it.result.nonzero_beta
                << " delta=" << it.result.nonzero_delta << " lambda=" << it.result.nonzero_lambda
                << " tau=" << it.result.nonzero_tau << " risk=" << format_g12(it.risk)
                << (it.accepted ? "" : " (rejected)") << "\n";
            iters.push_back({{"iteration", k},
                             {"accepted", it.accepted},
                             {"risk", it.risk},
                             {"phi", it.phi},
                             {"nonzero_beta", it.result.nonzero_beta},
                             {"nonzero_delta", it.result.nonzero_delta},
                             {"nonzero_lambda", it.result.nonzero_lambda},
                             {"nonzero_tau", it.result.nonzero_tau}});
            ++k;
        }
        doc["sparsify"] = {{"iterations", std::move(iters)},
                           {"stabilized", sp.stabilized},
                           {"warning", sp.warning}};
        doc["final"] = json::parse(allocation_result_to_json(model, sp.final_result));
    }
    write_text_file(out_path, doc.dump(2) + "\n");
    manifest.output(out_path);
    manifest.param("network", network_path);
    manifest.param("variant", variant_name);
    manifest.param("r_max", r_max);
    manifest.param("budgets", {{"beta", b_beta}, {"delta", b_delta}, {"lambda", b_lambda}, {"tau", b_tau}});
    manifest.param("sparsify", sparsify_iters);
    manifest.write();
    out << "allocation (" << variant_name << ") objective " << format_g12(result.objective)
        << " written to " << out_path << "\n";
    return kOk;
}

int cmd_simulate(const std::vector<std::string>& args, const std::string& network_path, int runs,
                 std::uint64_t seed, double dt, double horizon, double r,
                 const std::string& x0_list, bool validate, const std::string& out_path,
                 const std::string& trace_path, std::string manifest_path, std::ostream& out) {
    Manifest manifest("simulate", args);
    manifest.path = manifest_path.empty() ? default_manifest_path(out_path) : manifest_path;

    SpreadingNetwork net = load_network_auto(network_path);
    const Eigen::VectorXd beta = beta_upper(net), delta = delta_lower(net);
    std::vector<int> x0;
    {
        std::stringstream ss(x0_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) x0.push_back(std::stoi(tok));
        if (x0.empty()) x0.push_back(0);
    }
    if (horizon <= 0.0) horizon = r > 1e-6 ? 20.0 / r : 20.0;
    if (dt <= 0.0) dt = std::min(default_step_size(net, beta, delta), horizon / 100.0);
    const Eigen::VectorXd costs = node_costs(net);

    json doc;
    doc["runs"] = runs;
    doc["seed"] = seed;
    doc["dt"] = dt;
    doc["horizon"] = horizon;
    if (validate) {
        ValidationReport rep = monte_carlo_validate(net, beta, delta, x0, costs, r, runs, seed,
                                                    horizon, dt);
        doc["stochastic_mean"] = rep.stochastic_cost.mean;
        doc["stochastic_se"] = rep.stochastic_cost.std_error;
        doc["meanfield_cost"] = rep.meanfield_cost;
        doc["linear_cost"] = rep.linear_cost;
        doc["stochastic_below_meanfield"] = rep.stochastic_below_meanfield;
        doc["meanfield_below_linear"] = rep.meanfield_below_linear;
    } else {
        double sum = 0.0, sumsq = 0.0;
        double infected_end = 0.0;
        double max_step_prob = 0.0;
        for (int k = 0; k < runs; ++k) {
            SimulationTrace t = run_stochastic(net, beta, delta, x0, horizon, dt, seed + k);
            const double c = discounted_cost(t, costs, r).value;
            sum += c;
            sumsq += c * c;
            for (int i = 0; i < net.size(); ++i) infected_end += t.infected(t.steps(), i);
            max_step_prob = std::max(max_step_prob, t.max_step_probability);
        }
        doc["mean_cost"] = sum / runs;
        const double var = std::max(0.0, sumsq / runs - (sum / runs) * (sum / runs));
        doc["se_cost"] = std::sqrt(var / runs);
        doc["mean_final_infected"] = infected_end / runs;
        doc["max_step_probability"] = max_step_prob;
        if (max_step_prob > 0.2) {
            out << "warning: per-step event probability reached " << format_g12(max_step_prob)
                << "; consider a smaller --dt\n";
        }
    }
    write_text_file(out_path, doc.dump(2) + "\n");
    manifest.output(out_path);

    if (!trace_path.empty()) {
        SimulationTrace t = run_stochastic(net, beta, delta, x0, horizon, dt, seed);
        if (static_cast<long long>(t.steps() + 1) * net.size() > 20'000'000LL) {
            throw ValidationError("trace too large to export; reduce horizon or network size");
        }
        std::string csv = "t,node,X,Z\n";
        char buf[128];
        for (int k = 0; k <= t.steps(); ++k) {
            for (int i = 0; i < net.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.12g,%d,%d,%d\n", t.times[k], i,
                              static_cast<int>(t.infected(k, i)), static_cast<int>(t.removed(k, i)));
                csv += buf;
            }
        }
        write_text_file(trace_path, csv);
        manifest.output(trace_path);
    }
    manifest.param("network", network_path);
    manifest.param("runs", runs);
    manifest.param("seed", seed);
    manifest.param("dt", dt);
    manifest.param("horizon", horizon);
    manifest.param("r", r);
    manifest.write();
    out << "simulation stats written to " << out_path << "\n";
    return kOk;
}

int cmd_scenario(const std::vector<std::string>& args, const std::string& name,
                 const std::string& variant, int width, int height, double wind_speed,
                 double wind_from, int nodes, int edges_per_node, std::uint64_t seed,
                 double delta, const std::string& landscape_in, const std::string& out_path,
                 const std::string& landscape_out, std::string manifest_path, std::ostream& out) {
    Manifest manifest("scenario", args);
    manifest.path = manifest_path.empty() ? default_manifest_path(out_path) : manifest_path;

    SpreadingNetwork net(1);
    if (!landscape_in.empty()) {
        GridLandscape land = load_landscape_json(landscape_in);
        net = build_grid_network(land, delta);
        if (wind_speed > 0.0) apply_wind(net, {wind_speed, wind_from});
        manifest.param("landscape", landscape_in);
        manifest.param("delta", delta);
    } else if (name == "sixteen-node") {
        SixteenNodeVariant v = SixteenNodeVariant::Uniform;
        if (variant == "high-cost") v = SixteenNodeVariant::HighCost;
        else if (variant == "mixed-spreading") v = SixteenNodeVariant::MixedSpreading;
        else if (variant == "heterogeneous-outbreak") v = SixteenNodeVariant::HeterogeneousOutbreak;
        else if (variant != "uniform" && !variant.empty())
            throw UsageError("unknown sixteen-node variant \"" + variant + "\"");
        net = sixteen_node_example(v);
    } else if (name == "seven-node") {
        net = seven_node_example();
    } else if (name == "grid-wildfire") {
        GridLandscape land = make_wildfire_landscape(width, height);
        net = build_grid_network(land, 0.5);
        if (wind_speed > 0.0) apply_wind(net, {wind_speed, wind_from});
        if (!landscape_out.empty()) {
            save_landscape_json(land, landscape_out);
            manifest.output(landscape_out);
        }
    } else if (name == "synthetic-air") {
        net = synthetic_air_example(nodes, edges_per_node, seed);
    } else {
        throw UsageError("unknown scenario \"" + name + "\"");
    }

    save_network_json(net, out_path);
    manifest.output(out_path);
    manifest.param("name", name);
    manifest.param("variant", variant);
    if (landscape_in.empty()) manifest.param("recipe", json::parse(scenario_manifest(name)));
    manifest.write();
    out << "scenario " << name << " written to " << out_path << " (" << net.size() << " nodes, "
        << net.edge_count() << " edges)\n";
    return kOk;
}

std::pair<int, int> grid_dims(int n) {
    int best_w = n, best_h = 1;
    double best_err = std::numeric_limits<double>::infinity();
    for (int h = 1; h * h <= n; ++h) {
        if (n % h != 0) continue;
        const int w = n / h;
        const double err = std::abs(static_cast<double>(w) / h - 1.6);
        if (err < best_err) {
            best_err = err;
            best_w = w;
            best_h = h;
        }
    }
    return {best_w, best_h};
}

int cmd_bench(const std::vector<std::string>& args, const std::string& sizes_list,
              double budget_frac, const std::string& out_path, std::string manifest_path,
              std::ostream& out) {
    Manifest manifest("bench", args);
    manifest.path = manifest_path.empty() ? default_manifest_path(out_path) : manifest_path;

    std::vector<int> sizes;
    {
        std::stringstream ss(sizes_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
    }
    if (sizes.empty()) throw UsageError("bench needs --sizes");

    std::string csv = "n,width,height,assemble_seconds,solve_seconds,newton_iterations,status\n";
    std::vector<double> log_n, log_t;
    for (int n : sizes) {
        const auto [w, h] = grid_dims(n);
        GridLandscape land = make_wildfire_landscape(w, h);
        SpreadingNetwork net = build_grid_network(land, 0.5);
        apply_wind(net, {8.0, 270.0});

        const TransformedBounds tb = transformed_bounds(net);
        AllocationProblem prob;
        prob.network = &net;
        prob.variant = AllocationVariant::MinMaxRisk;
        const SystemMatrix A0 = build_system_matrix(net, beta_upper(net), delta_lower(net));
        const double alpha0 = spectral_abscissa(A0);
        prob.rate_bound = std::max(4.0, 1.25 * alpha0 + 0.5);
        prob.budgets = Budgets::from_values(budget_frac * tb.u_max.sum(), 0.0,
                                            budget_frac * tb.z_max.sum(),
                                            budget_frac * tb.sigma_max.sum());

        const auto t0 = Clock::now();
        AllocationModel model = assemble_problem(prob);
        const double assemble_s = seconds_since(t0);
        const auto t1 = Clock::now();
        AllocationResult res = solve_allocation(model);
        const double solve_s = seconds_since(t1);

        char buf[256];
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.12g,%.12g,%d,%s\n", n, w, h, assemble_s,
                      solve_s, res.newton_iterations, to_string(res.status));
        csv += buf;
        out << "n=" << n << " solve " << format_g12(solve_s) << " s, " << res.newton_iterations
            << " newton steps, status " << to_string(res.status) << "\n";
        log_n.push_back(std::log(static_cast<double>(n)));
        log_t.push_back(std::log(std::max(solve_s, 1e-6)));
    }
    double slope = 0.0;
    if (log_n.size() >= 2) {
        double mx = 0, my = 0;
        for (size_t i = 0; i < log_n.size(); ++i) {
            mx += log_n[i];
            my += log_t[i];
        }
        mx /= log_n.size();
        my /= log_t.size();
        double num = 0, den = 0;
        for (size_t i = 0; i < log_n.size(); ++i) {
            num += (log_n[i] - mx) * (log_t[i] - my);
            den += (log_n[i] - mx) * (log_n[i] - mx);
        }
        slope = num / den;
    }
    csv += "# loglog_slope," + format_g12(slope) + "\n";
    out << "loglog_slope=" << format_g12(slope) << "\n";
    write_text_file(out_path, csv);
    manifest.output(out_path);
    manifest.param("sizes", sizes);
    manifest.param("budget_frac", budget_frac);
    manifest.param("loglog_slope", slope);
    manifest.write();
    return kOk;
}

}  // namespace

std::string format_g12(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

void render_heatmap_ppm(const std::vector<double>& values, int width, int height,
                        const std::string& path) {
    if (static_cast<int>(values.size()) != width * height) {
        throw ValidationError("render_heatmap_ppm: value count does not match grid");
    }
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write " + path);
    f << "P6\n" << width << " " << height << "\n255\n";
    for (int row = 0; row < height; ++row) {
        for (int col = 0; col < width; ++col) {
            const double t = (values[static_cast<size_t>(row) * width + col] - lo) / span;
            // blue -> yellow -> red
            const double r = std::clamp(2.0 * t, 0.0, 1.0);
            const double g = std::clamp(t < 0.5 ? 2.0 * t : 2.0 - 2.0 * t, 0.0, 1.0);
            const double b = std::clamp(1.0 - 2.0 * t, 0.0, 1.0);
            const unsigned char px[3] = {static_cast<unsigned char>(255 * r),
                                         static_cast<unsigned char>(255 * g),
                                         static_cast<unsigned char>(255 * b)};
            f.write(reinterpret_cast<const char*>(px), 3);
        }
    }
}

int execute_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"risk maps, revisit schedules and sparse resource allocation for spreading processes"};
    app.require_subcommand(1);

    // risk
    auto* risk = app.add_subcommand("risk", "cost-to-go and risk map");
    std::string network_path, cost_model = "field", out_path, heatmap_path, manifest_path;
    double r = 1.0;
    risk->add_option("--network", network_path, "network-json or edge-csv file")->required();
    risk->add_option("--r", r, "discount rate")->required();
    risk->add_option("--cost-model", cost_model, "field | unit | removal");
    risk->add_option("--out", out_path, "risk CSV output")->required();
    risk->add_option("--heatmap", heatmap_path, "PPM heatmap (grid networks)");
    risk->add_option("--manifest", manifest_path, "manifest path");

    // revisit
    auto* revisit = app.add_subcommand("revisit", "maximum revisit intervals");
    std::string rv_network, rv_cost_model = "field", rv_out, rv_manifest;
    double rv_r = 1.0, rv_rmax = 0.0, rv_rmax_frac = 0.0, rv_eps = -1.0;
    revisit->add_option("--network", rv_network)->required();
    revisit->add_option("--r", rv_r, "discount rate")->required();
    revisit->add_option("--rmax", rv_rmax, "risk budget R_max");
    revisit->add_option("--rmax-frac", rv_rmax_frac, "R_max as a fraction of max baseline risk");
    revisit->add_option("--eps-r", rv_eps, "residual risk at visit time");
    revisit->add_option("--cost-model", rv_cost_model);
    revisit->add_option("--out", rv_out)->required();
    revisit->add_option("--manifest", rv_manifest);

    // allocate
    auto* alloc = app.add_subcommand("allocate", "sparse resource allocation");
    std::string al_network, al_variant = "minmax", al_vaccinate, al_out, al_manifest;
    double al_rmax = 0.0, al_bbeta = 0.0, al_bdelta = 0.0, al_blambda = 0.0, al_btau = 0.0;
    double al_cap = 0.0, al_cap_frac = 0.0, al_sparsify_eps = 0.0;
    int al_seed_node = -1, al_sparsify = 0;
    alloc->add_option("--network", al_network)->required();
    alloc->add_option("--variant", al_variant, "minmax | min-resources | spectral | known-outbreak");
    alloc->add_option("--r-max", al_rmax, "discount-rate upper bound")->required();
    alloc->add_option("--budget-beta", al_bbeta);
    alloc->add_option("--budget-delta", al_bdelta);
    alloc->add_option("--budget-lambda", al_blambda);
    alloc->add_option("--budget-tau", al_btau);
    alloc->add_option("--risk-cap", al_cap, "absolute risk cap");
    alloc->add_option("--risk-cap-frac", al_cap_frac, "cap as fraction of the baseline metric");
    alloc->add_option("--seed-node", al_seed_node, "known outbreak node");
    alloc->add_option("--vaccinate", al_vaccinate, "\"all\" or comma-separated node ids");
    alloc->add_option("--sparsify", al_sparsify, "reweighted l1 iterations (0 = off)");
    alloc->add_option("--sparsify-eps", al_sparsify_eps);
    alloc->add_option("--out", al_out)->required();
    alloc->add_option("--manifest", al_manifest);

    // simulate
    auto* sim = app.add_subcommand("simulate", "stochastic / ODE simulation");
    std::string sm_network, sm_x0 = "0", sm_out, sm_trace, sm_manifest;
    int sm_runs = 100;
    std::uint64_t sm_seed = 1;
    double sm_dt = 0.0, sm_horizon = 0.0, sm_r = 1.0;
    bool sm_validate = false;
    sim->add_option("--network", sm_network)->required();
    sim->add_option("--runs", sm_runs);
    sim->add_option("--seed", sm_seed);
    sim->add_option("--dt", sm_dt);
    sim->add_option("--horizon", sm_horizon);
    sim->add_option("--r", sm_r, "discount rate for costs");
    sim->add_option("--x0", sm_x0, "initially infected nodes (comma-separated)");
    sim->add_flag("--validate", sm_validate, "compare stochastic / mean-field / linear costs");
    sim->add_option("--out", sm_out)->required();
    sim->add_option("--trace", sm_trace, "trace CSV for the first run");
    sim->add_option("--manifest", sm_manifest);

    // scenario
    auto* scen = app.add_subcommand("scenario", "builtin example networks");
    std::string sc_name, sc_variant, sc_out, sc_landscape, sc_landscape_in, sc_manifest;
    int sc_width = 50, sc_height = 80, sc_nodes = 359, sc_epn = 3;
    double sc_wind_speed = 0.0, sc_wind_from = 270.0, sc_delta = 0.5;
    std::uint64_t sc_seed = 7;
    scen->add_option("--name", sc_name, "sixteen-node | seven-node | grid-wildfire | synthetic-air");
    scen->add_option("--from-landscape", sc_landscape_in,
                     "build the network from a landscape JSON instead of a builtin");
    scen->add_option("--delta", sc_delta, "recovery rate for landscape-built networks");
    scen->add_option("--variant", sc_variant, "sixteen-node variant");
    scen->add_option("--width", sc_width);
    scen->add_option("--height", sc_height);
    scen->add_option("--wind-speed", sc_wind_speed, "m/s");
    scen->add_option("--wind-from", sc_wind_from, "compass degrees the wind comes from");
    scen->add_option("--nodes", sc_nodes);
    scen->add_option("--edges-per-node", sc_epn);
    scen->add_option("--seed", sc_seed);
    scen->add_option("--out", sc_out)->required();
    scen->add_option("--landscape-out", sc_landscape);
    scen->add_option("--manifest", sc_manifest);

    // bench
    auto* bench = app.add_subcommand("bench", "solve-time scaling on grid instances");
    std::string bn_sizes = "250,1000,4000", bn_out, bn_manifest;
    double bn_frac = 0.05;
    bench->add_option("--sizes", bn_sizes);
    bench->add_option("--budget-frac", bn_frac);
    bench->add_option("--out", bn_out)->required();
    bench->add_option("--manifest", bn_manifest);

    std::vector<const char*> argv;
    argv.push_back("spreadrisk");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << json{{"type", "usage"}, {"error", e.what()}}.dump() << "\n";
        return kUsage;
    }

    try {
        if (risk->parsed()) {
            return cmd_risk(args, network_path, r, cost_model, out_path, heatmap_path,
                            manifest_path, out);
        }
        if (revisit->parsed()) {
            return cmd_revisit(args, rv_network, rv_r, rv_rmax, rv_rmax_frac, rv_eps, rv_cost_model,
                               rv_out, rv_manifest, out);
        }
        if (alloc->parsed()) {
            return cmd_allocate(args, al_network, al_variant, al_rmax, al_bbeta, al_bdelta,
                                al_blambda, al_btau, al_cap, al_cap_frac, al_seed_node,
                                al_vaccinate, al_sparsify, al_sparsify_eps, al_out, al_manifest,
                                out);
        }
        if (sim->parsed()) {
            return cmd_simulate(args, sm_network, sm_runs, sm_seed, sm_dt, sm_horizon, sm_r, sm_x0,
                                sm_validate, sm_out, sm_trace, sm_manifest, out);
        }
        if (scen->parsed()) {
            if (sc_name.empty() && sc_landscape_in.empty()) {
                throw UsageError("scenario needs --name or --from-landscape");
            }
            return cmd_scenario(args, sc_name, sc_variant, sc_width, sc_height, sc_wind_speed,
                                sc_wind_from, sc_nodes, sc_epn, sc_seed, sc_delta, sc_landscape_in,
                                sc_out, sc_landscape, sc_manifest, out);
        }
        if (bench->parsed()) {
            return cmd_bench(args, bn_sizes, bn_frac, bn_out, bn_manifest, out);
        }
        err << json{{"type", "usage"}, {"error", "no subcommand"}}.dump() << "\n";
        return kUsage;
    } catch (const UsageError& e) {
        err << json{{"type", "usage"}, {"error", e.what()}}.dump() << "\n";
        return kUsage;
    } catch (const InfeasibleError& e) {
        err << json{{"type", "infeasible"}, {"error", e.what()}, {"abscissa", e.spectral_abscissa}}
                   .dump()
            << "\n";
        return kInfeasible;
    } catch (const ParseError& e) {
        err << json{{"type", "input"}, {"error", e.what()}}.dump() << "\n";
        return kInput;
    } catch (const ValidationError& e) {
        err << json{{"type", "input"}, {"error", e.what()}}.dump() << "\n";
        return kInput;
    } catch (const BoundsError& e) {
        err << json{{"type", "input"}, {"error", e.what()}}.dump() << "\n";
        return kInput;
    } catch (const NumericalError& e) {
        err << json{{"type", "solver"}, {"error", e.what()}}.dump() << "\n";
        return kSolverFailure;
    } catch (const std::exception& e) {
        err << json{{"type", "solver"}, {"error", e.what()}}.dump() << "\n";
        return kSolverFailure;
    }
}

int execute_command(const std::vector<std::string>& args) {
    return execute_command(args, std::cout, std::cerr);
}

}  // namespace spreadrisk::cli
