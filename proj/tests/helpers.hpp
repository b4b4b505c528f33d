#pragma once

#include "spreadrisk/costgo.hpp"
#include "spreadrisk/network.hpp"

#include <random>

namespace testhelp {

using namespace spreadrisk;

inline double uniform(std::mt19937_64& eng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(eng() >> 11) * 0x1.0p-53);
}

// Random connected-ish directed network with bounded rates.
inline SpreadingNetwork random_network(int n, std::uint64_t seed, double edge_prob = 0.25,
                                       double beta_hi_max = 0.6) {
    std::mt19937_64 eng(seed);
    SpreadingNetwork net(n);
    for (int i = 0; i < n; ++i) {
        NodeParam& nd = net.node(i);
        nd.cost = uniform(eng, 0.2, 2.0);
        nd.delta_lower = uniform(eng, 0.3, 0.8);
        nd.delta_upper = nd.delta_lower + uniform(eng, 0.1, 0.5);
        nd.lambda_upper = uniform(eng, 0.2, 1.5);
        nd.lambda_lower = 0.01 * nd.lambda_upper;
        nd.tau_upper = 1.0;
        nd.tau_lower = 1.0 / 8.0;
        nd.weight_delta = uniform(eng, 0.5, 2.0);
        nd.weight_lambda = uniform(eng, 0.5, 2.0);
        nd.weight_tau = uniform(eng, 0.5, 2.0);
    }
    // ring for connectivity plus random extra edges
    for (int i = 0; i < n; ++i) {
        EdgeParam e;
        e.from = i;
        e.to = (i + 1) % n;
        e.beta_upper = uniform(eng, 0.1, beta_hi_max);
        e.beta_lower = 0.05 * e.beta_upper;
        e.weight = uniform(eng, 0.5, 2.0);
        net.add_edge(e);
    }
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b || net.has_edge(a, b)) continue;
            if (uniform(eng, 0.0, 1.0) < edge_prob) {
                EdgeParam e;
                e.from = a;
                e.to = b;
                e.beta_upper = uniform(eng, 0.1, beta_hi_max);
                e.beta_lower = 0.05 * e.beta_upper;
                e.weight = uniform(eng, 0.5, 2.0);
                net.add_edge(e);
            }
        }
    }
    double dmax = 0.0;
    for (int i = 0; i < n; ++i) dmax = std::max(dmax, net.node(i).delta_upper);
    net.set_delta_ceiling(2.0 * dmax);
    return net;
}

// Discount rate strictly above the zero-resource abscissa.
inline double stable_rate(const SpreadingNetwork& net, std::uint64_t seed, double margin_lo = 0.2,
                          double margin_hi = 1.0) {
    std::mt19937_64 eng(seed ^ 0xabcdefULL);
    const SystemMatrix A = build_system_matrix(net, beta_upper(net), delta_lower(net));
    const double alpha = spectral_abscissa(A);
    return alpha + uniform(eng, margin_lo, margin_hi);
}

}  // namespace testhelp
