#pragma once

#include "spreadrisk/network.hpp"

#include <iosfwd>
#include <string>

namespace spreadrisk {

enum class NetworkFormat { NetworkJson, EdgeCsv };

/// Loads a network from `network-json` or `edge-csv`.
///
/// Edge orientation in both formats: {from, to} means "from can infect to",
/// i.e. A(to, from) = beta. network-json accepts `"undirected": true` to
/// expand each edge into both directions instead of guessing.
///
/// Defaulting rules for absent fields:
///   beta_lower = 0.01 * beta_upper, delta_upper = delta_lower,
///   lambda_lower = 0.01 * lambda_upper, tau_lower = tau_upper / 8,
///   all weights = 1, delta_ceiling = 2 * max delta_upper.
/// Nodes absent from the file entirely use cost = 1, delta = 1,
/// lambda_upper = 1, tau_upper = 1 (per day).
///
/// All rates are 1/day unless a "time_unit" field ("day", "hour", "week")
/// overrides; values are normalized to per-day on load.
SpreadingNetwork load_network(const std::string& path, NetworkFormat format);
SpreadingNetwork load_network(std::istream& in, NetworkFormat format);

/// Infers the format from the file extension (.json vs .csv).
SpreadingNetwork load_network_auto(const std::string& path);

/// Serializes to the network-json schema (always directed, per-day rates).
std::string network_to_json(const SpreadingNetwork& net);
void save_network_json(const SpreadingNetwork& net, const std::string& path);

}  // namespace spreadrisk
