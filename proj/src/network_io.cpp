#include "spreadrisk/network_io.hpp"

#include "spreadrisk/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace spreadrisk {

namespace {

using nlohmann::json;

double rate_factor(const std::string& unit) {
    if (unit == "day") return 1.0;
    if (unit == "hour") return 24.0;
    if (unit == "week") return 1.0 / 7.0;
    throw ParseError("unsupported time_unit \"" + unit + "\" (expected day, hour or week)");
}

// Accepts either a scalar upper value or a [lower, upper] pair.
std::pair<double, double> range_field(const json& j, const std::string& key, double lower_frac,
                                      double lo_default, double hi_default) {
    if (!j.contains(key)) return {lo_default, hi_default};
    const json& v = j.at(key);
    if (v.is_number()) {
        const double hi = v.get<double>();
        return {lower_frac * hi, hi};
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ParseError("field \"" + key + "\" must be a number or a [lower, upper] pair");
}

SpreadingNetwork load_json(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network-json: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("n") || !doc["n"].is_number_integer()) {
        throw ParseError("network-json: missing integer field \"n\"");
    }
    const int n = doc["n"].get<int>();
    if (n <= 0) throw ParseError("network-json: \"n\" must be positive");

    const double f = rate_factor(doc.value("time_unit", std::string("day")));
    const bool undirected = doc.value("undirected", false);

    SpreadingNetwork net(n);

    // Ids may be 0-based or 1-based; detect from the node/edge blocks.
    int min_id = n;
    auto scan_id = [&min_id](const json& v) {
        if (v.is_number_integer()) min_id = std::min(min_id, v.get<int>());
    };
    if (doc.contains("nodes"))
        for (const auto& nd : doc["nodes"]) scan_id(nd.value("id", json()));
    if (doc.contains("edges"))
        for (const auto& ed : doc["edges"]) {
            scan_id(ed.value("from", json()));
            scan_id(ed.value("to", json()));
        }
    const int base = (min_id >= 1) ? 1 : 0;
    auto to_index = [&](int id, const char* what) {
        const int idx = id - base;
        if (idx < 0 || idx >= n) {
            std::ostringstream os;
            os << "network-json: " << what << " id " << id << " outside " << base << ".." << (n - 1 + base);
            throw ParseError(os.str());
        }
        return idx;
    };

    if (doc.contains("nodes")) {
        if (!doc["nodes"].is_array()) throw ParseError("network-json: \"nodes\" must be an array");
        for (const auto& nd : doc["nodes"]) {
            if (!nd.contains("id")) throw ParseError("network-json: node record missing \"id\"");
            const int i = to_index(nd["id"].get<int>(), "node");
            NodeParam& p = net.node(i);
            p.cost = nd.value("cost", 1.0);
            if (nd.contains("delta")) {
                auto [dlo, dhi] = range_field(nd, "delta", 1.0, 0.0, 0.0);  // scalar: no improvement
                p.delta_lower = dlo * f;
                p.delta_upper = dhi * f;
            }
            if (nd.contains("lambda")) {
                auto [llo, lhi] = range_field(nd, "lambda", 0.01, 0.0, 0.0);
                p.lambda_lower = llo * f;
                p.lambda_upper = lhi * f;
            }
            if (nd.contains("tau")) {
                auto [tlo, thi] = range_field(nd, "tau", 1.0 / 8.0, 0.0, 0.0);
                p.tau_lower = tlo / f;
                p.tau_upper = thi / f;
            }
            p.weight_delta = nd.value("w_delta", 1.0);
            p.weight_lambda = nd.value("w_lambda", 1.0);
            p.weight_tau = nd.value("w_tau", 1.0);
        }
    }
    // Nodes not listed keep NodeParam defaults, which are already per-day.

    if (doc.contains("edges")) {
        if (!doc["edges"].is_array()) throw ParseError("network-json: \"edges\" must be an array");
        int rec = 0;
        for (const auto& ed : doc["edges"]) {
            ++rec;
            if (!ed.contains("from") || !ed.contains("to")) {
                std::ostringstream os;
                os << "network-json: edge record " << rec << " missing \"from\"/\"to\"";
                throw ParseError(os.str());
            }
            if (!ed.contains("beta")) {
                std::ostringstream os;
                os << "network-json: edge record " << rec << " missing \"beta\"";
                throw ParseError(os.str());
            }
            EdgeParam e;
            e.from = to_index(ed["from"].get<int>(), "edge");
            e.to = to_index(ed["to"].get<int>(), "edge");
            auto [blo, bhi] = range_field(ed, "beta", 0.01, 0.0, 0.0);
            e.beta_lower = blo * f;
            e.beta_upper = bhi * f;
            e.weight = ed.value("w", 1.0);
            try {
                net.add_edge(e);
                if (undirected) {
                    std::swap(e.from, e.to);
                    net.add_edge(e);
                }
            } catch (const ValidationError& ve) {
                std::ostringstream os;
                os << "network-json: edge record " << rec << ": " << ve.what();
                throw ParseError(os.str());
            }
        }
    }

    if (doc.contains("delta_ceiling")) {
        net.set_delta_ceiling(doc["delta_ceiling"].get<double>() * f);
    } else {
        net.apply_default_delta_ceiling();
    }

    if (doc.contains("grid") && doc["grid"].is_object()) {
        GridShape g;
        g.width = doc["grid"].value("width", 0);
        g.height = doc["grid"].value("height", 0);
        if (g.width > 0 && g.height > 0 && g.width * g.height == n) net.set_grid(g);
    }

    validate_network_or_throw(net);
    return net;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

SpreadingNetwork load_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("edge-csv: empty input");
    {
        auto hdr = split_csv_line(line);
        const std::vector<std::string> want = {"from", "to", "beta_hi", "beta_lo", "weight"};
        if (hdr != want) {
            throw ParseError("edge-csv: header must be exactly `from,to,beta_hi,beta_lo,weight`");
        }
    }

    struct Row {
        int from, to;
        double beta_hi, beta_lo, weight;
        int line_no;
    };
    std::vector<Row> rows;
    int min_id = std::numeric_limits<int>::max();
    int max_id = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 5) {
            std::ostringstream os;
            os << "edge-csv line " << line_no << ": expected 5 fields, got " << cells.size();
            throw ParseError(os.str());
        }
        Row r;
        try {
            r.from = std::stoi(cells[0]);
            r.to = std::stoi(cells[1]);
            r.beta_hi = std::stod(cells[2]);
            r.beta_lo = cells[3].empty() ? 0.01 * r.beta_hi : std::stod(cells[3]);
            r.weight = cells[4].empty() ? 1.0 : std::stod(cells[4]);
        } catch (const std::exception&) {
            std::ostringstream os;
            os << "edge-csv line " << line_no << ": malformed numeric field";
            throw ParseError(os.str());
        }
        r.line_no = line_no;
        min_id = std::min({min_id, r.from, r.to});
        max_id = std::max({max_id, r.from, r.to});
        rows.push_back(r);
    }
    if (rows.empty()) throw ParseError("edge-csv: no edge rows");

    const int base = (min_id >= 1) ? 1 : 0;
    const int n = max_id - base + 1;
    SpreadingNetwork net(n);
    for (const Row& r : rows) {
        EdgeParam e;
        e.from = r.from - base;
        e.to = r.to - base;
        e.beta_lower = r.beta_lo;
        e.beta_upper = r.beta_hi;
        e.weight = r.weight;
        try {
            net.add_edge(e);
        } catch (const ValidationError& ve) {
            std::ostringstream os;
            os << "edge-csv line " << r.line_no << ": " << ve.what();
            throw ParseError(os.str());
        }
    }
    net.apply_default_delta_ceiling();
    validate_network_or_throw(net);
    return net;
}

}  // namespace

SpreadingNetwork load_network(std::istream& in, NetworkFormat format) {
    return format == NetworkFormat::NetworkJson ? load_json(in) : load_csv(in);
}

SpreadingNetwork load_network(const std::string& path, NetworkFormat format) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    try {
        return load_network(in, format);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

SpreadingNetwork load_network_auto(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".csv") return load_network(path, NetworkFormat::EdgeCsv);
    return load_network(path, NetworkFormat::NetworkJson);
}

std::string network_to_json(const SpreadingNetwork& net) {
    json doc;
    doc["n"] = net.size();
    doc["delta_ceiling"] = net.delta_ceiling();
    doc["time_unit"] = "day";
    json nodes = json::array();
    for (int i = 0; i < net.size(); ++i) {
        const NodeParam& p = net.node(i);
        json nd;
        nd["id"] = i;
        nd["cost"] = p.cost;
        nd["delta"] = {p.delta_lower, p.delta_upper};
        nd["lambda"] = {p.lambda_lower, p.lambda_upper};
        nd["tau"] = {p.tau_lower, p.tau_upper};
        nd["w_delta"] = p.weight_delta;
        nd["w_lambda"] = p.weight_lambda;
        nd["w_tau"] = p.weight_tau;
        nodes.push_back(std::move(nd));
    }
    doc["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const EdgeParam& e : net.edges()) {
        json ed;
        ed["from"] = e.from;
        ed["to"] = e.to;
        ed["beta"] = {e.beta_lower, e.beta_upper};
        ed["w"] = e.weight;
        edges.push_back(std::move(ed));
    }
    doc["edges"] = std::move(edges);
    if (net.grid()) {
        doc["grid"] = {{"width", net.grid()->width}, {"height", net.grid()->height}};
    }
    return doc.dump(2);
}

void save_network_json(const SpreadingNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << network_to_json(net) << "\n";
}

}  // namespace spreadrisk
