#include "freqctl/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "yaml_util.hpp"

namespace freqctl {

using detail::Reader;

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::vector<int> int_list(const Reader& r, const YAML::Node& node, const char* what) {
    if (!node.IsSequence()) r.fail(node, std::string(what) + " must be a list of bus ids");
    std::vector<int> out;
    for (const YAML::Node& v : node) out.push_back(r.as<int>(v, what));
    return out;
}

std::map<int, double> id_map(const Reader& r, const YAML::Node& node, const char* what) {
    if (!node.IsMap()) r.fail(node, std::string(what) + " must map bus ids to numbers");
    std::map<int, double> out;
    for (const auto& kv : node) out[r.as<int>(kv.first, what)] = r.as<double>(kv.second, what);
    return out;
}

ControllerConfig parse_controller(const Reader& r, const YAML::Node& node) {
    if (!node.IsMap()) r.fail(node, "controller must be a mapping");
    ControllerConfig c;
    c.type = r.get<std::string>(node, "type");
    c.k = r.get<double>(node, "k", 60.0);
    if (!(c.k > 0.0)) r.invalid(node["k"], "controller gain k must be positive");

    if (YAML::Node p = node["profile"]) {
        const auto family = r.get<std::string>(p, "family");
        try {
            if (family == "linear") {
                c.profile = ResponseCurve::linear(r.get<double>(p, "a", 1.0));
            } else if (family == "tanh") {
                c.profile = ResponseCurve::tanh_profile(r.get<double>(p, "k1"), r.get<int>(p, "k2"));
            } else {
                r.fail(p, "unknown profile family '" + family + "'");
            }
        } catch (const DomainError& e) {
            r.invalid(p, e.what());
        }
    }

    if (c.type == "gather_broadcast") {
        if (YAML::Node w = node["weights"]) {
            if (w.IsScalar()) {
                c.weights = r.as<std::string>(w, "weights");
                if (c.weights != "cost" && c.weights != "uniform" && c.weights != "damping") {
                    r.fail(w, "weights must be cost, uniform, damping, {one_hot: id} or {explicit: {...}}");
                }
            } else if (w.IsMap() && w["one_hot"]) {
                c.weights = "one_hot";
                c.one_hot_bus = r.get<int>(w, "one_hot");
            } else if (w.IsMap() && w["explicit"]) {
                c.weights = "explicit";
                c.explicit_weights = id_map(r, w["explicit"], "explicit weights");
            } else {
                r.fail(w, "unrecognised weights specification");
            }
        }
        const auto passive = r.get<std::string>(node, "passive", "exclude");
        if (passive == "exclude") {
            c.passive = PassiveWeights::Exclude;
        } else if (passive == "implicit") {
            c.passive = PassiveWeights::Implicit;
        } else {
            r.fail(node["passive"], "passive must be exclude or implicit");
        }
    } else if (c.type == "decentralized") {
        if (YAML::Node b = node["buses"]) {
            if (b.IsScalar()) {
                c.buses = r.as<std::string>(b, "buses");
                if (c.buses != "all" && c.buses != "generators") r.fail(b, "buses must be all, generators or a list");
            } else {
                c.buses = "list";
                c.bus_list = int_list(r, b, "buses");
            }
        }
        if (YAML::Node b = node["bias"]) {
            if (b.IsScalar() && r.as<std::string>(b, "bias") == "none") {
                c.bias = "none";
            } else if (b.IsMap() && b["gaussian"]) {
                c.bias = "gaussian";
                c.bias_sigma = r.get<double>(b, "gaussian");
                if (!(c.bias_sigma >= 0.0)) r.invalid(b, "gaussian bias sigma must be nonnegative");
            } else if (b.IsMap() && b["values"]) {
                c.bias = "values";
                c.bias_values = id_map(r, b["values"], "bias values");
            } else {
                r.fail(b, "bias must be none, {gaussian: sigma} or {values: {...}}");
            }
        }
    } else if (c.type == "agc") {
        c.measured_bus = r.get<int>(node, "measured");
    } else if (c.type == "dai") {
        c.graph = r.get<std::string>(node, "graph", "topology");
        if (c.graph != "topology" && c.graph != "complete" && c.graph != "ring") {
            r.fail(node["graph"], "graph must be topology, complete or ring");
        }
        c.graph_weight = r.get<double>(node, "graph_weight", 1.0);
        if (!(c.graph_weight > 0.0)) r.invalid(node["graph_weight"], "graph_weight must be positive");
        if (YAML::Node ch = node["cheaters"]) c.cheaters = int_list(r, ch, "cheaters");
    } else {
        r.fail(node["type"], "unknown controller type '" + c.type + "'");
    }
    return c;
}

void check_buses(const Reader& r, const YAML::Node& at, const CaseData& data, const ControllerConfig& c) {
    auto exists = [&](int id) {
        try {
            data.net.index_of(id);
        } catch (const ValidationError&) {
            r.invalid(at, "controller references missing bus " + std::to_string(id));
        }
    };
    if (c.type == "gather_broadcast" && c.weights == "one_hot") exists(c.one_hot_bus);
    for (const auto& kv : c.explicit_weights) exists(kv.first);
    for (int id : c.bus_list) exists(id);
    for (const auto& kv : c.bias_values) exists(kv.first);
    if (c.type == "agc") exists(c.measured_bus);
    for (int id : c.cheaters) exists(id);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir, const std::string& origin) {
    const Reader r(origin);
    const YAML::Node root = detail::load_yaml(text, origin);
    if (!root.IsMap()) throw ParseError(origin + ": a scenario file must be a mapping");
    const auto schema = r.get<std::string>(root, "schema");
    if (schema != kScenarioSchema) r.fail(root["schema"], "unsupported schema '" + schema + "'");

    const auto id = r.get<std::string>(root, "id");
    const auto case_path = base_dir / r.get<std::string>(root, "case");
    Scenario s(load_case(case_path));
    s.id = id;
    s.case_path = case_path;
    s.horizon = r.get<double>(root, "horizon", 40.0);
    if (!(s.horizon > 0.0)) r.invalid(root["horizon"], "horizon must be positive");
    s.seed = r.get<std::uint64_t>(root, "seed", 0);
    s.initial = r.get<std::string>(root, "initial", "equilibrium");
    if (s.initial != "equilibrium" && s.initial != "flat") r.fail(root["initial"], "initial must be equilibrium or flat");

    if (YAML::Node in = root["integrator"]) {
        s.integrator.dt = r.get<double>(in, "dt", s.integrator.dt);
        s.integrator.newton_tol = r.get<double>(in, "newton_tol", s.integrator.newton_tol);
        s.integrator.newton_max_iter = r.get<int>(in, "newton_max_iter", s.integrator.newton_max_iter);
        s.integrator.record_every = r.get<int>(in, "record_every", s.integrator.record_every);
        try {
            s.integrator.validate();
        } catch (const DomainError& e) {
            r.invalid(in, e.what());
        }
    }

    const YAML::Node ctrl = r.require(root, "controller");
    s.controller = parse_controller(r, ctrl);
    check_buses(r, ctrl, s.data, s.controller);

    if (YAML::Node vars = root["variants"]) {
        if (!vars.IsSequence()) r.fail(vars, "variants must be a list");
        for (const YAML::Node& v : vars) {
            Variant var;
            var.name = r.get<std::string>(v, "name");
            for (const Variant& other : s.variants) {
                if (other.name == var.name) r.invalid(v, "duplicate variant name '" + var.name + "'");
            }
            var.controller = parse_controller(r, r.require(v, "controller"));
            check_buses(r, v, s.data, var.controller);
            s.variants.push_back(std::move(var));
        }
    }

    if (YAML::Node dist = root["disturbances"]) {
        if (!dist.IsSequence()) r.fail(dist, "disturbances must be a list");
        for (const YAML::Node& d : dist) {
            Disturbance x;
            x.t = r.get<double>(d, "t");
            x.bus = r.get<int>(d, "bus");
            x.delta_mw = r.get<double>(d, "delta_mw");
            if (!(x.t >= 0.0 && x.t <= s.horizon)) r.invalid(d, "disturbance time outside [0, horizon]");
            try {
                s.data.net.index_of(x.bus);
            } catch (const ValidationError&) {
                r.invalid(d, "disturbance at missing bus " + std::to_string(x.bus));
            }
            s.disturbances.push_back(x);
        }
    }

    if (YAML::Node out = root["outputs"]) {
        s.csv = r.get<std::string>(out, "csv", "");
        s.summary = r.get<std::string>(out, "summary", "");
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open scenario file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.parent_path(), path.string());
}

CostModel with_profile(const CaseData& data, const ResponseCurve& profile) {
    std::vector<BusCost> buses;
    for (std::size_t i = 0; i < data.cost.size(); ++i) {
        const BusCost& b = data.cost.bus(i);
        const auto [lo, hi] = b.curve.range();
        const bool scaled = b.controlled && b.curve == data.profile && b.lower == b.weight * lo && b.upper == b.weight * hi;
        buses.push_back(scaled ? CostModel::scaled_bus(profile, b.weight) : b);
    }
    return CostModel(std::move(buses));
}

CostModel controller_cost(const ControllerConfig& config, const CaseData& data) {
    return config.profile ? with_profile(data, *config.profile) : data.cost;
}

ControllerSpec build_controller(const ControllerConfig& c, const CaseData& data, std::uint64_t seed) {
    const NetworkModel& net = data.net;
    const std::size_t n = net.size();
    const CostModel cost = controller_cost(c, data);

    if (c.type == "gather_broadcast") {
        if (c.weights == "cost") return make_gather_broadcast(net, c.k, cost, c.passive);
        Vector w = Vector::Zero(idx(n));
        if (c.weights == "uniform") {
            w.setOnes();
        } else if (c.weights == "damping") {
            w = net.damping();
        } else if (c.weights == "one_hot") {
            w[idx(net.index_of(c.one_hot_bus))] = 1.0;
        } else {
            for (const auto& [id, v] : c.explicit_weights) w[idx(net.index_of(id))] = v;
        }
        if (c.passive == PassiveWeights::Exclude) {
            for (std::size_t i : net.passive()) w[idx(i)] = 0.0;
        }
        return GatherBroadcast::make(c.k, std::move(w), cost);
    }

    if (c.type == "decentralized") {
        DecentralizedIntegral d;
        if (c.buses == "all") {
            for (std::size_t i = 0; i < n; ++i) d.buses.push_back(i);
        } else if (c.buses == "generators") {
            d.buses = net.generators();
        } else {
            for (int id : c.bus_list) d.buses.push_back(net.index_of(id));
        }
        d.gains = Vector::Constant(idx(n), c.k);
        d.bias = Vector::Zero(idx(n));
        if (c.bias == "gaussian") {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> normal(0.0, c.bias_sigma);
            for (std::size_t i : d.buses) d.bias[idx(i)] = normal(rng);
        } else if (c.bias == "values") {
            for (const auto& [id, v] : c.bias_values) d.bias[idx(net.index_of(id))] = v;
        }
        return d;
    }

    if (c.type == "agc") {
        Agc a;
        a.k = c.k;
        a.measured = net.index_of(c.measured_bus);
        a.participation = Vector::Constant(idx(n), CostModel::inf());
        // participation 1/A_i taken from the quadratic cost of each bus
        for (std::size_t i = 0; i < n; ++i) {
            const BusCost& b = cost.bus(i);
            if (!b.controlled) continue;
            if (b.curve.kind() != ResponseCurve::Kind::Linear) {
                throw ValidationError("AGC participation factors need quadratic costs");
            }
            a.participation[idx(i)] = b.curve.a() / b.weight;
        }
        return a;
    }

    Dai d;
    d.gains = Vector::Constant(idx(n), c.k);
    d.cost = cost;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
        if (cost.controlled(i)) active.push_back(i);
    }
    if (c.graph == "topology") {
        d.weights = topology_weights(net, c.graph_weight);
    } else {
        d.weights = Matrix::Zero(idx(n), idx(n));
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const bool ring_edge = b == a + 1 || (a == 0 && b + 1 == active.size());
                if (c.graph == "complete" || ring_edge) {
                    d.weights(idx(active[a]), idx(active[b])) = c.graph_weight;
                    d.weights(idx(active[b]), idx(active[a])) = c.graph_weight;
                }
            }
        }
    }
    for (int id : c.cheaters) d.cheaters.push_back(net.index_of(id));
    return d;
}

Vector disturbance_total(const Scenario& s) {
    Vector dp = Vector::Zero(idx(s.data.net.size()));
    for (const Disturbance& d : s.disturbances) {
        dp[idx(s.data.net.index_of(d.bus))] += d.delta_mw / s.data.net.base_mva();
    }
    return dp;
}

}  // namespace freqctl
