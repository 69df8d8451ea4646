#include "freqctl/case_io.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "yaml_util.hpp"

namespace freqctl {

using detail::Reader;

std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
    if (std::isnan(x)) return ".nan";
    return fmt::format("{}", x);
}

namespace {

BusKind parse_kind(const Reader& r, const YAML::Node& node) {
    const auto s = r.as<std::string>(node, "kind");
    if (s == "generator") return BusKind::Generator;
    if (s == "responsive") return BusKind::FrequencyResponsive;
    if (s == "passive") return BusKind::Passive;
    r.fail(node, "unknown bus kind '" + s + "' (expected generator, responsive or passive)");
}

ResponseCurve parse_profile(const Reader& r, const YAML::Node& node) {
    if (!node || node.IsNull()) return ResponseCurve::linear(1.0);
    const auto family = r.get<std::string>(node, "family");
    try {
        if (family == "linear") return ResponseCurve::linear(r.get<double>(node, "a", 1.0));
        if (family == "tanh") return ResponseCurve::tanh_profile(r.get<double>(node, "k1"), r.get<int>(node, "k2"));
    } catch (const DomainError& e) {
        r.invalid(node, e.what());
    }
    r.fail(node, "unknown cost profile family '" + family + "'");
}

BusCost parse_bus_cost(const Reader& r, const YAML::Node& node, const ResponseCurve& profile) {
    if (!node || node.IsNull()) return CostModel::uncontrolled();
    if (!node.IsMap()) r.fail(node, "cost must be a mapping");
    const auto family = r.get<std::string>(node, "family", "scaled");
    try {
        if (family == "scaled") {
            const double c = r.get<double>(node, "C");
            if (!(c > 0.0)) r.invalid(node, "cost weight C must be positive (omit the cost for an uncontrolled bus)");
            return CostModel::scaled_bus(profile, c);
        }
        if (family == "quadratic") {
            double lo = -CostModel::inf(), hi = CostModel::inf();
            if (YAML::Node b = node["bounds"]) {
                if (!b.IsSequence() || b.size() != 2) r.fail(b, "bounds must be [lower, upper]");
                lo = r.as<double>(b[0], "bounds");
                hi = r.as<double>(b[1], "bounds");
                if (!(lo <= 0.0 && hi >= 0.0)) r.invalid(b, "bounds must satisfy lower <= 0 <= upper");
            }
            return CostModel::quadratic_bus(r.get<double>(node, "A"), lo, hi);
        }
    } catch (const DomainError& e) {
        r.invalid(node, e.what());
    }
    r.fail(node, "unknown cost family '" + family + "'");
}

}  // namespace

CaseData parse_case(const std::string& text, const std::string& origin) {
    const Reader r(origin);
    const YAML::Node root = detail::load_yaml(text, origin);
    if (!root.IsMap()) throw ParseError(origin + ": a case file must be a mapping");
    const auto schema = r.get<std::string>(root, "schema");
    if (schema != kCaseSchema) r.fail(root["schema"], "unsupported schema '" + schema + "'");

    const std::string name = r.get<std::string>(root, "name", "unnamed");
    const double base = r.get<double>(root, "base_mva", 100.0);
    if (!(base > 0.0)) r.invalid(root["base_mva"], "base_mva must be positive");
    const ResponseCurve profile = parse_profile(r, root["cost_profile"]);

    std::map<std::string, std::string> metadata;
    if (YAML::Node meta = root["metadata"]) {
        if (!meta.IsMap()) r.fail(meta, "metadata must be a mapping");
        for (const auto& kv : meta) metadata[kv.first.as<std::string>()] = r.as<std::string>(kv.second, "metadata");
    }

    const YAML::Node buses_node = r.require(root, "buses");
    if (!buses_node.IsSequence() || buses_node.size() == 0) r.fail(buses_node, "buses must be a nonempty list");
    std::vector<Bus> buses;
    std::vector<BusCost> costs;
    std::map<int, std::size_t> index;
    for (const YAML::Node& b : buses_node) {
        Bus bus;
        bus.id = r.get<int>(b, "id");
        if (index.count(bus.id)) r.invalid(b, "duplicate bus id " + std::to_string(bus.id));
        bus.kind = parse_kind(r, r.require(b, "kind"));
        bus.inertia = r.get<double>(b, "M", 0.0);
        bus.damping = r.get<double>(b, "D", 0.0);
        bus.injection = r.get<double>(b, "P", 0.0);
        try {
            validate_bus(bus);
        } catch (const ValidationError& e) {
            r.invalid(b, e.what());
        }
        index[bus.id] = buses.size();
        buses.push_back(bus);
        costs.push_back(parse_bus_cost(r, b["cost"], profile));
    }

    std::vector<Branch> branches;
    const YAML::Node branch_node = r.require(root, "branches");
    if (!branch_node.IsSequence()) r.fail(branch_node, "branches must be a list");
    std::map<std::pair<std::size_t, std::size_t>, bool> seen;
    for (const YAML::Node& e : branch_node) {
        const int i = r.get<int>(e, "i");
        const int j = r.get<int>(e, "j");
        const std::string label = "branch " + std::to_string(i) + "-" + std::to_string(j);
        if (!index.count(i)) r.invalid(e, label + " references missing bus " + std::to_string(i));
        if (!index.count(j)) r.invalid(e, label + " references missing bus " + std::to_string(j));
        if (i == j) r.invalid(e, label + " is a self loop");
        const double b = r.get<double>(e, "B");
        if (!(b > 0.0) || !std::isfinite(b)) r.invalid(e, label + " needs a positive susceptance");
        auto key = std::minmax(index[i], index[j]);
        if (seen.count(key)) r.invalid(e, label + " is listed twice");
        seen[key] = true;
        branches.push_back({index[i], index[j], b});
    }

    try {
        NetworkModel net(std::move(buses), std::move(branches), base);
        return CaseData{name, std::move(metadata), std::move(net), profile, CostModel(std::move(costs))};
    } catch (const ValidationError& e) {
        throw ValidationError(origin + ": " + e.what());
    }
}

CaseData load_case(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open case file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str(), path.string());
}

std::string serialize_case(const CaseData& data) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "schema" << YAML::Value << kCaseSchema;
    out << YAML::Key << "name" << YAML::Value << data.name;
    out << YAML::Key << "base_mva" << YAML::Value << format_double(data.net.base_mva());
    if (!data.metadata.empty()) {
        out << YAML::Key << "metadata" << YAML::Value << YAML::BeginMap;
        for (const auto& [k, v] : data.metadata) out << YAML::Key << k << YAML::Value << YAML::DoubleQuoted << v;
        out << YAML::EndMap;
    }
    out << YAML::Key << "cost_profile" << YAML::Value << YAML::Flow << YAML::BeginMap;
    if (data.profile.kind() == ResponseCurve::Kind::Linear) {
        out << YAML::Key << "family" << YAML::Value << "linear";
        out << YAML::Key << "a" << YAML::Value << format_double(data.profile.a());
    } else {
        out << YAML::Key << "family" << YAML::Value << "tanh";
        out << YAML::Key << "k1" << YAML::Value << format_double(data.profile.k1());
        out << YAML::Key << "k2" << YAML::Value << data.profile.k2();
    }
    out << YAML::EndMap;

    out << YAML::Key << "buses" << YAML::Value << YAML::BeginSeq;
    for (std::size_t i = 0; i < data.net.size(); ++i) {
        const Bus& b = data.net.bus(i);
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << b.id;
        out << YAML::Key << "kind" << YAML::Value << std::string(to_string(b.kind));
        if (b.inertia != 0.0) out << YAML::Key << "M" << YAML::Value << format_double(b.inertia);
        if (b.damping != 0.0) out << YAML::Key << "D" << YAML::Value << format_double(b.damping);
        out << YAML::Key << "P" << YAML::Value << format_double(b.injection);
        const BusCost& c = data.cost.bus(i);
        if (c.controlled) {
            out << YAML::Key << "cost" << YAML::Value << YAML::Flow << YAML::BeginMap;
            const auto [lo, hi] = c.curve.range();
            const bool natural = c.lower == c.weight * lo && c.upper == c.weight * hi;
            if (c.curve == data.profile && natural) {
                out << YAML::Key << "C" << YAML::Value << format_double(c.weight);
            } else if (c.curve.kind() == ResponseCurve::Kind::Linear && c.weight == 1.0) {
                out << YAML::Key << "family" << YAML::Value << "quadratic";
                out << YAML::Key << "A" << YAML::Value << format_double(c.curve.a());
                if (std::isfinite(c.lower) || std::isfinite(c.upper)) {
                    out << YAML::Key << "bounds" << YAML::Value << YAML::Flow << YAML::BeginSeq
                        << format_double(c.lower) << format_double(c.upper) << YAML::EndSeq;
                }
            } else {
                throw ValidationError("bus " + std::to_string(b.id) + ": cost has no case-file representation");
            }
            out << YAML::EndMap;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "branches" << YAML::Value << YAML::BeginSeq;
    for (const Branch& br : data.net.branches()) {
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "i" << YAML::Value << data.net.bus(br.from).id;
        out << YAML::Key << "j" << YAML::Value << data.net.bus(br.to).id;
        out << YAML::Key << "B" << YAML::Value << format_double(br.susceptance);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void save_case(const CaseData& data, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw ParseError(path.string() + ": cannot write case file");
    os << serialize_case(data);
}

}  // namespace freqctl
