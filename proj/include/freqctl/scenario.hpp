#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freqctl/case_io.hpp"
#include "freqctl/controllers.hpp"
#include "freqctl/dynamics.hpp"

namespace freqctl {

inline constexpr const char* kScenarioSchema = "freqctl-scenario/1";

/// Controller section of a scenario. Only the fields of the selected type are read.
struct ControllerConfig {
    std::string type = "gather_broadcast";  // gather_broadcast | decentralized | agc | dai
    double k = 60.0;
    std::optional<ResponseCurve> profile;  // replaces the case's base cost curve

    // gather_broadcast
    std::string weights = "cost";  // cost | uniform | damping | one_hot | explicit
    int one_hot_bus = 0;
    std::map<int, double> explicit_weights;
    PassiveWeights passive = PassiveWeights::Exclude;

    // decentralized
    std::string buses = "all";  // all | generators | list
    std::vector<int> bus_list;
    std::string bias = "none";  // none | gaussian | values
    double bias_sigma = 1.0;
    std::map<int, double> bias_values;

    // agc
    int measured_bus = 0;

    // dai
    std::string graph = "topology";  // topology | complete | ring
    double graph_weight = 1.0;
    std::vector<int> cheaters;
};

struct Disturbance {
    double t = 0.0;
    int bus = 0;
    double delta_mw = 0.0;  // change of the fixed injection; negative for extra demand
};

struct Variant {
    std::string name;
    ControllerConfig controller;
};

struct Scenario {
    explicit Scenario(CaseData case_data) : data(std::move(case_data)) {}

    std::string id;
    std::filesystem::path case_path;
    CaseData data;
    double horizon = 40.0;
    std::uint64_t seed = 0;
    IntegratorConfig integrator;
    std::string initial = "equilibrium";  // equilibrium | flat
    ControllerConfig controller;
    std::vector<Variant> variants;
    std::vector<Disturbance> disturbances;
    std::filesystem::path csv;
    std::filesystem::path summary;
};

/// Reads a scenario; the case path is resolved relative to the scenario file.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir,
                        const std::string& origin = "<string>");

/// Cost model of the case with the scaled entries moved onto `profile`.
CostModel with_profile(const CaseData& data, const ResponseCurve& profile);

/// Cost model a controller configuration works with.
CostModel controller_cost(const ControllerConfig& config, const CaseData& data);

ControllerSpec build_controller(const ControllerConfig& config, const CaseData& data, std::uint64_t seed);

/// Per-bus change of P (per unit) from all disturbances.
Vector disturbance_total(const Scenario& scenario);

}  // namespace freqctl
