#pragma once

#include "freqctl/case_io.hpp"
#include "freqctl/network.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline std::filesystem::path data_path(const std::string& name) {
    return std::filesystem::path(FREQCTL_DATA_DIR) / name;
}

inline freqctl::Bus generator(int id, double m, double d, double p) {
    return {id, freqctl::BusKind::Generator, m, d, p};
}

inline freqctl::Bus responsive(int id, double d, double p) {
    return {id, freqctl::BusKind::FrequencyResponsive, 0.0, d, p};
}

inline freqctl::Bus passive(int id, double p) {
    return {id, freqctl::BusKind::Passive, 0.0, 0.0, p};
}

// generator 1 feeding a passive load bus 2 over B = 1
inline freqctl::NetworkModel two_bus(double p1 = 0.5, double p2 = -0.5) {
    return freqctl::NetworkModel({generator(1, 2.0, 1.0, p1), passive(2, p2)}, {{0, 1, 1.0}});
}

inline freqctl::NetworkModel triangle(const std::vector<freqctl::Bus>& buses) {
    return freqctl::NetworkModel(buses, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}});
}

inline freqctl::Vector random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    freqctl::Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
    return v;
}

inline const freqctl::CaseData& ieee39() {
    static const freqctl::CaseData data = freqctl::load_case(data_path("ieee39.case"));
    return data;
}

}  // namespace testing
