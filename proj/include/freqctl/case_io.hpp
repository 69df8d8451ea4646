#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "freqctl/costs.hpp"
#include "freqctl/network.hpp"

namespace freqctl {

inline constexpr const char* kCaseSchema = "freqctl-case/1";

/// A parsed case file: the network, its per-bus costs and descriptive metadata.
struct CaseData {
    std::string name;
    std::map<std::string, std::string> metadata;
    NetworkModel net;
    ResponseCurve profile;  // base curve shared by the scaled cost entries
    CostModel cost;
};

CaseData load_case(const std::filesystem::path& path);
CaseData parse_case(const std::string& text, const std::string& origin = "<string>");

std::string serialize_case(const CaseData& data);
void save_case(const CaseData& data, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace freqctl
