#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "freqctl/analysis.hpp"
#include "freqctl/dispatch.hpp"
#include "freqctl/scenario.hpp"

namespace freqctl {

struct RunSummary {
    std::string scenario;
    std::string variant;
    std::string controller;
    FrequencyMetrics metrics;
    double max_spread = 0.0;    // over all recorded samples
    double final_spread = 0.0;  // at the horizon
    KktReport kkt;
    double u_error = 0.0;  // max_i |u_i(T) - u_i*|
    double dispatch_cost = 0.0;
    double optimal_cost = 0.0;
    double cost_gap = 0.0;
    double lambda_star = 0.0;
    bool feasible = true;
    double total_disturbance_mw = 0.0;
    std::size_t steps = 0;
    std::size_t samples = 0;

    /// key=value lines, one per field.
    std::string to_text() const;
};

struct RunResult {
    TrajectoryRecord trajectory;
    RunSummary summary;
    Vector u_star;
    std::optional<Equilibrium> final_equilibrium;
};

struct RunOptions {
    bool write_files = true;
    double settling_threshold = 1e-3;
    std::string variant_name;
};

RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Writes the trajectory as CSV with 17 significant digits.
void write_csv(const TrajectoryRecord& traj, const NetworkModel& net, std::ostream& os);

struct ComparisonRow {
    std::string variant;
    std::string controller;
    bool ok = false;
    std::string error;
    RunSummary summary;
};

/// Runs the selected variants (all when `names` is empty) concurrently on the
/// same disturbances and seed. Rows keep the order of the scenario's variant list;
/// a failing variant is reported in its row and does not stop the others.
std::vector<ComparisonRow> compare_controllers(const Scenario& scenario, const std::vector<std::string>& names = {},
                                               const RunOptions& options = {});

std::string format_comparison(const std::vector<ComparisonRow>& rows);

}  // namespace freqctl
