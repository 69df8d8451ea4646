#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "freqctl/controllers.hpp"
#include "freqctl/costs.hpp"
#include "freqctl/dynamics.hpp"
#include "freqctl/network.hpp"

namespace freqctl {

struct Sample {
    double t = 0.0;
    Vector theta;
    Vector omega;
    Vector ctrl;
    Vector u;
    double hamiltonian = std::numeric_limits<double>::quiet_NaN();
};

struct TrajectoryRecord {
    std::string scenario_id;
    std::string controller;
    std::vector<Sample> samples;

    /// Throws ValidationError unless t is strictly increasing and dimensions agree.
    void validate() const;
};

/// sum_i (P_i + u_i) over the total damping of generators and responsive buses.
double sync_frequency(const NetworkModel& net, const Vector& u);

/// Incremental energy of a gather-and-broadcast loop with a scaled cost:
/// Bregman distance of U to theta*, kinetic energy, and k/a times the Bregman
/// distance of the Luré integral to lambda*, where the measurement weights equal
/// a times the cost weights.
double hamiltonian(const NetworkModel& net, const ControllerSpec& spec, const SystemState& state,
                   const Equilibrium& equilibrium);

/// -omega^T D omega over generators and responsive buses.
double dissipation(const NetworkModel& net, const Vector& omega);

/// Largest difference of marginal costs among controlled buses that are not at
/// a capacity limit.
double marginal_cost_spread(const CostModel& cost, const Vector& u);

struct FrequencyMetrics {
    double nadir = 0.0;
    std::optional<double> settling_time;  // absent when the run never settles
    double steady_state_error = 0.0;
};

FrequencyMetrics frequency_metrics(const TrajectoryRecord& traj, double threshold = 1e-3);

}  // namespace freqctl
