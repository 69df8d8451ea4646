#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "freqctl/costs.hpp"
#include "freqctl/network.hpp"
#include "freqctl/types.hpp"

namespace freqctl {

/// k lambda' = -sum_i C_i omega_i, u_i = (J_i')^{-1}(lambda). Construct through
/// `make` so that the weights are convex: the pair (k, C) is rescaled jointly,
/// which leaves the closed loop unchanged.
struct GatherBroadcast {
    double k = 60.0;
    Vector weights;
    CostModel cost;

    static GatherBroadcast make(double k, Vector weights, CostModel cost);
};

/// How gather-and-broadcast handles measurement weights on passive buses.
enum class PassiveWeights {
    Exclude,   // zero them and renormalise over generators and responsive buses
    Implicit,  // keep them; passive frequencies come from the implicit-function relation
};

/// Measurement weights equal to the cost weights of a scaled family.
GatherBroadcast make_gather_broadcast(const NetworkModel& net, double k, const CostModel& cost,
                                      PassiveWeights passive = PassiveWeights::Exclude);

/// k_i lambda_i' = -(omega_i + eta_i), u_i = lambda_i on the buses in K. The
/// bias enters as an offset on the frequency measurement.
struct DecentralizedIntegral {
    std::vector<std::size_t> buses;
    Vector gains;  // per bus, used on K only
    Vector bias;   // per bus, zero for an unbiased controller
};

/// k lambda' = -omega_{i*}, u_i = lambda / A_i. A_i = +inf marks a bus that
/// does not participate.
struct Agc {
    double k = 60.0;
    std::size_t measured = 0;
    Vector participation;
};

/// k_i lambda_i' = -omega_i - sum_j w_ij (J_i'(u_i) - J_j'(u_j)), u_i = lambda_i.
/// A cheater ignores its neighbours and reports a zero marginal cost.
struct Dai {
    Vector gains;
    Matrix weights;
    CostModel cost;
    std::vector<std::size_t> cheaters;
};

using ControllerSpec = std::variant<GatherBroadcast, DecentralizedIntegral, Agc, Dai>;

std::string_view controller_tag(const ControllerSpec& spec);

/// Number of controller states: 1 for gather-and-broadcast and AGC, N otherwise.
std::size_t state_size(const ControllerSpec& spec, std::size_t n_buses);

/// Checks dimensions and structural requirements against an N-bus network.
void validate_controller(const ControllerSpec& spec, std::size_t n_buses);

Vector controller_output(const ControllerSpec& spec, const Vector& state);

/// du/dt along a controller-state velocity `state_rate`.
Vector output_rate(const ControllerSpec& spec, const Vector& state, const Vector& state_rate);

Vector controller_rhs(const ControllerSpec& spec, const Vector& state, const Vector& omega,
                      const Vector& u_current);

/// Which named special cases a gather-and-broadcast spec reduces to. An empty
/// list means none.
struct ReductionReport {
    std::vector<std::string> matches;
    std::string summary() const;
};

ReductionReport reduction_check(const ControllerSpec& spec, const NetworkModel& net);

/// Communication weights w_ij = weight on every branch of the network.
Matrix topology_weights(const NetworkModel& net, double weight = 1.0);

}  // namespace freqctl
