#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "freqctl/controllers.hpp"
#include "freqctl/network.hpp"
#include "freqctl/types.hpp"

namespace freqctl {

/// Closed-loop state. theta holds every bus angle (passive entries are the
/// algebraic solution). omega is a state on generators only; the responsive and
/// passive entries are derived rates, refreshed after every step.
struct SystemState {
    double t = 0.0;
    Vector theta;
    Vector omega;
    Vector ctrl;
};

struct IntegratorConfig {
    double dt = 1e-3;
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    int record_every = 1;
    int max_halvings = 5;

    void validate() const;
};

struct AlgebraicOptions {
    double tol = 1e-10;
    int max_iter = 50;
};

/// Solves 0 = P_i + u_i - f_i(theta) on the passive buses for theta_P, starting
/// from `guess` (ordering as net.passive()). The dynamic-bus entries of `theta`
/// are held fixed.
Vector solve_algebraic(const NetworkModel& net, const Vector& theta, const Vector& u, const Vector& guess,
                       const AlgebraicOptions& options = {}, int* iterations = nullptr);

/// Time derivative of the closed loop. dtheta and omega_full are N-vectors
/// (dtheta on passive buses is the implicit rate); domega is nonzero only on
/// generators.
struct Derivative {
    Vector dtheta;
    Vector domega;
    Vector dctrl;
    Vector u;
    Vector omega;  // G: state, F: dtheta, P: implicit dtheta
};

/// Evaluates the vector field. The passive angles in `state.theta` are used as
/// the Newton starting point and are replaced by the consistent solution.
Derivative rhs(const NetworkModel& net, const ControllerSpec& spec, SystemState& state,
               const AlgebraicOptions& options = {});

/// One classical RK4 step of size config.dt, retried as two half steps (up to
/// config.max_halvings deep) when an inner algebraic solve fails.
SystemState step(const NetworkModel& net, const ControllerSpec& spec, const SystemState& state,
                 const IntegratorConfig& config);

/// Makes passive angles and derived frequencies consistent with the rest of the state.
void make_consistent(const NetworkModel& net, const ControllerSpec& spec, SystemState& state,
                     const AlgebraicOptions& options = {});

struct Equilibrium {
    Vector theta;
    Vector ctrl;
    Vector u;
    double lambda = 0.0;  // market clearing price where the controller has one
    double residual = 0.0;
    bool secure = true;
    std::string warning;

    SystemState state(std::size_t n) const;
};

/// Closed-loop equilibrium with omega = 0 and bus 0 as the angle reference.
/// Decentralized integral control has a continuum of equilibria and is rejected.
Equilibrium find_equilibrium(const NetworkModel& net, const ControllerSpec& spec);

/// Angles solving f(theta) = P + u for a prescribed balanced profile u.
Vector solve_power_flow(const NetworkModel& net, const Vector& u, double tol = 1e-12, int max_iter = 100,
                        double* residual = nullptr);

}  // namespace freqctl
