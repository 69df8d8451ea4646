#include "freqctl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "freqctl/dispatch.hpp"

namespace freqctl {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

Vector gather(const Vector& v, const std::vector<std::size_t>& ids) {
    Vector out(idx(ids.size()));
    for (std::size_t k = 0; k < ids.size(); ++k) out[idx(k)] = v[idx(ids[k])];
    return out;
}

void scatter(Vector& v, const std::vector<std::size_t>& ids, const Vector& values) {
    for (std::size_t k = 0; k < ids.size(); ++k) v[idx(ids[k])] = values[idx(k)];
}

Matrix submatrix(const Matrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    Matrix out(idx(rows.size()), idx(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) out(idx(r), idx(c)) = m(idx(rows[r]), idx(cols[c]));
    }
    return out;
}

std::vector<std::size_t> dynamic_buses(const NetworkModel& net) {
    std::vector<std::size_t> d;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (net.is_dynamic(i)) d.push_back(i);
    }
    return d;
}

// Factorises a Jacobian block and rejects it when it is numerically singular,
// which happens only when angle differences leave the security region.
Eigen::LDLT<Matrix> factor_or_throw(const Matrix& h, const char* what) {
    Eigen::LDLT<Matrix> ldlt(h);
    const Vector d = ldlt.vectorD();
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success || d.cwiseAbs().minCoeff() <= 1e-12 * scale) {
        throw SecurityViolation(std::string(what) + ": singular power-flow Jacobian");
    }
    return ldlt;
}

// Damped Newton on r(x) = b - f(theta(x)) for the buses in `free`.
template <class Residual>
int damped_newton(const NetworkModel& net, Vector& theta, const std::vector<std::size_t>& free, Residual residual,
                  double tol, int max_iter, const char* what, double* final_residual) {
    Vector r = residual(theta);
    for (int it = 0;; ++it) {
        const double worst = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
        if (final_residual != nullptr) *final_residual = worst;
        if (worst <= tol) return it;
        Eigen::Index bad = 0;
        r.cwiseAbs().maxCoeff(&bad);
        if (it >= max_iter) {
            throw AlgebraicSolveError(std::string(what) + ": Newton did not converge (residual " +
                                          std::to_string(worst) + ")",
                                      free[static_cast<std::size_t>(bad)], worst);
        }
        const Matrix h = submatrix(hessian(net, theta), free, free);
        const Vector dx = factor_or_throw(h, what).solve(r);
        const double norm = r.norm();
        double s = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            Vector trial = theta;
            for (std::size_t k = 0; k < free.size(); ++k) trial[idx(free[k])] += s * dx[idx(k)];
            Vector rt = residual(trial);
            if (rt.norm() <= (1.0 - 1e-4 * s) * norm || rt.cwiseAbs().maxCoeff() <= tol) {
                theta = std::move(trial);
                r = std::move(rt);
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            throw AlgebraicSolveError(std::string(what) + ": damped Newton could not reduce the residual",
                                      free[static_cast<std::size_t>(bad)], worst);
        }
    }
}

}  // namespace

void IntegratorConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("integrator dt must be positive");
    if (!(newton_tol > 0.0)) throw DomainError("newton_tol must be positive");
    if (newton_max_iter <= 0) throw DomainError("newton_max_iter must be positive");
    if (record_every <= 0) throw DomainError("record_every must be positive");
    if (max_halvings < 0) throw DomainError("max_halvings must be nonnegative");
}

Vector solve_algebraic(const NetworkModel& net, const Vector& theta_in, const Vector& u, const Vector& guess,
                       const AlgebraicOptions& opt, int* iterations) {
    const auto& passive = net.passive();
    const auto n = idx(net.size());
    require_size(theta_in, n, "solve_algebraic theta");
    require_size(u, n, "solve_algebraic u");
    require_size(guess, idx(passive.size()), "solve_algebraic guess");
    if (passive.empty()) {
        if (iterations != nullptr) *iterations = 0;
        return Vector(0);
    }
    Vector theta = theta_in;
    scatter(theta, passive, guess);
    const Vector b = net.injections() + u;
    auto residual = [&](const Vector& th) {
        const Vector f = flow_injections(net, th);
        Vector r(idx(passive.size()));
        for (std::size_t k = 0; k < passive.size(); ++k) r[idx(k)] = b[idx(passive[k])] - f[idx(passive[k])];
        return r;
    };
    const int it = damped_newton(net, theta, passive, residual, opt.tol, opt.max_iter, "passive-bus solve", nullptr);
    if (iterations != nullptr) *iterations = it;
    return gather(theta, passive);
}

Derivative rhs(const NetworkModel& net, const ControllerSpec& spec, SystemState& state,
               const AlgebraicOptions& opt) {
    const auto n = idx(net.size());
    require_size(state.theta, n, "state theta");
    require_size(state.omega, n, "state omega");
    const auto& passive = net.passive();

    Derivative d;
    d.u = controller_output(spec, state.ctrl);
    if (!passive.empty()) {
        scatter(state.theta, passive, solve_algebraic(net, state.theta, d.u, gather(state.theta, passive), opt));
    }
    const Vector balance = net.injections() + d.u - flow_injections(net, state.theta);

    d.dtheta = Vector::Zero(n);
    d.domega = Vector::Zero(n);
    d.omega = Vector::Zero(n);
    for (std::size_t i : net.generators()) {
        const auto k = idx(i);
        d.dtheta[k] = state.omega[k];
        d.omega[k] = state.omega[k];
        d.domega[k] = (-net.damping()[k] * state.omega[k] + balance[k]) / net.inertia()[k];
    }
    for (std::size_t i : net.frequency_responsive()) {
        const auto k = idx(i);
        d.dtheta[k] = balance[k] / net.damping()[k];
        d.omega[k] = d.dtheta[k];
    }

    if (passive.empty()) {
        d.dctrl = controller_rhs(spec, state.ctrl, d.omega, d.u);
        return d;
    }

    // Differentiating the passive balance gives H_PP w_P = du_P - H_PD w_D. The
    // controller may itself listen to w_P, so du_P is affine in w_P; with the
    // map probed along unit vectors the combined system stays linear.
    const auto dyn = dynamic_buses(net);
    const Matrix h = hessian(net, state.theta);
    const Matrix hpp = submatrix(h, passive, passive);
    const Vector coupling = submatrix(h, passive, dyn) * gather(d.dtheta, dyn);
    auto passive_rate = [&](const Vector& w_p) {
        Vector omega = d.omega;
        scatter(omega, passive, w_p);
        const Vector rate = controller_rhs(spec, state.ctrl, omega, d.u);
        return gather(output_rate(spec, state.ctrl, rate), passive);
    };
    const auto np = idx(passive.size());
    const Vector base = passive_rate(Vector::Zero(np));
    Matrix sens(np, np);
    for (Eigen::Index j = 0; j < np; ++j) sens.col(j) = passive_rate(Vector::Unit(np, j)) - base;
    const Matrix a = hpp - sens;
    const Vector w_p = Eigen::PartialPivLU<Matrix>(a).solve(base - coupling);
    if (!w_p.allFinite()) throw SecurityViolation("passive-bus frequency relation is singular");
    scatter(d.omega, passive, w_p);
    scatter(d.dtheta, passive, w_p);
    d.dctrl = controller_rhs(spec, state.ctrl, d.omega, d.u);
    return d;
}

void make_consistent(const NetworkModel& net, const ControllerSpec& spec, SystemState& state,
                     const AlgebraicOptions& opt) {
    const Derivative d = rhs(net, spec, state, opt);
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (net.kind(i) != BusKind::Generator) state.omega[idx(i)] = d.omega[idx(i)];
    }
}

namespace {

SystemState advance(const NetworkModel& net, const SystemState& s0, const Derivative& d, double h) {
    SystemState s = s0;
    s.t = s0.t + h;
    // passive angles get the same Euler prediction: a warm start for Newton
    s.theta = s0.theta + h * d.dtheta;
    for (std::size_t i : net.generators()) s.omega[idx(i)] += h * d.domega[idx(i)];
    s.ctrl = s0.ctrl + h * d.dctrl;
    return s;
}

Derivative combine(const Derivative& k1, const Derivative& k2, const Derivative& k3, const Derivative& k4) {
    Derivative d;
    d.dtheta = (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta) / 6.0;
    d.domega = (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega) / 6.0;
    d.dctrl = (k1.dctrl + 2.0 * k2.dctrl + 2.0 * k3.dctrl + k4.dctrl) / 6.0;
    return d;
}

SystemState rk4(const NetworkModel& net, const ControllerSpec& spec, const SystemState& s0, double h,
                const AlgebraicOptions& opt) {
    SystemState a = s0;
    const Derivative k1 = rhs(net, spec, a, opt);
    SystemState b = advance(net, a, k1, 0.5 * h);
    const Derivative k2 = rhs(net, spec, b, opt);
    SystemState c = advance(net, a, k2, 0.5 * h);
    const Derivative k3 = rhs(net, spec, c, opt);
    SystemState e = advance(net, a, k3, h);
    const Derivative k4 = rhs(net, spec, e, opt);
    SystemState out = advance(net, a, combine(k1, k2, k3, k4), h);
    for (std::size_t i : net.passive()) out.theta[idx(i)] = e.theta[idx(i)];
    make_consistent(net, spec, out, opt);
    return out;
}

SystemState step_with_retry(const NetworkModel& net, const ControllerSpec& spec, const SystemState& s0, double h,
                            int depth, const IntegratorConfig& cfg, const AlgebraicOptions& opt) {
    try {
        return rk4(net, spec, s0, h, opt);
    } catch (const NumericalError&) {
        if (depth >= cfg.max_halvings) throw;
    }
    const SystemState mid = step_with_retry(net, spec, s0, 0.5 * h, depth + 1, cfg, opt);
    return step_with_retry(net, spec, mid, 0.5 * h, depth + 1, cfg, opt);
}

}  // namespace

SystemState step(const NetworkModel& net, const ControllerSpec& spec, const SystemState& state,
                 const IntegratorConfig& config) {
    config.validate();
    const AlgebraicOptions opt{config.newton_tol, config.newton_max_iter};
    SystemState out = step_with_retry(net, spec, state, config.dt, 0, config, opt);
    out.t = state.t + config.dt;
    return out;
}

SystemState Equilibrium::state(std::size_t n) const {
    SystemState s;
    s.t = 0.0;
    s.theta = theta;
    s.omega = Vector::Zero(idx(n));
    s.ctrl = ctrl;
    return s;
}

Vector solve_power_flow(const NetworkModel& net, const Vector& u, double tol, int max_iter, double* residual) {
    const auto n = idx(net.size());
    require_size(u, n, "solve_power_flow u");
    const Vector b = net.injections() + u;
    std::vector<std::size_t> free;
    for (std::size_t i = 1; i < net.size(); ++i) free.push_back(i);
    Vector theta = Vector::Zero(n);
    auto reduced = [&](const Vector& th) {
        const Vector f = flow_injections(net, th);
        Vector r(idx(free.size()));
        for (std::size_t k = 0; k < free.size(); ++k) r[idx(k)] = b[idx(free[k])] - f[idx(free[k])];
        return r;
    };
    try {
        damped_newton(net, theta, free, reduced, tol, max_iter, "equilibrium power flow", nullptr);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("no equilibrium found: ") + e.what());
    }
    if (residual != nullptr) *residual = (b - flow_injections(net, theta)).cwiseAbs().maxCoeff();
    return theta;
}

Equilibrium find_equilibrium(const NetworkModel& net, const ControllerSpec& spec) {
    const std::size_t n = net.size();
    validate_controller(spec, n);
    Equilibrium eq;
    const double demand = -net.injections().sum();

    if (const auto* gb = std::get_if<GatherBroadcast>(&spec)) {
        const DispatchSolution sol = solve_market_clearing(DispatchProblem(gb->cost, net.injections()), 1e-12);
        eq.lambda = sol.lambda;
        eq.ctrl = Vector::Constant(1, sol.lambda);
    } else if (const auto* agc = std::get_if<Agc>(&spec)) {
        double share = 0.0;
        for (Eigen::Index i = 0; i < agc->participation.size(); ++i) {
            if (!std::isinf(agc->participation[i])) share += 1.0 / agc->participation[i];
        }
        eq.lambda = demand / share;
        eq.ctrl = Vector::Constant(1, eq.lambda);
    } else if (const auto* dai = std::get_if<Dai>(&spec)) {
        eq.ctrl = Vector::Zero(idx(n));
        if (dai->cheaters.empty()) {
            const DispatchSolution sol = solve_market_clearing(DispatchProblem(dai->cost, net.injections()), 1e-12);
            eq.lambda = sol.lambda;
            for (std::size_t i = 0; i < n; ++i) {
                if (dai->cost.controlled(i)) eq.ctrl[idx(i)] = sol.u[idx(i)];
            }
        } else if (dai->cheaters.size() == 1) {
            eq.ctrl[idx(dai->cheaters.front())] = demand;
        } else {
            throw UnsupportedDiagnostic("several DAI cheaters admit a continuum of equilibria");
        }
    } else {
        throw UnsupportedDiagnostic("decentralized integral control admits a continuum of equilibria");
    }

    eq.u = controller_output(spec, eq.ctrl);
    eq.theta = solve_power_flow(net, eq.u, 1e-12, 100, &eq.residual);
    const SecurityReport sec = check_security(net, eq.theta);
    eq.secure = sec.secure;
    if (!sec.secure) {
        eq.warning = "equilibrium outside the security region: branch " + std::to_string(net.bus(sec.worst_from).id) +
                     "-" + std::to_string(net.bus(sec.worst_to).id) + " carries " +
                     std::to_string(sec.worst_difference) + " rad";
    }
    return eq;
}

}  // namespace freqctl
