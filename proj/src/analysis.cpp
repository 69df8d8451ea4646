#include "freqctl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace freqctl {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// sin(d) - d, with the Taylor series where direct evaluation would cancel
double sin_minus_identity(double d) {
    if (std::abs(d) < 1e-2) {
        const double d2 = d * d;
        return -d * d2 / 6.0 * (1.0 - d2 / 20.0 * (1.0 - d2 / 42.0 * (1.0 - d2 / 72.0)));
    }
    return std::sin(d) - d;
}

}  // namespace

void TrajectoryRecord::validate() const {
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Sample& s = samples[k];
        if (k > 0 && !(s.t > samples[k - 1].t)) {
            throw ValidationError("trajectory times are not strictly increasing at sample " + std::to_string(k));
        }
        const Sample& f = samples.front();
        if (s.theta.size() != f.theta.size() || s.omega.size() != f.omega.size() || s.ctrl.size() != f.ctrl.size() ||
            s.u.size() != f.u.size()) {
            throw ValidationError("trajectory sample " + std::to_string(k) + " changes dimension");
        }
    }
}

double sync_frequency(const NetworkModel& net, const Vector& u) {
    require_size(u, idx(net.size()), "sync_frequency u");
    const double d = net.total_damping();
    if (!(d > 0.0)) throw DomainError("total damping is zero");
    return (net.injections().sum() + u.sum()) / d;
}

double dissipation(const NetworkModel& net, const Vector& omega) {
    require_size(omega, idx(net.size()), "dissipation omega");
    return -(net.damping().array() * omega.array().square()).sum();
}

double hamiltonian(const NetworkModel& net, const ControllerSpec& spec, const SystemState& state,
                   const Equilibrium& eq) {
    const auto* gb = std::get_if<GatherBroadcast>(&spec);
    if (gb == nullptr) throw UnsupportedDiagnostic("the Hamiltonian is defined for gather-and-broadcast control only");
    const auto view = gb->cost.scaled_view();
    if (!view) throw UnsupportedDiagnostic("the Hamiltonian needs a scaled cost family (one base curve times per-bus weights)");
    const auto n = idx(net.size());
    require_size(state.theta, n, "hamiltonian theta");
    require_size(state.omega, n, "hamiltonian omega");
    require_size(state.ctrl, 1, "hamiltonian ctrl");

    // measurement weights must be a common multiple of the cost weights
    const Vector& c = gb->weights;
    const Vector& w = view->weights;
    const double a = c.sum() / w.sum();
    if ((c - a * w).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff())) {
        throw UnsupportedDiagnostic("measurement weights are not proportional to the cost weights");
    }

    double bregman_u = 0.0;
    for (const Branch& br : net.branches()) {
        const auto i = idx(br.from), j = idx(br.to);
        const double ds = eq.theta[i] - eq.theta[j];
        const double d = (state.theta[i] - state.theta[j]) - ds;
        const double s = std::sin(0.5 * d);
        bregman_u += br.susceptance * (std::cos(ds) * 2.0 * s * s + std::sin(ds) * sin_minus_identity(d));
    }
    const double kinetic = 0.5 * (net.inertia().array() * state.omega.array().square()).sum();
    const double price = (gb->k / a) * view->base.bregman(state.ctrl[0], eq.ctrl[0]);
    return bregman_u + kinetic + price;
}

double marginal_cost_spread(const CostModel& cost, const Vector& u) {
    require_size(u, idx(cost.size()), "marginal_cost_spread u");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        const double ui = u[idx(i)];
        if (!cost.interior(i, ui)) continue;
        const double m = cost.marginal(i, ui);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    return hi >= lo ? hi - lo : 0.0;
}

FrequencyMetrics frequency_metrics(const TrajectoryRecord& traj, double threshold) {
    if (traj.samples.empty()) throw DomainError("frequency metrics of an empty trajectory");
    FrequencyMetrics m;
    m.nadir = std::numeric_limits<double>::infinity();
    std::vector<double> peak(traj.samples.size());
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
        const Vector& w = traj.samples[k].omega;
        m.nadir = std::min(m.nadir, w.size() ? w.minCoeff() : 0.0);
        peak[k] = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
    }

    std::size_t last_bad = peak.size();
    for (std::size_t k = peak.size(); k-- > 0;) {
        if (peak[k] >= threshold) {
            last_bad = k;
            break;
        }
    }
    if (last_bad == peak.size()) {
        m.settling_time = traj.samples.front().t;
    } else if (last_bad + 1 < peak.size()) {
        // interpolate the threshold crossing of the envelope in log space
        const double t0 = traj.samples[last_bad].t, t1 = traj.samples[last_bad + 1].t;
        const double p0 = peak[last_bad], p1 = peak[last_bad + 1];
        double frac = 1.0;
        if (p1 > 0.0 && p0 > p1) frac = std::log(p0 / threshold) / std::log(p0 / p1);
        m.settling_time = t0 + std::clamp(frac, 0.0, 1.0) * (t1 - t0);
    }

    const std::size_t tail = std::max<std::size_t>(1, peak.size() / 20);
    m.steady_state_error = *std::max_element(peak.end() - static_cast<std::ptrdiff_t>(tail), peak.end());
    return m;
}

}  // namespace freqctl
