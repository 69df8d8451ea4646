#include "freqctl/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace freqctl {

DispatchProblem::DispatchProblem(CostModel c, Vector p) : cost(std::move(c)), injections(std::move(p)) {
    require_size(injections, static_cast<Eigen::Index>(cost.size()), "DispatchProblem injections");
    if (!injections.allFinite()) throw DomainError("dispatch injections must be finite");
}

double DispatchProblem::imbalance(const Vector& u) const {
    require_size(u, injections.size(), "imbalance");
    return injections.sum() + u.sum();
}

double DispatchProblem::clearing_residual(double lambda) const {
    double sum = injections.sum();
    for (std::size_t i = 0; i < size(); ++i) sum += cost.inverse_marginal(i, lambda);
    return sum;
}

FeasibilityReport check_feasibility(const DispatchProblem& prob) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        auto [l, h] = prob.cost.bounds(i);
        lo += l;
        hi += h;
    }
    FeasibilityReport r;
    const double d = prob.demand();
    r.lower_margin = d - lo;
    r.upper_margin = hi - d;
    if (r.upper_margin < 0.0) {
        r.violated = FeasibilitySide::Upper;
    } else if (r.lower_margin < 0.0) {
        r.violated = FeasibilitySide::Lower;
    }
    r.feasible = r.violated == FeasibilitySide::None;
    return r;
}

namespace {

void require_feasible(const DispatchProblem& prob) {
    const FeasibilityReport f = check_feasibility(prob);
    if (f.feasible) return;
    const bool upper = f.violated == FeasibilitySide::Upper;
    throw InfeasibleError(std::string("dispatch is infeasible: demand ") +
                          std::to_string(prob.demand()) + (upper ? " exceeds" : " is below") +
                          " the aggregate capacity by " +
                          std::to_string(upper ? -f.upper_margin : -f.lower_margin));
}

}  // namespace

DispatchSolution solve_market_clearing(const DispatchProblem& prob, double tol) {
    if (!(tol > 0.0)) throw DomainError("market clearing tolerance must be positive");
    require_feasible(prob);

    double lo = -1.0, hi = 1.0;
    double flo = prob.clearing_residual(lo);
    double fhi = prob.clearing_residual(hi);
    for (int expand = 0; flo > 0.0 && expand < 1100; ++expand) {
        hi = lo;
        fhi = flo;
        lo *= 2.0;
        flo = prob.clearing_residual(lo);
    }
    for (int expand = 0; fhi < 0.0 && expand < 1100; ++expand) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = prob.clearing_residual(hi);
    }
    if (!(flo <= 0.0 && fhi >= 0.0)) {
        throw NumericalError("market clearing price could not be bracketed");
    }

    DispatchSolution sol;
    auto finish = [&](double lambda, double r) {
        sol.lambda = lambda;
        sol.u = prob.cost.inverse_marginal(lambda);
        sol.residual = std::abs(r);
        return sol;
    };
    if (flo == 0.0) return finish(lo, flo);
    if (fhi == 0.0) return finish(hi, fhi);

    // Illinois variant of regula falsi, with a bisection step whenever the
    // secant point lands too close to an end of the bracket
    // flo/fhi get halved by the Illinois rule; rlo/rhi keep the true residuals
    double rlo = flo, rhi = fhi;
    int side = 0;
    for (int it = 0; it < 3000; ++it) {
        const double width = hi - lo;
        const bool lo_better = std::abs(rlo) < std::abs(rhi);
        const double best = lo_better ? lo : hi;
        const double fbest = lo_better ? rlo : rhi;
        const double scale = std::max(std::abs(lo), std::abs(hi));
        if (std::abs(fbest) <= tol && width <= 1e-10 * std::max(1.0, scale)) return finish(best, fbest);
        if (width <= 4.0 * std::numeric_limits<double>::epsilon() * scale) {
            if (std::abs(fbest) <= tol) return finish(best, fbest);
            throw NonConvergenceError("market clearing residual stalled above tolerance", std::abs(fbest));
        }
        double x = (lo * fhi - hi * flo) / (fhi - flo);
        if (!(x > lo + 0.01 * width && x < hi - 0.01 * width)) x = 0.5 * (lo + hi);
        const double fx = prob.clearing_residual(x);
        if (fx == 0.0) return finish(x, fx);
        if (fx < 0.0) {
            lo = x;
            flo = rlo = fx;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = x;
            fhi = rhi = fx;
            if (side == 1) flo *= 0.5;
            side = 1;
        }
    }
    throw NonConvergenceError("market clearing did not converge", std::min(std::abs(rlo), std::abs(rhi)));
}

double default_step_size(const DispatchProblem& prob) {
    double s = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) s += prob.cost.max_slope(i);
    if (!(s > 0.0)) throw DomainError("no bus responds to the price; step size undefined");
    return 0.5 / s;
}

DualResult dual_decomposition(const DispatchProblem& prob, const DualOptions& opt) {
    if (!(opt.total_damping > 0.0)) throw DomainError("total damping must be positive");
    if (!(opt.tol > 0.0)) throw DomainError("dual decomposition tolerance must be positive");
    if (opt.max_iter <= 0) throw DomainError("max_iter must be positive");
    require_feasible(prob);
    const double alpha = opt.alpha > 0.0 ? opt.alpha : default_step_size(prob);

    DualResult result;
    std::deque<double> window;
    double lambda = opt.lambda0;
    for (int k = 1; k <= opt.max_iter; ++k) {
        Vector u = prob.cost.inverse_marginal(lambda);
        const double r = prob.imbalance(u);
        result.history.push_back({k, lambda, u, r, r / opt.total_damping});
        if (!std::isfinite(r)) throw NonConvergenceError("dual iteration produced a non-finite residual", r);
        if (std::abs(r) <= opt.tol) {
            result.solution = {std::move(u), lambda, k, std::abs(r)};
            return result;
        }
        window.push_back(std::abs(r));
        if (static_cast<int>(window.size()) > opt.window) {
            if (window.back() >= window.front()) {
                throw NonConvergenceError("dual iteration residual did not decrease over " +
                                              std::to_string(opt.window) +
                                              " iterations; the step size is too large",
                                          r);
            }
            window.pop_front();
        }
        lambda -= alpha * r;
    }
    throw NonConvergenceError("dual iteration hit max_iter", result.history.back().residual);
}

KktReport verify_kkt(const DispatchProblem& prob, const Vector& u, double lambda, double tol) {
    require_size(u, static_cast<Eigen::Index>(prob.size()), "verify_kkt");
    KktReport rep;
    rep.primal = std::abs(prob.imbalance(u));
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double ui = u[static_cast<Eigen::Index>(i)];
        auto [lo, hi] = prob.cost.bounds(i);
        rep.bound_violation = std::max({rep.bound_violation, lo - ui, ui - hi});
        if (prob.cost.interior(i, ui)) {
            rep.stationarity = std::max(rep.stationarity, std::abs(prob.cost.marginal(i, ui) - lambda));
        }
    }
    rep.pass = std::isfinite(rep.stationarity) && rep.stationarity <= tol && rep.primal <= tol &&
               rep.bound_violation <= tol;
    return rep;
}

}  // namespace freqctl
