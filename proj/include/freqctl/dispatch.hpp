#pragma once

#include <cstddef>
#include <vector>

#include "freqctl/costs.hpp"
#include "freqctl/types.hpp"

namespace freqctl {

/// Economic dispatch: minimise sum_i J_i(u_i) subject to sum_i (P_i + u_i) = 0 and u_i in U_i.
struct DispatchProblem {
    CostModel cost;
    Vector injections;  // fixed P_i

    DispatchProblem(CostModel cost, Vector injections);
    std::size_t size() const noexcept { return cost.size(); }
    double demand() const { return -injections.sum(); }
    /// sum_i (P_i + u_i)
    double imbalance(const Vector& u) const;
    /// sum_i (P_i + u_i(lambda)) for the unclamped-then-projected response.
    double clearing_residual(double lambda) const;
};

enum class FeasibilitySide { None, Lower, Upper };

struct FeasibilityReport {
    bool feasible = false;
    double lower_margin = 0.0;  // demand minus the summed lower bounds
    double upper_margin = 0.0;  // summed upper bounds minus demand
    FeasibilitySide violated = FeasibilitySide::None;
};

FeasibilityReport check_feasibility(const DispatchProblem& prob);

struct DispatchSolution {
    Vector u;
    double lambda = 0.0;
    int iterations = 0;  // zero for the root-finding path
    double residual = 0.0;
};

DispatchSolution solve_market_clearing(const DispatchProblem& prob, double tol = 1e-10);

struct DualIterate {
    int k = 0;
    double lambda = 0.0;  // price used to compute u
    Vector u;
    double residual = 0.0;
    double omega = 0.0;  // residual over total damping
};

struct DualResult {
    DispatchSolution solution;
    std::vector<DualIterate> history;
};

struct DualOptions {
    double alpha = 0.0;  // <= 0 selects default_step_size
    double total_damping = 1.0;
    int max_iter = 10000;
    double tol = 1e-10;
    double lambda0 = 0.0;
    int window = 50;
};

/// Dual ascent: u(k+1) = proj_U (J')^{-1}(lambda(k)), lambda(k+1) = lambda(k) - alpha sum(P + u(k+1)).
/// Throws NonConvergenceError when the residual stalls over `window` iterations
/// or max_iter is exhausted.
DualResult dual_decomposition(const DispatchProblem& prob, const DualOptions& options);

/// 0.5 over the summed slope bounds of the inverse marginals.
double default_step_size(const DispatchProblem& prob);

struct KktReport {
    double stationarity = 0.0;  // max |J_i'(u_i) - lambda| over interior buses
    double primal = 0.0;        // |sum (P + u)|
    double bound_violation = 0.0;
    bool pass = false;
};

KktReport verify_kkt(const DispatchProblem& prob, const Vector& u, double lambda, double tol);
inline KktReport verify_kkt(const DispatchProblem& prob, const DispatchSolution& sol, double tol) {
    return verify_kkt(prob, sol.u, sol.lambda, tol);
}

}  // namespace freqctl
