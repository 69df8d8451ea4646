#include "catch_amalgamated.hpp"

#include "freqctl/dispatch.hpp"
#include "freqctl/errors.hpp"
#include "support.hpp"

#include <cmath>
#include <random>
#include <string>

using namespace freqctl;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// Plain bisection on the clearing residual written out from the cost formula,
// independent of the library's bracketing and regula falsi.
double bisect_price(const std::function<double(double)>& residual) {
    double lo = -1e3, hi = 1e3;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("feasibility margins", "[dispatch]") {
    const CostModel box({CostModel::quadratic_bus(1.0, 0.0, 2.0), CostModel::quadratic_bus(1.0, 0.0, 2.0)});
    const FeasibilityReport ok = check_feasibility(DispatchProblem(box, vec({-1.0, 0.0})));
    CHECK(ok.feasible);
    CHECK_THAT(ok.lower_margin, WithinAbs(1.0, 1e-15));
    CHECK_THAT(ok.upper_margin, WithinAbs(3.0, 1e-15));

    const FeasibilityReport bad = check_feasibility(DispatchProblem(box, vec({-5.0, 0.0})));
    CHECK_FALSE(bad.feasible);
    CHECK(bad.violated == FeasibilitySide::Upper);
    CHECK_THROWS_AS(solve_market_clearing(DispatchProblem(box, vec({-5.0, 0.0}))), InfeasibleError);
    CHECK_THROWS_WITH(solve_market_clearing(DispatchProblem(box, vec({-5.0, 0.0}))),
                      ContainsSubstring("infeasible") && ContainsSubstring("exceeds"));
}

TEST_CASE("39-bus case stays feasible after the load steps", "[dispatch]") {
    const CaseData& data = testing::ieee39();
    Vector p = data.net.injections();
    for (int id : {4, 12, 20}) p[static_cast<Eigen::Index>(data.net.index_of(id))] -= 0.33;
    CHECK(check_feasibility(DispatchProblem(data.cost, p)).feasible);
}

TEST_CASE("market clearing examples", "[dispatch]") {
    const DispatchSolution a = solve_market_clearing(DispatchProblem(CostModel::quadratic({1.0, 1.0}), vec({-1.0, -1.0})));
    CHECK_THAT(a.lambda, WithinAbs(1.0, 1e-10));
    CHECK_THAT(a.u[0], WithinAbs(1.0, 1e-10));
    CHECK_THAT(a.u[1], WithinAbs(1.0, 1e-10));

    const DispatchSolution b = solve_market_clearing(DispatchProblem(CostModel::quadratic({1.0, 2.0}), vec({-3.0, 0.0})));
    CHECK_THAT(b.lambda, WithinAbs(2.0, 1e-10));
    CHECK_THAT(b.u[0], WithinAbs(2.0, 1e-10));
    CHECK_THAT(b.u[1], WithinAbs(1.0, 1e-10));

    const CostModel t = CostModel::scaled(ResponseCurve::tanh_profile(1.0, 1), {0.6, 0.4});
    const DispatchSolution c = solve_market_clearing(DispatchProblem(t, vec({-0.5, 0.0})));
    CHECK_THAT(c.lambda, WithinAbs(std::atanh(0.5), 1e-9));
    CHECK_THAT(c.u[0], WithinAbs(0.3, 1e-9));
    CHECK_THAT(c.u[1], WithinAbs(0.2, 1e-9));
    CHECK(verify_kkt(DispatchProblem(t, vec({-0.5, 0.0})), c, 1e-7).pass);
}

TEST_CASE("market clearing with active capacity limits", "[dispatch]") {
    const CostModel m({CostModel::quadratic_bus(1.0, -1.0, 0.5), CostModel::quadratic_bus(1.0)});
    const DispatchProblem prob(m, vec({-3.0, 0.0}));
    const DispatchSolution s = solve_market_clearing(prob);
    CHECK_THAT(s.u[0], WithinAbs(0.5, 1e-12));
    CHECK_THAT(s.u[1], WithinAbs(2.5, 1e-9));
    CHECK_THAT(s.lambda, WithinAbs(2.5, 1e-9));
    const KktReport k = verify_kkt(prob, s, 1e-7);
    CHECK(k.pass);
    CHECK(k.bound_violation == 0.0);
}

TEST_CASE("dual decomposition examples", "[dispatch]") {
    const DispatchProblem prob(CostModel::quadratic({1.0, 2.0}), vec({-3.0, 0.0}));

    DualOptions at_optimum;
    at_optimum.alpha = 0.3;
    at_optimum.lambda0 = 2.0;
    const DualResult fixed = dual_decomposition(prob, at_optimum);
    CHECK(fixed.solution.iterations == 1);
    CHECK(fixed.history.front().residual == 0.0);

    DualOptions opt;
    opt.alpha = 0.3;
    const DualResult r = dual_decomposition(prob, opt);
    CHECK_THAT(r.solution.lambda, WithinAbs(2.0, 1e-8));
    CHECK(r.solution.iterations < 200);
    CHECK(r.history.size() == static_cast<std::size_t>(r.solution.iterations));

    DualOptions big;
    big.alpha = 2.0;
    CHECK_THROWS_AS(dual_decomposition(prob, big), NonConvergenceError);
}

TEST_CASE("dual iterate contracts at the linear rate", "[dispatch][property]") {
    const DispatchProblem prob(CostModel::quadratic({1.0, 2.0, 4.0}), vec({-2.0, 0.5, -1.0}));
    const double s = 1.0 + 0.5 + 0.25;
    const double lambda_star = 2.5 / s;
    DualOptions opt;
    opt.alpha = 0.4;
    opt.lambda0 = -3.0;
    const DualResult r = dual_decomposition(prob, opt);
    const double rho = std::abs(1.0 - opt.alpha * s);
    for (std::size_t k = 0; k + 1 < r.history.size(); ++k) {
        const double e0 = std::abs(r.history[k].lambda - lambda_star);
        const double e1 = std::abs(r.history[k + 1].lambda - lambda_star);
        if (e0 < 1e-12) break;
        CHECK(e1 <= rho * e0 * (1.0 + 1e-9) + 1e-15);
    }
}

TEST_CASE("dual decomposition agrees with market clearing on random instances", "[dispatch][property]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> weight(0.05, 1.0);
    std::uniform_int_distribution<int> size(2, 10);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = size(rng);
        std::vector<double> c(static_cast<std::size_t>(n));
        for (double& ci : c) ci = weight(rng);
        const bool tanh = trial % 2 == 1;
        const ResponseCurve base = tanh ? ResponseCurve::tanh_profile(1.0 + trial % 3, trial % 4 == 3 ? 3 : 1)
                                        : ResponseCurve::linear();
        const CostModel cost = CostModel::scaled(base, c);
        double cap = 0.0;
        for (double ci : c) cap += ci;
        Vector p = testing::random_vector(rng, static_cast<std::size_t>(n), 0.5);
        p.array() -= p.mean();
        p[0] -= (tanh ? 0.6 : 1.5) * cap * weight(rng);
        const DispatchProblem prob(cost, p);

        const DispatchSolution mc = solve_market_clearing(prob, 1e-12);
        const double oracle = bisect_price([&](double l) {
            double r = p.sum();
            for (int i = 0; i < n; ++i) r += c[static_cast<std::size_t>(i)] * base.response(l);
            return r;
        });
        CHECK_THAT(mc.lambda, WithinAbs(oracle, 1e-8));

        DualOptions opt;
        opt.tol = 1e-12;
        const DualResult dd = dual_decomposition(prob, opt);
        CHECK_THAT(dd.solution.lambda, WithinAbs(mc.lambda, 1e-6));
        CHECK(verify_kkt(prob, mc, 1e-7).pass);
    }
}

TEST_CASE("clearing residual is strictly increasing in the price", "[dispatch][property]") {
    const CostModel cost = CostModel::scaled(ResponseCurve::tanh_profile(3.0, 3), {0.2, 0.5, 0.9});
    const DispatchProblem prob(cost, vec({-0.4, 0.1, 0.0}));
    double previous = prob.clearing_residual(-1.0) - 1.0;
    for (int k = -50; k <= 50; ++k) {
        const double r = prob.clearing_residual(0.02 * k);
        CHECK(r > previous);
        previous = r;
    }
}

TEST_CASE("KKT verification", "[dispatch]") {
    const DispatchProblem prob(CostModel::quadratic({1.0, 2.0}), vec({-3.0, 0.0}));
    CHECK(verify_kkt(prob, vec({2.0, 1.0}), 2.0, 1e-7).pass);

    const DispatchSolution s = solve_market_clearing(prob);
    CHECK(verify_kkt(prob, s, 1e-7).pass);
    Vector u = s.u;
    u[0] += 0.1;
    const KktReport bad = verify_kkt(prob, u, s.lambda, 1e-7);
    CHECK_FALSE(bad.pass);
    CHECK(std::max(bad.stationarity, bad.primal) >= 0.05);
}

TEST_CASE("default step size from slope bounds", "[dispatch]") {
    const DispatchProblem prob(CostModel::quadratic({1.0, 2.0}), vec({-3.0, 0.0}));
    CHECK_THAT(default_step_size(prob), WithinAbs(0.5 / 1.5, 1e-15));
    const DispatchProblem sat(CostModel::scaled(ResponseCurve::tanh_profile(2.0, 1), {0.5, 0.25}), vec({-0.1, 0.0}));
    CHECK_THAT(default_step_size(sat), WithinAbs(0.5 / (2.0 * 0.75), 1e-15));
}

TEST_CASE("dimension mismatches are rejected", "[dispatch]") {
    CHECK_THROWS_AS(DispatchProblem(CostModel::quadratic({1.0, 2.0}), vec({1.0})), DimensionError);
}
