#include "freqctl/costs.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace freqctl {

namespace {

// log(cosh(x)) without overflow for large |x|
double log_cosh(double x) {
    const double ax = std::abs(x);
    if (ax < 1.0) {
        const double h = std::sinh(0.5 * ax);
        return std::log1p(2.0 * h * h);
    }
    return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

template <class F>
double integrate(F f, double a, double b) {
    if (a == b) return 0.0;
    double error = 0.0;
    // split at the origin, where the tanh profiles change curvature
    if (a < 0.0 && b > 0.0) return integrate(f, a, 0.0) + integrate(f, 0.0, b);
    if (a > 0.0 && b < 0.0) return integrate(f, a, 0.0) + integrate(f, 0.0, b);
    // map onto [-1, 1] first: the library compares its unscaled error
    // estimate with a scaled tolerance, which never terminates on short spans
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto unit = [&](double s) { return f(mid + half * s); };
    return half * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(unit, -1.0, 1.0, 12, 1e-11, &error);
}

}  // namespace

ResponseCurve ResponseCurve::linear(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("linear response needs a > 0");
    return ResponseCurve(Kind::Linear, a, 0.0, 1);
}

ResponseCurve ResponseCurve::tanh_profile(double k1, int k2) {
    if (!(k1 > 0.0) || !std::isfinite(k1)) throw DomainError("tanh profile needs k1 > 0");
    if (k2 <= 0 || k2 % 2 == 0) throw DomainError("tanh profile needs a positive odd k2");
    return ResponseCurve(Kind::Tanh, 1.0, k1, k2);
}

double ResponseCurve::tanh_argument(double lambda) const {
    if (k2_ == 1) return k1_ * lambda;
    const double p = std::pow(std::abs(lambda), k2_);
    return k1_ * std::copysign(p, lambda);
}

double ResponseCurve::response(double lambda) const {
    if (kind_ == Kind::Linear) return lambda / a_;
    return std::tanh(tanh_argument(lambda));
}

// tanh(a) - tanh(b) = sinh(a - b) / (cosh a cosh b), and x^n - y^n is
// factored, so the difference keeps full relative precision as x -> x0
double ResponseCurve::response_gap(double x, double x0) const {
    if (kind_ == Kind::Linear) return (x - x0) / a_;
    double diff = x - x0;
    if (k2_ > 1) {
        double sum = 0.0;
        for (int j = 0; j < k2_; ++j) sum += std::pow(x, k2_ - 1 - j) * std::pow(x0, j);
        diff *= sum;
    }
    const double a = tanh_argument(x);
    const double b = tanh_argument(x0);
    // cosh overflows long before the plain difference loses anything
    if (std::max(std::abs(a), std::abs(b)) > 20.0) return std::tanh(a) - std::tanh(b);
    return std::sinh(k1_ * diff) / (std::cosh(a) * std::cosh(b));
}

double ResponseCurve::slope(double lambda) const {
    if (kind_ == Kind::Linear) return 1.0 / a_;
    const double t = std::tanh(tanh_argument(lambda));
    const double inner = k2_ == 1 ? k1_ : k1_ * k2_ * std::pow(std::abs(lambda), k2_ - 1);
    return inner * (1.0 - t * t);
}

double ResponseCurve::max_slope() const {
    if (kind_ == Kind::Linear) return 1.0 / a_;
    if (k2_ == 1) return k1_;
    // Sample |lambda| over the band where the profile is not yet saturated.
    const double reach = std::pow(12.0 / k1_, 1.0 / k2_);
    constexpr int samples = 4000;
    double best = 0.0;
    for (int s = 0; s <= samples; ++s) {
        best = std::max(best, slope(reach * s / samples));
    }
    return 1.02 * best;
}

std::pair<double, double> ResponseCurve::range() const {
    if (kind_ == Kind::Linear) {
        return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    return {-1.0, 1.0};
}

double ResponseCurve::marginal(double y) const {
    if (!std::isfinite(y)) throw DomainError("marginal cost of a non-finite injection");
    if (kind_ == Kind::Linear) return a_ * y;
    if (!(y > -1.0 && y < 1.0)) {
        throw DomainError("marginal cost undefined at y = " + std::to_string(y) +
                          " (outside the open interval (-1, 1))");
    }
    const double s = std::atanh(y) / k1_;
    if (k2_ == 1) return s;
    return std::copysign(std::pow(std::abs(s), 1.0 / k2_), s);
}

double ResponseCurve::lure_integral(double lambda, double lambda0) const {
    if (kind_ == Kind::Linear) return (lambda * lambda - lambda0 * lambda0) / (2.0 * a_);
    if (k2_ == 1) return (log_cosh(k1_ * lambda) - log_cosh(k1_ * lambda0)) / k1_;
    return integrate([this](double x) { return response(x); }, lambda0, lambda);
}

double ResponseCurve::bregman(double lambda, double lambda_star) const {
    const double d = lambda - lambda_star;
    if (kind_ == Kind::Linear) return d * d / (2.0 * a_);
    // a negative orientation still yields a nonnegative value: both the
    // integrand and the interval flip sign together
    return integrate([this, lambda_star](double x) { return response_gap(x, lambda_star); }, lambda_star, lambda);
}

double ResponseCurve::cost(double y) const {
    if (kind_ == Kind::Linear) return 0.5 * a_ * y * y;
    const double lambda = marginal(y);
    return y * lambda - lure_integral(lambda, 0.0);
}

CostModel::CostModel(std::vector<BusCost> buses) : buses_(std::move(buses)) {
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        BusCost& b = buses_[i];
        const std::string where = "cost of bus index " + std::to_string(i);
        if (!b.controlled) {
            b.weight = 0.0;
            b.lower = 0.0;
            b.upper = 0.0;
            continue;
        }
        if (!(b.weight > 0.0) || !std::isfinite(b.weight)) {
            throw DomainError(where + ": weight must be positive");
        }
        if (!(b.lower <= 0.0 && b.upper >= 0.0) || std::isnan(b.lower) || std::isnan(b.upper)) {
            throw DomainError(where + ": bounds must satisfy lower <= 0 <= upper");
        }
        auto [lo, hi] = b.curve.range();
        b.lower = std::max(b.lower, b.weight * lo);
        b.upper = std::min(b.upper, b.weight * hi);
    }
}

BusCost CostModel::uncontrolled() { return BusCost{}; }

BusCost CostModel::quadratic_bus(double a, double lower, double upper) {
    return BusCost{ResponseCurve::linear(a), 1.0, lower, upper, true};
}

BusCost CostModel::scaled_bus(const ResponseCurve& base, double c) {
    if (c == 0.0) return uncontrolled();
    return BusCost{base, c, -inf(), inf(), true};
}

CostModel CostModel::quadratic(const std::vector<double>& a) {
    std::vector<BusCost> buses;
    buses.reserve(a.size());
    for (double ai : a) buses.push_back(quadratic_bus(ai));
    return CostModel(std::move(buses));
}

CostModel CostModel::scaled(const ResponseCurve& base, const std::vector<double>& c) {
    std::vector<BusCost> buses;
    buses.reserve(c.size());
    for (double ci : c) {
        if (ci < 0.0) throw DomainError("scaled cost weights must be nonnegative");
        buses.push_back(scaled_bus(base, ci));
    }
    return CostModel(std::move(buses));
}

std::pair<double, double> CostModel::bounds(std::size_t i) const {
    const BusCost& b = buses_.at(i);
    return {b.lower, b.upper};
}

double CostModel::inverse_marginal(std::size_t i, double lambda) const {
    const BusCost& b = buses_.at(i);
    if (!b.controlled) return 0.0;
    return std::clamp(b.weight * b.curve.response(lambda), b.lower, b.upper);
}

Vector CostModel::inverse_marginal(double lambda) const {
    Vector u(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) u[static_cast<Eigen::Index>(i)] = inverse_marginal(i, lambda);
    return u;
}

double CostModel::marginal(std::size_t i, double u) const {
    const BusCost& b = buses_.at(i);
    if (!b.controlled) throw DomainError("bus index " + std::to_string(i) + " is not controlled");
    if (u < b.lower || u > b.upper) {
        throw DomainError("injection " + std::to_string(u) + " outside the capacity of bus index " +
                          std::to_string(i));
    }
    return b.curve.marginal(u / b.weight);
}

double CostModel::cost(std::size_t i, double u) const {
    const BusCost& b = buses_.at(i);
    if (!b.controlled) {
        if (u != 0.0) {
            throw DomainError("nonzero injection on uncontrolled bus index " + std::to_string(i));
        }
        return 0.0;
    }
    if (u < b.lower || u > b.upper) {
        throw DomainError("injection outside the capacity of bus index " + std::to_string(i));
    }
    return b.weight * b.curve.cost(u / b.weight);
}

double CostModel::total_cost(const Vector& u) const {
    require_size(u, static_cast<Eigen::Index>(size()), "total_cost");
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) sum += cost(i, u[static_cast<Eigen::Index>(i)]);
    return sum;
}

double CostModel::max_slope(std::size_t i) const {
    const BusCost& b = buses_.at(i);
    if (!b.controlled || b.lower == b.upper) return 0.0;
    return b.weight * b.curve.max_slope();
}

bool CostModel::interior(std::size_t i, double u, double margin) const {
    const BusCost& b = buses_.at(i);
    if (!b.controlled) return false;
    return u > b.lower + margin && u < b.upper - margin;
}

std::optional<CostModel::ScaledView> CostModel::scaled_view() const {
    const auto n = static_cast<Eigen::Index>(size());
    Vector w = Vector::Zero(n);
    std::optional<ResponseCurve> shared;
    bool all_linear = true;
    bool any = false;
    for (std::size_t i = 0; i < size(); ++i) {
        const BusCost& b = buses_[i];
        if (!b.controlled) continue;
        any = true;
        auto [lo, hi] = b.curve.range();
        // clipped capacity breaks the common-shape requirement
        if (b.lower != b.weight * lo || b.upper != b.weight * hi) return std::nullopt;
        if (b.curve.kind() != ResponseCurve::Kind::Linear) all_linear = false;
        if (!shared) shared = b.curve;
        w[static_cast<Eigen::Index>(i)] = b.weight;
    }
    if (!any) return std::nullopt;
    if (all_linear) {
        // w J(u/w) with J = a v^2/2 equals the unit profile with weight w/a
        for (std::size_t i = 0; i < size(); ++i) {
            if (buses_[i].controlled) w[static_cast<Eigen::Index>(i)] /= buses_[i].curve.a();
        }
        return ScaledView{ResponseCurve::linear(1.0), w};
    }
    for (const BusCost& b : buses_) {
        if (b.controlled && !(b.curve == *shared)) return std::nullopt;
    }
    return ScaledView{*shared, w};
}

}  // namespace freqctl
