#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "freqctl/types.hpp"

namespace freqctl {

/// A strictly increasing response curve g = (J')^{-1} with g(0) = 0. Everything
/// about a cost function (marginal, value, Luré integral) is derived from it.
class ResponseCurve {
  public:
    enum class Kind { Linear, Tanh };

    /// g(lambda) = lambda / a, the response of J(u) = a u^2 / 2.
    static ResponseCurve linear(double a = 1.0);
    /// g(lambda) = tanh(k1 * lambda^k2) for a positive odd integer k2.
    static ResponseCurve tanh_profile(double k1, int k2);

    Kind kind() const noexcept { return kind_; }
    double a() const noexcept { return a_; }
    double k1() const noexcept { return k1_; }
    int k2() const noexcept { return k2_; }

    double response(double lambda) const;
    double slope(double lambda) const;
    /// Upper bound on slope over the real line, used to size dual step lengths.
    double max_slope() const;

    /// Open image of the curve: (-inf, inf) for linear, (-1, 1) for tanh.
    std::pair<double, double> range() const;

    /// g^{-1}(y) = J'(y); throws DomainError outside the open range.
    double marginal(double y) const;

    /// Integral of g over [lambda0, lambda].
    double lure_integral(double lambda, double lambda0 = 0.0) const;
    /// I(l) - I(l*) - g(l*)(l - l*), evaluated without cancellation.
    double bregman(double lambda, double lambda_star) const;

    /// J(y), normalised so that J(0) = 0. Obtained from the Legendre pair of I.
    double cost(double y) const;

    bool operator==(const ResponseCurve&) const = default;

  private:
    ResponseCurve(Kind kind, double a, double k1, int k2) : kind_(kind), a_(a), k1_(k1), k2_(k2) {}
    double tanh_argument(double lambda) const;
    double response_gap(double x, double x0) const;

    Kind kind_;
    double a_;
    double k1_;
    int k2_;
};

/// Cost data of a single bus: J_i(u) = w J(u / w) with J the curve's cost, so
/// that the inverse marginal is w g(lambda), restricted to [lower, upper].
struct BusCost {
    ResponseCurve curve = ResponseCurve::linear();
    double weight = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool controlled = false;
};

class CostModel {
  public:
    CostModel() = default;
    explicit CostModel(std::vector<BusCost> buses);

    /// J_i(u) = A_i u^2 / 2 with unbounded capacity. A_i <= 0 is rejected.
    static CostModel quadratic(const std::vector<double>& a);
    /// Scaled family: inverse marginal C_i g(lambda). C_i = 0 marks an
    /// uncontrolled bus (U_i = {0}).
    static CostModel scaled(const ResponseCurve& base, const std::vector<double>& c);
    static BusCost uncontrolled();
    static BusCost quadratic_bus(double a, double lower = -inf(), double upper = inf());
    static BusCost scaled_bus(const ResponseCurve& base, double c);

    std::size_t size() const noexcept { return buses_.size(); }
    const BusCost& bus(std::size_t i) const { return buses_.at(i); }
    bool controlled(std::size_t i) const { return buses_.at(i).controlled; }
    std::pair<double, double> bounds(std::size_t i) const;

    /// u_i = (J_i')^{-1}(lambda), projected onto U_i.
    double inverse_marginal(std::size_t i, double lambda) const;
    Vector inverse_marginal(double lambda) const;

    /// J_i'(u) for u in the interior of U_i.
    double marginal(std::size_t i, double u) const;
    double cost(std::size_t i, double u) const;
    double total_cost(const Vector& u) const;

    /// Bound on d u_i / d lambda.
    double max_slope(std::size_t i) const;

    /// True when u_i is strictly inside U_i (the bus is not at a capacity limit).
    bool interior(std::size_t i, double u, double margin = 0.0) const;

    /// If the model is a scaled family, the shared base curve together
    /// with the weights c (zero on uncontrolled buses).
    struct ScaledView {
        ResponseCurve base;
        Vector weights;
    };
    std::optional<ScaledView> scaled_view() const;

    static constexpr double inf() { return std::numeric_limits<double>::infinity(); }

  private:
    std::vector<BusCost> buses_;
};

}  // namespace freqctl
