#include "freqctl/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace freqctl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

bool contains(const std::vector<std::size_t>& v, std::size_t i) {
    return std::find(v.begin(), v.end(), i) != v.end();
}

}  // namespace

GatherBroadcast GatherBroadcast::make(double k, Vector weights, CostModel cost) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("gather-and-broadcast gain must be positive");
    if (weights.size() != static_cast<Eigen::Index>(cost.size())) {
        throw DimensionError("gather-and-broadcast weights and cost model differ in size");
    }
    if ((weights.array() < 0.0).any() || !weights.allFinite()) {
        throw DomainError("gather-and-broadcast weights must be nonnegative");
    }
    const double total = weights.sum();
    if (!(total > 0.0)) throw DomainError("gather-and-broadcast weights sum to zero");
    return GatherBroadcast{k / total, weights / total, std::move(cost)};
}

GatherBroadcast make_gather_broadcast(const NetworkModel& net, double k, const CostModel& cost,
                                      PassiveWeights passive) {
    auto view = cost.scaled_view();
    Vector w(idx(cost.size()));
    if (view) {
        w = view->weights;
    } else {
        // no common profile: fall back to the price sensitivity at the origin
        for (std::size_t i = 0; i < cost.size(); ++i) w[idx(i)] = cost.max_slope(i);
    }
    if (passive == PassiveWeights::Exclude) {
        for (std::size_t i : net.passive()) w[idx(i)] = 0.0;
    }
    return GatherBroadcast::make(k, std::move(w), cost);
}

std::string_view controller_tag(const ControllerSpec& spec) {
    return std::visit(overloaded{
                          [](const GatherBroadcast&) { return std::string_view("gather_broadcast"); },
                          [](const DecentralizedIntegral&) { return std::string_view("decentralized"); },
                          [](const Agc&) { return std::string_view("agc"); },
                          [](const Dai&) { return std::string_view("dai"); },
                      },
                      spec);
}

std::size_t state_size(const ControllerSpec& spec, std::size_t n) {
    if (std::holds_alternative<GatherBroadcast>(spec) || std::holds_alternative<Agc>(spec)) return 1;
    return n;
}

void validate_controller(const ControllerSpec& spec, std::size_t n) {
    const auto N = idx(n);
    std::visit(overloaded{
                   [&](const GatherBroadcast& c) {
                       require_size(c.weights, N, "gather-and-broadcast weights");
                       if (c.cost.size() != n) throw DimensionError("gather-and-broadcast cost size");
                       if (!(c.k > 0.0)) throw DomainError("gather-and-broadcast gain must be positive");
                       if ((c.weights.array() < 0.0).any() || (c.weights.array() > 1.0).any() ||
                           std::abs(c.weights.sum() - 1.0) > 1e-12) {
                           throw DomainError("gather-and-broadcast weights must be convex");
                       }
                   },
                   [&](const DecentralizedIntegral& c) {
                       require_size(c.gains, N, "decentralized gains");
                       require_size(c.bias, N, "decentralized bias");
                       if (c.buses.empty()) throw DomainError("decentralized control needs at least one bus");
                       for (std::size_t i : c.buses) {
                           if (i >= n) throw DimensionError("decentralized bus index out of range");
                           if (!(c.gains[idx(i)] > 0.0)) throw DomainError("decentralized gains must be positive");
                       }
                   },
                   [&](const Agc& c) {
                       require_size(c.participation, N, "AGC participation");
                       if (!(c.k > 0.0)) throw DomainError("AGC gain must be positive");
                       if (c.measured >= n) throw DimensionError("AGC measurement bus out of range");
                       if ((c.participation.array() <= 0.0).any()) {
                           throw DomainError("AGC participation denominators must be positive");
                       }
                   },
                   [&](const Dai& c) {
                       require_size(c.gains, N, "DAI gains");
                       if (c.cost.size() != n) throw DimensionError("DAI cost size");
                       if (c.weights.rows() != N || c.weights.cols() != N) {
                           throw DimensionError("DAI weight matrix must be N x N");
                       }
                       if (!(c.weights.array() >= 0.0).all()) throw DomainError("DAI weights must be nonnegative");
                       if (!(c.weights - c.weights.transpose()).isZero(0.0)) {
                           throw DomainError("DAI weights must be symmetric");
                       }
                       std::vector<std::size_t> active;
                       for (std::size_t i = 0; i < n; ++i) {
                           if (c.cost.controlled(i)) {
                               active.push_back(i);
                               if (!(c.gains[idx(i)] > 0.0)) throw DomainError("DAI gains must be positive");
                           }
                       }
                       for (std::size_t i : c.cheaters) {
                           if (i >= n || !c.cost.controlled(i)) {
                               throw DomainError("DAI cheater must be a controlled bus");
                           }
                       }
                       if (active.empty()) throw DomainError("DAI needs at least one controlled bus");
                       std::vector<bool> seen(n, false);
                       std::vector<std::size_t> stack{active.front()};
                       seen[active.front()] = true;
                       std::size_t reached = 1;
                       while (!stack.empty()) {
                           const std::size_t i = stack.back();
                           stack.pop_back();
                           for (std::size_t j : active) {
                               if (!seen[j] && c.weights(idx(i), idx(j)) > 0.0) {
                                   seen[j] = true;
                                   ++reached;
                                   stack.push_back(j);
                               }
                           }
                       }
                       if (reached != active.size()) {
                           throw DomainError("DAI communication graph is not connected");
                       }
                   },
               },
               spec);
}

Vector controller_output(const ControllerSpec& spec, const Vector& state) {
    return std::visit(
        overloaded{
            [&](const GatherBroadcast& c) {
                require_size(state, 1, "gather-and-broadcast state");
                return c.cost.inverse_marginal(state[0]);
            },
            [&](const DecentralizedIntegral& c) {
                require_size(state, c.gains.size(), "decentralized state");
                Vector u = Vector::Zero(state.size());
                for (std::size_t i : c.buses) u[idx(i)] = state[idx(i)];
                return u;
            },
            [&](const Agc& c) {
                require_size(state, 1, "AGC state");
                Vector u(c.participation.size());
                for (Eigen::Index i = 0; i < u.size(); ++i) {
                    const double a = c.participation[i];
                    u[i] = std::isinf(a) ? 0.0 : state[0] / a;
                }
                return u;
            },
            [&](const Dai& c) {
                require_size(state, c.gains.size(), "DAI state");
                Vector u = Vector::Zero(state.size());
                for (std::size_t i = 0; i < c.cost.size(); ++i) {
                    if (c.cost.controlled(i)) u[idx(i)] = state[idx(i)];
                }
                return u;
            },
        },
        spec);
}

Vector output_rate(const ControllerSpec& spec, const Vector& state, const Vector& rate) {
    return std::visit(
        overloaded{
            [&](const GatherBroadcast& c) {
                Vector du = Vector::Zero(idx(c.cost.size()));
                for (std::size_t i = 0; i < c.cost.size(); ++i) {
                    const BusCost& b = c.cost.bus(i);
                    if (!b.controlled) continue;
                    const double raw = b.weight * b.curve.response(state[0]);
                    if (raw < b.lower || raw > b.upper) continue;
                    du[idx(i)] = b.weight * b.curve.slope(state[0]) * rate[0];
                }
                return du;
            },
            [&](const Agc& c) {
                Vector du(c.participation.size());
                for (Eigen::Index i = 0; i < du.size(); ++i) {
                    const double a = c.participation[i];
                    du[i] = std::isinf(a) ? 0.0 : rate[0] / a;
                }
                return du;
            },
            [&](const DecentralizedIntegral& c) {
                Vector du = Vector::Zero(rate.size());
                for (std::size_t i : c.buses) du[idx(i)] = rate[idx(i)];
                return du;
            },
            [&](const Dai& c) {
                Vector du = Vector::Zero(rate.size());
                for (std::size_t i = 0; i < c.cost.size(); ++i) {
                    if (c.cost.controlled(i)) du[idx(i)] = rate[idx(i)];
                }
                return du;
            },
        },
        spec);
}

Vector controller_rhs(const ControllerSpec& spec, const Vector& state, const Vector& omega,
                      const Vector& u_current) {
    return std::visit(
        overloaded{
            [&](const GatherBroadcast& c) {
                require_size(omega, c.weights.size(), "omega");
                Vector r(1);
                r[0] = -c.weights.dot(omega) / c.k;
                return r;
            },
            [&](const DecentralizedIntegral& c) {
                require_size(omega, c.gains.size(), "omega");
                require_size(state, c.gains.size(), "decentralized state");
                Vector r = Vector::Zero(state.size());
                for (std::size_t i : c.buses) {
                    r[idx(i)] = -(omega[idx(i)] + c.bias[idx(i)]) / c.gains[idx(i)];
                }
                return r;
            },
            [&](const Agc& c) {
                require_size(omega, c.participation.size(), "omega");
                Vector r(1);
                r[0] = -omega[idx(c.measured)] / c.k;
                return r;
            },
            [&](const Dai& c) {
                const auto n = c.gains.size();
                require_size(omega, n, "omega");
                require_size(u_current, n, "u");
                require_size(state, n, "DAI state");
                Vector marginal = Vector::Zero(n);
                Vector reported = Vector::Zero(n);
                for (std::size_t i = 0; i < c.cost.size(); ++i) {
                    if (!c.cost.controlled(i)) continue;
                    marginal[idx(i)] = c.cost.marginal(i, u_current[idx(i)]);
                    reported[idx(i)] = contains(c.cheaters, i) ? 0.0 : marginal[idx(i)];
                }
                Vector r = Vector::Zero(n);
                for (std::size_t i = 0; i < c.cost.size(); ++i) {
                    if (!c.cost.controlled(i)) continue;
                    double consensus = 0.0;
                    if (!contains(c.cheaters, i)) {
                        for (std::size_t j = 0; j < c.cost.size(); ++j) {
                            const double w = c.weights(idx(i), idx(j));
                            if (w == 0.0 || !c.cost.controlled(j)) continue;
                            consensus += w * (marginal[idx(i)] - reported[idx(j)]);
                        }
                    }
                    r[idx(i)] = (-omega[idx(i)] - consensus) / c.gains[idx(i)];
                }
                return r;
            },
        },
        spec);
}

std::string ReductionReport::summary() const {
    if (matches.empty()) return "none";
    std::string s;
    for (const auto& m : matches) {
        if (!s.empty()) s += ", ";
        s += m;
    }
    return s;
}

ReductionReport reduction_check(const ControllerSpec& spec, const NetworkModel& net) {
    const auto* gb = std::get_if<GatherBroadcast>(&spec);
    if (gb == nullptr) {
        throw UnsupportedDiagnostic("reduction check applies to gather-and-broadcast control only");
    }
    const Vector& c = gb->weights;
    require_size(c, idx(net.size()), "gather-and-broadcast weights");
    constexpr double tol = 1e-12;
    ReductionReport rep;

    std::vector<std::size_t> support;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (c[i] != 0.0) support.push_back(static_cast<std::size_t>(i));
    }
    bool quadratic = true;
    for (std::size_t i = 0; i < gb->cost.size(); ++i) {
        const BusCost& b = gb->cost.bus(i);
        if (b.controlled && b.curve.kind() != ResponseCurve::Kind::Linear) quadratic = false;
    }
    if (support.size() == 1 && quadratic) {
        rep.matches.push_back("AGC at bus " + std::to_string(net.bus(support.front()).id));
    }

    const double n = static_cast<double>(net.size());
    if ((c.array() - 1.0 / n).abs().maxCoeff() <= tol) rep.matches.push_back("mean-field");

    const Vector d = net.damping() / net.damping().sum();
    if ((c - d).cwiseAbs().maxCoeff() <= tol) rep.matches.push_back("all-to-all");
    return rep;
}

Matrix topology_weights(const NetworkModel& net, double weight) {
    const auto n = idx(net.size());
    Matrix w = Matrix::Zero(n, n);
    for (const Branch& br : net.branches()) {
        w(idx(br.from), idx(br.to)) = weight;
        w(idx(br.to), idx(br.from)) = weight;
    }
    return w;
}

}  // namespace freqctl
