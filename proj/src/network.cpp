#include "freqctl/network.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>

namespace freqctl {

std::string_view to_string(BusKind kind) {
    switch (kind) {
        case BusKind::Generator: return "generator";
        case BusKind::FrequencyResponsive: return "responsive";
        case BusKind::Passive: return "passive";
    }
    return "unknown";
}

namespace {

std::string bus_label(const Bus& b) { return "bus " + std::to_string(b.id); }

}  // namespace

void validate_bus(const Bus& b) {
    if (!std::isfinite(b.inertia) || !std::isfinite(b.damping) || !std::isfinite(b.injection)) {
        throw ValidationError(bus_label(b) + ": non-finite parameter");
    }
    switch (b.kind) {
        case BusKind::Generator:
            if (b.inertia <= 0.0 || b.damping <= 0.0) {
                throw ValidationError(bus_label(b) + ": a generator needs M > 0 and D > 0");
            }
            break;
        case BusKind::FrequencyResponsive:
            if (b.inertia != 0.0 || b.damping <= 0.0) {
                throw ValidationError(bus_label(b) + ": a responsive bus needs M = 0 and D > 0");
            }
            break;
        case BusKind::Passive:
            if (b.inertia != 0.0 || b.damping != 0.0) {
                throw ValidationError(bus_label(b) + ": a passive bus needs M = 0 and D = 0");
            }
            break;
    }
}

NetworkModel::NetworkModel(std::vector<Bus> buses, std::vector<Branch> branches, double base_mva)
    : buses_(std::move(buses)), branches_(std::move(branches)), base_mva_(base_mva) {
    const std::size_t n = buses_.size();
    if (n == 0) throw ValidationError("network has no buses");
    if (!(base_mva_ > 0.0) || !std::isfinite(base_mva_)) {
        throw ValidationError("base_mva must be positive");
    }

    std::set<int> ids;
    for (const Bus& b : buses_) {
        if (!ids.insert(b.id).second) {
            throw ValidationError("duplicate bus id " + std::to_string(b.id));
        }
        validate_bus(b);
    }

    adjacency_.assign(n, {});
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Branch& br : branches_) {
        if (br.from >= n || br.to >= n) {
            throw ValidationError("branch references a bus index outside the network");
        }
        const std::string name = "branch " + std::to_string(buses_[br.from].id) + "-" +
                                 std::to_string(buses_[br.to].id);
        if (br.from == br.to) throw ValidationError(name + ": self loop");
        if (!(br.susceptance > 0.0) || !std::isfinite(br.susceptance)) {
            throw ValidationError(name + ": susceptance must be positive");
        }
        auto key = std::minmax(br.from, br.to);
        if (!seen.insert({key.first, key.second}).second) {
            throw ValidationError(name + ": duplicate branch");
        }
        adjacency_[br.from].push_back({br.to, br.susceptance});
        adjacency_[br.to].push_back({br.from, br.susceptance});
    }

    // connectivity by iterative DFS from bus 0
    std::vector<bool> reached(n, false);
    std::vector<std::size_t> stack{0};
    reached[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
        std::size_t i = stack.back();
        stack.pop_back();
        for (const Neighbor& nb : adjacency_[i]) {
            if (!reached[nb.bus]) {
                reached[nb.bus] = true;
                ++count;
                stack.push_back(nb.bus);
            }
        }
    }
    if (count != n) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!reached[i]) {
                throw ValidationError("network is disconnected: " + bus_label(buses_[i]) +
                                      " is unreachable from " + bus_label(buses_[0]));
            }
        }
    }

    inertia_.resize(static_cast<Eigen::Index>(n));
    damping_.resize(static_cast<Eigen::Index>(n));
    injections_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        inertia_[k] = buses_[i].inertia;
        damping_[k] = buses_[i].damping;
        injections_[k] = buses_[i].injection;
        switch (buses_[i].kind) {
            case BusKind::Generator: generators_.push_back(i); break;
            case BusKind::FrequencyResponsive: responsive_.push_back(i); break;
            case BusKind::Passive: passive_.push_back(i); break;
        }
    }
    if (generators_.empty() && responsive_.empty()) {
        throw ValidationError("network needs at least one generator or responsive bus");
    }
}

std::size_t NetworkModel::index_of(int id) const {
    for (std::size_t i = 0; i < buses_.size(); ++i) {
        if (buses_[i].id == id) return i;
    }
    throw ValidationError("unknown bus id " + std::to_string(id));
}

NetworkModel NetworkModel::with_injections(const Vector& injections) const {
    require_size(injections, static_cast<Eigen::Index>(size()), "with_injections");
    std::vector<Bus> buses = buses_;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        buses[i].injection = injections[static_cast<Eigen::Index>(i)];
    }
    return NetworkModel(std::move(buses), branches_, base_mva_);
}

Vector flow_injections(const NetworkModel& net, const Vector& theta) {
    const auto n = static_cast<Eigen::Index>(net.size());
    require_size(theta, n, "flow_injections");
    Vector f = Vector::Zero(n);
    for (const Branch& br : net.branches()) {
        const auto i = static_cast<Eigen::Index>(br.from);
        const auto j = static_cast<Eigen::Index>(br.to);
        const double p = br.susceptance * std::sin(theta[i] - theta[j]);
        f[i] += p;
        f[j] -= p;
    }
    return f;
}

double potential(const NetworkModel& net, const Vector& theta) {
    require_size(theta, static_cast<Eigen::Index>(net.size()), "potential");
    double u = 0.0;
    for (const Branch& br : net.branches()) {
        const double d = theta[static_cast<Eigen::Index>(br.from)] - theta[static_cast<Eigen::Index>(br.to)];
        // 1 - cos d = 2 sin^2(d/2) keeps precision for small angle differences
        const double s = std::sin(0.5 * d);
        u += br.susceptance * 2.0 * s * s;
    }
    return u;
}

Matrix hessian(const NetworkModel& net, const Vector& theta) {
    const auto n = static_cast<Eigen::Index>(net.size());
    require_size(theta, n, "hessian");
    Matrix h = Matrix::Zero(n, n);
    for (const Branch& br : net.branches()) {
        const auto i = static_cast<Eigen::Index>(br.from);
        const auto j = static_cast<Eigen::Index>(br.to);
        const double w = br.susceptance * std::cos(theta[i] - theta[j]);
        h(i, j) -= w;
        h(j, i) -= w;
        h(i, i) += w;
        h(j, j) += w;
    }
    return h;
}

SecurityReport check_security(const NetworkModel& net, const Vector& theta) {
    require_size(theta, static_cast<Eigen::Index>(net.size()), "check_security");
    SecurityReport report;
    bool first = true;
    for (const Branch& br : net.branches()) {
        const double d = std::abs(theta[static_cast<Eigen::Index>(br.from)] -
                                  theta[static_cast<Eigen::Index>(br.to)]);
        if (first || d > report.worst_difference) {
            report.worst_difference = d;
            report.worst_from = br.from;
            report.worst_to = br.to;
            first = false;
        }
    }
    report.secure = report.worst_difference < std::numbers::pi / 2.0;
    return report;
}

}  // namespace freqctl
