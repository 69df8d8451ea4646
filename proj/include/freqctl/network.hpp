#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "freqctl/types.hpp"

namespace freqctl {

enum class BusKind { Generator, FrequencyResponsive, Passive };

std::string_view to_string(BusKind kind);

struct Bus {
    int id = 0;  // external label, as written in the case file
    BusKind kind = BusKind::Passive;
    double inertia = 0.0;    // M_i [pu s^2]
    double damping = 0.0;    // D_i [pu s]
    double injection = 0.0;  // P_i [pu], positive for sources
};

/// Checks the inertia/damping pattern required by the bus kind.
void validate_bus(const Bus& bus);

struct Branch {
    std::size_t from = 0;
    std::size_t to = 0;
    double susceptance = 0.0;  // effective B_ij [pu]
};

struct Neighbor {
    std::size_t bus;
    double susceptance;
};

/// Lossless transmission network with classified buses. Immutable once built;
/// the constructor enforces the bus-kind, susceptance and connectivity
/// invariants and throws ValidationError otherwise.
class NetworkModel {
  public:
    NetworkModel(std::vector<Bus> buses, std::vector<Branch> branches, double base_mva = 100.0);

    std::size_t size() const noexcept { return buses_.size(); }
    double base_mva() const noexcept { return base_mva_; }

    const Bus& bus(std::size_t i) const { return buses_.at(i); }
    const std::vector<Bus>& buses() const noexcept { return buses_; }
    const std::vector<Branch>& branches() const noexcept { return branches_; }
    std::span<const Neighbor> neighbors(std::size_t i) const { return adjacency_.at(i); }

    BusKind kind(std::size_t i) const { return buses_.at(i).kind; }
    bool is_dynamic(std::size_t i) const { return kind(i) != BusKind::Passive; }

    /// Index of the bus with external id `id`; throws ValidationError if absent.
    std::size_t index_of(int id) const;

    const Vector& inertia() const noexcept { return inertia_; }
    const Vector& damping() const noexcept { return damping_; }
    const Vector& injections() const noexcept { return injections_; }
    double total_damping() const noexcept { return damping_.sum(); }

    const std::vector<std::size_t>& generators() const noexcept { return generators_; }
    const std::vector<std::size_t>& frequency_responsive() const noexcept { return responsive_; }
    const std::vector<std::size_t>& passive() const noexcept { return passive_; }

    /// Same topology and machines, different fixed injections.
    NetworkModel with_injections(const Vector& injections) const;

  private:
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<std::vector<Neighbor>> adjacency_;
    double base_mva_;
    Vector inertia_, damping_, injections_;
    std::vector<std::size_t> generators_, responsive_, passive_;
};

/// f_i(theta) = sum_j B_ij sin(theta_i - theta_j), the gradient of `potential`.
Vector flow_injections(const NetworkModel& net, const Vector& theta);

/// U(theta) = sum over branches of B_ij (1 - cos(theta_i - theta_j)).
double potential(const NetworkModel& net, const Vector& theta);

/// Hessian of U: a susceptance-weighted Laplacian with cos(theta_i - theta_j) weights.
Matrix hessian(const NetworkModel& net, const Vector& theta);

struct SecurityReport {
    bool secure = true;
    std::size_t worst_from = 0;
    std::size_t worst_to = 0;
    double worst_difference = 0.0;  // |theta_i - theta_j| on the worst branch
};

/// Every branch must carry an angle difference strictly below pi/2.
SecurityReport check_security(const NetworkModel& net, const Vector& theta);

}  // namespace freqctl
