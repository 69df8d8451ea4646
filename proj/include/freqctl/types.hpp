#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "freqctl/errors.hpp"

namespace freqctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline void require_size(const Vector& v, Eigen::Index n, const char* what) {
    if (v.size() != n) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(n) +
                             " entries, got " + std::to_string(v.size()));
    }
}

}  // namespace freqctl
