#pragma once

#include <cmath>
#include <functional>

#include "riccati/discretization.hpp"

namespace fixtures {

// Default grid N = 700, M = 6, built once per process.
inline const riccati::Grid& default_grid() {
    static const riccati::Grid grid = riccati::truncated_grid(700, 6.0);
    return grid;
}

inline riccati::Vector sample(std::span<const double> t, const std::function<double(double)>& f) {
    riccati::Vector v(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(t[i]);
    return v;
}

inline double max_rel(const riccati::Vector& got, const riccati::Vector& want) {
    return (got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff();
}

}  // namespace fixtures
