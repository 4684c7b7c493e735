#include "riccati/discretization.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "riccati/diagnostics.hpp"
#include "riccati/errors.hpp"

namespace riccati {

namespace {

constexpr double kMaxExponent = 709.0;
constexpr long double kRescale = 1e150L;
const long double kLogRescale = std::log(kRescale);

// The recurrence runs in extended precision; at N = 700 the double version
// loses about three digits in the weights.
using Wide = long double;

struct ScaledLaguerre {
    Wide value = 0;     // L_n(x) * exp(-log_scale)
    Wide previous = 0;  // L_{n-1}(x) * exp(-log_scale)
    Wide log_scale = 0;
};

// Three-term recurrence with periodic rescaling; L_n(x) grows like x^n / n!
// for large x and would overflow at the far end of a 700-point rule.
ScaledLaguerre laguerre(int n, Wide x) {
    ScaledLaguerre r;
    Wide p0 = 1;
    Wide p1 = 1 - x;
    if (n == 0) {
        r.value = 1;
        return r;
    }
    for (int k = 1; k < n; ++k) {
        const Wide p2 = ((2 * k + 1 - x) * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
        if (std::abs(p1) > kRescale) {
            p0 /= kRescale;
            p1 /= kRescale;
            r.log_scale += kLogRescale;
        }
    }
    r.value = p1;
    r.previous = p0;
    return r;
}

Wide newton_polish(int N, Wide x) {
    for (int it = 0; it < 20; ++it) {
        const ScaledLaguerre l = laguerre(N, x);
        // L_N'(x) = N (L_N - L_{N-1}) / x; the common scale cancels in the ratio.
        const Wide step = x * l.value / (N * (l.value - l.previous));
        x -= step;
        if (std::abs(step) <= 4 * std::numeric_limits<Wide>::epsilon() * x) break;
    }
    return x;
}

void require_strictly_increasing(std::span<const double> nodes) {
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (!(nodes[i] > nodes[i - 1])) {
            throw ConfigurationError(
                fmt::format("interpolation nodes must be distinct and increasing (index {}: {} after {})", i,
                            nodes[i], nodes[i - 1]));
        }
    }
}

Vector interior_or_full(const Grid& grid, const Vector& values, const char* what) {
    const auto m = static_cast<Eigen::Index>(grid.dof);
    if (values.size() == m) return values;
    if (values.size() == m + 1) return values.tail(m);
    throw DomainError(fmt::format("{}: expected {} or {} values, got {}", what, m, m + 1, values.size()));
}

}  // namespace

QuadratureRule gauss_laguerre(int N) {
    if (N < 1 || N > 10000) throw DomainError(fmt::format("gauss_laguerre requires 1 <= N <= 10000, got {}", N));

    // Eigenvalues of the Jacobi matrix serve as starting points; Newton on
    // the recurrence then restores full relative accuracy at the small nodes.
    Eigen::VectorXd diagonal(N);
    Eigen::VectorXd subdiagonal(std::max(N - 1, 1));
    for (int k = 0; k < N; ++k) diagonal[k] = 2.0 * k + 1.0;
    for (int k = 1; k < N; ++k) subdiagonal[k - 1] = k;
    Eigen::VectorXd guesses;
    if (N == 1) {
        guesses = diagonal;
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        solver.computeFromTridiagonal(diagonal, subdiagonal.head(N - 1), Eigen::EigenvaluesOnly);
        guesses = solver.eigenvalues();
    }

    QuadratureRule rule;
    rule.nodes.resize(N);
    rule.weights.resize(N);
    rule.log_weights.resize(N);
    const Wide log_np1 = std::log(static_cast<Wide>(N) + 1);
    for (int i = 0; i < N; ++i) {
        const Wide x = newton_polish(N, guesses[i]);
        const ScaledLaguerre next = laguerre(N + 1, x);
        const Wide log_l = std::log(std::abs(next.value)) + next.log_scale;
        const Wide log_w = std::log(x) - 2 * log_np1 - 2 * log_l;
        rule.nodes[i] = static_cast<double>(x);
        rule.log_weights[i] = static_cast<double>(log_w);
        rule.weights[i] = static_cast<double>(std::exp(log_w));
    }
    return rule;
}

int truncated_size(int N, double M) {
    if (N < 1) throw ConfigurationError(fmt::format("grid size N must be >= 1, got {}", N));
    if (!(M > 0.0)) throw ConfigurationError(fmt::format("truncation multiplier M must be > 0, got {}", M));
    // The small slack keeps exact products such as 1 * sqrt(100) from
    // rounding up to the next integer.
    return static_cast<int>(std::ceil(M * std::sqrt(static_cast<double>(N)) - 1e-9));
}

double clamped_multiplier(int N, double M) {
    if (N < 1) throw ConfigurationError(fmt::format("grid size N must be >= 1, got {}", N));
    return std::min(M, std::sqrt(static_cast<double>(N)));
}

Grid truncated_grid(int N, double M) {
    const int m = truncated_size(N, M);
    if (m > N) throw ConfigurationError(fmt::format("ceil(M sqrt(N)) = {} exceeds N = {}", m, N));
    const QuadratureRule rule = gauss_laguerre(N);

    Grid grid;
    grid.N = N;
    grid.M = M;
    grid.dof = m;
    grid.nodes.reserve(m + 1);
    grid.nodes.push_back(0.0);
    grid.basis_nodes.reserve(N + 1);
    grid.basis_nodes.push_back(0.0);
    grid.basis_nodes.insert(grid.basis_nodes.end(), rule.nodes.begin(), rule.nodes.end());
    for (int i = 0; i < m; ++i) {
        grid.nodes.push_back(rule.nodes[i]);
        grid.quad_weights.push_back(rule.weights[i]);
        grid.scaled_weights.push_back(std::exp(rule.log_weights[i] + rule.nodes[i]));
    }
    return grid;
}

WeightedBarycentric::WeightedBarycentric(std::span<const double> nodes)
    : WeightedBarycentric(nodes, nodes.size()) {}

WeightedBarycentric::WeightedBarycentric(const Grid& grid)
    : WeightedBarycentric(grid.basis_nodes.empty() ? std::span<const double>(grid.nodes)
                                                   : std::span<const double>(grid.basis_nodes),
                          grid.nodes.size()) {}

WeightedBarycentric::WeightedBarycentric(std::span<const double> basis_nodes, std::size_t active)
    : nodes_(basis_nodes.begin(), basis_nodes.end()), active_(active) {
    if (nodes_.empty()) throw ConfigurationError("interpolation needs at least one node");
    if (active_ == 0 || active_ > nodes_.size()) {
        throw ConfigurationError(fmt::format("active node count {} outside 1..{}", active_, nodes_.size()));
    }
    require_strictly_increasing(nodes_);
    const std::size_t n = nodes_.size();
    log_abs_weight_.assign(n, 0.0);
    weight_sign_.assign(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        double log_sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k != j) log_sum += std::log(std::abs(nodes_[j] - nodes_[k]));
        }
        log_abs_weight_[j] = -log_sum;
        // Nodes are sorted, so x_j - x_k < 0 exactly for the n - 1 - j nodes above x_j.
        weight_sign_[j] = ((n - 1 - j) % 2 == 0) ? 1.0 : -1.0;
    }
}

void WeightedBarycentric::fill_row(double y, double* values_row, double* derivative_row, std::size_t stride) const {
    const std::size_t n = nodes_.size();
    const auto hit = std::find(nodes_.begin(), nodes_.end(), y);
    if (hit != nodes_.end()) {
        const auto r = static_cast<std::size_t>(hit - nodes_.begin());
        if (values_row) {
            for (std::size_t j = 0; j < active_; ++j) values_row[j * stride] = (j == r) ? 1.0 : 0.0;
        }
        if (derivative_row) {
            for (std::size_t j = 0; j < active_; ++j) {
                if (j == r) continue;
                const double d = nodes_[r] - nodes_[j];
                const double exponent = log_abs_weight_[j] - log_abs_weight_[r] + nodes_[j] - nodes_[r];
                if (exponent > kMaxExponent) {
                    throw NumericalError(fmt::format("differentiation exponent overflow at node {} (t = {})", r, y));
                }
                derivative_row[j * stride] = weight_sign_[j] * weight_sign_[r] * std::exp(exponent) / d;
            }
            if (r < active_) {
                double diagonal = -1.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != r) diagonal += 1.0 / (nodes_[r] - nodes_[k]);
                }
                derivative_row[r * stride] = diagonal;
            }
        }
        return;
    }

    double log_node_poly = 0.0;
    double sign_node_poly = 1.0;
    double inverse_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = y - nodes_[k];
        log_node_poly += std::log(std::abs(d));
        if (d < 0) sign_node_poly = -sign_node_poly;
        inverse_sum += 1.0 / d;
    }
    for (std::size_t j = 0; j < active_; ++j) {
        const double d = y - nodes_[j];
        const double exponent = log_node_poly - std::log(std::abs(d)) + log_abs_weight_[j] + nodes_[j] - y;
        if (exponent > kMaxExponent) {
            throw NumericalError(
                fmt::format("interpolation exponent overflow for node {} at t = {} (exponent {:.1f})", j, y, exponent));
        }
        const double sign = sign_node_poly * weight_sign_[j] * (d < 0 ? -1.0 : 1.0);
        const double value = sign * std::exp(exponent);
        if (values_row) values_row[j * stride] = value;
        if (derivative_row) derivative_row[j * stride] = value * (inverse_sum - 1.0 / d - 1.0);
    }
}

Matrix WeightedBarycentric::value_matrix(std::span<const double> points) const {
    Matrix V(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(active_));
    const auto stride = static_cast<std::size_t>(V.rows());
    for (std::size_t i = 0; i < points.size(); ++i) fill_row(points[i], V.data() + i, nullptr, stride);
    return V;
}

Matrix WeightedBarycentric::derivative_matrix(std::span<const double> points) const {
    Matrix Dv(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(active_));
    const auto stride = static_cast<std::size_t>(Dv.rows());
    for (std::size_t i = 0; i < points.size(); ++i) fill_row(points[i], nullptr, Dv.data() + i, stride);
    return Dv;
}

Matrix WeightedBarycentric::differentiation_matrix() const { return derivative_matrix(nodes()); }

double WeightedBarycentric::evaluate(std::span<const double> values, double t) const {
    if (values.size() != active_) {
        throw DomainError(fmt::format("expected {} node values, got {}", active_, values.size()));
    }
    std::vector<double> row(active_);
    fill_row(t, row.data(), nullptr, 1);
    double sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) sum += row[j] * values[j];
    return sum;
}

Matrix differentiation_matrix_full(const Grid& grid) {
    return WeightedBarycentric(grid).differentiation_matrix();
}

Matrix differentiation_matrix(const Grid& grid) {
    const Matrix full = differentiation_matrix_full(grid);
    return full.bottomRightCorner(grid.dof, grid.dof);
}

Matrix resampling_matrix_full(const Grid& grid, double alpha) {
    if (!(alpha > 0.0)) throw DomainError(fmt::format("resampling requires alpha > 0, got {}", alpha));
    std::vector<double> points(grid.nodes.size());
    for (std::size_t i = 0; i < points.size(); ++i) points[i] = alpha * grid.nodes[i];
    return WeightedBarycentric(grid).value_matrix(points);
}

Matrix resampling_matrix(const Grid& grid, double alpha) {
    return resampling_matrix_full(grid, alpha).bottomRightCorner(grid.dof, grid.dof);
}

double quadrature_integral(const Grid& grid, const Vector& values) {
    const Vector interior = interior_or_full(grid, values, "quadrature");
    double sum = 0.0;
    for (int i = 0; i < grid.dof; ++i) sum += grid.scaled_weights[i] * interior[i];
    return sum;
}

double quadrature_norm(const Grid& grid, const Vector& values) {
    const Vector interior = interior_or_full(grid, values, "quadrature_norm");
    return std::sqrt(quadrature_integral(grid, interior.cwiseProduct(interior)));
}

Vector full_samples(const Grid& grid, const Vector& values) {
    const auto m = static_cast<Eigen::Index>(grid.dof);
    if (values.size() == m + 1) return values;
    if (values.size() != m) {
        throw DomainError(fmt::format("expected {} or {} values, got {}", m, m + 1, values.size()));
    }
    Vector full(m + 1);
    full[0] = 0.0;
    full.tail(m) = values;
    return full;
}

InterpolationQuality interpolation_quality(const Grid& grid, double t) {
    if (t <= grid.last_node()) return InterpolationQuality::interior;
    if (t <= 1.2 * grid.last_node()) return InterpolationQuality::extrapolated;
    return InterpolationQuality::far_extrapolated;
}

double interpolate(const Grid& grid, const Vector& values, double t) {
    if (!(t >= 0.0)) throw DomainError(fmt::format("interpolation requires t >= 0, got {}", t));
    if (interpolation_quality(grid, t) == InterpolationQuality::far_extrapolated) {
        warn(fmt::format("interpolating at t = {} beyond 1.2x the last node {}", t, grid.last_node()));
    }
    const Vector full = full_samples(grid, values);
    return WeightedBarycentric(grid).evaluate(std::span<const double>(full.data(), full.size()), t);
}

Vector balance_scale(const Grid& grid, bool with_origin) {
    const std::size_t first = with_origin ? 0 : 1;
    Vector s(static_cast<Eigen::Index>(grid.nodes.size() - first));
    for (std::size_t i = first; i < grid.nodes.size(); ++i) {
        s[static_cast<Eigen::Index>(i - first)] = std::exp(-0.5 * grid.nodes[i]);
    }
    return s;
}

OperatorSet::OperatorSet(std::shared_ptr<const Grid> grid, double alpha, Mode mode)
    : OperatorSet(OperatorFamily(std::move(grid), mode).at(alpha)) {}

OperatorSet::OperatorSet(const Grid& grid, double alpha, Mode mode)
    : OperatorSet(std::make_shared<const Grid>(grid), alpha, mode) {}

OperatorSet::OperatorSet(std::shared_ptr<const Grid> grid, std::shared_ptr<const WeightedBarycentric> basis,
                         const Matrix& D_full, double alpha, Mode mode)
    : grid_(std::move(grid)), alpha_(alpha), mode_(mode) {
    if (!(alpha > 0.0)) throw DomainError(fmt::format("operators require alpha > 0, got {}", alpha));
    const auto& nodes = grid_->nodes;
    std::vector<double> points(nodes.size());
    for (std::size_t i = 0; i < points.size(); ++i) points[i] = alpha * nodes[i];
    const Matrix P_full = basis->value_matrix(points);
    Matrix dP_full = basis->derivative_matrix(points);
    for (std::size_t i = 0; i < nodes.size(); ++i) dP_full.row(static_cast<Eigen::Index>(i)) *= nodes[i];

    scale_ = balance_scale(*grid_, mode == Mode::family_b_u_form);
    if (mode == Mode::family_a_v_form) {
        const int m = grid_->dof;
        D_ = D_full.bottomRightCorner(m, m);
        P_ = P_full.bottomRightCorner(m, m);
        dP_ = dP_full.bottomRightCorner(m, m);
    } else {
        D_ = D_full;
        P_ = P_full;
        dP_ = dP_full;
    }
}

OperatorFamily::OperatorFamily(std::shared_ptr<const Grid> grid, Mode mode)
    : grid_(std::move(grid)),
      mode_(mode),
      basis_(std::make_shared<const WeightedBarycentric>(*grid_)),
      D_full_(basis_->differentiation_matrix()) {}

OperatorFamily::OperatorFamily(const Grid& grid, Mode mode)
    : OperatorFamily(std::make_shared<const Grid>(grid), mode) {}

int OperatorFamily::size() const { return mode_ == Mode::family_a_v_form ? grid_->dof : grid_->dof + 1; }

OperatorSet OperatorFamily::at(double alpha) const { return OperatorSet(grid_, basis_, D_full_, alpha, mode_); }

}  // namespace riccati
