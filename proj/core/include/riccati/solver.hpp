#pragma once

// Discrete form of the equation on the truncated Laguerre grid.
//
//   family A (v = u - 1, v(0) = 0):  (D + I - 2 P_alpha) v - P_alpha (v o v) = 0
//   family B (u itself, u(0) = 1):   (D + I) u - P_alpha (u o u) = 0, row 0 -> u_0 - 1

#include <string>
#include <string_view>
#include <vector>

#include "riccati/discretization.hpp"
#include "riccati/qseries.hpp"

namespace riccati {

enum class Classification { plus, minus, trivial, decaying };

std::string_view to_string(Classification c);
std::string_view to_string(Mode m);

struct NewtonOptions {
    /// Infinity norm of the residual.
    double tolerance = 1e-10;
    int max_iterations = 25;
    int max_halvings = 8;
};

struct SolveResult {
    double alpha = 0.0;
    Mode mode = Mode::family_a_v_form;
    /// Interior samples (family A) or all node samples (family B).
    Vector values;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    Classification classification = Classification::trivial;
    /// ||F||_inf before the first step and after every accepted step.
    std::vector<double> residual_history;
    std::string message;
};

/// Solves A x = rhs as (S^-1 A S) y = S^-1 rhs, x = S y with S = diag(scale).
Vector balanced_solve(const Matrix& A, const Vector& rhs, const Vector& scale);

Vector residual(const OperatorSet& ops, const Vector& values);
Matrix jacobian(const OperatorSet& ops, const Vector& values);
/// dF/dalpha at fixed values.
Vector alpha_derivative(const OperatorSet& ops, const Vector& values);

/// Damped Newton: a step is halved (at most max_halvings times) while it
/// fails to reduce ||F||_inf. Never throws on a singular or non-finite
/// linear solve; the result carries converged = false and a message instead.
SolveResult newton_solve(const OperatorSet& ops, const Vector& initial, const NewtonOptions& options = {});

struct CharacteristicMode {
    Vector values;  // interior samples, unit quadrature norm
    double smallest_singular_value = 0.0;
    double second_singular_value = 0.0;
    /// second / smallest < 1e3.
    bool ambiguous = false;
};

/// Right singular vector of D + I - 2 P_alpha for the smallest singular
/// value, scaled to unit L2 norm with its first significant extremum positive.
/// Requires alpha within 1e-12 of some 2^(1/n) and family-A operators.
CharacteristicMode characteristic_solve(const OperatorSet& ops);

/// max_i |values_i - e_i| over the interior nodes, where e samples the series
/// solution with the normalization and sign convention of characteristic_solve.
double characteristic_error(const Grid& grid, const Vector& values, const SeriesSolution& series);

struct ProfileOptions {
    /// Extrema and zeros are only sought beyond t_min; characteristic
    /// profiles are flat to all orders at t = 0.
    double t_min = 0.05;
    /// Samples with |v| below significance * max|v| carry no sign information.
    double significance = 1e-6;
    /// Interpolant samples per node interval.
    int samples_per_interval = 8;
};

/// plus / minus by the first turning point of the interpolant beyond t_min
/// (a maximum or a minimum); trivial when max|values| <= 1e-10. Throws
/// NumericalError when no turning point exists on the reliable span.
Classification classify(const Grid& grid, const Vector& values, const ProfileOptions& options = {});

/// Bisection-refined sign changes of the interpolant between t_min and the
/// last node where |v| is still significant.
std::vector<double> locate_zeros(const Grid& grid, const Vector& values, const ProfileOptions& options = {});
int count_zeros(const Grid& grid, const Vector& values, const ProfileOptions& options = {});

/// Newton in u-form from samples of exp(-t). Classification is `decaying`
/// on success.
SolveResult solve_family_b(const OperatorSet& ops, const NewtonOptions& options = {});

/// Off-grid residual u'(t) + u(t) - u(alpha t)^2 of the interpolant (u-form)
/// or v'(t) + v(t) - 2 v(alpha t) - v(alpha t)^2 (v-form).
double continuous_residual(const Grid& grid, Mode mode, double alpha, const Vector& values, double t);

/// (alpha - 2) Q(v) - Q(v^2) with Q the grid quadrature; zero for any
/// family-A solution.
double moment_identity_defect(const Grid& grid, double alpha, const Vector& values);

}  // namespace riccati
