#include "riccati/solver.hpp"

#include <Eigen/SVD>
#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "riccati/diagnostics.hpp"
#include "riccati/errors.hpp"

namespace riccati {

namespace {

void require_size(const OperatorSet& ops, const Vector& values) {
    if (values.size() != ops.size()) {
        throw DomainError(fmt::format("state has {} entries, operators expect {}", values.size(), ops.size()));
    }
}

double inf_norm(const Vector& r) { return r.size() == 0 ? 0.0 : r.cwiseAbs().maxCoeff(); }

struct ProfileSamples {
    std::vector<double> t;
    std::vector<double> v;
    double threshold = 0.0;
};

// Dense samples of the interpolant from t_min up to the last node whose value
// is still significant relative to the peak.
ProfileSamples sample_profile(const Grid& grid, const Vector& values, const ProfileOptions& options,
                              const WeightedBarycentric& basis) {
    const Vector full = full_samples(grid, values);
    const double peak = full.cwiseAbs().maxCoeff();
    ProfileSamples samples;
    samples.threshold = options.significance * peak;

    Eigen::Index last = full.size() - 1;
    while (last > 0 && std::abs(full[last]) < samples.threshold) --last;

    const int per = std::max(options.samples_per_interval, 1);
    for (Eigen::Index k = 0; k < last; ++k) {
        const double a = grid.nodes[static_cast<std::size_t>(k)];
        const double b = grid.nodes[static_cast<std::size_t>(k) + 1];
        for (int s = 0; s < per; ++s) {
            const double t = a + (b - a) * s / per;
            if (t >= options.t_min) samples.t.push_back(t);
        }
    }
    const double t_last = grid.nodes[static_cast<std::size_t>(last)];
    if (t_last >= options.t_min) samples.t.push_back(t_last);
    if (samples.t.empty()) return samples;

    const Vector sampled = basis.value_matrix(samples.t) * full;
    samples.v.assign(sampled.data(), sampled.data() + sampled.size());
    return samples;
}

}  // namespace

std::string_view to_string(Classification c) {
    switch (c) {
        case Classification::plus:
            return "plus";
        case Classification::minus:
            return "minus";
        case Classification::trivial:
            return "trivial";
        case Classification::decaying:
            return "decaying";
    }
    return "unknown";
}

std::string_view to_string(Mode m) {
    return m == Mode::family_a_v_form ? "family_A_v_form" : "family_B_u_form";
}

Vector balanced_solve(const Matrix& A, const Vector& rhs, const Vector& scale) {
    if (A.rows() != A.cols() || A.rows() != rhs.size() || A.rows() != scale.size()) {
        throw DomainError("balanced_solve: dimension mismatch");
    }
    const Vector inv = scale.cwiseInverse();
    const Matrix B = inv.asDiagonal() * A * scale.asDiagonal();
    return scale.cwiseProduct(B.partialPivLu().solve(inv.cwiseProduct(rhs)));
}

Vector residual(const OperatorSet& ops, const Vector& values) {
    require_size(ops, values);
    const Vector square = values.cwiseProduct(values);
    if (ops.mode() == Mode::family_a_v_form) {
        return ops.D() * values + values - ops.P() * (2.0 * values + square);
    }
    Vector r = ops.D() * values + values - ops.P() * square;
    r[0] = values[0] - 1.0;
    return r;
}

Matrix jacobian(const OperatorSet& ops, const Vector& values) {
    require_size(ops, values);
    const Eigen::Index n = values.size();
    Matrix J = ops.D();
    J.diagonal().array() += 1.0;
    if (ops.mode() == Mode::family_a_v_form) {
        J -= ops.P() * (2.0 * (Vector::Ones(n) + values)).asDiagonal();
        return J;
    }
    J -= ops.P() * (2.0 * values).asDiagonal();
    J.row(0).setZero();
    J(0, 0) = 1.0;
    return J;
}

Vector alpha_derivative(const OperatorSet& ops, const Vector& values) {
    require_size(ops, values);
    const Vector square = values.cwiseProduct(values);
    if (ops.mode() == Mode::family_a_v_form) return -(ops.dP() * (2.0 * values + square));
    Vector d = -(ops.dP() * square);
    d[0] = 0.0;
    return d;
}

SolveResult newton_solve(const OperatorSet& ops, const Vector& initial, const NewtonOptions& options) {
    if (!(options.tolerance > 0.0)) throw DomainError("Newton tolerance must be positive");
    require_size(ops, initial);

    SolveResult result;
    result.alpha = ops.alpha();
    result.mode = ops.mode();
    result.values = initial;

    Vector r = residual(ops, result.values);
    double norm = inf_norm(r);
    result.residual_history.push_back(norm);

    while (std::isfinite(norm) && norm > options.tolerance && result.iterations < options.max_iterations) {
        const Vector step = balanced_solve(jacobian(ops, result.values), -r, ops.scale());
        if (!step.allFinite()) {
            result.message = fmt::format("singular Jacobian at iteration {}", result.iterations);
            break;
        }
        double lambda = 1.0;
        bool accepted = false;
        Vector trial;
        Vector trial_r;
        double trial_norm = std::numeric_limits<double>::infinity();
        for (int h = 0; h <= options.max_halvings; ++h) {
            trial = result.values + lambda * step;
            trial_r = residual(ops, trial);
            trial_norm = inf_norm(trial_r);
            if (std::isfinite(trial_norm) && trial_norm < norm) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        ++result.iterations;
        if (!accepted) {
            result.message = fmt::format("no residual decrease after {} halvings at iteration {}",
                                         options.max_halvings, result.iterations);
            break;
        }
        result.values = std::move(trial);
        r = std::move(trial_r);
        norm = trial_norm;
        result.residual_history.push_back(norm);
    }

    result.residual_norm = norm;
    result.converged = std::isfinite(norm) && norm <= options.tolerance;
    if (!result.converged && result.message.empty()) {
        result.message = fmt::format("no convergence in {} iterations (residual {:.3e})", result.iterations, norm);
    }
    if (ops.mode() == Mode::family_b_u_form) {
        result.classification = Classification::decaying;
    } else if (result.values.cwiseAbs().maxCoeff() <= 1e-10) {
        result.classification = Classification::trivial;
    } else {
        try {
            result.classification = classify(ops.grid(), result.values);
        } catch (const NumericalError& e) {
            result.classification = Classification::trivial;
            if (result.message.empty()) result.message = e.what();
        }
    }
    return result;
}

CharacteristicMode characteristic_solve(const OperatorSet& ops) {
    if (ops.mode() != Mode::family_a_v_form) throw ConfigurationError("characteristic_solve needs v-form operators");
    const double alpha = ops.alpha();
    if (!(alpha > 1.0)) throw DomainError(fmt::format("characteristic_solve requires alpha > 1, got {}", alpha));
    if (!characteristic_index_of(alpha)) {
        throw DomainError(fmt::format("alpha = {} is not a characteristic value 2^(1/n)", alpha));
    }

    Matrix A = ops.D() - 2.0 * ops.P();
    A.diagonal().array() += 1.0;
    const Vector& s = ops.scale();
    A = s.cwiseInverse().asDiagonal() * A * s.asDiagonal();
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeFullV);
    const Vector& sigma = svd.singularValues();
    const Eigen::Index last = sigma.size() - 1;

    CharacteristicMode mode;
    mode.values = s.cwiseProduct(svd.matrixV().col(last));
    mode.smallest_singular_value = sigma[last];
    mode.second_singular_value = last > 0 ? sigma[last - 1] : std::numeric_limits<double>::infinity();
    mode.ambiguous = mode.second_singular_value < 1e3 * mode.smallest_singular_value;
    if (mode.ambiguous) {
        warn(fmt::format("nullspace at alpha = {} is not well separated (sigma ratio {:.3g})", alpha,
                         mode.second_singular_value / mode.smallest_singular_value));
    }
    mode.values /= quadrature_norm(ops.grid(), mode.values);
    if (classify(ops.grid(), mode.values) == Classification::minus) mode.values = -mode.values;
    return mode;
}

double characteristic_error(const Grid& grid, const Vector& values, const SeriesSolution& series) {
    if (values.size() != grid.dof) {
        throw DomainError(fmt::format("expected {} interior values, got {}", grid.dof, values.size()));
    }
    Vector exact(grid.dof);
    for (int i = 0; i < grid.dof; ++i) exact[i] = evaluate_E(series, grid.nodes[static_cast<std::size_t>(i) + 1]);
    const double norm = quadrature_norm(grid, exact);
    if (!(norm > 0.0)) throw NumericalError("series solution vanishes on the grid");
    exact /= norm;
    const Eigen::Map<const Vector> w(grid.scaled_weights.data(), grid.dof);
    if ((w.array() * values.array() * exact.array()).sum() < 0.0) exact = -exact;
    return (values - exact).cwiseAbs().maxCoeff();
}

Classification classify(const Grid& grid, const Vector& values, const ProfileOptions& options) {
    if (values.cwiseAbs().maxCoeff() <= 1e-10) return Classification::trivial;
    const WeightedBarycentric basis(grid);
    const ProfileSamples s = sample_profile(grid, values, options, basis);

    // Walk the significant samples; the first change of slope sign is the
    // first turning point.
    int slope_sign = 0;
    double previous = 0.0;
    bool have_previous = false;
    for (std::size_t k = 0; k < s.v.size(); ++k) {
        if (std::abs(s.v[k]) < s.threshold) continue;
        if (have_previous) {
            const double delta = s.v[k] - previous;
            const int sign = delta > 0 ? 1 : (delta < 0 ? -1 : 0);
            if (sign != 0) {
                if (slope_sign != 0 && sign != slope_sign) {
                    return slope_sign > 0 ? Classification::plus : Classification::minus;
                }
                slope_sign = sign;
            }
        }
        previous = s.v[k];
        have_previous = true;
    }
    throw NumericalError("no turning point found on the reliable span of the grid");
}

std::vector<double> locate_zeros(const Grid& grid, const Vector& values, const ProfileOptions& options) {
    std::vector<double> zeros;
    if (values.cwiseAbs().maxCoeff() <= 1e-10) return zeros;
    const WeightedBarycentric basis(grid);
    const ProfileSamples s = sample_profile(grid, values, options, basis);
    const Vector full = full_samples(grid, values);
    const std::span<const double> node_values(full.data(), static_cast<std::size_t>(full.size()));

    double t_prev = 0.0;
    int sign_prev = 0;
    for (std::size_t k = 0; k < s.v.size(); ++k) {
        if (std::abs(s.v[k]) < s.threshold) continue;
        const int sign = s.v[k] > 0 ? 1 : -1;
        if (sign_prev != 0 && sign != sign_prev) {
            double lo = t_prev;
            double hi = s.t[k];
            for (int it = 0; it < 60 && hi - lo > 1e-13 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double value = basis.evaluate(node_values, mid);
                if ((value > 0 ? 1 : -1) == sign_prev) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            zeros.push_back(0.5 * (lo + hi));
        }
        sign_prev = sign;
        t_prev = s.t[k];
    }
    return zeros;
}

int count_zeros(const Grid& grid, const Vector& values, const ProfileOptions& options) {
    return static_cast<int>(locate_zeros(grid, values, options).size());
}

SolveResult solve_family_b(const OperatorSet& ops, const NewtonOptions& options) {
    if (ops.mode() != Mode::family_b_u_form) throw ConfigurationError("solve_family_b needs u-form operators");
    if (!(ops.alpha() > 1.0)) throw DomainError(fmt::format("family B requires alpha > 1, got {}", ops.alpha()));
    const auto& nodes = ops.grid().nodes;
    Vector initial(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) initial[static_cast<Eigen::Index>(i)] = std::exp(-nodes[i]);
    return newton_solve(ops, initial, options);
}

double continuous_residual(const Grid& grid, Mode mode, double alpha, const Vector& values, double t) {
    if (!(t >= 0.0)) throw DomainError(fmt::format("residual evaluation requires t >= 0, got {}", t));
    const Vector full = full_samples(grid, values);
    const WeightedBarycentric basis(grid);
    const std::vector<double> points{t, alpha * t};
    const Vector value = basis.value_matrix(points) * full;
    const Vector slope = basis.derivative_matrix(std::span<const double>(points.data(), 1)) * full;
    const double dilated = value[1];
    if (mode == Mode::family_a_v_form) return slope[0] + value[0] - 2.0 * dilated - dilated * dilated;
    return slope[0] + value[0] - dilated * dilated;
}

double moment_identity_defect(const Grid& grid, double alpha, const Vector& values) {
    const Vector interior = values.size() == grid.dof ? values : Vector(values.tail(grid.dof));
    return (alpha - 2.0) * quadrature_integral(grid, interior) -
           quadrature_integral(grid, interior.cwiseProduct(interior));
}

}  // namespace riccati
