#pragma once

// Truncated Laguerre collocation. A grid function v is represented as
// v(t) = exp(-t) p(t), where p interpolates v exp(t) on t = 0 plus all N
// Gauss-Laguerre nodes, and v is taken to vanish at every node beyond the
// first m = ceil(M sqrt(N)). Only the m + 1 retained samples are unknowns;
// the discarded nodes still fix the Lagrange basis, which keeps the
// interpolant well conditioned out to the far end of the full rule.

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace riccati {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;      // underflow to 0 for the largest nodes
    std::vector<double> log_weights;  // always finite
};

/// N-point Gauss-Laguerre rule for the weight exp(-t) on [0, inf), 1 <= N <= 10^4.
QuadratureRule gauss_laguerre(int N);

struct Grid {
    int N = 0;
    double M = 0.0;
    /// t_0 = 0 < t_1 < ... < t_m.
    std::vector<double> nodes;
    /// Gauss-Laguerre weights of nodes 1..m.
    std::vector<double> quad_weights;
    /// quad_weights[i] * exp(t_{i+1}): the weights for integrating f dt directly.
    std::vector<double> scaled_weights;
    /// Interior unknowns, m.
    int dof = 0;
    /// 0 followed by all N Gauss-Laguerre nodes; defines the Lagrange basis.
    std::vector<double> basis_nodes;

    double last_node() const { return nodes.back(); }
    std::span<const double> interior_nodes() const { return std::span<const double>(nodes).subspan(1); }
};

/// Keeps the first m = ceil(M sqrt(N)) Gauss-Laguerre nodes and prepends 0.
/// Throws ConfigurationError when m > N.
Grid truncated_grid(int N, double M);
int truncated_size(int N, double M);
/// min(M, sqrt(N)): the largest multiplier that keeps ceil(M sqrt(N)) <= N.
double clamped_multiplier(int N, double M);

/// Barycentric machinery for the weighted interpolant exp(-t) p(t). The
/// basis is built on all `basis_nodes`; only the first `active` of them carry
/// samples, the rest are fixed at zero. Barycentric weights are held as
/// log-magnitude and sign with the exponential factors folded into the same
/// exponent, so nothing overflows for nodes out to several thousand.
class WeightedBarycentric {
public:
    explicit WeightedBarycentric(std::span<const double> nodes);
    WeightedBarycentric(std::span<const double> basis_nodes, std::size_t active);
    explicit WeightedBarycentric(const Grid& grid);

    /// Number of active nodes (matrix columns).
    std::size_t size() const { return active_; }
    std::span<const double> nodes() const { return std::span<const double>(nodes_).first(active_); }

    /// Row i maps node samples to the interpolant's value at points[i].
    Matrix value_matrix(std::span<const double> points) const;
    /// Row i maps node samples to the interpolant's derivative at points[i].
    Matrix derivative_matrix(std::span<const double> points) const;
    /// Derivative matrix at the nodes themselves.
    Matrix differentiation_matrix() const;

    double evaluate(std::span<const double> values, double t) const;

private:
    void fill_row(double y, double* values_row, double* derivative_row, std::size_t stride) const;

    std::vector<double> nodes_;
    std::size_t active_ = 0;
    std::vector<double> log_abs_weight_;
    std::vector<double> weight_sign_;
};

/// (m+1) x (m+1) differentiation matrix for the weighted interpolant,
/// including the t = 0 node.
Matrix differentiation_matrix_full(const Grid& grid);
/// Interior block with the t = 0 row and column removed (v(0) = 0).
Matrix differentiation_matrix(const Grid& grid);

/// (m+1) x (m+1) map from node samples to samples at alpha * nodes.
Matrix resampling_matrix_full(const Grid& grid, double alpha);
/// Interior block for v(0) = 0.
Matrix resampling_matrix(const Grid& grid, double alpha);

/// sqrt(sum_i scaled_weight_i values_i^2). `values` holds either the m
/// interior samples or all m+1 node samples (the t = 0 entry carries no weight).
double quadrature_norm(const Grid& grid, const Vector& values);
/// sum_i scaled_weight_i values_i, same layout rules as quadrature_norm.
double quadrature_integral(const Grid& grid, const Vector& values);

/// Value of the weighted interpolant at t >= 0. A length-m vector is taken as
/// interior samples with v(0) = 0. Beyond the last node the polynomial part is
/// extrapolated.
double interpolate(const Grid& grid, const Vector& values, double t);

enum class InterpolationQuality { interior, extrapolated, far_extrapolated };
/// far_extrapolated beyond 1.2 x the last node.
InterpolationQuality interpolation_quality(const Grid& grid, double t);

/// Samples on all m+1 nodes; a length-m vector gets v(0) = 0 prepended.
Vector full_samples(const Grid& grid, const Vector& values);

/// exp(-t/2) at the interior nodes (or all m+1 nodes when `with_origin`).
/// Linear solves run in the unknowns y = v / s; raw node values span
/// hundreds of orders of magnitude and the raw matrices are numerically
/// rank deficient.
Vector balance_scale(const Grid& grid, bool with_origin = false);

enum class Mode { family_a_v_form, family_b_u_form };

/// Discrete operators at one alpha. In family-A mode D and P are the m x m
/// interior blocks; in family-B mode they are the full (m+1) x (m+1) matrices
/// and the t = 0 row is later replaced by the boundary equation u(0) = 1.
class OperatorSet {
public:
    OperatorSet(std::shared_ptr<const Grid> grid, double alpha, Mode mode);
    OperatorSet(const Grid& grid, double alpha, Mode mode);

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> shared_grid() const { return grid_; }
    double alpha() const { return alpha_; }
    Mode mode() const { return mode_; }
    int size() const { return static_cast<int>(D_.rows()); }
    /// balance_scale matching the layout of D.
    const Vector& scale() const { return scale_; }

    const Matrix& D() const { return D_; }
    const Matrix& P() const { return P_; }
    /// dP/dalpha, same layout as P.
    const Matrix& dP() const { return dP_; }

private:
    friend class OperatorFamily;
    OperatorSet(std::shared_ptr<const Grid> grid, std::shared_ptr<const WeightedBarycentric> basis,
                const Matrix& D_full, double alpha, Mode mode);

    std::shared_ptr<const Grid> grid_;
    double alpha_;
    Mode mode_;
    Matrix D_;
    Matrix P_;
    Matrix dP_;
    Vector scale_;
};

/// Operators over a range of alpha on one grid; the alpha-independent pieces
/// are built once.
class OperatorFamily {
public:
    OperatorFamily(std::shared_ptr<const Grid> grid, Mode mode);
    explicit OperatorFamily(const Grid& grid, Mode mode = Mode::family_a_v_form);

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> shared_grid() const { return grid_; }
    Mode mode() const { return mode_; }
    int size() const;

    OperatorSet at(double alpha) const;

private:
    std::shared_ptr<const Grid> grid_;
    Mode mode_;
    std::shared_ptr<const WeightedBarycentric> basis_;
    Matrix D_full_;
};

}  // namespace riccati
