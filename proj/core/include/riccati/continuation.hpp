#pragma once

// Pseudo-arclength continuation of family-A solutions in (v, alpha).
//
// States are compared in the weighted inner product
//   <(v, a), (w, b)> = sum_i scaled_weight_i v_i w_i + a b,
// so the v part is the grid L2 product and arclength mixes ||v||_2 and alpha.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riccati/discretization.hpp"
#include "riccati/solver.hpp"

namespace riccati {

struct BranchPoint {
    double alpha = 0.0;
    Vector values;
    double norm_sq = 0.0;
    Classification classification = Classification::trivial;
    /// Unit tangent (v part, then alpha) in the weighted product.
    Vector tangent;
    double arclength = 0.0;
    int corrector_iterations = 0;
    /// ||F||_inf of the plain residual at this point.
    double residual_norm = 0.0;
    /// |(alpha - 2) Q(v) - Q(v^2)| / (1 + |Q(v)|).
    double moment_defect = 0.0;

    double tangent_alpha() const { return tangent[tangent.size() - 1]; }
};

struct BranchSeed {
    int n = 0;  // 0 for an explicit state
    double epsilon = 0.0;
    double alpha = 0.0;
    std::string description;
};

enum class BranchStatus { range_exit, step_underflow, collapsed_to_trivial, max_points, seed_failed };
std::string_view to_string(BranchStatus s);

struct Fold {
    double alpha = 0.0;
    double arclength = 0.0;
    /// Index of the branch point just before the sign change.
    std::size_t index = 0;
    /// Alpha at the two ends of the final bracket.
    double alpha_lo = 0.0;
    double alpha_hi = 0.0;
    bool refined = false;
};

struct Branch {
    int id = 0;
    BranchSeed seed;
    std::vector<BranchPoint> points;
    std::vector<Fold> folds;
    BranchStatus status = BranchStatus::range_exit;
    /// Status of the reverse half when the branch was traced both ways.
    BranchStatus reverse_status = BranchStatus::range_exit;
    std::string message;

    std::size_t unresolved_points(double moment_tolerance = 1e-6) const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct ContinuationControls {
    double ds0 = 1e-2;
    double ds_min = 1e-5;
    double ds_max = 0.1;
    /// ds doubles after a corrector that needs at most this many iterations.
    int fast_iterations = 3;
    int max_corrector_iterations = 10;
    double corrector_tolerance = 1e-10;
    /// Accepted points must pass the plain residual at this tolerance.
    double verify_tolerance = 1e-8;
    /// Points above this moment defect are kept but counted as unresolved
    /// (see Branch::unresolved_points); the grid, not the branch, is at fault.
    double moment_tolerance = 1e-6;
    int max_points = 4000;
    /// Bisection steps when refining a fold in arclength.
    int fold_refinement_steps = 30;
    /// A seed that fails or lands on v = 0 is retried with the offset halved,
    /// at most this many times.
    int seed_halvings = 6;
};

double weighted_dot(const Grid& grid, const Vector& a, const Vector& b);
double weighted_norm(const Grid& grid, const Vector& a);

/// [F(v, alpha); <(v, alpha) - (v_prev, alpha_prev), tangent_prev> - ds].
Vector extended_residual(const OperatorFamily& family, const BranchPoint& point, const BranchPoint& prev, double ds);
/// Bordered Jacobian [J  dF/dalpha; W tangent_v^T  tangent_alpha].
Matrix extended_jacobian(const OperatorFamily& family, const BranchPoint& point, const BranchPoint& prev);

/// Unit tangent at a solution, oriented to have positive product with
/// `orientation` (or positive alpha component when none is given).
Vector branch_tangent(const OperatorFamily& family, double alpha, const Vector& values,
                      const Vector* orientation = nullptr);

/// Point on the branch with its tangent filled in; the orientation is the
/// sign of the initial alpha direction.
BranchPoint make_branch_point(const OperatorFamily& family, const SolveResult& solution, int direction);

/// Traces from a converged seed in one direction (+1 increasing alpha).
Branch trace_branch(const OperatorFamily& family, const SolveResult& seed, Interval alpha_range,
                    const ContinuationControls& controls = {}, int direction = +1);

/// Traces both ways and joins the halves into one branch ordered by arclength.
Branch trace_both_ways(const OperatorFamily& family, const SolveResult& seed, Interval alpha_range,
                       const ContinuationControls& controls = {});

/// Sign changes of the tangent's alpha component. Without a family the fold
/// is placed by linear interpolation of that component in arclength; with one,
/// the bracket is bisected in arclength by re-solving the extended system.
std::vector<Fold> detect_folds(const Branch& branch);
std::vector<Fold> detect_folds(const Branch& branch, const OperatorFamily& family,
                               const ContinuationControls& controls = {});

struct SeedRecord {
    BranchSeed seed;
    bool converged = false;
    /// Branch that covers this seed, or -1.
    int branch_id = -1;
    bool duplicate = false;
    std::string message;
};

struct Atlas {
    Interval window;
    std::vector<int> n_values;
    double epsilon_seed = 0.0;
    std::vector<Branch> branches;
    std::vector<SeedRecord> seeds;
};

Atlas atlas(const OperatorFamily& family, std::span<const int> n_values, double epsilon_seed, Interval alpha_window,
            const ContinuationControls& controls = {});

/// All distinct solutions at one alpha, re-solved from the branch points that
/// bracket it. Duplicates are merged at relative infinity-distance 1e-6. A
/// plus/minus bracket at a characteristic alpha is the crossing with v = 0 and
/// is solved from zero, since Newton stalls near the singular Jacobian there.
std::vector<SolveResult> solutions_at(const Atlas& atlas, const OperatorFamily& family, double alpha,
                                      const NewtonOptions& options = {});

/// Alpha expressed as the index n = log 2 / log alpha.
double alpha_to_index(double alpha);

}  // namespace riccati
