#include "riccati/continuation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "riccati/errors.hpp"
#include "riccati/moments.hpp"

namespace riccati {

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Vector stacked_scale(const OperatorSet& ops) {
    Vector s(ops.size() + 1);
    s.head(ops.size()) = ops.scale();
    s[ops.size()] = 1.0;
    return s;
}

void require_family_a(const OperatorFamily& family) {
    if (family.mode() != Mode::family_a_v_form) throw ConfigurationError("continuation needs v-form operators");
}

void require_point(const OperatorFamily& family, const BranchPoint& p, const char* what) {
    const int m = family.size();
    if (p.values.size() != m || p.tangent.size() != m + 1) {
        throw DomainError(fmt::format("{}: expected {} values and {} tangent entries, got {} and {}", what, m, m + 1,
                                      p.values.size(), p.tangent.size()));
    }
}

Classification classify_quietly(const Grid& grid, const Vector& values) {
    try {
        return classify(grid, values);
    } catch (const NumericalError&) {
        return Classification::trivial;
    }
}

double moment_defect_ratio(const Grid& grid, double alpha, const Vector& values) {
    return std::abs(moment_identity_defect(grid, alpha, values)) / (1.0 + std::abs(quadrature_integral(grid, values)));
}

bool same_solution(const Vector& a, const Vector& b) {
    const double scale = std::max(inf_norm(a), inf_norm(b));
    if (scale <= 1e-10) return true;
    return inf_norm(a - b) <= 1e-6 * scale;
}

struct Correction {
    BranchPoint point;
    bool converged = false;
    std::string reason;
};

// Newton on the extended system from the tangent predictor.
Correction correct(const OperatorFamily& family, const BranchPoint& prev, double ds,
                   const ContinuationControls& controls) {
    const Grid& grid = family.grid();
    const Eigen::Index m = prev.values.size();
    Correction c;
    BranchPoint& p = c.point;
    p.values = prev.values + ds * prev.tangent.head(m);
    p.alpha = prev.alpha + ds * prev.tangent[m];
    p.tangent = prev.tangent;

    for (int it = 0; it <= controls.max_corrector_iterations; ++it) {
        if (!(p.alpha > 1.0)) {
            c.reason = fmt::format("corrector left alpha > 1 (alpha = {})", p.alpha);
            return c;
        }
        const OperatorSet ops = family.at(p.alpha);
        const Vector F = residual(ops, p.values);
        const double g = weighted_dot(grid, p.values - prev.values, prev.tangent.head(m)) +
                         (p.alpha - prev.alpha) * prev.tangent[m] - ds;
        const double norm = std::max(inf_norm(F), std::abs(g));
        if (!std::isfinite(norm)) {
            c.reason = "non-finite residual in corrector";
            return c;
        }
        if (norm <= controls.corrector_tolerance) {
            p.corrector_iterations = it;
            c.converged = true;
            return c;
        }
        if (it == controls.max_corrector_iterations) break;

        Matrix JE(m + 1, m + 1);
        JE.topLeftCorner(m, m) = jacobian(ops, p.values);
        JE.topRightCorner(m, 1) = alpha_derivative(ops, p.values);
        for (Eigen::Index i = 0; i < m; ++i) {
            JE(m, i) = grid.scaled_weights[static_cast<std::size_t>(i)] * prev.tangent[i];
        }
        JE(m, m) = prev.tangent[m];
        Vector rhs(m + 1);
        rhs.head(m) = -F;
        rhs[m] = -g;
        const Vector step = balanced_solve(JE, rhs, stacked_scale(ops));
        if (!step.allFinite()) {
            c.reason = "singular bordered Jacobian";
            return c;
        }
        p.values += step.head(m);
        p.alpha += step[m];
    }
    c.reason = fmt::format("corrector did not converge in {} iterations", controls.max_corrector_iterations);
    return c;
}

// Checks shared by every accepted point; fills the derived fields.
bool finish_point(const OperatorFamily& family, const BranchPoint& prev, double ds,
                  const ContinuationControls& controls, BranchPoint& p, std::string& reason) {
    const Grid& grid = family.grid();
    const OperatorSet ops = family.at(p.alpha);
    p.residual_norm = inf_norm(residual(ops, p.values));
    if (p.residual_norm > controls.verify_tolerance) {
        reason = fmt::format("plain residual {:.3e} above {:.1e}", p.residual_norm, controls.verify_tolerance);
        return false;
    }
    p.moment_defect = moment_defect_ratio(grid, p.alpha, p.values);
    const double jump = quadrature_norm(grid, p.values - prev.values) + std::abs(p.alpha - prev.alpha);
    if (jump > 2.0 * ds) {
        reason = fmt::format("step of length {:.3e} exceeds 2 ds = {:.3e}", jump, 2.0 * ds);
        return false;
    }
    p.tangent = branch_tangent(family, p.alpha, p.values, &prev.tangent);
    if (weighted_dot(grid, p.tangent.head(p.values.size()), prev.tangent.head(p.values.size())) +
            p.tangent[p.values.size()] * prev.tangent[p.values.size()] <
        0.5) {
        reason = "tangent turned by more than 60 degrees";
        return false;
    }
    p.norm_sq = std::pow(quadrature_norm(grid, p.values), 2);
    p.classification = classify_quietly(grid, p.values);
    p.arclength = prev.arclength + ds;
    return true;
}

Vector interpolate_state(const BranchPoint& a, const BranchPoint& b, double alpha) {
    const double span = b.alpha - a.alpha;
    if (span == 0.0) return a.values;
    const double theta = std::clamp((alpha - a.alpha) / span, 0.0, 1.0);
    return (1.0 - theta) * a.values + theta * b.values;
}

}  // namespace

std::string_view to_string(BranchStatus s) {
    switch (s) {
        case BranchStatus::range_exit:
            return "range_exit";
        case BranchStatus::step_underflow:
            return "step_underflow";
        case BranchStatus::collapsed_to_trivial:
            return "collapsed_to_trivial";
        case BranchStatus::max_points:
            return "max_points";
        case BranchStatus::seed_failed:
            return "seed_failed";
    }
    return "unknown";
}

std::size_t Branch::unresolved_points(double moment_tolerance) const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [&](const BranchPoint& p) {
        return p.moment_defect > moment_tolerance;
    }));
}

double weighted_dot(const Grid& grid, const Vector& a, const Vector& b) {
    if (a.size() != grid.dof || b.size() != grid.dof) {
        throw DomainError(fmt::format("weighted_dot: expected {} entries, got {} and {}", grid.dof, a.size(), b.size()));
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) sum += grid.scaled_weights[static_cast<std::size_t>(i)] * a[i] * b[i];
    return sum;
}

double weighted_norm(const Grid& grid, const Vector& a) {
    const Eigen::Index m = grid.dof;
    if (a.size() != m + 1) throw DomainError(fmt::format("weighted_norm: expected {} entries, got {}", m + 1, a.size()));
    const Vector v = a.head(m);
    return std::sqrt(weighted_dot(grid, v, v) + a[m] * a[m]);
}

Vector extended_residual(const OperatorFamily& family, const BranchPoint& point, const BranchPoint& prev, double ds) {
    require_family_a(family);
    if (!(ds > 0.0)) throw DomainError(fmt::format("arclength step must be positive, got {}", ds));
    require_point(family, prev, "extended_residual (previous point)");
    if (point.values.size() != family.size()) {
        throw DomainError(fmt::format("extended_residual: expected {} values, got {}", family.size(), point.values.size()));
    }
    const Eigen::Index m = point.values.size();
    Vector r(m + 1);
    r.head(m) = residual(family.at(point.alpha), point.values);
    r[m] = weighted_dot(family.grid(), point.values - prev.values, prev.tangent.head(m)) +
           (point.alpha - prev.alpha) * prev.tangent[m] - ds;
    return r;
}

Matrix extended_jacobian(const OperatorFamily& family, const BranchPoint& point, const BranchPoint& prev) {
    require_family_a(family);
    require_point(family, prev, "extended_jacobian (previous point)");
    const Eigen::Index m = point.values.size();
    const OperatorSet ops = family.at(point.alpha);
    Matrix JE(m + 1, m + 1);
    JE.topLeftCorner(m, m) = jacobian(ops, point.values);
    JE.topRightCorner(m, 1) = alpha_derivative(ops, point.values);
    for (Eigen::Index i = 0; i < m; ++i) {
        JE(m, i) = family.grid().scaled_weights[static_cast<std::size_t>(i)] * prev.tangent[i];
    }
    JE(m, m) = prev.tangent[m];
    return JE;
}

Vector branch_tangent(const OperatorFamily& family, double alpha, const Vector& values, const Vector* orientation) {
    require_family_a(family);
    const Eigen::Index m = values.size();
    const OperatorSet ops = family.at(alpha);
    Matrix JE(m + 1, m + 1);
    JE.topLeftCorner(m, m) = jacobian(ops, values);
    JE.topRightCorner(m, 1) = alpha_derivative(ops, values);
    JE.row(m).setZero();
    if (orientation) {
        for (Eigen::Index i = 0; i < m; ++i) {
            JE(m, i) = family.grid().scaled_weights[static_cast<std::size_t>(i)] * (*orientation)[i];
        }
        JE(m, m) = (*orientation)[m];
    } else {
        JE(m, m) = 1.0;
    }
    Vector rhs = Vector::Zero(m + 1);
    rhs[m] = 1.0;
    Vector tangent = balanced_solve(JE, rhs, stacked_scale(ops));
    if (!tangent.allFinite()) throw NumericalError(fmt::format("tangent solve failed at alpha = {}", alpha));
    tangent /= weighted_norm(family.grid(), tangent);
    return tangent;
}

BranchPoint make_branch_point(const OperatorFamily& family, const SolveResult& solution, int direction) {
    require_family_a(family);
    if (direction != 1 && direction != -1) throw DomainError("direction must be +1 or -1");
    BranchPoint p;
    p.alpha = solution.alpha;
    p.values = solution.values;
    p.tangent = branch_tangent(family, p.alpha, p.values) * static_cast<double>(direction);
    p.norm_sq = std::pow(quadrature_norm(family.grid(), p.values), 2);
    p.classification = classify_quietly(family.grid(), p.values);
    p.corrector_iterations = solution.iterations;
    p.residual_norm = solution.residual_norm;
    p.moment_defect = moment_defect_ratio(family.grid(), p.alpha, p.values);
    return p;
}

Branch trace_branch(const OperatorFamily& family, const SolveResult& seed, Interval alpha_range,
                    const ContinuationControls& controls, int direction) {
    require_family_a(family);
    if (!(controls.ds_min > 0.0) || !(controls.ds_max >= controls.ds_min) || !(controls.ds0 >= controls.ds_min) ||
        !(controls.ds0 <= controls.ds_max)) {
        throw ConfigurationError("continuation needs 0 < ds_min <= ds0 <= ds_max");
    }
    if (!(alpha_range.hi > alpha_range.lo)) {
        throw ConfigurationError(fmt::format("empty alpha range [{}, {}]", alpha_range.lo, alpha_range.hi));
    }
    Branch branch;
    branch.seed.alpha = seed.alpha;
    if (!seed.converged) {
        branch.status = BranchStatus::seed_failed;
        branch.message = "seed did not converge";
        return branch;
    }
    branch.points.push_back(make_branch_point(family, seed, direction));

    double ds = controls.ds0;
    std::string last_reason;
    while (true) {
        if (static_cast<int>(branch.points.size()) >= controls.max_points) {
            branch.status = BranchStatus::max_points;
            break;
        }
        const BranchPoint& prev = branch.points.back();
        Correction c = correct(family, prev, ds, controls);
        bool ok = c.converged;
        if (ok) ok = finish_point(family, prev, ds, controls, c.point, c.reason);
        if (!ok) {
            last_reason = c.reason;
            ds *= 0.5;
            if (ds < controls.ds_min) {
                branch.status = BranchStatus::step_underflow;
                branch.message = fmt::format("step below {:.1e} at alpha = {:.8f}: {}", controls.ds_min, prev.alpha,
                                             last_reason);
                break;
            }
            continue;
        }
        if (!alpha_range.contains(c.point.alpha)) {
            branch.status = BranchStatus::range_exit;
            break;
        }
        if (c.point.classification == Classification::trivial && inf_norm(c.point.values) <= 1e-10) {
            branch.status = BranchStatus::collapsed_to_trivial;
            branch.message = fmt::format("collapsed to v = 0 at alpha = {:.8f}", c.point.alpha);
            break;
        }
        const int iterations = c.point.corrector_iterations;
        branch.points.push_back(std::move(c.point));
        if (iterations <= controls.fast_iterations) ds = std::min(2.0 * ds, controls.ds_max);
    }
    return branch;
}

Branch trace_both_ways(const OperatorFamily& family, const SolveResult& seed, Interval alpha_range,
                       const ContinuationControls& controls) {
    Branch forward = trace_branch(family, seed, alpha_range, controls, +1);
    if (forward.status == BranchStatus::seed_failed) return forward;
    Branch backward = trace_branch(family, seed, alpha_range, controls, -1);

    Branch joined;
    joined.seed = forward.seed;
    joined.status = forward.status;
    joined.reverse_status = backward.status;
    for (const std::string* m : {&backward.message, &forward.message}) {
        if (m->empty()) continue;
        if (!joined.message.empty()) joined.message += "; ";
        joined.message += *m;
    }
    for (auto it = backward.points.rbegin(); it + 1 != backward.points.rend(); ++it) {
        BranchPoint p = *it;
        p.tangent = -p.tangent;
        p.arclength = -p.arclength;
        joined.points.push_back(std::move(p));
    }
    for (BranchPoint& p : forward.points) joined.points.push_back(std::move(p));
    const double origin = joined.points.front().arclength;
    for (BranchPoint& p : joined.points) p.arclength -= origin;
    return joined;
}

std::vector<Fold> detect_folds(const Branch& branch) {
    std::vector<Fold> folds;
    for (std::size_t i = 0; i + 1 < branch.points.size(); ++i) {
        const BranchPoint& a = branch.points[i];
        const BranchPoint& b = branch.points[i + 1];
        const double ta = a.tangent_alpha();
        const double tb = b.tangent_alpha();
        if (!(ta * tb < 0.0)) continue;
        const double theta = ta / (ta - tb);
        const double h = b.arclength - a.arclength;
        Fold f;
        f.index = i;
        f.arclength = a.arclength + theta * h;
        // Integral of the linearly interpolated alpha component up to its zero.
        f.alpha = a.alpha + 0.5 * theta * h * ta;
        f.alpha_lo = a.alpha;
        f.alpha_hi = b.alpha;
        folds.push_back(f);
    }
    return folds;
}

std::vector<Fold> detect_folds(const Branch& branch, const OperatorFamily& family,
                               const ContinuationControls& controls) {
    std::vector<Fold> folds = detect_folds(branch);
    for (Fold& f : folds) {
        const BranchPoint& a = branch.points[f.index];
        const BranchPoint& b = branch.points[f.index + 1];
        const double ta = a.tangent_alpha();
        double lo = 0.0;
        double hi = b.arclength - a.arclength;
        BranchPoint p_lo = a;
        BranchPoint p_hi = b;
        bool ok = true;
        for (int step = 0; step < controls.fold_refinement_steps && hi - lo > 1e-12; ++step) {
            const double mid = 0.5 * (lo + hi);
            Correction c = correct(family, a, mid, controls);
            if (!c.converged) {
                ok = false;
                break;
            }
            c.point.tangent = branch_tangent(family, c.point.alpha, c.point.values, &a.tangent);
            c.point.arclength = a.arclength + mid;
            if (c.point.tangent_alpha() * ta > 0.0) {
                lo = mid;
                p_lo = std::move(c.point);
            } else {
                hi = mid;
                p_hi = std::move(c.point);
            }
        }
        if (!ok) continue;
        const double t_lo = p_lo.tangent_alpha();
        const double t_hi = p_hi.tangent_alpha();
        const double theta = t_lo == t_hi ? 0.5 : t_lo / (t_lo - t_hi);
        f.alpha = p_lo.alpha + theta * (p_hi.alpha - p_lo.alpha);
        f.arclength = p_lo.arclength + theta * (p_hi.arclength - p_lo.arclength);
        f.alpha_lo = p_lo.alpha;
        f.alpha_hi = p_hi.alpha;
        f.refined = true;
    }
    return folds;
}

Atlas atlas(const OperatorFamily& family, std::span<const int> n_values, double epsilon_seed, Interval alpha_window,
            const ContinuationControls& controls) {
    require_family_a(family);
    if (!(alpha_window.hi > alpha_window.lo) || !(alpha_window.lo > 1.0)) {
        throw ConfigurationError(
            fmt::format("alpha window [{}, {}] must satisfy 1 < lo < hi", alpha_window.lo, alpha_window.hi));
    }
    if (!(epsilon_seed > 0.0)) throw ConfigurationError("seed offset must be positive");

    Atlas result;
    result.window = alpha_window;
    result.n_values.assign(n_values.begin(), n_values.end());
    result.epsilon_seed = epsilon_seed;
    const Grid& grid = family.grid();

    for (const int n : n_values) {
        const PerturbationModel model(n);
        const double alpha_n = characteristic_alpha(n);
        for (const double sign : {+1.0, -1.0}) {
            SeedRecord record;
            record.seed.n = n;
            record.seed.epsilon = sign * epsilon_seed;
            record.seed.alpha = alpha_n + record.seed.epsilon;
            record.seed.description = fmt::format("perturbation(n={}, eps={:+g})", n, record.seed.epsilon);
            if (!alpha_window.contains(record.seed.alpha)) {
                record.message = "seed outside the alpha window";
                result.seeds.push_back(std::move(record));
                continue;
            }
            SolveResult solution;
            for (int halving = 0; halving <= controls.seed_halvings; ++halving) {
                const double epsilon = sign * epsilon_seed * std::ldexp(1.0, -halving);
                const std::vector<double> guess = model.guess(epsilon, grid.interior_nodes());
                const Vector initial = Eigen::Map<const Vector>(guess.data(), static_cast<Eigen::Index>(guess.size()));
                solution = newton_solve(family.at(alpha_n + epsilon), initial);
                record.seed.epsilon = epsilon;
                record.seed.alpha = alpha_n + epsilon;
                if (solution.converged && solution.classification != Classification::trivial) break;
            }
            record.seed.description = fmt::format("perturbation(n={}, eps={:+g})", n, record.seed.epsilon);
            if (record.seed.epsilon != sign * epsilon_seed) {
                record.message = fmt::format("offset reduced to {:+g}", record.seed.epsilon);
            }
            record.converged = solution.converged;
            if (!solution.converged) {
                record.message = solution.message;
                result.seeds.push_back(std::move(record));
                continue;
            }
            if (solution.classification == Classification::trivial) {
                record.message = "seed converged to the trivial solution at every offset";
                result.seeds.push_back(std::move(record));
                continue;
            }

            for (const Branch& existing : result.branches) {
                for (const SolveResult& s : solutions_at(Atlas{alpha_window, {}, 0.0, {existing}, {}}, family,
                                                         record.seed.alpha)) {
                    if (same_solution(s.values, solution.values)) {
                        record.duplicate = true;
                        record.branch_id = existing.id;
                        break;
                    }
                }
                if (record.duplicate) break;
            }
            if (record.duplicate) {
                if (!record.message.empty()) record.message += "; ";
                record.message += fmt::format("already on branch {}", record.branch_id);
                result.seeds.push_back(std::move(record));
                continue;
            }

            Branch branch = trace_both_ways(family, solution, alpha_window, controls);
            branch.id = static_cast<int>(result.branches.size());
            branch.seed = record.seed;
            branch.folds = detect_folds(branch, family, controls);
            record.branch_id = branch.id;
            result.branches.push_back(std::move(branch));
            result.seeds.push_back(std::move(record));
        }
    }
    return result;
}

std::vector<SolveResult> solutions_at(const Atlas& atlas, const OperatorFamily& family, double alpha,
                                      const NewtonOptions& options) {
    require_family_a(family);
    const OperatorSet ops = family.at(alpha);
    const bool characteristic = characteristic_index_of(alpha).has_value();
    std::vector<SolveResult> found;
    for (const Branch& branch : atlas.branches) {
        const auto& pts = branch.points;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const bool exact = pts[i].alpha == alpha;
            const bool bracket =
                i + 1 < pts.size() && (pts[i].alpha - alpha) * (pts[i + 1].alpha - alpha) < 0.0;
            if (!exact && !bracket) continue;
            const bool crossing = characteristic && bracket &&
                                  ((pts[i].classification == Classification::plus &&
                                    pts[i + 1].classification == Classification::minus) ||
                                   (pts[i].classification == Classification::minus &&
                                    pts[i + 1].classification == Classification::plus));
            const Vector initial = crossing ? Vector::Zero(pts[i].values.size())
                                   : exact  ? pts[i].values
                                            : interpolate_state(pts[i], pts[i + 1], alpha);
            SolveResult r = newton_solve(ops, initial, options);
            if (!r.converged) continue;
            const bool seen = std::any_of(found.begin(), found.end(),
                                          [&](const SolveResult& s) { return same_solution(s.values, r.values); });
            if (!seen) found.push_back(std::move(r));
        }
    }
    std::sort(found.begin(), found.end(), [&](const SolveResult& a, const SolveResult& b) {
        return quadrature_norm(family.grid(), a.values) < quadrature_norm(family.grid(), b.values);
    });
    return found;
}

double alpha_to_index(double alpha) {
    if (!(alpha > 1.0)) throw DomainError(fmt::format("alpha must exceed 1, got {}", alpha));
    return std::log(2.0) / std::log(alpha);
}

}  // namespace riccati
