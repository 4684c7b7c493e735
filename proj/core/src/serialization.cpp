#include "riccati/serialization.hpp"

#include <fmt/format.h>

#include <json.hpp>
#include <ostream>

#include "riccati/errors.hpp"

namespace riccati {

using nlohmann::json;

namespace {

json vector_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json decimal_list(const std::vector<WideReal>& values, int digits) {
    json a = json::array();
    for (const WideReal& x : values) a.push_back(to_decimal_string(x, digits));
    return a;
}

json point_json(const BranchPoint& p, bool include_state) {
    json j{{"alpha", p.alpha},
           {"n", alpha_to_index(p.alpha)},
           {"norm_sq", p.norm_sq},
           {"classification", to_string(p.classification)},
           {"arclength", p.arclength},
           {"tangent_alpha", p.tangent_alpha()},
           {"corrector_iterations", p.corrector_iterations},
           {"residual_norm", p.residual_norm},
           {"moment_defect", p.moment_defect}};
    if (include_state) j["values"] = vector_json(p.values);
    return j;
}

}  // namespace

std::string format_double(double x) { return fmt::format("{:.16e}", x); }

std::string grid_json(const Grid& grid) {
    const json j{{"N", grid.N}, {"M", grid.M}, {"dof", grid.dof}, {"last_node", grid.last_node()}};
    return j.dump();
}

std::string to_json(const SolveResult& result, const Grid& grid) {
    const std::span<const double> nodes =
        result.mode == Mode::family_a_v_form ? grid.interior_nodes() : std::span<const double>(grid.nodes);
    json j{{"alpha", result.alpha},
           {"n", alpha_to_index(result.alpha)},
           {"mode", to_string(result.mode)},
           {"grid", json::parse(grid_json(grid))},
           {"nodes", nodes},
           {"values", vector_json(result.values)},
           {"residual_norm", result.residual_norm},
           {"iterations", result.iterations},
           {"converged", result.converged},
           {"classification", to_string(result.classification)},
           {"residual_history", result.residual_history},
           {"message", result.message}};
    if (result.values.size() == static_cast<Eigen::Index>(nodes.size())) {
        j["norm"] = quadrature_norm(grid, result.mode == Mode::family_a_v_form
                                              ? result.values
                                              : Vector(result.values.tail(grid.dof)));
    }
    return j.dump(2);
}

std::string to_json(const Atlas& atlas, const Grid& grid, bool include_states) {
    json branches = json::array();
    for (const Branch& b : atlas.branches) {
        json points = json::array();
        for (const BranchPoint& p : b.points) points.push_back(point_json(p, include_states));
        json folds = json::array();
        for (const Fold& f : b.folds) {
            folds.push_back({{"alpha", f.alpha},
                             {"n", alpha_to_index(f.alpha)},
                             {"arclength", f.arclength},
                             {"index", f.index},
                             {"alpha_lo", f.alpha_lo},
                             {"alpha_hi", f.alpha_hi},
                             {"refined", f.refined}});
        }
        branches.push_back({{"id", b.id},
                            {"seed", {{"n", b.seed.n}, {"epsilon", b.seed.epsilon}, {"alpha", b.seed.alpha},
                                      {"description", b.seed.description}}},
                            {"status", to_string(b.status)},
                            {"reverse_status", to_string(b.reverse_status)},
                            {"message", b.message},
                            {"unresolved_points", b.unresolved_points()},
                            {"folds", folds},
                            {"points", points}});
    }
    json seeds = json::array();
    for (const SeedRecord& s : atlas.seeds) {
        seeds.push_back({{"n", s.seed.n},
                         {"epsilon", s.seed.epsilon},
                         {"alpha", s.seed.alpha},
                         {"converged", s.converged},
                         {"branch_id", s.branch_id},
                         {"duplicate", s.duplicate},
                         {"message", s.message}});
    }
    json j{{"window", {atlas.window.lo, atlas.window.hi}},
           {"n_values", atlas.n_values},
           {"epsilon_seed", atlas.epsilon_seed},
           {"grid", json::parse(grid_json(grid))},
           {"seeds", seeds},
           {"branches", branches}};
    if (include_states) j["nodes"] = grid.interior_nodes();
    return j.dump(include_states ? -1 : 2);
}

std::string to_json(std::span<const ScalingRecord> records, int digits) {
    json rows = json::array();
    for (const ScalingRecord& r : records) {
        rows.push_back({{"n", r.n},
                        {"alpha_n", to_decimal_string(r.alpha_n, digits)},
                        {"C_n", to_decimal_string(r.C_n, digits)},
                        {"scaled_norm", to_decimal_string(r.scaled_norm, digits)},
                        {"moments_E", decimal_list(r.moments_E, digits)},
                        {"moments_E2", decimal_list(r.moments_E2, digits)},
                        {"weights", decimal_list(r.weights, digits)},
                        {"significand_bits", r.significand_bits}});
    }
    return json{{"records", rows}}.dump(2);
}

Vector read_state_json(const std::string& text, const Grid& grid) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigurationError(fmt::format("state file is not valid JSON: {}", e.what()));
    }
    if (!j.contains("values") || !j["values"].is_array()) throw ConfigurationError("state file has no values array");
    const auto values = j["values"].get<std::vector<double>>();
    if (static_cast<int>(values.size()) != grid.dof) {
        throw ConfigurationError(
            fmt::format("state file holds {} values, the grid has {} interior nodes", values.size(), grid.dof));
    }
    if (j.contains("nodes")) {
        const auto nodes = j["nodes"].get<std::vector<double>>();
        const auto interior = grid.interior_nodes();
        if (nodes.size() != interior.size()) throw ConfigurationError("state file nodes do not match the grid");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (std::abs(nodes[i] - interior[i]) > 1e-12 * std::max(1.0, interior[i])) {
                throw ConfigurationError(fmt::format("state file node {} differs from the grid", i));
            }
        }
    }
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_scaling_csv(std::ostream& out, std::span<const ScalingRecord> records, int digits) {
    out << "n [1],alpha_n [1],C_n [1],scaled_norm [1]\n";
    for (const ScalingRecord& r : records) {
        out << r.n << ',' << to_decimal_string(r.alpha_n, digits) << ',' << to_decimal_string(r.C_n, digits) << ','
            << to_decimal_string(r.scaled_norm, digits) << '\n';
    }
}

void write_branches_csv(std::ostream& out, const Atlas& atlas) {
    out << "alpha [1],n [1],norm_sq [1],class,branch_id,arclength [1],moment_defect [1]\n";
    for (const Branch& b : atlas.branches) {
        for (const BranchPoint& p : b.points) {
            out << format_double(p.alpha) << ',' << format_double(alpha_to_index(p.alpha)) << ','
                << format_double(p.norm_sq) << ',' << to_string(p.classification) << ',' << b.id << ','
                << format_double(p.arclength) << ',' << format_double(p.moment_defect) << '\n';
        }
    }
}

void write_folds_csv(std::ostream& out, const Atlas& atlas) {
    out << "branch_id,alpha [1],n [1],arclength [1],alpha_lo [1],alpha_hi [1],refined\n";
    for (const Branch& b : atlas.branches) {
        for (const Fold& f : b.folds) {
            out << b.id << ',' << format_double(f.alpha) << ',' << format_double(alpha_to_index(f.alpha)) << ','
                << format_double(f.arclength) << ',' << format_double(f.alpha_lo) << ','
                << format_double(f.alpha_hi) << ',' << (f.refined ? "true" : "false") << '\n';
        }
    }
}

void write_profile_csv(std::ostream& out, const Grid& grid, const Vector& values, Mode mode, int per_interval) {
    if (per_interval < 1) throw DomainError("profile sampling needs at least one point per interval");
    const Vector full = full_samples(grid, values);
    const WeightedBarycentric basis(grid);
    std::vector<double> t;
    for (std::size_t k = 0; k + 1 < grid.nodes.size(); ++k) {
        for (int s = 0; s < per_interval; ++s) {
            t.push_back(grid.nodes[k] + (grid.nodes[k + 1] - grid.nodes[k]) * s / per_interval);
        }
    }
    t.push_back(grid.last_node());
    const Vector sampled = basis.value_matrix(t) * full;
    out << (mode == Mode::family_a_v_form ? "t [1],v [1]\n" : "t [1],u [1]\n");
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << format_double(t[i]) << ',' << format_double(sampled[static_cast<Eigen::Index>(i)]) << '\n';
    }
}

void write_grid_csv(std::ostream& out, const Grid& grid) {
    out << "index,t [1],quad_weight [1],scaled_weight [1]\n";
    out << 0 << ',' << format_double(0.0) << ",,\n";
    for (int i = 0; i < grid.dof; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out << i + 1 << ',' << format_double(grid.nodes[k + 1]) << ',' << format_double(grid.quad_weights[k]) << ','
            << format_double(grid.scaled_weights[k]) << '\n';
    }
}

void write_matrix_csv(std::ostream& out, const Matrix& matrix) {
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
            if (j) out << ',';
            out << format_double(matrix(i, j));
        }
        out << '\n';
    }
}

}  // namespace riccati
