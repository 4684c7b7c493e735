#include "commands.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "riccati/errors.hpp"
#include "riccati/moments.hpp"
#include "riccati/serialization.hpp"

namespace riccati::cli {

using nlohmann::json;

namespace {

PrecisionConfig series_precision(const RunConfig& config, int n) {
    PrecisionConfig p = PrecisionConfig::for_characteristic_index(n);
    p.significand_bits = std::max(p.significand_bits, config.bits);
    return p;
}

void require_index(int n, std::string_view what) {
    if (n < 1 || n > 6) throw ConfigurationError(fmt::format("{} must lie in 1..6, got {}", what, n));
}

std::string alpha_tag(double alpha) { return fmt::format("{:.6g}", alpha); }

}  // namespace

SeedSpec SeedSpec::parse(const std::string& text) {
    SeedSpec spec;
    if (text == "family_b") {
        spec.kind = Kind::family_b;
        return spec;
    }
    if (text.rfind("file:", 0) == 0) {
        spec.kind = Kind::file;
        spec.path = text.substr(5);
        if (spec.path.empty()) throw ConfigurationError("file seed needs a path");
        return spec;
    }
    if (text.rfind("perturbation:", 0) == 0) {
        std::istringstream in(text.substr(13));
        std::string n_text, eps_text;
        if (std::getline(in, n_text, ':') && std::getline(in, eps_text) && in.eof()) {
            try {
                std::size_t used_n = 0, used_eps = 0;
                spec.n = std::stoi(n_text, &used_n);
                spec.epsilon = std::stod(eps_text, &used_eps);
                if (used_n == n_text.size() && used_eps == eps_text.size()) {
                    require_index(spec.n, "perturbation index");
                    return spec;
                }
            } catch (const std::logic_error&) {
            }
        }
    }
    throw ConfigurationError(
        fmt::format("seed '{}' is not one of perturbation:N:EPS, family_b, file:PATH", text));
}

int cmd_coeffs(const RunConfig& config, const CoeffsOptions& options, RunManifest& manifest) {
    require_index(options.max_n, "--max-n");
    if (options.digits < 12 || options.digits > 60) throw ConfigurationError("--digits must lie in 12..60");
    std::vector<ScalingRecord> records;
    for (int n = 1; n <= options.max_n; ++n) {
        try {
            records.push_back(scaling_coefficient(n, series_precision(config, n)));
        } catch (const std::exception& e) {
            manifest.note_failure(fmt::format("n = {}: {}", n, e.what()));
            fmt::print(stderr, "scaling coefficient n = {} failed: {}\n", n, e.what());
            return exit_nonconvergence;
        }
    }
    fmt::print("{:>2}  {:>{}}  {:>{}}\n", "n", "C_n", options.digits + 8, "||C_n E_n||_2", options.digits + 8);
    for (const auto& r : records) {
        fmt::print("{:>2}  {:>{}}  {:>{}}\n", r.n, to_decimal_string(r.C_n, options.digits), options.digits + 8,
                   to_decimal_string(r.scaled_norm, options.digits), options.digits + 8);
    }
    if (config.csv()) {
        std::ostringstream csv;
        write_scaling_csv(csv, records, options.digits);
        manifest.emit("coeffs.csv", csv.str());
    }
    if (config.json()) manifest.emit("coeffs.json", to_json(records, options.digits) + "\n");
    return exit_ok;
}

int cmd_verify_linear(const RunConfig& config, const VerifyLinearOptions& options, RunManifest& manifest) {
    if (options.N_sweep.empty()) throw ConfigurationError("the N sweep is empty");
    std::vector<int> sweep = options.N_sweep;
    for (int N : sweep) {
        if (N < 2) throw ConfigurationError(fmt::format("sweep entry N = {} is too small", N));
    }
    std::sort(sweep.begin(), sweep.end());
    sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
    if (!(options.ceiling > 0.0)) throw ConfigurationError("--ceiling must be positive");

    std::vector<int> indices = options.indices;
    for (double alpha : options.alphas) {
        const auto n = characteristic_index_of(alpha);
        if (!n) throw ConfigurationError(fmt::format("alpha = {} is not a characteristic value 2^(1/n)", alpha));
        indices.push_back(*n);
    }
    if (indices.empty()) indices.push_back(1);
    for (int n : indices) {
        if (n < 1) throw ConfigurationError(fmt::format("index n = {} must be positive", n));
    }

    std::map<int, Grid> grids;
    for (int N : sweep) grids.emplace(N, truncated_grid(N, clamped_multiplier(N, config.M)));

    std::ostringstream csv;
    csv << "alpha [1],n [1],N [1],M [1],dof [1],error [1],zeros [1]\n";
    json rows = json::array();
    int code = exit_ok;
    for (int n : indices) {
        const double alpha = characteristic_alpha(n);
        const SeriesSolution series = build_series(Dilation::characteristic(n), series_precision(config, n));
        double last_error = 0.0;
        for (int N : sweep) {
            const Grid& grid = grids.at(N);
            const OperatorSet ops(grid, alpha, Mode::family_a_v_form);
            const CharacteristicMode mode = characteristic_solve(ops);
            const double error = characteristic_error(grid, mode.values, series);
            const int zeros = count_zeros(grid, mode.values);
            last_error = error;
            fmt::print("alpha {:.15g} (n = {})  N = {:4d}  dof = {:4d}  error {:.3e}  zeros {}\n", alpha, n, N,
                       grid.dof, error, zeros);
            csv << format_double(alpha) << ',' << n << ',' << N << ',' << format_double(grid.M) << ',' << grid.dof
                << ',' << format_double(error) << ',' << zeros << '\n';
            rows.push_back({{"alpha", alpha},
                            {"n", n},
                            {"N", N},
                            {"M", grid.M},
                            {"dof", grid.dof},
                            {"error", error},
                            {"zeros", zeros},
                            {"ambiguous", mode.ambiguous}});
        }
        if (!(last_error <= options.ceiling)) {
            manifest.note_failure(fmt::format("n = {}: error {:.3e} at N = {} exceeds the ceiling {:.3e}", n,
                                              last_error, sweep.back(), options.ceiling));
            code = exit_nonconvergence;
        }
    }
    if (config.csv()) manifest.emit("verify_linear.csv", csv.str());
    if (config.json()) {
        manifest.emit("verify_linear.json", json{{"ceiling", options.ceiling}, {"rows", rows}}.dump(2) + "\n");
    }
    return code;
}

int cmd_solve(const RunConfig& config, const SolveOptions& options, RunManifest& manifest) {
    if (!(options.alpha > 0.0)) throw ConfigurationError("--alpha must be positive");
    if (options.samples_per_interval < 1) throw ConfigurationError("--samples-per-interval must be positive");
    const SeedSpec seed = SeedSpec::parse(options.seed);
    const Grid grid = truncated_grid(config.N, config.M);

    SolveResult result;
    if (seed.kind == SeedSpec::Kind::family_b) {
        const OperatorSet ops(grid, options.alpha, Mode::family_b_u_form);
        result = solve_family_b(ops, config.newton());
    } else {
        Vector initial;
        if (seed.kind == SeedSpec::Kind::file) {
            std::ifstream f(seed.path);
            if (!f) throw ConfigurationError(fmt::format("cannot read state file {}", seed.path));
            std::ostringstream text;
            text << f.rdbuf();
            initial = read_state_json(text.str(), grid);
        } else {
            const auto guess = perturbation_guess(seed.n, seed.epsilon, grid.interior_nodes());
            initial = Eigen::Map<const Vector>(guess.data(), static_cast<Eigen::Index>(guess.size()));
        }
        const OperatorSet ops(grid, options.alpha, Mode::family_a_v_form);
        result = newton_solve(ops, initial, config.newton());
    }

    fmt::print("alpha {:.15g}  {}  residual {:.3e}  iterations {}\n", options.alpha,
               to_string(result.classification), result.residual_norm, result.iterations);
    if (!result.converged) {
        fmt::print(stderr, "no convergence: {}\n", result.message);
        manifest.note_failure(result.message);
        manifest.emit("solve_diagnostics.json", to_json(result, grid) + "\n");
        return exit_nonconvergence;
    }
    if (result.mode == Mode::family_a_v_form) {
        const double q = quadrature_integral(grid, result.values);
        fmt::print("moment defect {:.3e}\n",
                   std::abs(moment_identity_defect(grid, options.alpha, result.values)) / (1.0 + std::abs(q)));
    }
    if (config.json()) manifest.emit("solve.json", to_json(result, grid) + "\n");
    if (config.csv()) {
        std::ostringstream csv;
        write_profile_csv(csv, grid, result.values, result.mode, options.samples_per_interval);
        manifest.emit("profile.csv", csv.str());
    }
    return exit_ok;
}

int cmd_atlas(const RunConfig& config, const AtlasOptions& options, RunManifest& manifest) {
    if (options.window.size() != 2) throw ConfigurationError("--window takes two values");
    const Interval window{options.window[0], options.window[1]};
    if (!(window.lo < window.hi)) {
        throw ConfigurationError(fmt::format("degenerate window [{}, {}]", window.lo, window.hi));
    }
    if (!(window.lo > 1.0)) throw ConfigurationError("the window must lie in alpha > 1");
    if (options.indices.empty()) throw ConfigurationError("no branch indices requested");
    for (int n : options.indices) require_index(n, "branch index");
    if (!(options.epsilon != 0.0)) throw ConfigurationError("--epsilon must be nonzero");

    const Grid grid = truncated_grid(config.N, config.M);
    const OperatorFamily family(grid, Mode::family_a_v_form);
    const Atlas result = atlas(family, options.indices, options.epsilon, window, config.controls());

    for (const Branch& b : result.branches) {
        fmt::print("branch {}  {}  {} points  status {}/{}\n", b.id, b.seed.description, b.points.size(),
                   to_string(b.status), to_string(b.reverse_status));
        for (const Fold& f : b.folds) fmt::print("  fold at alpha {:.8f} (n = {:.6f})\n", f.alpha, alpha_to_index(f.alpha));
    }
    for (const SeedRecord& s : result.seeds) {
        if (!s.converged) manifest.note_failure(fmt::format("seed {} failed: {}", s.seed.description, s.message));
    }

    if (config.csv()) {
        std::ostringstream branches, folds;
        write_branches_csv(branches, result);
        write_folds_csv(folds, result);
        manifest.emit("branches.csv", branches.str());
        manifest.emit("folds.csv", folds.str());
    }
    if (config.json()) manifest.emit("atlas.json", to_json(result, grid, options.states) + "\n");

    for (double alpha : options.snapshots) {
        if (!window.contains(alpha)) {
            manifest.note_failure(fmt::format("snapshot alpha {} lies outside the window", alpha));
            continue;
        }
        const auto solutions = solutions_at(result, family, alpha, config.newton());
        json list = json::array();
        std::vector<std::string> labels;
        int k = 0;
        for (const SolveResult& s : solutions) {
            if (s.classification == Classification::trivial) continue;
            labels.push_back(fmt::format("{}({:.3f})", to_string(s.classification), quadrature_norm(grid, s.values)));
            list.push_back(json::parse(to_json(s, grid)));
            if (config.csv()) {
                std::ostringstream csv;
                write_profile_csv(csv, grid, s.values, s.mode);
                manifest.emit(fmt::format("snapshot_{}_{}.csv", alpha_tag(alpha), k), csv.str());
            }
            ++k;
        }
        fmt::print("alpha {}: {} nonconstant solution(s) {}\n", alpha_tag(alpha), k, fmt::join(labels, " "));
        if (config.json()) {
            manifest.emit(fmt::format("snapshot_{}.json", alpha_tag(alpha)),
                          json{{"alpha", alpha}, {"solutions", list}}.dump(2) + "\n");
        }
    }

    for (int n : options.indices) {
        const bool covered = std::any_of(result.seeds.begin(), result.seeds.end(), [&](const SeedRecord& s) {
            return s.seed.n == n && s.converged && s.branch_id >= 0;
        });
        if (!covered) {
            fmt::print(stderr, "no branch traced for n = {}\n", n);
            return exit_nonconvergence;
        }
    }
    return exit_ok;
}

int cmd_residual_check(const RunConfig& config, const ResidualCheckOptions& options, RunManifest& manifest) {
    require_index(options.n, "--n");
    if (!(options.t_max > 0.0)) throw ConfigurationError("--t-max must be positive");
    if (options.samples < 2) throw ConfigurationError("--samples must be at least 2");
    for (double eps : options.epsilons) {
        if (!(eps != 0.0) || !std::isfinite(eps)) throw ConfigurationError("epsilon values must be finite and nonzero");
    }
    const PerturbationModel model(options.n, series_precision(config, options.n));

    const auto count = static_cast<std::size_t>(options.samples);
    std::vector<double> t(count), limit(count);
    std::vector<std::vector<double>> curves(options.epsilons.size(), std::vector<double>(count));
    for (std::size_t i = 0; i < count; ++i) {
        t[i] = options.t_max * static_cast<double>(i) / static_cast<double>(count - 1);
        limit[i] = model.limiting_residual(t[i]);
        for (std::size_t e = 0; e < options.epsilons.size(); ++e) curves[e][i] = model.residual(options.epsilons[e], t[i]);
    }
    auto sup = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s = std::max(s, std::abs(x));
        return s;
    };

    const double sup_limit = sup(limit);
    fmt::print("n = {}  sup |r(t; 0)| = {:.6e} on [0, {}]\n", options.n, sup_limit, options.t_max);
    json curve_json = json::array();
    for (std::size_t e = 0; e < options.epsilons.size(); ++e) {
        double deviation = 0.0;
        for (std::size_t i = 0; i < count; ++i) deviation = std::max(deviation, std::abs(curves[e][i] - limit[i]));
        fmt::print("eps = {:.3e}  sup |r| = {:.6e}  sup |r - r0| = {:.6e}\n", options.epsilons[e], sup(curves[e]),
                   deviation);
        curve_json.push_back({{"epsilon", options.epsilons[e]}, {"sup", sup(curves[e])}, {"deviation", deviation}});
    }

    if (config.csv()) {
        std::ostringstream csv;
        csv << "t [1],r(eps=0) [1]";
        for (double eps : options.epsilons) csv << ",r(eps=" << format_double(eps) << ") [1]";
        csv << '\n';
        for (std::size_t i = 0; i < count; ++i) {
            csv << format_double(t[i]) << ',' << format_double(limit[i]);
            for (const auto& c : curves) csv << ',' << format_double(c[i]);
            csv << '\n';
        }
        manifest.emit("residual.csv", csv.str());
    }
    if (config.json()) {
        const json j{{"n", options.n},
                     {"t_max", options.t_max},
                     {"samples", options.samples},
                     {"sup_limit", sup_limit},
                     {"curves", curve_json}};
        manifest.emit("residual.json", j.dump(2) + "\n");
    }
    return exit_ok;
}

}  // namespace riccati::cli
