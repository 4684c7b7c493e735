#include <fmt/format.h>

#include <CLI11.hpp>

#include "commands.hpp"
#include "riccati/diagnostics.hpp"
#include "riccati/errors.hpp"

using namespace riccati;
using namespace riccati::cli;

namespace {

// A list option given with no values means an empty list, not the default.
template <class T>
void clear_if_bare(const CLI::Option* option, std::vector<T>& values) {
    if (option->count() == 0) return;
    for (const auto& r : option->results()) {
        if (!r.empty()) return;
    }
    values.clear();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral solver and continuation toolkit for u'(t) + u(t) = u(alpha t)^2, u(0) = 1"};
    app.set_version_flag("--version", RICCATI_VERSION);
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.set_config("--config", "", "Flat 'key = value' file; command line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    RunConfig config;
    app.add_option("--out", config.out, "Output directory")->capture_default_str();
    app.add_option("--format", config.format, "Output formats")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->capture_default_str();
    app.add_option("-N", config.N, "Gauss-Laguerre points")->capture_default_str();
    app.add_option("-M", config.M, "Truncation multiplier, m = ceil(M sqrt(N))")->capture_default_str();
    app.add_option("--bits", config.bits, "Significand bits for series and moments")->capture_default_str();
    app.add_option("--tol", config.tol, "Newton tolerance on the residual infinity norm")->capture_default_str();
    app.add_option("--max-iterations", config.max_iterations, "Newton iteration cap")->capture_default_str();
    app.add_option("--ds0", config.ds0, "Initial arclength step")->capture_default_str();
    app.add_option("--ds-min", config.ds_min, "Smallest arclength step")->capture_default_str();
    app.add_option("--ds-max", config.ds_max, "Largest arclength step")->capture_default_str();
    app.add_option("--max-points", config.max_points, "Points per branch half")->capture_default_str();
    app.add_option("--rng-seed", config.rng_seed, "Seed for randomized perturbations")->capture_default_str();

    CoeffsOptions coeffs;
    auto* coeffs_cmd = app.add_subcommand("coeffs", "Scaling coefficients C_n and ||C_n E_n||_2");
    coeffs_cmd->add_option("--max-n", coeffs.max_n, "Largest n")->capture_default_str();
    coeffs_cmd->add_option("--digits", coeffs.digits, "Significant digits written")->capture_default_str();

    VerifyLinearOptions verify;
    auto* verify_cmd = app.add_subcommand("verify-linear", "Convergence of the linear characteristic solve");
    verify_cmd->add_option("--alpha", verify.alphas, "Characteristic values 2^(1/n)");
    verify_cmd->add_option("--n", verify.indices, "Characteristic indices (default 1)");
    auto* sweep_opt = verify_cmd->add_option("--N-sweep", verify.N_sweep, "Grid sizes (default 25 50 100 200 400 700)")
        ->expected(0, CLI::detail::expected_max_vector_size);
    verify_cmd->add_option("--ceiling", verify.ceiling, "Largest accepted error at the largest N")
        ->capture_default_str();

    SolveOptions solve;
    auto* solve_cmd = app.add_subcommand("solve", "Newton solve from a seed");
    solve_cmd->add_option("--alpha", solve.alpha, "Dilation parameter")->required();
    solve_cmd->add_option("--seed", solve.seed, "perturbation:N:EPS, family_b or file:PATH")->capture_default_str();
    solve_cmd->add_option("--samples-per-interval", solve.samples_per_interval, "Profile samples per node gap")
        ->capture_default_str();

    AtlasOptions atlas_options;
    auto* atlas_cmd = app.add_subcommand("atlas", "Continuation of all branches through a window");
    atlas_cmd->add_option("--n", atlas_options.indices, "Branch indices")->capture_default_str();
    atlas_cmd->add_option("--window", atlas_options.window, "alpha_lo alpha_hi")->expected(2)->capture_default_str();
    atlas_cmd->add_option("--epsilon", atlas_options.epsilon, "Seed offset from 2^(1/n)")->capture_default_str();
    auto* snapshot_opt = atlas_cmd->add_option("--snapshot", atlas_options.snapshots, "alpha values to solve at (default 1.43 1.46 4)")
        ->expected(0, CLI::detail::expected_max_vector_size);
    atlas_cmd->add_flag("--states", atlas_options.states, "Include node values in atlas.json");

    ResidualCheckOptions residual;
    auto* residual_cmd = app.add_subcommand("residual-check", "Perturbation remainder r_n(t; eps)");
    residual_cmd->add_option("--n", residual.n, "Characteristic index")->capture_default_str();
    auto* epsilon_opt = residual_cmd->add_option("--epsilon", residual.epsilons, "Offsets (default 1e-2 1e-3; none: limit only)")
        ->expected(0, CLI::detail::expected_max_vector_size);
    residual_cmd->add_option("--t-max", residual.t_max, "Right end of the sample range")->capture_default_str();
    residual_cmd->add_option("--samples", residual.samples, "Sample count")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }
    clear_if_bare(sweep_opt, verify.N_sweep);
    clear_if_bare(snapshot_opt, atlas_options.snapshots);
    clear_if_bare(epsilon_opt, residual.epsilons);

    set_warning_handler([](std::string_view message) { fmt::print(stderr, "warning: {}\n", message); });
    std::vector<std::string> arguments(argv + 1, argv + argc);
    try {
        config.validate();
        const std::string name = app.get_subcommands().front()->get_name();
        RunManifest manifest(name, config, arguments);
        int code = exit_ok;
        if (coeffs_cmd->parsed()) {
            code = cmd_coeffs(config, coeffs, manifest);
        } else if (verify_cmd->parsed()) {
            code = cmd_verify_linear(config, verify, manifest);
        } else if (solve_cmd->parsed()) {
            code = cmd_solve(config, solve, manifest);
        } else if (atlas_cmd->parsed()) {
            code = cmd_atlas(config, atlas_options, manifest);
        } else {
            code = cmd_residual_check(config, residual, manifest);
        }
        manifest.set_exit_code(code);
        manifest.write();
        return code;
    } catch (const ConfigurationError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_usage;
    } catch (const DomainError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_usage;
    } catch (const std::exception& e) {
        fmt::print(stderr, "numerical failure: {}\n", e.what());
        return exit_nonconvergence;
    }
}
