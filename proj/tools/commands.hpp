#pragma once

#include <string>
#include <vector>

#include "run_config.hpp"

namespace riccati::cli {

struct CoeffsOptions {
    int max_n = 6;
    int digits = 16;
};

struct VerifyLinearOptions {
    std::vector<double> alphas;
    std::vector<int> indices;
    std::vector<int> N_sweep{25, 50, 100, 200, 400, 700};
    double ceiling = 1e-5;
};

/// perturbation:n:eps, family_b or file:path.
struct SeedSpec {
    enum class Kind { perturbation, family_b, file } kind = Kind::perturbation;
    int n = 1;
    double epsilon = 0.0;
    std::string path;

    static SeedSpec parse(const std::string& text);
};

struct SolveOptions {
    double alpha = 0.0;
    std::string seed = "perturbation:1:0";
    int samples_per_interval = 8;
};

struct AtlasOptions {
    std::vector<int> indices{1, 2};
    std::vector<double> window{1.3, 4.2};
    double epsilon = 0.01;
    std::vector<double> snapshots{1.43, 1.46, 4.0};
    bool states = false;
};

struct ResidualCheckOptions {
    int n = 1;
    std::vector<double> epsilons{1e-2, 1e-3};
    double t_max = 50.0;
    int samples = 501;
};

// Each returns an exit code and records outputs in the manifest. Usage
// errors throw ConfigurationError.
int cmd_coeffs(const RunConfig& config, const CoeffsOptions& options, RunManifest& manifest);
int cmd_verify_linear(const RunConfig& config, const VerifyLinearOptions& options, RunManifest& manifest);
int cmd_solve(const RunConfig& config, const SolveOptions& options, RunManifest& manifest);
int cmd_atlas(const RunConfig& config, const AtlasOptions& options, RunManifest& manifest);
int cmd_residual_check(const RunConfig& config, const ResidualCheckOptions& options, RunManifest& manifest);

}  // namespace riccati::cli
