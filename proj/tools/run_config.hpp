#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "riccati/continuation.hpp"
#include "riccati/precision.hpp"
#include "riccati/solver.hpp"

namespace riccati::cli {

enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_nonconvergence = 3 };

struct RunConfig {
    int N = 700;
    double M = 6.0;
    unsigned bits = 256;
    double tol = 1e-10;
    int max_iterations = 25;
    double ds0 = 1e-2;
    double ds_min = 1e-5;
    double ds_max = 0.1;
    int max_points = 4000;
    std::string out = ".";
    std::string format = "both";
    // Only for randomized test perturbations; no command draws from it.
    std::uint64_t rng_seed = 0;

    /// Throws ConfigurationError.
    void validate() const;
    bool csv() const { return format == "csv" || format == "both"; }
    bool json() const { return format == "json" || format == "both"; }

    NewtonOptions newton() const;
    ContinuationControls controls() const;
    PrecisionConfig precision() const;
    std::string to_json() const;
};

std::string sha256_hex(std::string_view data);

struct OutputRecord {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

/// Collects every emitted file with its digest; written last as manifest.json.
class RunManifest {
public:
    RunManifest(std::string command, RunConfig config, std::vector<std::string> arguments);

    /// Writes `content` to out/name and records it.
    void emit(const std::string& name, const std::string& content);
    void note_failure(std::string message);
    void set_exit_code(int code) { exit_code_ = code; }

    const std::vector<OutputRecord>& outputs() const { return outputs_; }
    const std::vector<std::string>& failures() const { return failures_; }
    std::filesystem::path directory() const { return config_.out; }

    std::string to_json() const;
    void write() const;

private:
    std::string command_;
    RunConfig config_;
    std::vector<std::string> arguments_;
    std::string started_;
    std::vector<OutputRecord> outputs_;
    std::vector<std::string> failures_;
    int exit_code_ = exit_ok;
};

std::string utc_timestamp();

}  // namespace riccati::cli
