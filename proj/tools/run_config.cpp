#include "run_config.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <json.hpp>

#include "riccati/errors.hpp"

namespace riccati::cli {

using nlohmann::json;

void RunConfig::validate() const {
    auto require = [](bool ok, std::string_view what) {
        if (!ok) throw ConfigurationError(fmt::format("invalid configuration: {}", what));
    };
    require(N >= 1, "N must be positive");
    require(M > 0.0, "M must be positive");
    require(bits > 0, "bits must be positive");
    require(tol > 0.0, "tol must be positive");
    require(max_iterations > 0, "max_iterations must be positive");
    require(ds_min > 0.0 && ds0 >= ds_min && ds_max >= ds0, "need 0 < ds_min <= ds0 <= ds_max");
    require(max_points > 1, "max_points must exceed 1");
    require(format == "csv" || format == "json" || format == "both", "format must be csv, json or both");
    require(!out.empty(), "output directory is empty");
    if (truncated_size(N, M) > N) {
        throw ConfigurationError(fmt::format("ceil(M sqrt(N)) = {} exceeds N = {}", truncated_size(N, M), N));
    }
    precision().validate();
}

NewtonOptions RunConfig::newton() const {
    NewtonOptions o;
    o.tolerance = tol;
    o.max_iterations = max_iterations;
    return o;
}

ContinuationControls RunConfig::controls() const {
    ContinuationControls c;
    c.ds0 = ds0;
    c.ds_min = ds_min;
    c.ds_max = ds_max;
    c.max_points = max_points;
    c.corrector_tolerance = tol;
    return c;
}

PrecisionConfig RunConfig::precision() const {
    PrecisionConfig p;
    p.significand_bits = bits;
    return p;
}

std::string RunConfig::to_json() const {
    const nlohmann::json j{{"N", N},
                           {"M", M},
                           {"bits", bits},
                           {"tol", tol},
                           {"max_iterations", max_iterations},
                           {"ds0", ds0},
                           {"ds_min", ds_min},
                           {"ds_max", ds_max},
                           {"max_points", max_points},
                           {"out", out},
                           {"format", format},
                           {"rng_seed", rng_seed}};
    return j.dump();
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("SHA-256 digest failed");
    }
    std::string hex;
    hex.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

RunManifest::RunManifest(std::string command, RunConfig config, std::vector<std::string> arguments)
    : command_(std::move(command)),
      config_(std::move(config)),
      arguments_(std::move(arguments)),
      started_(utc_timestamp()) {}

void RunManifest::emit(const std::string& name, const std::string& content) {
    const std::filesystem::path dir(config_.out);
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigurationError(fmt::format("cannot write {}", path.string()));
    f << content;
    f.close();
    if (!f) throw ConfigurationError(fmt::format("write to {} failed", path.string()));
    outputs_.push_back({name, sha256_hex(content), content.size()});
}

void RunManifest::note_failure(std::string message) { failures_.push_back(std::move(message)); }

std::string RunManifest::to_json() const {
    json outputs = json::array();
    for (const auto& o : outputs_) outputs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
    const json j{{"command", command_},
                 {"arguments", arguments_},
                 {"toolkit_version", RICCATI_VERSION},
                 {"config", json::parse(config_.to_json())},
                 {"started", started_},
                 {"finished", utc_timestamp()},
                 {"exit_code", exit_code_},
                 {"failures", failures_},
                 {"outputs", outputs}};
    return j.dump(2) + "\n";
}

void RunManifest::write() const {
    const std::filesystem::path dir(config_.out);
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigurationError(fmt::format("cannot write {}", (dir / "manifest.json").string()));
    f << to_json();
}

}  // namespace riccati::cli
