#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tthjb/integrator.hpp"
#include "tthjb/potential.hpp"
#include "tthjb/sampler.hpp"

namespace tthjb::cli {

/// Config problem with a file:line prefix already applied.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::vector<std::pair<double, double>> intervals;
    std::vector<int> degrees;
    PotentialSpec potential;
    SolverConfig solver;
    std::optional<SamplerConfig> sampler;
    std::filesystem::path output_dir;
    std::size_t snapshot_stride = 1;
    /// The parsed document, kept verbatim for the manifest.
    nlohmann::json raw;
};

/// Line of the value at every JSON pointer of a syntactically valid document.
std::map<std::string, int> pointer_lines(const std::string& text);

/// Parses and validates a run configuration. `text` is the file content, `origin` the name
/// used in messages; output_dir is resolved relative to `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::string& origin,
                           const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses the "solver" / "sampler" / "space" objects; used again when reading a manifest.
SolverConfig parse_solver(const nlohmann::json& j, const std::string& ptr);
SamplerConfig parse_sampler(const nlohmann::json& j, const std::string& ptr);
void parse_space(const nlohmann::json& j, const std::string& ptr, std::vector<std::pair<double, double>>& intervals,
                 std::vector<int>& degrees);

std::string read_file(const std::filesystem::path& path);

} // namespace tthjb::cli
