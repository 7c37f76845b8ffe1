#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace tthjb::cli {

struct SampleOverrides {
    std::optional<std::size_t> particles;
    std::optional<double> lambda;
    std::optional<std::size_t> langevin_steps;
    std::optional<double> langevin_tau;
    std::optional<std::uint64_t> seed;
    std::optional<bool> clamp;
    std::optional<std::filesystem::path> out;
};

// Exit codes: 0 success, 1 bad input, 2 the run itself failed.
int cmd_solve(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
int cmd_sample(const std::filesystem::path& manifest_path, const SampleOverrides& o, std::ostream& out,
               std::ostream& err);
int cmd_verify(const std::string& suite, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::string& bytes);
/// Worker thread cap from TTHJB_THREADS; 1 when unset or invalid.
unsigned threads_from_env();

} // namespace tthjb::cli
