#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "tthjb/integrator.hpp"

namespace tthjb {

/// Non-finite values (an unbounded tau_lambda, say) are written as null.
nlohmann::ordered_json to_json(const StepRecord& r);
StepRecord step_record_from_json(const nlohmann::ordered_json& j);

/// One compact JSON object without a trailing newline.
std::string to_jsonl_line(const StepRecord& r);

/// Appends one line per record and flushes, so a partial run leaves a readable file.
class DiagnosticsWriter {
public:
    explicit DiagnosticsWriter(const std::filesystem::path& path);
    void write(const StepRecord& r);

private:
    std::ofstream out_;
};

std::vector<StepRecord> read_diagnostics(const std::filesystem::path& path);

} // namespace tthjb
