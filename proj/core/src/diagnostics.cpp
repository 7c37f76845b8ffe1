#include "tthjb/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tthjb {

using json = nlohmann::ordered_json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

} // namespace

json to_json(const StepRecord& r) {
    return json{{"step", r.step},
                {"t", number(r.t)},
                {"tau", number(r.tau)},
                {"tau_lambda", number(r.tau_lambda)},
                {"tau_proj", number(r.tau_proj)},
                {"tau_rank", number(r.tau_rank)},
                {"lambda_bar", number(r.lambda_bar)},
                {"ranks", r.ranks},
                {"degrees", r.degrees},
                {"cov_err", number(r.cov_err)},
                {"wall_ms", number(r.wall_ms)}};
}

StepRecord step_record_from_json(const json& j) {
    StepRecord r;
    r.step = j.at("step").get<std::size_t>();
    r.t = number_or_inf(j.at("t"));
    r.tau = number_or_inf(j.at("tau"));
    r.tau_lambda = number_or_inf(j.at("tau_lambda"));
    r.tau_proj = number_or_inf(j.at("tau_proj"));
    r.tau_rank = number_or_inf(j.at("tau_rank"));
    r.lambda_bar = number_or_inf(j.at("lambda_bar"));
    r.ranks = j.at("ranks").get<std::vector<std::size_t>>();
    r.degrees = j.at("degrees").get<std::vector<int>>();
    r.cov_err = number_or_inf(j.at("cov_err"));
    r.wall_ms = number_or_inf(j.at("wall_ms"));
    return r;
}

std::string to_jsonl_line(const StepRecord& r) { return to_json(r).dump(); }

DiagnosticsWriter::DiagnosticsWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void DiagnosticsWriter::write(const StepRecord& r) {
    out_ << to_jsonl_line(r) << '\n';
    out_.flush();
}

std::vector<StepRecord> read_diagnostics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<StepRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(step_record_from_json(json::parse(line)));
    return out;
}

} // namespace tthjb
