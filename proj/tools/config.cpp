#include "config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tthjb/poly_basis.hpp"

namespace tthjb::cli {

using nlohmann::json;

namespace {

// Walks a document already accepted by the JSON parser and records the line of each value.
class LineScanner {
public:
    explicit LineScanner(const std::string& text) : s_(text) {}

    std::map<std::string, int> run() {
        value("");
        return std::move(lines_);
    }

private:
    void skip_ws() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) {
            if (s_[i_] == '\n') ++line_;
            ++i_;
        }
    }

    std::string string_token() {
        std::string out;
        ++i_;  // opening quote
        while (i_ < s_.size() && s_[i_] != '"') {
            if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
                ++i_;
                switch (s_[i_]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'u': out += "\\u"; break;
                default: out += s_[i_];
                }
            } else {
                out += s_[i_];
            }
            ++i_;
        }
        ++i_;  // closing quote
        return out;
    }

    static std::string escape(const std::string& key) {
        std::string out;
        for (char c : key) {
            if (c == '~') out += "~0";
            else if (c == '/') out += "~1";
            else out += c;
        }
        return out;
    }

    void value(const std::string& ptr) {
        skip_ws();
        if (i_ >= s_.size()) return;
        lines_.emplace(ptr, line_);
        const char c = s_[i_];
        if (c == '{') {
            ++i_;
            skip_ws();
            if (s_[i_] == '}') {
                ++i_;
                return;
            }
            while (i_ < s_.size()) {
                skip_ws();
                const std::string key = string_token();
                skip_ws();
                ++i_;  // colon
                value(ptr + "/" + escape(key));
                skip_ws();
                if (s_[i_++] == '}') return;
            }
        } else if (c == '[') {
            ++i_;
            skip_ws();
            if (s_[i_] == ']') {
                ++i_;
                return;
            }
            for (std::size_t k = 0; i_ < s_.size(); ++k) {
                value(ptr + "/" + std::to_string(k));
                skip_ws();
                if (s_[i_++] == ']') return;
            }
        } else if (c == '"') {
            string_token();
        } else {
            while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' &&
                   !std::isspace(static_cast<unsigned char>(s_[i_])))
                ++i_;
        }
    }

    const std::string& s_;
    std::size_t i_ = 0;
    int line_ = 1;
    std::map<std::string, int> lines_;
};

void only_keys(const json& j, const std::string& ptr, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw SchemaError(ptr, "expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw SchemaError(ptr + "/" + key, "unknown key '" + key + "'");
}

const json& require(const json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) throw SchemaError(ptr, "missing required key '" + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& ptr) {
    if (!j.is_number()) throw SchemaError(ptr, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(ptr, "expected a finite number");
    return v;
}

double positive(const json& j, const std::string& ptr) {
    const double v = number(j, ptr);
    if (!(v > 0.0)) throw SchemaError(ptr, "must be positive");
    return v;
}

long long integer(const json& j, const std::string& ptr, long long lo) {
    if (!j.is_number_integer()) throw SchemaError(ptr, "expected an integer");
    const long long v = j.get<long long>();
    if (v < lo) throw SchemaError(ptr, "must be at least " + std::to_string(lo));
    return v;
}

std::uint64_t seed_value(const json& j, const std::string& ptr) {
    if (!j.is_number_unsigned()) throw SchemaError(ptr, "expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

bool boolean(const json& j, const std::string& ptr) {
    if (!j.is_boolean()) throw SchemaError(ptr, "expected true or false");
    return j.get<bool>();
}

RhoSchedule parse_rho(const json& j, const std::string& ptr) {
    auto check = [](double v, const std::string& p) {
        if (!(v > 0.0 && v < 1.0)) throw SchemaError(p, "rho must lie in (0, 1)");
        return v;
    };
    if (j.is_number()) return RhoSchedule::constant(check(number(j, ptr), ptr));
    if (!j.is_array() || j.empty()) throw SchemaError(ptr, "expected a number or a list of [start_time, rho] pairs");
    RhoSchedule s;
    s.pieces.clear();
    for (std::size_t k = 0; k < j.size(); ++k) {
        const std::string p = ptr + "/" + std::to_string(k);
        if (!j[k].is_array() || j[k].size() != 2) throw SchemaError(p, "expected [start_time, rho]");
        const double start = number(j[k][0], p + "/0");
        if (k == 0 && start != 0.0) throw SchemaError(p + "/0", "the first piece must start at 0");
        if (k > 0 && !(start > s.pieces.back().first)) throw SchemaError(p + "/0", "start times must increase");
        s.pieces.emplace_back(start, check(number(j[k][1], p + "/1"), p + "/1"));
    }
    return s;
}

std::string locate(const std::map<std::string, int>& lines, std::string ptr) {
    for (;;) {
        if (auto it = lines.find(ptr); it != lines.end()) return std::to_string(it->second);
        if (ptr.empty()) return "1";
        ptr.erase(ptr.rfind('/'));
    }
}

} // namespace

std::map<std::string, int> pointer_lines(const std::string& text) { return LineScanner(text).run(); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void parse_space(const json& j, const std::string& ptr, std::vector<std::pair<double, double>>& intervals,
                 std::vector<int>& degrees) {
    only_keys(j, ptr, {"dims", "intervals", "degrees"});
    const auto d = std::size_t(integer(require(j, "dims", ptr), ptr + "/dims", 1));
    const json& iv = require(j, "intervals", ptr);
    const std::string ip = ptr + "/intervals";
    if (!iv.is_array()) throw SchemaError(ip, "expected [a, b] or a list of d such pairs");
    auto pair_at = [&](const json& x, const std::string& p) {
        if (!x.is_array() || x.size() != 2) throw SchemaError(p, "expected [a, b]");
        const double a = number(x[0], p + "/0"), b = number(x[1], p + "/1");
        if (!(a < b)) throw SchemaError(p, "interval must satisfy a < b");
        return std::make_pair(a, b);
    };
    intervals.clear();
    if (iv.size() == 2 && iv[0].is_number()) {
        intervals.assign(d, pair_at(iv, ip));
    } else {
        if (iv.size() != d) throw SchemaError(ip, "expected " + std::to_string(d) + " intervals");
        for (std::size_t k = 0; k < d; ++k) intervals.push_back(pair_at(iv[k], ip + "/" + std::to_string(k)));
    }
    const json& dg = require(j, "degrees", ptr);
    const std::string dp = ptr + "/degrees";
    auto degree_at = [&](const json& x, const std::string& p) {
        const long long n = integer(x, p, 0);
        if (n > kMaxDegree) throw SchemaError(p, "degree must not exceed " + std::to_string(kMaxDegree));
        return int(n);
    };
    degrees.clear();
    if (dg.is_number()) {
        degrees.assign(d, degree_at(dg, dp));
    } else {
        if (!dg.is_array() || dg.size() != d) throw SchemaError(dp, "expected " + std::to_string(d) + " degrees");
        for (std::size_t k = 0; k < d; ++k) degrees.push_back(degree_at(dg[k], dp + "/" + std::to_string(k)));
    }
}

SolverConfig parse_solver(const json& j, const std::string& ptr) {
    only_keys(j, ptr,
              {"T", "tau_max", "rho", "delta_proj", "delta_rank", "delta_contr", "p_digits", "power_max_iters", "seed",
               "record_timing"});
    SolverConfig c;
    c.T = positive(require(j, "T", ptr), ptr + "/T");
    c.tau_max = positive(require(j, "tau_max", ptr), ptr + "/tau_max");
    if (j.contains("rho")) c.rho = parse_rho(j.at("rho"), ptr + "/rho");
    if (j.contains("delta_proj")) c.delta_proj = positive(j.at("delta_proj"), ptr + "/delta_proj");
    if (j.contains("delta_rank")) c.delta_rank = positive(j.at("delta_rank"), ptr + "/delta_rank");
    if (j.contains("delta_contr")) c.delta_contr = positive(j.at("delta_contr"), ptr + "/delta_contr");
    if (j.contains("p_digits")) c.p_digits = int(integer(j.at("p_digits"), ptr + "/p_digits", 1));
    if (j.contains("power_max_iters"))
        c.power_max_iters = int(integer(j.at("power_max_iters"), ptr + "/power_max_iters", 1));
    if (j.contains("seed")) c.seed = seed_value(j.at("seed"), ptr + "/seed");
    if (j.contains("record_timing")) c.record_timing = boolean(j.at("record_timing"), ptr + "/record_timing");
    return c;
}

SamplerConfig parse_sampler(const json& j, const std::string& ptr) {
    only_keys(j, ptr, {"lambda", "n_particles", "langevin_steps", "langevin_tau", "seed", "clamp_to_domain"});
    SamplerConfig c;
    if (j.contains("lambda")) {
        c.lambda = number(j.at("lambda"), ptr + "/lambda");
        if (c.lambda < 0.0 || c.lambda > 1.0) throw SchemaError(ptr + "/lambda", "must lie in [0, 1]");
    }
    if (j.contains("n_particles")) c.n_particles = std::size_t(integer(j.at("n_particles"), ptr + "/n_particles", 0));
    if (j.contains("langevin_steps"))
        c.langevin_steps = std::size_t(integer(j.at("langevin_steps"), ptr + "/langevin_steps", 0));
    if (j.contains("langevin_tau")) c.langevin_tau = positive(j.at("langevin_tau"), ptr + "/langevin_tau");
    if (j.contains("seed")) c.seed = seed_value(j.at("seed"), ptr + "/seed");
    if (j.contains("clamp_to_domain")) c.clamp_to_domain = boolean(j.at("clamp_to_domain"), ptr + "/clamp_to_domain");
    return c;
}

RunConfig parse_run_config(const std::string& text, const std::string& origin, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const int line = 1 + int(std::count(text.begin(), text.begin() + std::ptrdiff_t(upto), '\n'));
        throw ConfigError(origin + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    const auto lines = pointer_lines(text);
    try {
        RunConfig rc;
        only_keys(doc, "", {"space", "potential", "solver", "sampler", "output_dir", "snapshot_stride"});
        parse_space(require(doc, "space", ""), "/space", rc.intervals, rc.degrees);
        rc.potential = parse_potential(require(doc, "potential", ""), "/potential");
        rc.solver = parse_solver(require(doc, "solver", ""), "/solver");
        if (doc.contains("sampler")) rc.sampler = parse_sampler(doc.at("sampler"), "/sampler");
        const json& out = require(doc, "output_dir", "");
        if (!out.is_string() || out.get<std::string>().empty())
            throw SchemaError("/output_dir", "expected a nonempty path string");
        rc.output_dir = base_dir / out.get<std::string>();
        if (doc.contains("snapshot_stride"))
            rc.snapshot_stride = std::size_t(integer(doc.at("snapshot_stride"), "/snapshot_stride", 1));

        const std::size_t d = rc.intervals.size();
        for (std::size_t k = 0; k < rc.potential.terms.size(); ++k)
            for (std::size_t c : rc.potential.terms[k].coords)
                if (c >= d)
                    throw SchemaError("/potential/terms/" + std::to_string(k) + "/coords",
                                      "coordinate " + std::to_string(c) + " out of range for dims " + std::to_string(d));
        for (std::size_t k = 0; k < rc.potential.builtins.size(); ++k)
            for (std::size_t c : rc.potential.builtins[k].coords)
                if (c >= d)
                    throw SchemaError("/potential/builtins/" + std::to_string(k) + "/coords",
                                      "coordinate " + std::to_string(c) + " out of range for dims " + std::to_string(d));
        rc.raw = std::move(doc);
        return rc;
    } catch (const SchemaError& e) {
        throw ConfigError(origin + ":" + locate(lines, e.pointer()) + ": " + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return parse_run_config(read_file(path), path.string(), base);
}

} // namespace tthjb::cli
