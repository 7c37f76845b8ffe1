#include "commands.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "config.hpp"
#include "tthjb/checkpoint.hpp"
#include "tthjb/diagnostics.hpp"
#include "tthjb/integrator.hpp"
#include "tthjb/potential.hpp"
#include "tthjb/sampler.hpp"

namespace tthjb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string snapshot_name(std::size_t step) { return "snapshot_" + std::to_string(step) + ".ttck"; }

void append_double(std::string& s, double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    s.append(buf, r.ptr);
}

} // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream ss;
    for (unsigned int k = 0; k < len; ++k) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
    return ss.str();
}

unsigned threads_from_env() {
    const char* v = std::getenv("TTHJB_THREADS");
    if (!v) return 1;
    unsigned n = 0;
    const auto r = std::from_chars(v, v + std::char_traits<char>::length(v), n);
    return (r.ec == std::errc() && n > 0) ? n : 1;
}

int cmd_solve(const fs::path& config_path, std::ostream& out, std::ostream& err) {
    RunConfig rc;
    std::string text;
    try {
        text = read_file(config_path);
        rc = parse_run_config(text, config_path.string(),
                              config_path.has_parent_path() ? config_path.parent_path() : fs::path("."));
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return 1;
    }

    const PolySpace space(rc.intervals, rc.degrees);
    TensorTrain phi;
    try {
        const SparsePoly poly = expand_potential(rc.potential, space.dims());
        std::string why;
        if (!has_quadratic_floor(poly, space.dims(), &why))
            throw std::invalid_argument("initial condition must be a valid density potential: " + why);
        phi = build_poly_tt(poly, space, 1e-14);
        rc.solver.validate();
    } catch (const std::exception& e) {
        err << config_path.string() << ": " << e.what() << '\n';
        return 1;
    }

    try {
        fs::create_directories(rc.output_dir);
    } catch (const std::exception& e) {
        err << "cannot create " << rc.output_dir.string() << ": " << e.what() << '\n';
        return 1;
    }

    json snapshots = json::array();
    json times = json::array();
    auto keep_snapshot = [&](std::size_t step, const SolutionSnapshot& s) {
        write_checkpoint(rc.output_dir / snapshot_name(step), s.coeffs, s.t);
        snapshots.push_back({{"step", step}, {"t", s.t}, {"file", snapshot_name(step)}});
    };

    DiagnosticsWriter diag(rc.output_dir / "diagnostics.jsonl");
    keep_snapshot(0, SolutionSnapshot{0.0, phi});
    times.push_back(0.0);
    const auto observer = [&](const StepRecord& r, const SolutionSnapshot& s) {
        diag.write(r);
        times.push_back(s.t);
        if (r.step % rc.snapshot_stride == 0 || s.t == rc.solver.T) keep_snapshot(r.step, s);
    };
    const Trajectory traj = solve_hjb(phi, space, rc.solver, observer);

    json manifest;
    manifest["format"] = "tthjb-manifest";
    manifest["version"] = 1;
    manifest["config_sha256"] = sha256_hex(text);
    manifest["config"] = rc.raw;
    manifest["complete"] = traj.complete();
    manifest["error"] = traj.error ? json(*traj.error) : json(nullptr);
    manifest["times"] = times;
    manifest["final_time"] = traj.snapshots.back().t;
    manifest["initial_ranks"] = traj.initial_ranks;
    manifest["final_ranks"] = traj.snapshots.back().coeffs.interior_ranks();
    manifest["final_degrees"] = traj.snapshots.back().degrees();
    manifest["diagnostics"] = "diagnostics.jsonl";
    manifest["snapshots"] = snapshots;
    manifest["conventions"] = {{"delta_contr_degree_criterion", "absolute"},
                               {"delta_contr_rounding", "relative"},
                               {"quadratic_coefficients", "v = x^T Q x + ..., target Q = I/2"}};
    {
        std::ofstream mf(rc.output_dir / "manifest.json");
        mf << manifest.dump(2) << '\n';
    }

    const auto& last = traj.snapshots.back();
    out << "steps " << traj.diagnostics.size() << ", t = " << last.t << ", ranks "
        << format_ranks(last.coeffs.ranks());
    if (!traj.diagnostics.empty()) out << ", cov_err " << traj.diagnostics.back().cov_err;
    out << '\n';
    if (traj.error) {
        err << "solver stopped: " << *traj.error << '\n';
        return 2;
    }
    return 0;
}

int cmd_sample(const fs::path& manifest_path, const SampleOverrides& o, std::ostream& out, std::ostream& err) {
    json manifest;
    std::vector<std::pair<double, double>> intervals;
    std::vector<int> degrees;
    SolverConfig cfg;
    SamplerConfig scfg;
    Trajectory traj;
    std::vector<double> grid;
    const fs::path dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
    try {
        manifest = json::parse(read_file(manifest_path));
        if (manifest.value("format", "") != "tthjb-manifest") throw std::invalid_argument("not a tthjb manifest");
        if (!manifest.at("complete").get<bool>()) throw std::invalid_argument("manifest describes an incomplete run");
        const json& config = manifest.at("config");
        parse_space(config.at("space"), "/config/space", intervals, degrees);
        cfg = parse_solver(config.at("solver"), "/config/solver");
        if (config.contains("sampler")) scfg = parse_sampler(config.at("sampler"), "/config/sampler");
        grid = manifest.at("times").get<std::vector<double>>();
        traj.initial_ranks = manifest.at("initial_ranks").get<std::vector<std::size_t>>();
        for (const auto& s : manifest.at("snapshots")) {
            Checkpoint c = read_checkpoint(dir / s.at("file").get<std::string>());
            traj.snapshots.push_back({c.t, std::move(c.coeffs)});
        }
    } catch (const std::exception& e) {
        err << manifest_path.string() << ": " << e.what() << '\n';
        return 1;
    }
    if (o.particles) scfg.n_particles = *o.particles;
    if (o.lambda) scfg.lambda = *o.lambda;
    if (o.langevin_steps) scfg.langevin_steps = *o.langevin_steps;
    if (o.langevin_tau) scfg.langevin_tau = *o.langevin_tau;
    if (o.seed) scfg.seed = *o.seed;
    if (o.clamp) scfg.clamp_to_domain = *o.clamp;
    scfg.threads = threads_from_env();
    try {
        scfg.validate();
    } catch (const std::exception& e) {
        err << e.what() << '\n';
        return 1;
    }

    const PolySpace space(intervals, degrees);
    SampleBatch batch;
    try {
        const TrajectoryScore score(traj, space, cfg, grid);
        batch = reverse_sample(score, scfg, intervals);
    } catch (const std::exception& e) {
        err << "sampling failed: " << e.what() << '\n';
        return 2;
    }

    const fs::path csv = o.out ? *o.out : dir / "samples.csv";
    std::string body;
    for (std::size_t i = 0; i < batch.d; ++i) body += (i ? ",x" : "x") + std::to_string(i + 1);
    body += ",flags\n";
    long long outside = 0, nonfinite = 0;
    for (Eigen::Index p = 0; p < batch.z.rows(); ++p) {
        for (Eigen::Index i = 0; i < batch.z.cols(); ++i) {
            append_double(body, batch.z(p, i));
            body += ',';
        }
        const long long f = batch.flags[std::size_t(p)];
        body += std::to_string(f) + '\n';
        if (f < 0) ++nonfinite;
        else outside += f;
    }
    std::ofstream(csv, std::ios::binary) << body;

    json meta = {{"manifest", manifest_path.string()},
                 {"config_sha256", manifest.at("config_sha256")},
                 {"seed", scfg.seed},
                 {"lambda", scfg.lambda},
                 {"n_particles", scfg.n_particles},
                 {"langevin_steps", scfg.langevin_steps},
                 {"langevin_tau", scfg.langevin_tau},
                 {"clamp_to_domain", scfg.clamp_to_domain},
                 {"rng", "splitmix64 stream per (seed, particle), Marsaglia polar normals"},
                 {"grid", grid},
                 {"out_of_domain_evaluations", outside},
                 {"nonfinite_particles", nonfinite}};
    fs::path meta_path = csv;
    meta_path.replace_extension(".json");
    std::ofstream(meta_path) << meta.dump(2) << '\n';
    out << "wrote " << batch.z.rows() << " samples to " << csv.string() << '\n';
    return 0;
}

} // namespace tthjb::cli
