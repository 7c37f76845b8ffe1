#include <iostream>
#include <optional>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Tensor-train HJB solver and score-based sampler"};
    app.require_subcommand(1);

    std::string config;
    auto* solve = app.add_subcommand("solve", "Integrate the HJB equation for a JSON run configuration");
    solve->add_option("config", config, "Run configuration (JSON)")->required();

    std::string manifest;
    tthjb::cli::SampleOverrides o;
    std::size_t particles = 0, steps = 0;
    double lambda = 0.0, tau = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    bool clamp = false;
    auto* sample = app.add_subcommand("sample", "Draw samples from a solved trajectory");
    sample->add_option("manifest", manifest, "manifest.json written by solve")->required();
    auto* o_particles = sample->add_option("--particles", particles, "Number of particles");
    auto* o_lambda = sample->add_option("--lambda", lambda, "Reverse-process parameter in [0, 1]");
    auto* o_steps = sample->add_option("--langevin-steps", steps, "Langevin steps after each reverse step");
    auto* o_tau = sample->add_option("--langevin-tau", tau, "Langevin step size");
    auto* o_seed = sample->add_option("--seed", seed, "Random seed");
    auto* o_out = sample->add_option("--out", out, "CSV path (default: samples.csv next to the manifest)");
    auto* o_clamp = sample->add_flag("--clamp", clamp, "Project particles onto the domain after every step");

    std::string suite;
    auto* verify = app.add_subcommand("verify", "Run an oracle suite and print a report");
    verify->add_option("suite", suite, "gaussian | operators | eigen | quadrature")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (solve->parsed()) return tthjb::cli::cmd_solve(config, std::cout, std::cerr);
    if (sample->parsed()) {
        if (*o_particles) o.particles = particles;
        if (*o_lambda) o.lambda = lambda;
        if (*o_steps) o.langevin_steps = steps;
        if (*o_tau) o.langevin_tau = tau;
        if (*o_seed) o.seed = seed;
        if (*o_out) o.out = out;
        if (*o_clamp) o.clamp = clamp;
        return tthjb::cli::cmd_sample(manifest, o, std::cout, std::cerr);
    }
    return tthjb::cli::cmd_verify(suite, std::cout, std::cerr);
}
