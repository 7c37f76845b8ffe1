#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"

using namespace tthjb::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("tthjb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& text) {
        std::ofstream(dir_ / name) << text;
        return dir_ / name;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
};

std::string gaussian_config(int d, const std::string& out) {
    std::string coords;
    for (int i = 0; i < d; ++i) coords += (i ? ", " : "") + std::to_string(i);
    return R"({
  "space": {"dims": )" + std::to_string(d) + R"(, "intervals": [-5, 5], "degrees": 2},
  "potential": {"builtins": [{"name": "gaussian", "coords": [)" + coords + R"(], "params": {"seed": 1}}]},
  "solver": {"T": 12.0, "tau_max": 0.1, "rho": 0.2, "delta_proj": 0.01, "delta_rank": 0.01, "delta_contr": 1e-8},
  "sampler": {"n_particles": 50, "seed": 3},
  "output_dir": ")" + out + R"("
})";
}

std::string short_config(const std::string& out) {
    return R"({
  "space": {"dims": 2, "intervals": [[-4, 4], [-3, 3]], "degrees": [4, 2]},
  "potential": {"terms": [{"coords": [0, 1], "poly": [{"exps": [4, 0], "coef": 0.25}, {"exps": [2, 0], "coef": -0.5},
                                                      {"exps": [0, 2], "coef": 0.5}, {"exps": [1, 1], "coef": 0.1}]}]},
  "solver": {"T": 2.0, "tau_max": 0.05, "rho": [[0, 0.01], [1e-4, 0.5]]},
  "sampler": {"n_particles": 20, "seed": 8},
  "snapshot_stride": 5,
  "output_dir": ")" + out + R"("
})";
}

} // namespace

TEST_F(CliTest, PointerLines) {
    const auto lines = pointer_lines("{\n  \"a\": {\n    \"b\": [1,\n 2]\n  }\n}\n");
    EXPECT_EQ(lines.at("/a"), 2);
    EXPECT_EQ(lines.at("/a/b"), 3);
    EXPECT_EQ(lines.at("/a/b/1"), 4);
}

TEST_F(CliTest, SchemaErrorNamesLineAndPointer) {
    const std::string text = "{\n  \"space\": {\"dims\": 2, \"intervals\": [-1, 1], \"degrees\": 2},\n"
                             "  \"potential\": {\"builtins\": [{\"name\": \"iso_tail\", \"coords\": [0, 1]}]},\n"
                             "  \"solver\": {\n    \"T\": 1.0,\n    \"tau_max\": -0.1\n  },\n"
                             "  \"output_dir\": \"out\"\n}\n";
    try {
        parse_run_config(text, "run.json", dir_);
        FAIL() << "expected a schema error";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_EQ(msg.rfind("run.json:6:", 0), 0u) << msg;
        EXPECT_NE(msg.find("/solver/tau_max"), std::string::npos) << msg;
    }
}

TEST_F(CliTest, RejectsUnknownKeysAndBadJson) {
    EXPECT_THROW(parse_run_config("{\"space\": 1,", "x.json", dir_), ConfigError);
    const std::string extra = R"({"space": {"dims": 1, "intervals": [-1, 1], "degrees": 2},
        "potential": {"builtins": [{"name": "iso_tail", "coords": [0]}]},
        "solver": {"T": 1, "tau_max": 0.1, "bogus": 1}, "output_dir": "o"})";
    try {
        parse_run_config(extra, "x.json", dir_);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/solver/bogus"), std::string::npos) << e.what();
    }
}

TEST_F(CliTest, ParsesFullConfig) {
    const RunConfig rc = parse_run_config(short_config("run"), "c.json", dir_);
    EXPECT_EQ(rc.degrees, (std::vector<int>{4, 2}));
    EXPECT_EQ(rc.intervals[1], (std::pair<double, double>{-3, 3}));
    EXPECT_EQ(rc.solver.rho.pieces.size(), 2u);
    EXPECT_EQ(rc.snapshot_stride, 5u);
    EXPECT_EQ(rc.output_dir, dir_ / "run");
    ASSERT_TRUE(rc.sampler.has_value());
    EXPECT_EQ(rc.sampler->n_particles, 20u);
}

TEST_F(CliTest, SolveGaussianReachesStationaryRanks) {
    const fs::path cfg = write("gauss.json", gaussian_config(10, "run"));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_solve(cfg, out, err), 0) << err.str();
    const auto manifest = nlohmann::json::parse(slurp(dir_ / "run" / "manifest.json"));
    EXPECT_EQ(manifest.at("final_time").get<double>(), 12.0);
    EXPECT_EQ(manifest.at("final_ranks").get<std::vector<std::size_t>>(), std::vector<std::size_t>(9, 2));
    EXPECT_EQ(manifest.at("initial_ranks").get<std::vector<std::size_t>>(),
              (std::vector<std::size_t>{3, 4, 5, 6, 7, 6, 5, 4, 3}));
    EXPECT_TRUE(manifest.at("complete").get<bool>());
    EXPECT_EQ(manifest.at("config_sha256").get<std::string>().size(), 64u);
    EXPECT_TRUE(fs::exists(dir_ / "run" / "snapshot_0.ttck"));
    EXPECT_TRUE(fs::exists(dir_ / "run" / "diagnostics.jsonl"));
}

TEST_F(CliTest, SolveRejectsZeroPotential) {
    const fs::path cfg = write("zero.json", R"({"space": {"dims": 2, "intervals": [-1, 1], "degrees": 2},
        "potential": {"terms": []}, "solver": {"T": 1, "tau_max": 0.1}, "output_dir": "z"})");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_solve(cfg, out, err), 1);
    EXPECT_NE(err.str().find("initial condition must be a valid density potential"), std::string::npos) << err.str();
    EXPECT_FALSE(fs::exists(dir_ / "z"));
}

TEST_F(CliTest, SolveIsByteReproducible) {
    const fs::path a = write("a.json", short_config("ra"));
    const fs::path b = write("b.json", short_config("rb"));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_solve(a, out, err), 0) << err.str();
    ASSERT_EQ(cmd_solve(b, out, err), 0) << err.str();
    EXPECT_EQ(slurp(dir_ / "ra" / "diagnostics.jsonl"), slurp(dir_ / "rb" / "diagnostics.jsonl"));
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "ra")) {
        if (e.path().extension() != ".ttck") continue;
        EXPECT_EQ(slurp(e.path()), slurp(dir_ / "rb" / e.path().filename())) << e.path();
        ++compared;
    }
    EXPECT_GE(compared, 2u);
    // a rerun into the same directory replaces rather than appends
    ASSERT_EQ(cmd_solve(a, out, err), 0);
    EXPECT_EQ(slurp(dir_ / "ra" / "diagnostics.jsonl"), slurp(dir_ / "rb" / "diagnostics.jsonl"));

    const auto manifest = nlohmann::json::parse(slurp(dir_ / "ra" / "manifest.json"));
    const auto snaps = manifest.at("snapshots");
    EXPECT_EQ(snaps.back().at("t").get<double>(), 2.0);
    for (const auto& s : snaps) {
        const auto step = s.at("step").get<std::size_t>();
        EXPECT_TRUE(step % 5 == 0 || &s == &snaps.back());
    }
}

TEST_F(CliTest, SampleOutputs) {
    const fs::path cfg = write("s.json", short_config("run"));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_solve(cfg, out, err), 0) << err.str();
    const fs::path manifest = dir_ / "run" / "manifest.json";

    SampleOverrides none;
    none.particles = 0;
    none.out = dir_ / "empty.csv";
    ASSERT_EQ(cmd_sample(manifest, none, out, err), 0) << err.str();
    EXPECT_EQ(slurp(dir_ / "empty.csv"), "x1,x2,flags\n");
    EXPECT_TRUE(fs::exists(dir_ / "empty.json"));

    SampleOverrides flow;
    flow.lambda = 1.0;
    flow.out = dir_ / "f1.csv";
    ASSERT_EQ(cmd_sample(manifest, flow, out, err), 0) << err.str();
    flow.out = dir_ / "f2.csv";
    ASSERT_EQ(cmd_sample(manifest, flow, out, err), 0) << err.str();
    const std::string f1 = slurp(dir_ / "f1.csv");
    EXPECT_EQ(f1, slurp(dir_ / "f2.csv"));
    EXPECT_EQ(std::count(f1.begin(), f1.end(), '\n'), 21);

    ASSERT_EQ(cmd_sample(manifest, SampleOverrides{}, out, err), 0) << err.str();
    EXPECT_TRUE(fs::exists(dir_ / "run" / "samples.csv"));
    const auto meta = nlohmann::json::parse(slurp(dir_ / "run" / "samples.json"));
    EXPECT_EQ(meta.at("seed").get<std::uint64_t>(), 8u);
    EXPECT_EQ(meta.at("grid").size(), nlohmann::json::parse(slurp(manifest)).at("times").size());
}

TEST_F(CliTest, SampleRejectsBadInput) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_sample(dir_ / "missing.json", SampleOverrides{}, out, err), 1);
    const fs::path bogus = write("m.json", R"({"format": "something else"})");
    EXPECT_EQ(cmd_sample(bogus, SampleOverrides{}, out, err), 1);

    const fs::path cfg = write("s.json", short_config("run"));
    ASSERT_EQ(cmd_solve(cfg, out, err), 0);
    SampleOverrides o;
    o.lambda = 2.0;
    EXPECT_EQ(cmd_sample(dir_ / "run" / "manifest.json", o, out, err), 1);
}

TEST_F(CliTest, VerifySuites) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_verify("bogus", out, err), 1);
    EXPECT_NE(err.str().find("usage"), std::string::npos);

    std::ostringstream eig;
    EXPECT_EQ(cmd_verify("eigen", eig, err), 0) << eig.str();
    EXPECT_NE(eig.str().find("a=(2)"), std::string::npos);
    std::ostringstream ops;
    EXPECT_EQ(cmd_verify("operators", ops, err), 0) << ops.str();
    EXPECT_EQ(ops.str().find("FAIL"), std::string::npos);
}

TEST_F(CliTest, Sha256) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
