#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "tthjb/checkpoint.hpp"
#include "tthjb/diagnostics.hpp"
#include "tthjb/oracles.hpp"

using namespace tthjb;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("tthjb_" + name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST(Checkpoint, BitwiseRoundTrip) {
    TensorTrain a = random_tensor_train({3, 5, 2, 4}, {2, 4, 3}, 1);
    a.core(1).data[3] = -0.0;
    a.core(2).data[0] = std::numeric_limits<double>::denorm_min();
    std::stringstream ss;
    write_checkpoint(ss, a, 0.123456789);
    const Checkpoint c = read_checkpoint(ss);
    EXPECT_EQ(c.t, 0.123456789);
    ASSERT_EQ(c.coeffs.ranks(), a.ranks());
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& x = a.core(i).data;
        const auto& y = c.coeffs.core(i).data;
        ASSERT_EQ(x.size(), y.size());
        EXPECT_EQ(std::memcmp(x.data(), y.data(), x.size() * sizeof(double)), 0);
    }
    std::stringstream again;
    write_checkpoint(again, c.coeffs, c.t);
    std::stringstream first;
    write_checkpoint(first, a, 0.123456789);
    EXPECT_EQ(first.str(), again.str());
}

TEST(Checkpoint, Layout) {
    const TensorTrain a = TensorTrain::rank_one({{1.0, 2.0}, {3.0}});
    std::stringstream ss;
    write_checkpoint(ss, a, 2.5);
    const std::string b = ss.str();
    // magic, version, d, 2 mode sizes, 3 ranks, 2 + 1 core entries, time
    ASSERT_EQ(b.size(), 4u + 4 + 4 + 8 + 12 + 24 + 8);
    EXPECT_EQ(b.substr(0, 4), "TTCK");
    const auto u32 = [&](std::size_t off) {
        return std::uint32_t(std::uint8_t(b[off])) | std::uint32_t(std::uint8_t(b[off + 1])) << 8 |
               std::uint32_t(std::uint8_t(b[off + 2])) << 16 | std::uint32_t(std::uint8_t(b[off + 3])) << 24;
    };
    EXPECT_EQ(u32(4), kCheckpointVersion);
    EXPECT_EQ(u32(8), 2u);
    EXPECT_EQ(u32(12), 2u);
    EXPECT_EQ(u32(16), 1u);
    double t;
    std::memcpy(&t, b.data() + b.size() - 8, 8);
    EXPECT_EQ(t, 2.5);
}

TEST(Checkpoint, RejectsCorruptInput) {
    std::stringstream bad("TTCX0000");
    EXPECT_THROW(read_checkpoint(bad), std::runtime_error);
    std::stringstream ss;
    write_checkpoint(ss, TensorTrain::rank_one({{1.0, 2.0}, {3.0}}), 1.0);
    std::string cut = ss.str();
    cut.resize(cut.size() - 5);
    std::stringstream truncated(cut);
    EXPECT_THROW(read_checkpoint(truncated), std::runtime_error);
}

TEST(Checkpoint, FileRoundTrip) {
    const auto dir = temp_dir("ckpt");
    const TensorTrain a = random_tensor_train({4, 4}, {3}, 2);
    write_checkpoint(dir / "a.ttck", a, 7.0);
    const Checkpoint c = read_checkpoint(dir / "a.ttck");
    EXPECT_EQ(c.coeffs.core(0).data, a.core(0).data);
    EXPECT_EQ(c.t, 7.0);
    std::filesystem::remove_all(dir);
}

TEST(Diagnostics, JsonRoundTrip) {
    StepRecord r;
    r.step = 3;
    r.t = 0.25;
    r.tau = 0.05;
    r.tau_lambda = std::numeric_limits<double>::infinity();
    r.tau_proj = 0.1;
    r.tau_rank = 0.07;
    r.lambda_bar = 0.0;
    r.ranks = {1, 2, 2, 1};
    r.degrees = {2, 4, 2};
    r.cov_err = 1.5e-3;
    const std::string line = to_jsonl_line(r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_NE(line.find("\"tau_lambda\":null"), std::string::npos);
    EXPECT_LT(line.find("\"step\""), line.find("\"cov_err\""));
    const StepRecord back = step_record_from_json(nlohmann::ordered_json::parse(line));
    EXPECT_EQ(back.step, 3u);
    EXPECT_EQ(back.tau_lambda, std::numeric_limits<double>::infinity());
    EXPECT_EQ(back.ranks, r.ranks);
    EXPECT_EQ(back.degrees, r.degrees);
    EXPECT_EQ(back.cov_err, r.cov_err);
}

TEST(Diagnostics, WriterAndReader) {
    const auto dir = temp_dir("diag");
    {
        DiagnosticsWriter w(dir / "d.jsonl");
        for (std::size_t k = 1; k <= 3; ++k) {
            StepRecord r;
            r.step = k;
            r.t = 0.1 * double(k);
            r.ranks = {1, 1};
            r.degrees = {2};
            w.write(r);
        }
    }
    const auto recs = read_diagnostics(dir / "d.jsonl");
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[2].step, 3u);
    EXPECT_DOUBLE_EQ(recs[1].t, 0.2);
    std::filesystem::remove_all(dir);
}
