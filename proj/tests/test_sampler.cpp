#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tthjb/oracles.hpp"
#include "tthjb/potential.hpp"
#include "tthjb/sampler.hpp"

using namespace tthjb;

namespace {

PolySpace cube(std::size_t d, int deg, double half = 5.0) {
    return PolySpace(std::vector<std::pair<double, double>>(d, {-half, half}), std::vector<int>(d, deg));
}

TensorTrain half_square(const PolySpace& s) {
    SparsePoly p;
    for (std::size_t i = 0; i < s.dims(); ++i) {
        std::vector<int> e(s.dims(), 0);
        e[i] = 2;
        p[e] = 0.5;
    }
    return build_poly_tt(p, s, 0.0);
}

std::vector<double> uniform_grid(double T, std::size_t N) {
    std::vector<double> g(N + 1);
    for (std::size_t k = 0; k <= N; ++k) g[k] = T * double(k) / double(N);
    return g;
}

} // namespace

TEST(Sampler, EvalV) {
    const PolySpace s = cube(3, 2);
    const SolutionSnapshot snap{0.0, half_square(s)};
    EXPECT_NEAR(eval_v(snap, s, std::vector<double>{1, 1, 1}), 1.5, 1e-13);
    EXPECT_NEAR(eval_v(snap, s, std::vector<double>{0, 0, 0}), 0.0, 1e-13);

    const PolySpace r({{-1, 2}, {-3, 3}, {0.5, 2.5}}, {3, 2, 4});
    const TensorTrain a = random_tensor_train({4, 3, 5}, {2, 3}, 1);
    std::mt19937_64 gen(2);
    for (int k = 0; k < 20; ++k) {
        const auto x = tthjb::testing::random_point(r, gen);
        const double ref = tthjb::testing::tt_eval(a, r, x);
        EXPECT_NEAR(eval_v({0.0, a}, r, x), ref, 1e-10 * (1 + std::abs(ref)));
        EXPECT_NEAR(GradientEvaluator(a, r).value(x), ref, 1e-10 * (1 + std::abs(ref)));
    }
}

TEST(Sampler, GradV) {
    const PolySpace s = cube(3, 2);
    const std::vector<double> x{0.3, -1.2, 2.0};
    const auto g = grad_v({0.0, half_square(s)}, s, x);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g[i], x[i], 1e-13);

    PotentialSpec spec;
    spec.builtins.push_back({"doublewell", {0, 1}, {}, {}, {}});
    const PolySpace w({{-2, 2}, {-2, 2}}, {4, 4});
    const auto gw = grad_v({0.0, build_potential_tt(spec, w, 0.0)}, w, std::vector<double>{1, 1});
    EXPECT_NEAR(gw[0], -4.4, 1e-12);
    EXPECT_NEAR(gw[1], -3.9, 1e-12);
}

TEST(Sampler, GradVFiniteDifferences) {
    const PolySpace s({{-1, 2}, {-3, 3}, {0.5, 2.5}, {-2, 2}}, {3, 2, 4, 3});
    std::mt19937_64 gen(3);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const SolutionSnapshot snap{0.0, random_tensor_train({4, 3, 5, 4}, {2, 3, 2}, seed)};
        for (int k = 0; k < 20; ++k) {
            auto x = tthjb::testing::random_point(s, gen);
            const auto g = grad_v(snap, s, x);
            for (std::size_t i = 0; i < 4; ++i) {
                const double h = 1e-6, xi = x[i];
                x[i] = xi + h;
                const double fp = eval_v(snap, s, x);
                x[i] = xi - h;
                const double fm = eval_v(snap, s, x);
                x[i] = xi;
                const double fd = (fp - fm) / (2 * h);
                EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST(Sampler, OutOfDomainCount) {
    const PolySpace s = cube(2, 2, 1.0);
    const GradientEvaluator ev(half_square(s), s);
    std::vector<double> g(2);
    EXPECT_EQ(ev.gradient(std::vector<double>{0.5, 0.5}, g), 0u);
    EXPECT_EQ(ev.gradient(std::vector<double>{1.5, -2.0}, g), 2u);
}

TEST(Sampler, CovarianceError) {
    const PolySpace s = cube(2, 2);
    EXPECT_LE(covariance_error({0.0, half_square(s)}, s), 1e-14);
}

TEST(Sampler, RngIsDeterministicAndStandard) {
    ParticleRng a(42, 7), b(42, 7), c(42, 8);
    double first_c = c.normal();
    double sum = 0, sum2 = 0;
    bool differs = false;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double x = a.normal();
        EXPECT_EQ(x, b.normal());
        if (k == 0) differs = x != first_c;
        sum += x;
        sum2 += x * x;
    }
    EXPECT_TRUE(differs);
    EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(double(n)));
    EXPECT_NEAR(sum2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
    for (int k = 0; k < 1000; ++k) {
        const double u = a.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Sampler, ConfigValidation) {
    SamplerConfig c;
    c.lambda = 1.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = SamplerConfig{};
    c.langevin_steps = 5;
    c.langevin_tau = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Sampler, ZeroParticles) {
    Eigen::MatrixXd Q0 = Eigen::MatrixXd::Identity(2, 2);
    const RiccatiScoreModel m(Q0, uniform_grid(1.0, 10));
    SamplerConfig c;
    c.n_particles = 0;
    const SampleBatch b = reverse_sample(m, c);
    EXPECT_EQ(b.z.rows(), 0);
    EXPECT_EQ(b.d, 2u);
}

TEST(Sampler, ThreadCountDoesNotChangeSamples) {
    Eigen::MatrixXd Q0(2, 2);
    Q0 << 1.0, 0.3, 0.3, 0.8;
    const RiccatiScoreModel m(Q0, uniform_grid(3.0, 60));
    SamplerConfig c;
    c.n_particles = 101;
    c.langevin_steps = 2;
    c.seed = 9;
    const SampleBatch one = reverse_sample(m, c);
    c.threads = 4;
    const SampleBatch four = reverse_sample(m, c);
    EXPECT_TRUE(one.z == four.z);
    EXPECT_EQ(one.flags, four.flags);
}

TEST(Sampler, FlowIsDeterministicGivenSeed) {
    Eigen::MatrixXd Q0(1, 1);
    Q0(0, 0) = 2.0;
    const RiccatiScoreModel m(Q0, uniform_grid(4.0, 200));
    SamplerConfig c;
    c.lambda = 1.0;
    c.n_particles = 50;
    c.seed = 3;
    EXPECT_TRUE(reverse_sample(m, c).z == reverse_sample(m, c).z);
    c.seed = 4;
    SamplerConfig c3 = c;
    c3.seed = 3;
    EXPECT_FALSE(reverse_sample(m, c).z == reverse_sample(m, c3).z);
}

TEST(Sampler, StandardNormalIsStationary) {
    // v = x^2/2 at every time: the reverse process keeps N(0, 1) for both lambda values
    Eigen::MatrixXd Q0(1, 1);
    Q0(0, 0) = 0.5;
    const RiccatiScoreModel m(Q0, uniform_grid(2.0, 100));
    for (double lam : {0.0, 1.0}) {
        SamplerConfig c;
        c.lambda = lam;
        c.n_particles = 20000;
        c.seed = 17;
        const SampleBatch b = reverse_sample(m, c);
        const double var = (b.z.col(0).array() - b.z.col(0).mean()).square().mean();
        EXPECT_NEAR(var, 1.0, 4 * std::sqrt(2.0 / 20000)) << lam;
    }
}

TEST(Sampler, LangevinTargetsSnapshot) {
    // with a one-step grid, many Langevin steps relax to the density exp(-v_{t_1})
    Eigen::MatrixXd Q0(1, 1);
    Q0(0, 0) = 2.0;
    const std::vector<double> grid{0.0, 1e-6};
    const RiccatiScoreModel m(Q0, grid);
    SamplerConfig c;
    c.n_particles = 4000;
    c.langevin_steps = 400;
    c.langevin_tau = 0.01;
    c.seed = 2;
    const SampleBatch b = reverse_sample(m, c);
    const double var = (b.z.col(0).array() - b.z.col(0).mean()).square().mean();
    EXPECT_NEAR(var, 0.25, 0.03);
}

TEST(Sampler, NonFiniteParticlesAreFlagged) {
    struct Exploding : ScoreModel {
        std::vector<double> g{0.0, 0.5, 1.0};
        std::size_t dims() const override { return 1; }
        const std::vector<double>& grid() const override { return g; }
        std::size_t grad_v(std::size_t, std::span<const double> x, std::span<double> out) const override {
            out[0] = x[0] > cut ? -std::numeric_limits<double>::infinity() : x[0];
            return 0;
        }
        double cut = 0.0;
    } model;
    SamplerConfig c;
    c.n_particles = 400;
    c.lambda = 1.0;
    // half of the particles start positive and blow up
    EXPECT_THROW(reverse_sample(model, c), std::runtime_error);

    model.cut = 2.0;
    const SampleBatch b = reverse_sample(model, c);
    std::size_t flagged = 0;
    for (std::size_t p = 0; p < c.n_particles; ++p) {
        if (b.flags[p] == -1) {
            ++flagged;
            EXPECT_TRUE(std::isfinite(b.z(Eigen::Index(p), 0)));
        }
    }
    EXPECT_GT(flagged, 0u);
    EXPECT_LT(flagged, 40u);
}

TEST(Sampler, TrajectoryScoreMatchesSnapshots) {
    const PolySpace s = cube(2, 2);
    Trajectory traj;
    traj.snapshots.push_back({0.0, half_square(s)});
    traj.snapshots.push_back({1.0, tt_scale(half_square(s), 2.0)});
    SolverConfig cfg;
    cfg.T = 1.0;
    const TrajectoryScore ts(traj, s, cfg);
    std::vector<double> g(2);
    ts.grad_v(1, std::vector<double>{1.0, -2.0}, g);
    EXPECT_NEAR(g[0], 2.0, 1e-13);
    EXPECT_NEAR(g[1], -4.0, 1e-13);
    EXPECT_THROW(TrajectoryScore(traj, s, cfg, {0.0, 0.5, 0.4}), std::invalid_argument);
}
