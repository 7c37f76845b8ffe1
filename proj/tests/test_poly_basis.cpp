#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tthjb/poly_basis.hpp"

using namespace tthjb;

namespace {

double monomial_eval(const std::vector<double>& coefs, double x) {
    double s = 0.0;
    for (std::size_t k = coefs.size(); k-- > 0;) s = s * x + coefs[k];
    return s;
}

double legendre_eval(const LegendreBasis& b, const Eigen::VectorXd& c, double x) {
    const auto p = evaluate_basis(b, x);
    double s = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) s += c(Eigen::Index(a)) * p[a];
    return s;
}

} // namespace

TEST(PolyBasis, ConstantNormalization) {
    const LegendreBasis b = build_basis(-1, 1, 0);
    EXPECT_NEAR(b.T(0, 0), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(evaluate_basis(build_basis(0.5, 2.5, 4), 1.3)[0], 1 / std::sqrt(2.0), 1e-15);
}

TEST(PolyBasis, QuadraticColumn) {
    const LegendreBasis b = build_basis(-1, 1, 2);
    const double k = std::sqrt(2.5);
    EXPECT_NEAR(b.T(0, 2), -k / 2, 1e-14);
    EXPECT_EQ(b.T(1, 2), 0.0);
    EXPECT_NEAR(b.T(2, 2), 1.5 * k, 1e-14);
}

TEST(PolyBasis, TransformIsInvertibleUpToDegree12) {
    for (int n = 0; n <= kMaxDegree; ++n) {
        const LegendreBasis b = build_basis(-1, 1, n);
        EXPECT_LE((b.T * b.T_inv - Eigen::MatrixXd::Identity(n + 1, n + 1)).cwiseAbs().maxCoeff(), 1e-10) << n;
    }
}

TEST(PolyBasis, ParityZeroPatternOnSymmetricInterval) {
    const LegendreBasis b = build_basis(-3, 3, 9);
    for (int r = 0; r <= 9; ++r)
        for (int c = 0; c <= 9; ++c)
            if (r > c || (r + c) % 2 == 1) {
                EXPECT_EQ(b.T(r, c), 0.0);
                EXPECT_EQ(b.T_inv(r, c), 0.0);
            }
}

TEST(PolyBasis, Orthonormality) {
    for (auto [a, bb] : {std::pair{-1.0, 1.0}, std::pair{0.0, 2.0}, std::pair{-5.0, 5.0}}) {
        const LegendreBasis b = build_basis(a, bb, 8);
        const auto [nodes, weights] = gauss_legendre(9);
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(9, 9);
        for (std::size_t q = 0; q < nodes.size(); ++q) {
            const double x = 0.5 * (bb - a) * nodes[q] + 0.5 * (a + bb);
            const auto p = evaluate_basis(b, x);
            for (int i = 0; i < 9; ++i)
                for (int j = 0; j < 9; ++j) G(i, j) += 0.5 * (bb - a) * weights[q] * p[std::size_t(i)] * p[std::size_t(j)];
        }
        EXPECT_LE((G - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(PolyBasis, MonomialPathMatchesRecurrence) {
    const LegendreBasis b = build_basis(0, 2, 3);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0, 2);
    const Eigen::VectorXd c = Eigen::VectorXd::Random(4);
    const auto mono = b.to_monomials(std::vector<double>(c.data(), c.data() + 4));
    for (int k = 0; k < 20; ++k) {
        const double x = u(gen);
        EXPECT_NEAR(monomial_eval(mono, x), legendre_eval(b, c, x), 1e-10);
    }
}

TEST(PolyBasis, EvaluateBasisParity) {
    const LegendreBasis b = build_basis(-1, 1, 5);
    const auto p = evaluate_basis(b, 0.0);
    EXPECT_EQ(p[1], 0.0);
    EXPECT_EQ(p[3], 0.0);
}

TEST(PolyBasis, DerivativeValues) {
    const LegendreBasis b = build_basis(-1, 1, 6);
    for (double x : {-0.7, 0.0, 0.4}) {
        const auto dp = evaluate_basis_derivative(b, x);
        EXPECT_EQ(dp[0], 0.0);
        EXPECT_NEAR(dp[1], std::sqrt(1.5), 1e-14);
    }
    const LegendreBasis w = build_basis(-2, 3, 7);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-2, 3);
    for (int k = 0; k < 20; ++k) {
        const double x = u(gen), h = 1e-7;
        const auto dp = evaluate_basis_derivative(w, x);
        const auto hi = evaluate_basis(w, x + h), lo = evaluate_basis(w, x - h);
        for (std::size_t a = 0; a < dp.size(); ++a) EXPECT_NEAR(dp[a], (hi[a] - lo[a]) / (2 * h), 1e-6);
        std::vector<double> v(8), d(8);
        evaluate_basis_both(w, x, v, d);
        for (std::size_t a = 0; a < 8; ++a) {
            EXPECT_EQ(d[a], dp[a]);
            EXPECT_EQ(v[a], evaluate_basis(w, x)[a]);
        }
    }
}

TEST(PolyBasis, GeneratorAnnihilatesConstants) {
    const LegendreBasis b = build_basis(-5, 5, 6);
    EXPECT_LE(ou_generator_matrix(b).col(0).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(derivative_matrix(b).col(0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PolyBasis, GeneratorOnSquare) {
    const LegendreBasis b = build_basis(-1, 1, 2);
    const std::vector<double> sq{0, 0, 1}, image{2, 0, 2};
    const auto c = b.from_monomials(sq);
    const Eigen::VectorXd Dc = b.D * Eigen::Map<const Eigen::VectorXd>(c.data(), 3);
    const auto expected = b.from_monomials(image);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(Dc(k), expected[std::size_t(k)], 1e-14);
}

TEST(PolyBasis, GeneratorPointwise) {
    const LegendreBasis b = build_basis(-1.5, 2.5, 5);
    const Eigen::VectorXd c = Eigen::VectorXd::Random(6);
    const Eigen::VectorXd Dc = ou_generator_matrix(b) * c;
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-1.5, 2.5);
    for (int k = 0; k < 50; ++k) {
        const double x = u(gen), h = 1e-4;
        const double f0 = legendre_eval(b, c, x), fp = legendre_eval(b, c, x + h), fm = legendre_eval(b, c, x - h);
        const double fd = (fp - 2 * f0 + fm) / (h * h) + x * (fp - fm) / (2 * h);
        EXPECT_NEAR(legendre_eval(b, Dc, x), fd, 1e-5 * (1 + std::abs(fd)));
    }
}

TEST(PolyBasis, DerivativeMatrix) {
    const LegendreBasis b = build_basis(-1, 1, 3);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
    e1(1) = 1 / std::sqrt(1.5);
    const Eigen::VectorXd d = b.Dx * e1;
    const auto one = b.from_monomials(std::vector<double>{1.0});
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(d(k), k == 0 ? one[0] : 0.0, 1e-14);

    const LegendreBasis w = build_basis(0.5, 2.5, 7);
    const Eigen::VectorXd c = Eigen::VectorXd::Random(8);
    const Eigen::VectorXd dc = derivative_matrix(w) * c;
    for (double x : {0.6, 1.1, 1.9, 2.4}) {
        const double h = 1e-6;
        EXPECT_NEAR(legendre_eval(w, dc, x), (legendre_eval(w, c, x + h) - legendre_eval(w, c, x - h)) / (2 * h), 1e-6 * (1 + std::abs(legendre_eval(w, dc, x))));
    }
}

TEST(PolyBasis, GeneratorFactorsOnLowDegrees) {
    // D = Dx^2 + X Dx on inputs of degree <= n - 2, where multiplication by x does not truncate.
    const int n = 6;
    const LegendreBasis b = build_basis(-2, 3, n);
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int col = 0; col < n; ++col) {
        std::vector<double> e(std::size_t(n + 1), 0.0);
        e[std::size_t(col)] = 1.0;
        auto mono = b.to_monomials(e);
        mono.insert(mono.begin(), 0.0);
        mono.pop_back();
        const auto back = b.from_monomials(mono);
        for (int r = 0; r <= n; ++r) X(r, col) = back[std::size_t(r)];
    }
    const Eigen::MatrixXd rhs = b.Dx * b.Dx + X * b.Dx;
    EXPECT_LE((b.D.leftCols(n - 1) - rhs.leftCols(n - 1)).cwiseAbs().maxCoeff(), 1e-9 * b.D.cwiseAbs().maxCoeff());
}

TEST(PolyBasis, Reproducible) {
    const LegendreBasis a = build_basis(-5, 5, 6), b = build_basis(-5, 5, 6);
    EXPECT_TRUE(a.T == b.T);
    EXPECT_TRUE(a.D == b.D);
    EXPECT_TRUE(a.Dx == b.Dx);
}

TEST(PolyBasis, Errors) {
    EXPECT_THROW(build_basis(-1, 1, 13), std::domain_error);
    EXPECT_THROW(build_basis(-1, 1, -1), std::domain_error);
    EXPECT_THROW(build_basis(1, 1, 2), std::invalid_argument);
}

TEST(PolyBasis, PolySpaceCache) {
    const PolySpace s({{-1, 1}, {0, 4}}, {3, 5});
    EXPECT_EQ(s.mode_sizes(), (std::vector<std::size_t>{4, 6}));
    EXPECT_EQ(&s.basis(1), &s.basis(1, 5));
    EXPECT_EQ(s.basis(1, 2).n, 2);
    EXPECT_TRUE(s.contains(std::vector<double>{0.0, 4.0}));
    EXPECT_FALSE(s.contains(std::vector<double>{0.0, 4.1}));
}
