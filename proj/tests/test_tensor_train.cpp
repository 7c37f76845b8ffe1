#include <cmath>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tthjb/oracles.hpp"
#include "tthjb/tensor_train.hpp"

using namespace tthjb;
using tthjb::testing::dense_dot;
using tthjb::testing::dense_max_abs;
using tthjb::testing::dense_max_diff;
using tthjb::testing::random_dense;

TEST(TensorTrain, FromDenseZeroTensor) {
    const TensorTrain a = tt_from_dense(DenseTensor({2, 2, 2}), 0.0);
    EXPECT_EQ(a.ranks(), (std::vector<std::size_t>{1, 1, 1, 1}));
    for (const auto& c : a.cores())
        for (double e : c.data) EXPECT_EQ(e, 0.0);
}

TEST(TensorTrain, FromDenseOuterProductHasRankOne) {
    const std::vector<double> u{1, 2, 3}, v{-1, 0.5}, w{2, 0, 1, 4};
    DenseTensor t({3, 2, 4});
    tthjb::testing::for_each_index(t.mode_sizes, [&](const std::vector<std::size_t>& i) { t.at(i) = u[i[0]] * v[i[1]] * w[i[2]]; });
    const TensorTrain a = tt_from_dense(t, 1e-12);
    EXPECT_EQ(a.ranks(), (std::vector<std::size_t>{1, 1, 1, 1}));
    EXPECT_LE(dense_max_diff(tt_to_dense(a), t), 1e-12 * dense_max_abs(t));
}

TEST(TensorTrain, DenseRoundTrip) {
    const DenseTensor t = random_dense({3, 3, 3, 3}, 1);
    const DenseTensor back = tt_to_dense(tt_from_dense(t, 0.0));
    EXPECT_LE(dense_max_diff(back, t), 1e-12 * dense_max_abs(t));
}

TEST(TensorTrain, DenseSizeGuard) {
    EXPECT_THROW(tt_to_dense(TensorTrain::zeros({1000, 1000, 1000})), ShapeError);
}

TEST(TensorTrain, RankOneVectorsGiveOuterProduct) {
    const TensorTrain a = TensorTrain::rank_one({{1.0, 2.0}, {3.0, -1.0, 0.5}});
    const DenseTensor d = tt_to_dense(a);
    EXPECT_DOUBLE_EQ(d.at(std::vector<std::size_t>{1, 2}), 1.0);
    EXPECT_DOUBLE_EQ(d.at(std::vector<std::size_t>{0, 1}), -1.0);
}

TEST(TensorTrain, AddScaled) {
    const TensorTrain a = random_tensor_train({3, 4, 2}, {2, 2}, 1);
    const TensorTrain b = random_tensor_train({3, 4, 2}, {3, 1}, 2);
    const TensorTrain c = tt_add_scaled(a, b, 2.5);
    EXPECT_EQ(c.ranks(), (std::vector<std::size_t>{1, 5, 3, 1}));
    const DenseTensor da = tt_to_dense(a), db = tt_to_dense(b), dc = tt_to_dense(c);
    for (std::size_t k = 0; k < dc.size(); ++k)
        EXPECT_NEAR(dc.entries[k], da.entries[k] + 2.5 * db.entries[k], 1e-12 * (1 + std::abs(dc.entries[k])));

    EXPECT_LE(dense_max_diff(tt_to_dense(tt_add_scaled(a, b, 0.0)), da), 1e-15);
    EXPECT_LE(tt_norm(tt_add_scaled(a, a, -1.0)), 1e-12 * tt_norm(a));
    EXPECT_THROW(tt_add_scaled(a, random_tensor_train({3, 4, 3}, {2, 2}, 3), 1.0), ShapeError);
}

TEST(TensorTrain, AddRankOneIsSumOfOuterProducts) {
    const TensorTrain a = TensorTrain::rank_one({{1.0, 0.0}, {0.0, 2.0}});
    const TensorTrain b = TensorTrain::rank_one({{0.0, 1.0}, {3.0, 0.0}});
    const DenseTensor d = tt_to_dense(tt_add_scaled(a, b, 1.0));
    EXPECT_DOUBLE_EQ(d.entries[0], 0.0);
    EXPECT_DOUBLE_EQ(d.entries[1], 2.0);
    EXPECT_DOUBLE_EQ(d.entries[2], 3.0);
    EXPECT_DOUBLE_EQ(d.entries[3], 0.0);
}

TEST(TensorTrain, InnerAndNorm) {
    const TensorTrain e = TensorTrain::rank_one({{0.0, 1.0}, {1.0, 0.0, 0.0}});
    EXPECT_DOUBLE_EQ(tt_inner(e, e), 1.0);
    EXPECT_EQ(tt_inner(e, TensorTrain::zeros({2, 3})), 0.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TensorTrain a = random_tensor_train({3, 2, 4}, {2, 3}, seed);
        const TensorTrain b = random_tensor_train({3, 2, 4}, {3, 2}, seed + 50);
        const double ref = dense_dot(tt_to_dense(a), tt_to_dense(b));
        EXPECT_NEAR(tt_inner(a, b), ref, 1e-12 * std::abs(ref) + 1e-13);
        const double nn = dense_dot(tt_to_dense(a), tt_to_dense(a));
        EXPECT_NEAR(tt_norm(a) * tt_norm(a), nn, 1e-12 * nn);
        EXPECT_GE(tt_inner(a, a), 0.0);
    }
}

TEST(TensorTrain, RoundRemovesHiddenRankDeficiency) {
    const TensorTrain a = TensorTrain::rank_one({{1.0, 2.0, 3.0}, {1.0, -1.0}});
    const TensorTrain doubled = tt_add_scaled(a, a, 1.0);
    ASSERT_EQ(doubled.interior_ranks(), (std::vector<std::size_t>{2}));
    const TensorTrain r = tt_round(doubled, RoundSpec::tolerance(1e-12));
    EXPECT_EQ(r.interior_ranks(), (std::vector<std::size_t>{1}));
    EXPECT_LE(dense_max_diff(tt_to_dense(r), tt_to_dense(doubled)), 1e-12 * dense_max_abs(tt_to_dense(doubled)));
}

TEST(TensorTrain, RoundMatrixCaseIsBestLowRank) {
    const DenseTensor t = random_dense({6, 5}, 9);
    Eigen::Map<const Eigen::Matrix<double, 6, 5, Eigen::RowMajor>> m(t.entries.data());
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    for (std::size_t k = 1; k <= 4; ++k) {
        const TensorTrain r = tt_round(tt_from_dense(t, 0.0), RoundSpec::ranks({k}));
        EXPECT_EQ(r.interior_ranks()[0], k);
        const DenseTensor dr = tt_to_dense(r);
        double err2 = 0.0;
        for (std::size_t q = 0; q < t.size(); ++q) err2 += std::pow(dr.entries[q] - t.entries[q], 2);
        const double opt = svd.singularValues().tail(Eigen::Index(5 - k)).norm();
        EXPECT_NEAR(std::sqrt(err2), opt, 1e-12 * svd.singularValues()(0));
    }
}

TEST(TensorTrain, RoundToleranceZeroIsIdentity) {
    const TensorTrain a = random_tensor_train({3, 3, 3, 3}, {2, 3, 2}, 4);
    const DenseTensor da = tt_to_dense(a);
    EXPECT_LE(dense_max_diff(tt_to_dense(tt_round(a, RoundSpec::tolerance(0.0))), da), 1e-12 * dense_max_abs(da));
}

TEST(TensorTrain, RoundErrorBoundAndMonotoneRanks) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const TensorTrain a = random_tensor_train({4, 3, 4, 3}, {3, 4, 3}, seed);
        const double eps = 0.3;
        const TensorTrain r = tt_round(a, RoundSpec::tolerance(eps));
        const DenseTensor da = tt_to_dense(a), dr = tt_to_dense(r);
        double diff = 0.0;
        for (std::size_t k = 0; k < da.size(); ++k) diff += std::pow(da.entries[k] - dr.entries[k], 2);
        EXPECT_LE(std::sqrt(diff), eps * std::sqrt(dense_dot(da, da)) * (1 + 1e-10));
        for (std::size_t i = 0; i < 5; ++i) EXPECT_LE(r.ranks()[i], a.ranks()[i]);
    }
}

TEST(TensorTrain, RoundZeroTensorUnchanged) {
    const TensorTrain z = TensorTrain::zeros({3, 3});
    const TensorTrain r = tt_round(z, RoundSpec::tolerance(1e-8));
    EXPECT_EQ(r.ranks(), z.ranks());
    EXPECT_EQ(tt_norm(r), 0.0);
}

TEST(TensorTrain, ContractModeVectors) {
    const TensorTrain a = random_tensor_train({3, 4, 2}, {2, 3}, 7);
    const DenseTensor da = tt_to_dense(a);
    std::vector<std::vector<double>> e{{0, 0, 1}, {0, 1, 0, 0}, {1, 0}};
    EXPECT_NEAR(tt_contract_mode_vectors(a, e), da.at(std::vector<std::size_t>{2, 1, 0}), 1e-14);
    std::vector<std::vector<double>> z{{0, 0, 0}, {0, 0, 0, 0}, {0, 0}};
    EXPECT_EQ(tt_contract_mode_vectors(a, z), 0.0);

    std::vector<std::vector<double>> vs{{0.3, -1.0, 2.0}, {1.0, 0.5, -0.2, 0.7}, {-1.5, 0.25}};
    double ref = 0.0;
    tthjb::testing::for_each_index(da.mode_sizes, [&](const std::vector<std::size_t>& i) {
        ref += da.at(i) * vs[0][i[0]] * vs[1][i[1]] * vs[2][i[2]];
    });
    EXPECT_NEAR(tt_contract_mode_vectors(a, vs), ref, 1e-12 * std::abs(ref));
    vs[1].pop_back();
    EXPECT_THROW(tt_contract_mode_vectors(a, vs), ShapeError);
}

TEST(TensorTrain, ApplyModeMatrix) {
    const TensorTrain a = random_tensor_train({3, 4, 2}, {2, 3}, 8);
    const DenseTensor da = tt_to_dense(a);
    EXPECT_LE(dense_max_diff(tt_to_dense(tt_apply_mode_matrix(a, 1, Eigen::MatrixXd::Identity(4, 4))), da), 1e-15);
    EXPECT_EQ(tt_norm(tt_apply_mode_matrix(a, 0, Eigen::MatrixXd::Zero(3, 3))), 0.0);

    const Eigen::MatrixXd m = Eigen::MatrixXd::Random(6, 4);
    const TensorTrain b = tt_apply_mode_matrix(a, 1, m);
    EXPECT_EQ(b.ranks(), a.ranks());
    EXPECT_EQ(b.mode_sizes(), (std::vector<std::size_t>{3, 6, 2}));
    const DenseTensor db = tt_to_dense(b);
    tthjb::testing::for_each_index(db.mode_sizes, [&](const std::vector<std::size_t>& i) {
        double ref = 0.0;
        for (std::size_t k = 0; k < 4; ++k) ref += m(Eigen::Index(i[1]), Eigen::Index(k)) * da.at(std::vector<std::size_t>{i[0], k, i[2]});
        EXPECT_NEAR(db.at(i), ref, 1e-12 * (1 + std::abs(ref)));
    });
    EXPECT_THROW(tt_apply_mode_matrix(a, 1, Eigen::MatrixXd::Zero(4, 3)), ShapeError);
}

TEST(TensorTrain, LaplaceLikeApply) {
    const TensorTrain a = random_tensor_train({3, 4, 2}, {2, 3}, 10);
    std::vector<Eigen::MatrixXd> ms{Eigen::MatrixXd::Random(3, 3), Eigen::MatrixXd::Random(4, 4),
                                    Eigen::MatrixXd::Random(2, 2)};
    const TensorTrain s = tt_laplace_like_apply(a, ms);
    EXPECT_EQ(s.interior_ranks(), (std::vector<std::size_t>{4, 6}));
    DenseTensor ref(a.mode_sizes());
    for (std::size_t i = 0; i < 3; ++i) {
        const DenseTensor term = dense_mode_product(tt_to_dense(a), i, ms[i]);
        for (std::size_t k = 0; k < ref.size(); ++k) ref.entries[k] += term.entries[k];
    }
    EXPECT_LE(dense_max_diff(tt_to_dense(s), ref), 1e-12 * dense_max_abs(ref));

    std::vector<Eigen::MatrixXd> zeros{Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Zero(2, 2)};
    EXPECT_EQ(tt_norm(tt_laplace_like_apply(a, zeros)), 0.0);

    const TensorTrain one = random_tensor_train({5}, {}, 11);
    const std::vector<Eigen::MatrixXd> m1{Eigen::MatrixXd::Random(5, 5)};
    EXPECT_LE(dense_max_diff(tt_to_dense(tt_laplace_like_apply(one, m1)), tt_to_dense(tt_apply_mode_matrix(one, 0, m1[0]))),
              1e-14);
}

TEST(TensorTrain, OrthogonalizationMarksCores) {
    TensorTrain a = random_tensor_train({3, 4, 3, 2}, {3, 4, 2}, 12);
    const DenseTensor before = tt_to_dense(a);
    right_orthogonalize(a, 0);
    for (std::size_t i = 1; i < 4; ++i) {
        const auto r = a.core(i).right_unfolding();
        EXPECT_LE((r * r.transpose() - Eigen::MatrixXd::Identity(r.rows(), r.rows())).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_LE(dense_max_diff(tt_to_dense(a), before), 1e-12 * dense_max_abs(before));
    left_orthogonalize(a, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto l = a.core(i).left_unfolding();
        EXPECT_LE((l.transpose() * l - Eigen::MatrixXd::Identity(l.cols(), l.cols())).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_LE(dense_max_diff(tt_to_dense(a), before), 1e-12 * dense_max_abs(before));
}

TEST(TensorTrain, ValidateRejectsBrokenChains) {
    std::vector<Core> cores{Core(1, 2, 2), Core(3, 2, 1)};
    EXPECT_THROW(TensorTrain{cores}, ShapeError);
}
