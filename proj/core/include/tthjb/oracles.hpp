#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tthjb/poly_basis.hpp"
#include "tthjb/potential.hpp"
#include "tthjb/sampler.hpp"
#include "tthjb/tensor_train.hpp"

namespace tthjb {

/// Exact quadratic coefficient Q_t of v_t for Phi = x^T Q0 x under the OU flow:
/// C_t = e^{-2t} C_0 + (1 - e^{-2t}) I with C = (2Q)^{-1}. Throws for non-SPD Q0.
Eigen::MatrixXd riccati_reference(const Eigen::MatrixXd& Q0, double t);

/// 2 sum_i |1 - 2 a_ii| for g = 1/2 x^T A x with diagonal A.
double gaussian_eigen_bound(std::span<const double> a_diag);

/// Explicit TT of x^T M x (monomial cores, converted to the Legendre bases of `space`).
/// Interior rank k is 2 + min(k, d - k).
TensorTrain quadratic_tt_cores(const Eigen::MatrixXd& M, const PolySpace& space);
std::vector<std::size_t> quadratic_rank_bound(std::size_t d);

/// |q'(t) - (2 q - 4 q^2)| for the scalar Riccati flow started at q0, q' by central differences.
double hopf_cole_check(double q0, double t);

struct ScoreValue {
    double v = 0.0;
    std::array<double, 2> grad{};
};

/// v_t = -log of the OU-propagated density exp(-Phi), with the initial density replaced by a
/// tensor Gauss-Legendre rule of order Q on `domain`. Constant shifts of v are not tracked.
class QuadratureScore2d {
public:
    QuadratureScore2d(const PotentialSpec& spec, int Q, const std::array<std::pair<double, double>, 2>& domain);

    ScoreValue operator()(double t, std::span<const double> x) const;

private:
    std::vector<std::array<double, 2>> nodes_;
    std::vector<double> log_weights_;  // log w_ij - Phi(x_ij)
};

ScoreValue quadrature_score_2d(const PotentialSpec& spec, int Q, const std::array<std::pair<double, double>, 2>& domain,
                               double t, std::span<const double> x);

/// Quadrature scores on a fixed forward grid; grid point 0 (t = 0) is never queried by the sampler.
class QuadratureScoreModel : public ScoreModel {
public:
    QuadratureScoreModel(QuadratureScore2d score, std::vector<double> grid,
                         std::array<std::pair<double, double>, 2> domain);

    std::size_t dims() const override { return 2; }
    const std::vector<double>& grid() const override { return grid_; }
    std::size_t grad_v(std::size_t k, std::span<const double> x, std::span<double> g) const override;

private:
    QuadratureScore2d score_;
    std::vector<double> grid_;
    std::array<std::pair<double, double>, 2> domain_;
};

/// Exact Gaussian scores grad v_t = 2 Q_t x.
class RiccatiScoreModel : public ScoreModel {
public:
    RiccatiScoreModel(const Eigen::MatrixXd& Q0, std::vector<double> grid);

    std::size_t dims() const override { return std::size_t(Qs_.front().rows()); }
    const std::vector<double>& grid() const override { return grid_; }
    std::size_t grad_v(std::size_t k, std::span<const double> x, std::span<double> g) const override;

private:
    std::vector<double> grid_;
    std::vector<Eigen::MatrixXd> Qs_;
};

// Dense references. Every routine converts the Legendre coefficient tensor to monomials in
// the mapped variables s_i in [-1, 1] (the map is fitted from basis values at Chebyshev
// nodes), works on monomial coefficients and converts back.

/// Multiplies mode i by m (rows of m give the new mode size).
DenseTensor dense_mode_product(const DenseTensor& a, std::size_t i, const Eigen::MatrixXd& m);
DenseTensor dense_to_monomials(const DenseTensor& a, const PolySpace& space);
DenseTensor dense_from_monomials(const DenseTensor& m, const PolySpace& space);

DenseTensor dense_apply_lin(const DenseTensor& a, const PolySpace& space);
DenseTensor dense_apply_partial(const DenseTensor& a, std::size_t i, const PolySpace& space);
DenseTensor dense_poly_multiply(const DenseTensor& a, const DenseTensor& b, const PolySpace& space);
DenseTensor dense_apply_nonlin(const DenseTensor& a, const PolySpace& space);
DenseTensor dense_apply_nonlin_linearized(const DenseTensor& b, const DenseTensor& a, const PolySpace& space);
DenseTensor dense_project_degree(const DenseTensor& a, std::span<const int> n);
/// L A + P NL(A) at the degrees of A.
DenseTensor dense_rhs_reference(const DenseTensor& a, const PolySpace& space);
/// Matrix of A -> L A + 2 P NL_B(A) on tensors of the mode sizes of b.
Eigen::MatrixXd dense_stiffness_matrix(const DenseTensor& b, const PolySpace& space);

/// Random-walk Metropolis for exp(-Phi) in 2-d; returns `n` states taken every `thin` steps
/// after `burn_in` steps.
Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> metropolis_2d(const SparsePoly& phi, std::size_t n,
                                                                        std::size_t burn_in, std::size_t thin,
                                                                        double step, std::uint64_t seed);

/// Cores with independent standard normal entries (SplitMix64 stream keyed by seed);
/// `ranks` holds the d-1 interior ranks.
TensorTrain random_tensor_train(const std::vector<std::size_t>& mode_sizes, const std::vector<std::size_t>& ranks,
                                std::uint64_t seed);

/// Relative Frobenius distance ||a - b|| / ||b|| of two dense tensors of equal shape.
double relative_error(const DenseTensor& a, const DenseTensor& b);

/// V-statistic energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'| between two point clouds (rows).
double energy_distance(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y);

} // namespace tthjb
