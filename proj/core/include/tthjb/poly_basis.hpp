#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace tthjb {

inline constexpr int kMaxDegree = 12;

/// Orthonormal Legendre polynomials p_0..p_n on [a, b].
///
/// `T` maps Legendre coefficients to coefficients of the monomials 1, x, ..., x^n in the
/// unmapped variable x. Operators are assembled through the mapped variable
/// s = c1 x + c0 in [-1, 1], which gives the same matrices with far better conditioning.
struct LegendreBasis {
    double a = -1.0;
    double b = 1.0;
    int n = 0;
    Eigen::MatrixXd T;
    Eigen::MatrixXd T_inv;
    Eigen::MatrixXd Ts;      // Legendre -> monomials in s
    Eigen::MatrixXd Ts_inv;
    Eigen::MatrixXd D;       // d^2/dx^2 + x d/dx
    Eigen::MatrixXd Dx;      // d/dx

    double c1() const { return 2.0 / (b - a); }
    double c0() const { return -(a + b) / (b - a); }
    std::size_t size() const { return std::size_t(n) + 1; }

    /// Legendre coefficients of sum_k coefs[k] x^k; coefs.size() - 1 must not exceed n.
    std::vector<double> from_monomials(std::span<const double> coefs) const;
    /// Monomial coefficients (in x) of the expansion sum_a c[a] p_a.
    std::vector<double> to_monomials(std::span<const double> c) const;
};

/// Throws std::domain_error for n outside [0, 12] and std::invalid_argument for a >= b.
LegendreBasis build_basis(double a, double b, int n);

std::vector<double> evaluate_basis(const LegendreBasis& basis, double x);
std::vector<double> evaluate_basis_derivative(const LegendreBasis& basis, double x);
/// Values and derivatives in one recurrence pass.
void evaluate_basis_both(const LegendreBasis& basis, double x, std::span<double> values, std::span<double> derivs);

const Eigen::MatrixXd& ou_generator_matrix(const LegendreBasis& basis);
const Eigen::MatrixXd& derivative_matrix(const LegendreBasis& basis);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int points);

/// Hypercube of intervals with a declared degree per dimension. Bases for every degree up
/// to the cap are cached so that tensors whose mode sizes drift (degree truncation,
/// doubled products) can look up the matching matrices.
class PolySpace {
public:
    PolySpace(std::vector<std::pair<double, double>> intervals, std::vector<int> degrees);

    std::size_t dims() const { return intervals_.size(); }
    const std::pair<double, double>& interval(std::size_t i) const { return intervals_.at(i); }
    const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }
    const std::vector<int>& degrees() const { return degrees_; }
    /// Mode sizes implied by the declared degrees.
    std::vector<std::size_t> mode_sizes() const;

    const LegendreBasis& basis(std::size_t i, int degree) const;
    const LegendreBasis& basis(std::size_t i) const { return basis(i, degrees_.at(i)); }

    bool contains(std::span<const double> x) const;

private:
    std::vector<std::pair<double, double>> intervals_;
    std::vector<int> degrees_;
    std::vector<std::array<LegendreBasis, kMaxDegree + 1>> cache_;
};

} // namespace tthjb
