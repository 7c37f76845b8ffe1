#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "tthjb/poly_basis.hpp"
#include "tthjb/tensor_train.hpp"

namespace tthjb {

/// Polynomial degree per dimension, read off the mode sizes.
std::vector<int> degrees_of(const TensorTrain& a);

/// Discretized Laplacian plus drift, sum_i (I x .. x D_i x .. x I) A. Interior ranks double.
TensorTrain apply_lin(const TensorTrain& a, const PolySpace& space);
/// Coefficients of the partial derivative along dimension i.
TensorTrain apply_partial(const TensorTrain& a, std::size_t i, const PolySpace& space);

/// Pointwise product of the two represented polynomials, degrees add, ranks multiply.
TensorTrain poly_multiply(const TensorTrain& a, const TensorTrain& b, const PolySpace& space);
/// Coefficients of -|grad v_A|^2 at doubled degrees; interior ranks 2 r^2.
TensorTrain apply_nonlin(const TensorTrain& a, const PolySpace& space);
/// Coefficients of -<grad v_B, grad v_A>; linear in A.
TensorTrain apply_nonlin_linearized(const TensorTrain& b, const TensorTrain& a, const PolySpace& space);

/// Keeps coefficients of degree <= n[i] in every dimension.
TensorTrain project_degree(const TensorTrain& a, std::span<const int> n);
/// Zero-extends (or slices) every dimension to the given degrees.
TensorTrain resize_degrees(const TensorTrain& a, std::span<const int> n);

/// L A + 2 P NL_B(A), staying at the degrees of A.
TensorTrain apply_stiffness(const TensorTrain& b, const TensorTrain& a, const PolySpace& space);

/// Right-hand side L Y + P NL(Y) at the degrees of Y. `nl_out` receives NL(Y) when given.
TensorTrain hjb_rhs(const TensorTrain& y, const PolySpace& space, TensorTrain* nl_out = nullptr);

struct QuadraticPart {
    double a0 = 0.0;
    Eigen::VectorXd b;
    Eigen::MatrixXd Q;
};

/// Constant, linear and quadratic monomial coefficients of v_A (exact for any degree).
QuadraticPart extract_quadratic(const TensorTrain& a, const PolySpace& space);

} // namespace tthjb
