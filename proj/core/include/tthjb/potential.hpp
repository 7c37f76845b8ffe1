#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "tthjb/poly_basis.hpp"
#include "tthjb/tensor_train.hpp"

namespace tthjb {

/// Configuration error carrying the JSON pointer of the offending value.
class SchemaError : public std::invalid_argument {
public:
    SchemaError(std::string pointer, const std::string& message)
        : std::invalid_argument(pointer + ": " + message), pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

struct MonomialTerm {
    std::vector<int> exps;
    double coef = 0.0;
};

/// Sum of monomials over a subset of coordinates (raw, unmapped variables).
struct PolyTerm {
    std::vector<std::size_t> coords;
    std::vector<MonomialTerm> poly;
};

/// Named constructors: gaussian, banana, doublewell, sextic, iso_tail.
struct BuiltinTerm {
    std::string name;
    std::vector<std::size_t> coords;
    /// gaussian: explicit coefficient matrix of x^T Q x.
    std::optional<Eigen::MatrixXd> matrix;
    /// gaussian: Q = A^T A + 0.1 I with A seeded uniform on [0, 1].
    std::optional<std::uint64_t> seed;
    /// banana: 2x2 covariance of the transported Gaussian.
    std::optional<Eigen::Matrix2d> sigma;
};

struct PotentialSpec {
    std::vector<PolyTerm> terms;
    std::vector<BuiltinTerm> builtins;
};

/// Full-dimensional sparse polynomial: exponent vector -> coefficient.
using SparsePoly = std::map<std::vector<int>, double>;

/// A^T A + 0.1 I with A uniform on [0, 1] drawn from a seeded mt19937_64; platform independent.
Eigen::MatrixXd random_spd_matrix(std::size_t d, std::uint64_t seed);

/// Expands every term and built-in into monomials over d coordinates.
SparsePoly expand_potential(const PotentialSpec& spec, std::size_t d);

/// TT coefficients of the potential in the Legendre basis of `space`, rounded at relative
/// tolerance `delta`. Throws std::domain_error if a monomial exceeds the space degrees.
TensorTrain build_potential_tt(const PotentialSpec& spec, const PolySpace& space, double delta);
TensorTrain build_poly_tt(const SparsePoly& poly, const PolySpace& space, double delta);

/// Exact evaluation of an expanded polynomial.
double evaluate_poly(const SparsePoly& poly, std::span<const double> x);

/// Parses {"terms": [...], "builtins": [...]} with 0-based coordinates. Schema violations
/// raise SchemaError whose pointer is `base` joined with the offending path.
PotentialSpec parse_potential(const nlohmann::json& j, const std::string& base = "");

/// Every coordinate must carry a positive coefficient on its highest even pure power and no
/// odd pure power above it, so exp(-phi) is integrable along each axis.
bool has_quadratic_floor(const SparsePoly& poly, std::size_t d, std::string* why = nullptr);

} // namespace tthjb
